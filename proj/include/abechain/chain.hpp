#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abechain/bytes.hpp"
#include "abechain/ecdsa.hpp"
#include "abechain/hash.hpp"
#include "abechain/json.hpp"
#include "abechain/rng.hpp"

namespace abechain::chain {

struct Transaction {
  Bytes payload;  // JSON: typed contract call or data record
  Digest32 sender{};
  Bytes signature;  // 64-byte r||s over SHA-256(payload)
  std::uint64_t timestamp = 0;  // simulated tick

  Digest32 payload_digest() const { return sha256(payload); }
  Bytes canonical_bytes() const;
  Digest32 tx_digest() const { return sha256(canonical_bytes()); }
  Json to_json() const;
  static Transaction from_json(const Json& j);
};

Transaction sign_tx(const EcdsaKeyPair& key, const Digest32& sender, Bytes payload,
                    std::uint64_t tick);
bool verify_tx(const Transaction& tx, const Bytes& verification_key);

// Standard blocks digest their transaction list; consensus blocks carry
// the digest of the payload the round agreed on (the round mines over
// SHA-256(m)) and an empty transaction list.
enum class BlockKind : std::uint8_t { kStandard = 0, kConsensus = 1 };

struct Block {
  std::vector<Transaction> transactions;
  Digest32 prev_hash{};
  Digest32 creator{};
  std::uint64_t created_at = 0;
  Digest32 data_digest{};
  std::uint64_t nonce = 0;
  std::uint32_t n_bits = 0;
  BlockKind kind = BlockKind::kStandard;
  Digest32 block_hash{};

  Json to_json() const;
  static Block from_json(const Json& j);
};

Digest32 tx_list_digest(const std::vector<Transaction>& txs);

// Every persisted block field except the hash itself is in the preimage,
// so a single-bit mutation anywhere is detectable.
Digest32 compute_block_hash(const Digest32& data_digest, const Digest32& prev_hash,
                            std::uint64_t created_at, const Digest32& creator,
                            BlockKind kind, std::uint32_t n_bits, std::uint64_t nonce);

enum class MineStrategy { kSequential, kRandom, kHybrid };

std::string strategy_name(MineStrategy s);
MineStrategy strategy_from_name(const std::string& name);

struct BlockTemplate {
  Digest32 data_digest{};
  Digest32 prev_hash{};
  std::uint64_t created_at = 0;
  Digest32 creator{};
  std::uint32_t n_bits = 0;
  BlockKind kind = BlockKind::kStandard;
};

struct MineResult {
  std::uint64_t nonce = 0;
  Digest32 hash{};
  std::uint64_t attempts = 0;
};

// Nonce search until the hash has >= n_bits leading zero bits.
//  sequential: nonce = 0, 1, 2, ...
//  random:     fresh unused nonces from the stream
//  hybrid:     increment while the current hash's first bit is nonzero,
//              otherwise jump to a fresh unused random nonce
MineResult mine(const BlockTemplate& tmpl, MineStrategy strategy, RandomStream& rng);

struct ValidationResult {
  bool ok = true;
  std::string reason;
  std::size_t block_index = 0;

  explicit operator bool() const { return ok; }
};

class Chain {
 public:
  explicit Chain(std::uint32_t difficulty);

  static Block genesis_block();

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& head() const { return blocks_.back(); }
  std::size_t height() const { return blocks_.size(); }
  std::uint32_t difficulty() const { return difficulty_; }

  // Re-verifies linkage, digests, PoW and signatures before appending;
  // throws StateError with a reason code otherwise.
  void append(Block block);

  std::optional<Transaction> find_transaction(const Digest32& tx_digest) const;
  const std::map<std::string, Bytes>& key_registry() const { return keys_; }

  void save_jsonl(const std::string& path) const;
  std::string to_jsonl() const;
  static Chain load_jsonl(const std::string& path, std::uint32_t difficulty);
  static Chain from_jsonl(const std::string& text, std::uint32_t difficulty);

 private:
  friend ValidationResult validate_chain(const Chain& chain);
  std::vector<Block> blocks_;
  std::uint32_t difficulty_;
  std::map<std::string, Bytes> keys_;  // sender id hex -> verification key

  ValidationResult check_block(const Block& block, const Block& prev,
                               std::map<std::string, Bytes>& keys) const;
};

// Walks genesis -> head re-checking every invariant.
ValidationResult validate_chain(const Chain& chain);

// ---- result consensus ----

struct MinerState {
  Digest32 node_id{};
  MineStrategy strategy = MineStrategy::kHybrid;
  std::shared_ptr<RandomStream> rng;
  bool participates = true;  // false models a node that skips the work
};

struct PowCandidate {
  Digest32 block_hash{};
  std::uint64_t nonce = 0;
  Digest32 creator{};
  Bytes m;
  std::uint64_t support = 0;
};

// R_PoW: support per distinct candidate, keyed by (hash, nonce).
using PowResultSet = std::vector<PowCandidate>;

struct ConsensusResult {
  bool accepted = false;
  Bytes m;
  Block block;
  PowResultSet result_set;
  std::uint64_t total_attempts = 0;
  std::size_t participant_count = 0;
};

// Every participating node mines over SHA-256(its own m); a node seeing a
// published candidate recomputes the hash with its own m and that nonce,
// supporting on a match and publishing its own candidate otherwise. A
// strict majority of round participants accepts a candidate.
ConsensusResult consensus_round(std::vector<MinerState>& nodes,
                                const std::vector<Bytes>& local_results,
                                const Digest32& prev_hash, std::uint32_t n_bits,
                                std::uint64_t tick);

}  // namespace abechain::chain
