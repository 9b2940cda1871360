#include "abechain/chain.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "abechain/errors.hpp"

namespace abechain::chain {

Bytes Transaction::canonical_bytes() const {
  Bytes out;
  append_len_prefixed_bytes(out, payload);
  out.insert(out.end(), sender.begin(), sender.end());
  append_len_prefixed_bytes(out, signature);
  append_u64_be(out, timestamp);
  return out;
}

Json Transaction::to_json() const {
  Json j;
  j["payload"] = to_string(payload);
  j["sender"] = digest_hex(sender);
  j["signature"] = hex_encode(signature);
  j["timestamp"] = timestamp;
  return j;
}

Transaction Transaction::from_json(const Json& j) {
  Transaction tx;
  tx.payload = to_bytes(j.at("payload").get<std::string>());
  tx.sender = digest_from_hex(j.at("sender").get<std::string>());
  tx.signature = hex_decode(j.at("signature").get<std::string>());
  tx.timestamp = j.at("timestamp").get<std::uint64_t>();
  return tx;
}

Transaction sign_tx(const EcdsaKeyPair& key, const Digest32& sender, Bytes payload,
                    std::uint64_t tick) {
  Transaction tx;
  tx.payload = std::move(payload);
  tx.sender = sender;
  tx.timestamp = tick;
  tx.signature = key.sign(tx.payload_digest());
  return tx;
}

bool verify_tx(const Transaction& tx, const Bytes& verification_key) {
  return ecdsa_verify(verification_key, tx.payload_digest(), tx.signature);
}

Digest32 tx_list_digest(const std::vector<Transaction>& txs) {
  Bytes all;
  for (const Transaction& tx : txs) {
    Bytes b = tx.canonical_bytes();
    all.insert(all.end(), b.begin(), b.end());
  }
  return sha256(all);
}

Digest32 compute_block_hash(const Digest32& data_digest, const Digest32& prev_hash,
                            std::uint64_t created_at, const Digest32& creator,
                            BlockKind kind, std::uint32_t n_bits, std::uint64_t nonce) {
  Bytes pre;
  pre.insert(pre.end(), data_digest.begin(), data_digest.end());
  pre.insert(pre.end(), prev_hash.begin(), prev_hash.end());
  append_u64_be(pre, created_at);
  pre.insert(pre.end(), creator.begin(), creator.end());
  pre.push_back(static_cast<std::uint8_t>(kind));
  append_u32_be(pre, n_bits);
  append_u64_be(pre, nonce);
  return sha256(pre);
}

Json Block::to_json() const {
  Json j;
  j["prev_hash"] = digest_hex(prev_hash);
  j["creator"] = digest_hex(creator);
  j["created_at"] = created_at;
  j["data_digest"] = digest_hex(data_digest);
  j["nonce"] = nonce;
  j["n_bits"] = n_bits;
  j["kind"] = kind == BlockKind::kStandard ? "standard" : "consensus";
  Json txs = Json::array();
  for (const Transaction& tx : transactions) txs.push_back(tx.to_json());
  j["transactions"] = std::move(txs);
  j["block_hash"] = digest_hex(block_hash);
  return j;
}

Block Block::from_json(const Json& j) {
  Block b;
  b.prev_hash = digest_from_hex(j.at("prev_hash").get<std::string>());
  b.creator = digest_from_hex(j.at("creator").get<std::string>());
  b.created_at = j.at("created_at").get<std::uint64_t>();
  b.data_digest = digest_from_hex(j.at("data_digest").get<std::string>());
  b.nonce = j.at("nonce").get<std::uint64_t>();
  b.n_bits = j.at("n_bits").get<std::uint32_t>();
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "standard")
    b.kind = BlockKind::kStandard;
  else if (kind == "consensus")
    b.kind = BlockKind::kConsensus;
  else
    throw InputError("unknown block kind '" + kind + "'");
  for (const Json& tj : j.at("transactions")) b.transactions.push_back(Transaction::from_json(tj));
  b.block_hash = digest_from_hex(j.at("block_hash").get<std::string>());
  return b;
}

std::string strategy_name(MineStrategy s) {
  switch (s) {
    case MineStrategy::kSequential: return "sequential";
    case MineStrategy::kRandom: return "random";
    case MineStrategy::kHybrid: return "hybrid";
  }
  return "?";
}

MineStrategy strategy_from_name(const std::string& name) {
  if (name == "sequential") return MineStrategy::kSequential;
  if (name == "random") return MineStrategy::kRandom;
  if (name == "hybrid") return MineStrategy::kHybrid;
  throw InputError("unknown mining strategy '" + name + "'");
}

MineResult mine(const BlockTemplate& tmpl, MineStrategy strategy, RandomStream& rng) {
  if (tmpl.n_bits > 32) throw InputError("desk-scale difficulty is limited to 32 bits");

  auto hash_for = [&](std::uint64_t nonce) {
    return compute_block_hash(tmpl.data_digest, tmpl.prev_hash, tmpl.created_at,
                              tmpl.creator, tmpl.kind, tmpl.n_bits, nonce);
  };

  MineResult result;
  std::unordered_set<std::uint64_t> used;
  std::uint64_t nonce = 0;
  if (strategy == MineStrategy::kRandom) nonce = rng.next_u64();

  for (;;) {
    ++result.attempts;
    Digest32 h = hash_for(nonce);
    if (leading_zero_bits(h) >= static_cast<int>(tmpl.n_bits)) {
      result.nonce = nonce;
      result.hash = h;
      return result;
    }
    switch (strategy) {
      case MineStrategy::kSequential:
        ++nonce;
        break;
      case MineStrategy::kRandom: {
        used.insert(nonce);
        do {
          nonce = rng.next_u64();
        } while (used.count(nonce));
        break;
      }
      case MineStrategy::kHybrid: {
        used.insert(nonce);
        // Step when the current hash's first bit is set, otherwise jump
        // to a fresh random nonce.
        if (h[0] & 0x80) {
          ++nonce;
        } else {
          do {
            nonce = rng.next_u64();
          } while (used.count(nonce));
        }
        break;
      }
    }
  }
}

Block Chain::genesis_block() {
  Block g;
  g.kind = BlockKind::kStandard;
  g.data_digest = tx_list_digest({});
  g.block_hash = compute_block_hash(g.data_digest, g.prev_hash, g.created_at, g.creator,
                                    g.kind, g.n_bits, g.nonce);
  return g;
}

Chain::Chain(std::uint32_t difficulty) : difficulty_(difficulty) {
  blocks_.push_back(genesis_block());
}

namespace {

// Payload convention: a "register" record carries the sender's own
// verification key; everything else must come from an already
// registered sender.
std::optional<Bytes> registration_key(const Transaction& tx) {
  Json j = Json::parse(to_string(tx.payload), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (j.value("type", "") != "register") return std::nullopt;
  if (!j.contains("verify_key")) return std::nullopt;
  return hex_decode(j.at("verify_key").get<std::string>());
}

}  // namespace

ValidationResult Chain::check_block(const Block& block, const Block& prev,
                                    std::map<std::string, Bytes>& keys) const {
  ValidationResult bad;
  bad.ok = false;
  if (block.prev_hash != prev.block_hash) {
    bad.reason = "broken-hash-link";
    return bad;
  }
  if (block.kind == BlockKind::kStandard) {
    if (block.data_digest != tx_list_digest(block.transactions)) {
      bad.reason = "data-digest-mismatch";
      return bad;
    }
  } else if (!block.transactions.empty()) {
    bad.reason = "consensus-block-carries-transactions";
    return bad;
  }
  Digest32 expect = compute_block_hash(block.data_digest, block.prev_hash, block.created_at,
                                       block.creator, block.kind, block.n_bits, block.nonce);
  if (block.block_hash != expect) {
    bad.reason = "block-hash-mismatch";
    return bad;
  }
  if (leading_zero_bits(block.block_hash) < static_cast<int>(block.n_bits)) {
    bad.reason = "insufficient-proof-of-work";
    return bad;
  }
  if (block.n_bits != difficulty_) {
    bad.reason = "difficulty-schedule-violation";
    return bad;
  }
  for (const Transaction& tx : block.transactions) {
    std::string sender_hex = digest_hex(tx.sender);
    if (auto key = registration_key(tx)) {
      if (!verify_tx(tx, *key)) {
        bad.reason = "bad-registration-signature";
        return bad;
      }
      keys[sender_hex] = *key;
      continue;
    }
    auto it = keys.find(sender_hex);
    if (it == keys.end()) {
      bad.reason = "unknown-transaction-sender";
      return bad;
    }
    if (!verify_tx(tx, it->second)) {
      bad.reason = "bad-transaction-signature";
      return bad;
    }
  }
  return {};
}

void Chain::append(Block block) {
  std::map<std::string, Bytes> keys = keys_;
  ValidationResult r = check_block(block, head(), keys);
  if (!r.ok) throw StateError("block rejected: " + r.reason);
  keys_ = std::move(keys);
  blocks_.push_back(std::move(block));
}

std::optional<Transaction> Chain::find_transaction(const Digest32& tx_digest) const {
  for (const Block& b : blocks_)
    for (const Transaction& tx : b.transactions)
      if (tx.tx_digest() == tx_digest) return tx;
  return std::nullopt;
}

std::string Chain::to_jsonl() const {
  std::ostringstream out;
  for (const Block& b : blocks_) out << b.to_json().dump() << "\n";
  return out.str();
}

void Chain::save_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << to_jsonl();
}

Chain Chain::from_jsonl(const std::string& text, std::uint32_t difficulty) {
  Chain chain(difficulty);
  chain.blocks_.clear();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw IoError("chain line " + std::to_string(line_no) + ": bad JSON");
    chain.blocks_.push_back(Block::from_json(j));
  }
  if (chain.blocks_.empty()) throw IoError("chain file has no blocks");
  // Rebuild the key registry so appends keep working; trust is
  // re-established by validate_chain, not here.
  std::map<std::string, Bytes> keys;
  for (const Block& b : chain.blocks_)
    for (const Transaction& tx : b.transactions)
      if (auto key = registration_key(tx)) keys[digest_hex(tx.sender)] = *key;
  chain.keys_ = std::move(keys);
  return chain;
}

Chain Chain::load_jsonl(const std::string& path, std::uint32_t difficulty) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str(), difficulty);
}

ValidationResult validate_chain(const Chain& chain) {
  const auto& blocks = chain.blocks();
  ValidationResult bad;
  bad.ok = false;
  if (blocks.empty()) {
    bad.reason = "empty-chain";
    return bad;
  }
  Block genesis = Chain::genesis_block();
  const Block& first = blocks.front();
  if (first.to_json().dump() != genesis.to_json().dump()) {
    bad.reason = "genesis-mismatch";
    return bad;
  }
  std::map<std::string, Bytes> keys;
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    ValidationResult r = chain.check_block(blocks[i], blocks[i - 1], keys);
    if (!r.ok) {
      r.block_index = i;
      return r;
    }
  }
  return {};
}

ConsensusResult consensus_round(std::vector<MinerState>& nodes,
                                const std::vector<Bytes>& local_results,
                                const Digest32& prev_hash, std::uint32_t n_bits,
                                std::uint64_t tick) {
  if (nodes.empty() || nodes.size() != local_results.size())
    throw InputError("consensus round needs one local result per node");

  ConsensusResult out;
  out.participant_count = nodes.size();

  struct Mined {
    std::size_t node;
    Digest32 m_digest{};
    MineResult res;
  };
  std::vector<Mined> mined;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!nodes[i].participates) continue;  // skips the work, gains no voice
    BlockTemplate tmpl;
    tmpl.data_digest = sha256(local_results[i]);
    tmpl.prev_hash = prev_hash;
    tmpl.created_at = tick;
    tmpl.creator = nodes[i].node_id;
    tmpl.n_bits = n_bits;
    tmpl.kind = BlockKind::kConsensus;
    Mined m{i, tmpl.data_digest, mine(tmpl, nodes[i].strategy, *nodes[i].rng)};
    out.total_attempts += m.res.attempts;
    mined.push_back(std::move(m));
  }

  // Fixed publication order by node id.
  std::sort(mined.begin(), mined.end(), [&](const Mined& a, const Mined& b) {
    return digest_hex(nodes[a.node].node_id) < digest_hex(nodes[b.node].node_id);
  });

  for (const Mined& m : mined) {
    bool supported = false;
    for (PowCandidate& cand : out.result_set) {
      // Verify with this node's own m and the candidate's nonce.
      Digest32 check = compute_block_hash(m.m_digest, prev_hash, tick, cand.creator,
                                          BlockKind::kConsensus, n_bits, cand.nonce);
      if (check == cand.block_hash) {
        ++cand.support;
        supported = true;
        break;
      }
    }
    if (!supported) {
      PowCandidate cand;
      cand.block_hash = m.res.hash;
      cand.nonce = m.res.nonce;
      cand.creator = nodes[m.node].node_id;
      cand.m = local_results[m.node];
      cand.support = 1;
      out.result_set.push_back(std::move(cand));
    }
  }

  if (out.result_set.empty()) return out;

  // Highest support wins; ties break to the smallest block hash.
  const PowCandidate* best = &out.result_set.front();
  for (const PowCandidate& cand : out.result_set) {
    if (cand.support > best->support ||
        (cand.support == best->support &&
         digest_hex(cand.block_hash) < digest_hex(best->block_hash)))
      best = &cand;
  }
  if (best->support * 2 <= out.participant_count) return out;  // fragmented round

  out.accepted = true;
  out.m = best->m;
  Block block;
  block.kind = BlockKind::kConsensus;
  block.prev_hash = prev_hash;
  block.creator = best->creator;
  block.created_at = tick;
  block.data_digest = sha256(best->m);
  block.nonce = best->nonce;
  block.n_bits = n_bits;
  block.block_hash = best->block_hash;
  out.block = std::move(block);
  return out;
}

}  // namespace abechain::chain
