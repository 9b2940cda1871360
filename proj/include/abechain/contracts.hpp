#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "abechain/abe.hpp"
#include "abechain/chain.hpp"
#include "abechain/group.hpp"
#include "abechain/policy.hpp"

namespace abechain::contracts {

enum class Role { kTerminal, kEdge, kUser, kManager };

std::string role_name(Role r);

struct NodeRecord {
  Digest32 id{};
  Bytes verify_key;
  Role role = Role::kTerminal;
};

struct AccessDecision {
  bool granted = false;
  Digest32 subject{};
  Digest32 object{};
  std::uint64_t tick = 0;
  std::string reason;
};

// PM sentinel: banned for good.
inline constexpr std::uint64_t kPermanentLockout = UINT64_MAX;

struct PenaltyEntry {
  std::uint64_t violations = 0;  // t in I_rec
  std::uint64_t next_time = 0;   // N_Time; kPermanentLockout when banned
};

enum class EnforceOutcome {
  kGranted,
  kDeniedPenalized,
  kDeniedLocked,
  kDeniedBusy,
  kDeniedUnknown,
};

std::string outcome_name(EnforceOutcome o);

struct EnforceResult {
  EnforceOutcome outcome = EnforceOutcome::kDeniedUnknown;
  AccessDecision decision;
};

enum class EdgeBehavior { kHonest, kForgeDecrypt, kSkipWork, kTamperTx };

struct EngineConfig {
  std::uint64_t seed = 42;
  std::uint32_t difficulty = 12;  // nBits for every mined block
  chain::MineStrategy strategy = chain::MineStrategy::kHybrid;
  std::uint32_t txs_per_block = 64;  // auto-seal threshold
  bool wall_clock = false;           // ticks become wall-clock hours
};

// The deterministic single-writer state machine behind the six smart
// contracts. Every mutation is recorded as a signed transaction; plaintext
// attribute labels and policy text never reach the chain.
class Engine {
 public:
  Engine(GroupParamsPtr params, EngineConfig config);

  const GroupParamsPtr& params() const { return params_; }
  const abe::PublicKey& public_key() const { return pk_; }
  const chain::Chain& blockchain() const { return chain_; }
  Digest32 manager_id() const { return manager_id_; }
  std::vector<Digest32> edge_ids() const;

  // ---- registration (Eqs. 1-2) ----
  Digest32 register_device(const std::string& raw_id, const std::string& com_port,
                           const std::string& mac, const std::string& ip_port, Role role);
  Digest32 register_user(const std::string& raw_id);
  const NodeRecord* find_node(const Digest32& id) const;
  std::size_t device_count() const { return device_registry_.size(); }
  std::size_t user_count() const { return user_registry_.size(); }

  // ---- SCPI ----
  void scpi_add_att(const Digest32& id, const std::vector<std::string>& labels);
  void scpi_del_att(const Digest32& id);
  std::vector<G1Element> scpi_get_att(const Digest32& id) const;
  const std::vector<std::string>* labels_of(const Digest32& id) const;
  abe::AttributePoints universe_points(const std::vector<std::string>& labels) const;

  // ---- SCPA ----
  struct PolicyHandle {
    policy::FormulaPtr formula;
    Digest32 policy_id{};
  };
  PolicyHandle scpa_add_policy(const Digest32& subject, const Digest32& object,
                               const std::string& formula_text);
  const policy::PolicyRegistry& policy_registry() const { return policies_; }
  std::optional<Digest32> object_policy(const Digest32& object) const;
  std::string object_policy_text(const Digest32& object) const;  // owner-side view

  // ---- SCPD ----
  AccessDecision scpd_judge_policy(const Digest32& subject, const Digest32& object);

  // ---- SCPM ----
  PenaltyEntry scpm_penalize(const Digest32& subject, std::uint64_t tick);
  std::optional<PenaltyEntry> penalty_state(const Digest32& subject) const;

  // ---- SCPE ----
  EnforceResult scpe_enforce(const Digest32& subject, const Digest32& object,
                             std::uint64_t tick);

  // ---- SCED ----
  Digest32 sced_encrypt(const Digest32& owner, const Bytes& payload,
                        const std::string& policy_text);

  struct DecryptResult {
    Bytes payload;
    std::string key_id;
    Digest32 new_reference{};
    std::uint64_t consensus_attempts = 0;
  };
  DecryptResult sced_decrypt(const Digest32& subject, const Digest32& reference);
  // Replays a previously issued key handle; spent handles are rejected.
  DecryptResult sced_decrypt_reusing(const Digest32& subject, const Digest32& reference,
                                     const std::string& key_id);

  struct DataRecord {
    abe::WrappedPayload wrapped;
    Digest32 owner{};
    std::string policy_text;  // owner-side only; never serialized
    bool active = true;
  };
  const DataRecord* find_data(const Digest32& reference) const;
  std::vector<Digest32> object_data_refs(const Digest32& object) const;

  // ---- fault injection / simulation plumbing ----
  void set_edge_behavior(const Digest32& edge, EdgeBehavior behavior);
  void set_tick(std::uint64_t tick);  // clears per-tick session state
  std::uint64_t tick() const { return tick_; }

  void seal_pending(const Digest32& creator);
  bool has_pending() const { return !mempool_.empty(); }
  std::uint64_t rejected_tx_count() const { return rejected_txs_; }
  const std::vector<std::uint64_t>& block_attempts() const { return block_attempts_; }

  // Locates a recorded transaction by digest and re-verifies its
  // signature against the registered key; the verification workload of
  // the throughput comparison.
  bool verify_recorded_tx(const Digest32& tx_digest) const;

 private:
  struct NodeState {
    NodeRecord record;
    EcdsaKeyPair keys;
    std::shared_ptr<SeededRng> miner_rng;  // edges
    EdgeBehavior behavior = EdgeBehavior::kHonest;
  };

  NodeState* node_state(const Digest32& id);
  const NodeState* node_state(const Digest32& id) const;
  std::pair<G1Element, FieldElement> universe_point(const std::string& label);
  FieldElement identity_exponent(const Digest32& id);  // h = log H(id)
  void submit_tx(const Digest32& sender, const Json& payload);
  std::shared_ptr<const policy::PolicyRecord> compile_policy(const std::string& text,
                                                             std::string* formula_text_out);
  Json skeleton_json(const policy::ThresholdTree& tree,
                     const policy::PolicyMatrix& matrix);
  AccessDecision judge_core(const Digest32& subject, const Digest32& object);
  DecryptResult decrypt_with_key(const Digest32& subject, const Digest32& reference,
                                 const abe::PrivateKey& key);

  GroupParamsPtr params_;
  EngineConfig config_;
  SeededRng rng_;
  abe::PublicKey pk_;
  abe::MasterKey mk_;
  chain::Chain chain_;
  std::uint64_t tick_ = 0;

  Digest32 manager_id_{};

  std::map<std::string, NodeState> nodes_;            // all nodes by id hex
  std::map<std::string, NodeRecord> device_registry_;  // D_HashID
  std::map<std::string, NodeRecord> user_registry_;    // U_HashID
  std::map<std::string, std::vector<G1Element>> attr_registry_;  // A_HashID
  std::map<std::string, std::vector<std::string>> attr_labels_;  // off-chain side table
  std::map<std::string, std::pair<G1Element, FieldElement>> universe_;  // label -> (H, rv)
  std::map<std::string, std::pair<G1Element, FieldElement>> identity_points_;
  policy::PolicyRegistry policies_;  // P_HashID
  std::map<std::string, Digest32> object_policy_;  // object -> policy id
  std::map<std::string, std::string> object_policy_text_;  // owner-side
  std::map<std::string, std::uint64_t> illegal_records_;   // I_rec: id -> t
  std::map<std::string, std::uint64_t> penalty_measures_;  // PM: id -> N_Time
  std::map<std::string, DataRecord> data_store_;
  std::map<std::string, std::vector<Digest32>> object_refs_;
  std::set<std::string> busy_objects_;
  std::set<std::string> open_grants_;  // subject|object granted this tick
  std::map<std::string, abe::PrivateKey> issued_keys_;
  std::set<std::string> spent_keys_;

  std::vector<chain::Transaction> mempool_;
  std::uint64_t rejected_txs_ = 0;
  std::vector<std::uint64_t> block_attempts_;
};

}  // namespace abechain::contracts
