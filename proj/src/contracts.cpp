#include "abechain/contracts.hpp"

#include <algorithm>

#include "abechain/errors.hpp"

namespace abechain::contracts {

namespace {

const Bytes kDecryptFailSentinel = to_bytes("\x01sced-decrypt-failure");
const Bytes kForgedResult = to_bytes("\x01sced-forged-result");

std::string pair_key(const Digest32& a, const Digest32& b) {
  return digest_hex(a) + "|" + digest_hex(b);
}

}  // namespace

std::string role_name(Role r) {
  switch (r) {
    case Role::kTerminal: return "terminal";
    case Role::kEdge: return "edge";
    case Role::kUser: return "user";
    case Role::kManager: return "manager";
  }
  return "?";
}

std::string outcome_name(EnforceOutcome o) {
  switch (o) {
    case EnforceOutcome::kGranted: return "granted";
    case EnforceOutcome::kDeniedPenalized: return "denied-penalized";
    case EnforceOutcome::kDeniedLocked: return "denied-locked";
    case EnforceOutcome::kDeniedBusy: return "denied-busy";
    case EnforceOutcome::kDeniedUnknown: return "denied-unknown";
  }
  return "?";
}

Engine::Engine(GroupParamsPtr params, EngineConfig config)
    : params_(std::move(params)),
      config_(config),
      rng_(derive_seed(config.seed, "engine")),
      pk_{nullptr, params_->g1_identity(), params_->g1_identity()},
      mk_{params_->g1_identity(), FieldElement(1, params_->prime())},
      chain_(config.difficulty) {
  auto [pk, mk] = abe::setup(params_, rng_);
  pk_ = std::move(pk);
  mk_ = std::move(mk);

  // The trust anchor registers itself and publishes PK; MK never leaves
  // this engine instance.
  manager_id_ = register_device("data-manager", "", "", "manager:0", Role::kManager);
  Json setup_tx;
  setup_tx["type"] = "setup";
  setup_tx["public_key"] = pk_.to_json();
  submit_tx(manager_id_, setup_tx);
}

Engine::NodeState* Engine::node_state(const Digest32& id) {
  auto it = nodes_.find(digest_hex(id));
  return it == nodes_.end() ? nullptr : &it->second;
}

const Engine::NodeState* Engine::node_state(const Digest32& id) const {
  auto it = nodes_.find(digest_hex(id));
  return it == nodes_.end() ? nullptr : &it->second;
}

const NodeRecord* Engine::find_node(const Digest32& id) const {
  const NodeState* st = node_state(id);
  return st ? &st->record : nullptr;
}

std::vector<Digest32> Engine::edge_ids() const {
  std::vector<Digest32> out;
  for (const auto& [hex, st] : nodes_)
    if (st.record.role == Role::kEdge) out.push_back(st.record.id);
  return out;
}

void Engine::submit_tx(const Digest32& sender, const Json& payload) {
  NodeState* st = node_state(sender);
  if (!st) throw NotFoundError("unknown transaction sender");
  chain::Transaction tx =
      chain::sign_tx(st->keys, sender, to_bytes(payload.dump()), tick_);
  if (st->behavior == EdgeBehavior::kTamperTx && !tx.payload.empty()) {
    tx.payload[tx.payload.size() / 2] ^= 0x01;  // breaks the signature
  }
  mempool_.push_back(std::move(tx));
  if (mempool_.size() >= config_.txs_per_block) {
    std::vector<Digest32> edges = edge_ids();
    seal_pending(edges.empty() ? manager_id_ : edges.front());
  }
}

void Engine::seal_pending(const Digest32& creator) {
  if (mempool_.empty()) return;
  NodeState* st = node_state(creator);
  if (!st) throw NotFoundError("unknown block creator");

  std::vector<chain::Transaction> accepted;
  const auto& keys = chain_.key_registry();
  for (chain::Transaction& tx : mempool_) {
    // Registration transactions carry their own key; everything else
    // verifies against the registered key.
    Json j = Json::parse(to_string(tx.payload), nullptr, false);
    Bytes key;
    if (!j.is_discarded() && j.is_object() && j.value("type", "") == "register" &&
        j.contains("verify_key")) {
      key = hex_decode(j.at("verify_key").get<std::string>());
    } else {
      auto it = keys.find(digest_hex(tx.sender));
      if (it != keys.end()) key = it->second;
      // Senders registering in this very block are also acceptable.
      if (key.empty()) {
        for (const chain::Transaction& prior : accepted) {
          if (prior.sender != tx.sender) continue;
          Json pj = Json::parse(to_string(prior.payload), nullptr, false);
          if (!pj.is_discarded() && pj.value("type", "") == "register")
            key = hex_decode(pj.at("verify_key").get<std::string>());
        }
      }
    }
    if (key.empty() || !chain::verify_tx(tx, key)) {
      ++rejected_txs_;
      continue;
    }
    accepted.push_back(std::move(tx));
  }
  mempool_.clear();
  if (accepted.empty()) return;

  chain::Block block;
  block.transactions = std::move(accepted);
  block.prev_hash = chain_.head().block_hash;
  block.creator = creator;
  block.created_at = tick_;
  block.data_digest = chain::tx_list_digest(block.transactions);
  block.n_bits = config_.difficulty;
  block.kind = chain::BlockKind::kStandard;

  chain::BlockTemplate tmpl{block.data_digest, block.prev_hash, block.created_at,
                            block.creator,     block.n_bits,    block.kind};
  RandomStream& miner_rng = st->miner_rng ? static_cast<RandomStream&>(*st->miner_rng)
                                          : static_cast<RandomStream&>(rng_);
  chain::MineResult mined = chain::mine(tmpl, config_.strategy, miner_rng);
  block.nonce = mined.nonce;
  block.block_hash = mined.hash;
  block_attempts_.push_back(mined.attempts);
  chain_.append(std::move(block));
}

// ---- registration ----

Digest32 Engine::register_device(const std::string& raw_id, const std::string& com_port,
                                 const std::string& mac, const std::string& ip_port,
                                 Role role) {
  if (raw_id.empty() && com_port.empty() && mac.empty() && ip_port.empty())
    throw InputError("device registration needs at least one identity dimension");

  for (;;) {
    std::uint64_t rv = rng_.next_u64();
    Bytes material;
    append_len_prefixed_bytes(material, to_bytes(raw_id));
    append_len_prefixed_bytes(material, to_bytes(com_port));
    append_len_prefixed_bytes(material, to_bytes(mac));
    append_len_prefixed_bytes(material, to_bytes(ip_port));
    append_u64_be(material, rv);
    Digest32 id = sha256(material);
    std::string hex = digest_hex(id);
    if (device_registry_.count(hex)) continue;  // fresh rv, retry

    NodeState st{NodeRecord{id, {}, role}, EcdsaKeyPair::generate(rng_), nullptr,
                 EdgeBehavior::kHonest};
    st.record.verify_key = st.keys.public_key();
    if (role == Role::kEdge)
      st.miner_rng = std::make_shared<SeededRng>(derive_seed(config_.seed, "miner:" + hex));
    device_registry_[hex] = st.record;

    Json payload;
    payload["type"] = "register";
    payload["role"] = role_name(role);
    payload["id"] = hex;
    payload["verify_key"] = hex_encode(st.record.verify_key);
    nodes_.emplace(hex, std::move(st));
    submit_tx(id, payload);
    return id;
  }
}

Digest32 Engine::register_user(const std::string& raw_id) {
  if (raw_id.empty()) throw InputError("user registration needs an identity");
  for (;;) {
    std::uint64_t rv = rng_.next_u64();
    Bytes material;
    append_len_prefixed_bytes(material, to_bytes(raw_id));
    append_u64_be(material, rv);
    Digest32 id = sha256(material);
    std::string hex = digest_hex(id);
    if (user_registry_.count(hex)) continue;

    NodeState st{NodeRecord{id, {}, Role::kUser}, EcdsaKeyPair::generate(rng_), nullptr,
                 EdgeBehavior::kHonest};
    st.record.verify_key = st.keys.public_key();
    user_registry_[hex] = st.record;

    Json payload;
    payload["type"] = "register";
    payload["role"] = "user";
    payload["id"] = hex;
    payload["verify_key"] = hex_encode(st.record.verify_key);
    nodes_.emplace(hex, std::move(st));
    submit_tx(id, payload);
    return id;
  }
}

// ---- SCPI ----

std::pair<G1Element, FieldElement> Engine::universe_point(const std::string& label) {
  auto it = universe_.find(label);
  if (it != universe_.end()) return it->second;
  auto point = params_->hash_to_group(label, rng_);
  universe_.emplace(label, point);
  return point;
}

abe::AttributePoints Engine::universe_points(const std::vector<std::string>& labels) const {
  abe::AttributePoints out;
  for (const std::string& label : labels) {
    auto it = universe_.find(label);
    if (it == universe_.end())
      throw NotFoundError("attribute '" + label + "' not in the universe set");
    out.emplace(label, it->second.first);
  }
  return out;
}

void Engine::scpi_add_att(const Digest32& id, const std::vector<std::string>& labels) {
  if (!node_state(id)) throw NotFoundError("id not registered");
  if (labels.empty()) throw InputError("no attributes given");
  std::string hex = digest_hex(id);
  auto& stored_labels = attr_labels_[hex];
  auto& stored_points = attr_registry_[hex];
  Json points_json = Json::array();
  for (const std::string& label : labels) {
    if (label.empty()) throw InputError("attribute label must be non-empty");
    if (std::find(stored_labels.begin(), stored_labels.end(), label) != stored_labels.end())
      continue;
    auto [point, rv] = universe_point(label);
    stored_labels.push_back(label);
    stored_points.push_back(point);
    points_json.push_back(point.serialize_hex());
  }
  Json payload;
  payload["type"] = "contract";
  payload["contract"] = "SCPI";
  payload["method"] = "add_att";
  payload["id"] = hex;
  payload["points"] = std::move(points_json);  // H-mapped points only
  submit_tx(id, payload);
}

void Engine::scpi_del_att(const Digest32& id) {
  std::string hex = digest_hex(id);
  if (!attr_registry_.count(hex)) throw NotFoundError("no attributes for id");
  attr_registry_.erase(hex);
  attr_labels_.erase(hex);
  Json payload;
  payload["type"] = "contract";
  payload["contract"] = "SCPI";
  payload["method"] = "del_att";
  payload["id"] = hex;
  submit_tx(id, payload);
}

std::vector<G1Element> Engine::scpi_get_att(const Digest32& id) const {
  auto it = attr_registry_.find(digest_hex(id));
  if (it == attr_registry_.end()) throw NotFoundError("no attributes for id");
  return it->second;
}

const std::vector<std::string>* Engine::labels_of(const Digest32& id) const {
  auto it = attr_labels_.find(digest_hex(id));
  return it == attr_labels_.end() ? nullptr : &it->second;
}

// ---- SCPA ----

Json Engine::skeleton_json(const policy::ThresholdTree& tree,
                           const policy::PolicyMatrix& matrix) {
  Json gates = Json::array();
  for (std::size_t i = 0; i < tree.gates.size(); ++i) {
    const policy::Gate& gate = tree.gates[i];
    Json gj;
    gj["t"] = gate.threshold;
    gj["n"] = gate.fanout();
    Json children = Json::array();
    for (std::size_t j = 0; j < gate.children.size(); ++j) {
      const policy::GateChild& child = gate.children[j];
      Json cj;
      if (child.is_gate) {
        cj["gate"] = child.gate_index;
      } else {
        // Leaves are published as H-mapped points, never labels.
        auto it = universe_.find(child.label);
        cj["leaf_point"] = it == universe_.end() ? "" : it->second.first.serialize_hex();
      }
      children.push_back(std::move(cj));
    }
    gj["children"] = std::move(children);
    gates.push_back(std::move(gj));
  }
  (void)matrix;
  return gates;
}

std::shared_ptr<const policy::PolicyRecord> Engine::compile_policy(
    const std::string& text, std::string* formula_text_out) {
  policy::FormulaPtr formula = policy::parse_policy(text);
  policy::ThresholdTree tree = policy::build_tree(formula);
  policy::ShareAssignment assignment = policy::assign_shares(tree, rng_, *params_);
  auto [policy_id, inserted] =
      policies_.store(assignment.matrix, assignment.tree, assignment.phi_s);
  (void)inserted;
  if (formula_text_out) *formula_text_out = formula->to_text();
  return std::shared_ptr<const policy::PolicyRecord>(
      std::make_shared<policy::PolicyRecord>(*policies_.find(policy_id)));
}

Engine::PolicyHandle Engine::scpa_add_policy(const Digest32& subject, const Digest32& object,
                                             const std::string& formula_text) {
  if (!node_state(subject)) throw NotFoundError("subject not registered");
  if (!node_state(object)) throw NotFoundError("object not registered");

  policy::FormulaPtr formula = policy::parse_policy(formula_text);
  const std::vector<std::string>* subj_labels = labels_of(subject);
  const std::vector<std::string>* obj_labels = labels_of(object);
  for (const std::string& leaf : formula->leaf_labels()) {
    bool known =
        (subj_labels &&
         std::find(subj_labels->begin(), subj_labels->end(), leaf) != subj_labels->end()) ||
        (obj_labels &&
         std::find(obj_labels->begin(), obj_labels->end(), leaf) != obj_labels->end());
    if (!known)
      throw InputError("policy composition: attribute '" + leaf +
                       "' is in neither party's attribute set");
  }

  policy::ThresholdTree tree = policy::build_tree(formula);
  policy::ShareAssignment assignment = policy::assign_shares(tree, rng_, *params_);
  auto [policy_id, inserted] =
      policies_.store(assignment.matrix, assignment.tree, assignment.phi_s);
  (void)inserted;

  std::string obj_hex = digest_hex(object);
  object_policy_[obj_hex] = policy_id;
  object_policy_text_[obj_hex] = formula->to_text();

  Json payload;
  payload["type"] = "contract";
  payload["contract"] = "SCPA";
  payload["method"] = "add_policy";
  payload["object"] = obj_hex;
  payload["policy_id"] = digest_hex(policy_id);
  payload["matrix"] = assignment.matrix.rows_json();
  payload["skeleton"] = skeleton_json(assignment.tree, assignment.matrix);
  submit_tx(object, payload);

  return PolicyHandle{formula, policy_id};
}

std::optional<Digest32> Engine::object_policy(const Digest32& object) const {
  auto it = object_policy_.find(digest_hex(object));
  if (it == object_policy_.end()) return std::nullopt;
  return it->second;
}

std::string Engine::object_policy_text(const Digest32& object) const {
  auto it = object_policy_text_.find(digest_hex(object));
  if (it == object_policy_text_.end())
    throw NotFoundError("object has no stored policy");
  return it->second;
}

// ---- SCPD ----

AccessDecision Engine::judge_core(const Digest32& subject, const Digest32& object) {
  AccessDecision decision;
  decision.subject = subject;
  decision.object = object;
  decision.tick = tick_;

  if (!node_state(subject)) {
    decision.reason = "unknown-subject";
    return decision;
  }
  auto policy_it = object_policy_.find(digest_hex(object));
  if (policy_it == object_policy_.end()) {
    decision.reason = "no-policy";
    return decision;
  }
  const policy::PolicyRecord* record = policies_.find(policy_it->second);
  if (!record) {
    decision.reason = "no-policy";
    return decision;
  }
  const std::vector<std::string>* labels = labels_of(subject);
  if (!labels || labels->empty()) {
    decision.reason = "no-attributes";
    return decision;
  }

  std::set<std::string> attrs(labels->begin(), labels->end());
  auto secret = policy::reconstruct_from_labels(record->matrix, record->skeleton, attrs);
  if (!secret) {
    decision.reason = "insufficient-attributes";
    return decision;
  }
  Digest32 recomputed = policy::compute_policy_id(record->matrix, *secret);
  if (recomputed != record->policy_id) {
    decision.reason = "policy-hash-mismatch";
    return decision;
  }
  decision.granted = true;
  decision.reason = "ok";
  return decision;
}

AccessDecision Engine::scpd_judge_policy(const Digest32& subject, const Digest32& object) {
  AccessDecision decision = judge_core(subject, object);
  Json payload;
  payload["type"] = "contract";
  payload["contract"] = "SCPD";
  payload["method"] = "judge_policy";
  payload["subject"] = digest_hex(subject);
  payload["object"] = digest_hex(object);
  payload["verdict"] = decision.granted;
  payload["reason"] = decision.reason;
  submit_tx(manager_id_, payload);
  return decision;
}

// ---- SCPM ----

PenaltyEntry Engine::scpm_penalize(const Digest32& subject, std::uint64_t tick) {
  std::string hex = digest_hex(subject);
  std::uint64_t t = 1;
  auto it = illegal_records_.find(hex);
  if (it != illegal_records_.end()) t = it->second + 1;
  illegal_records_[hex] = t;

  PenaltyEntry entry;
  entry.violations = t;
  entry.next_time = t <= 10 ? tick + (1ull << t) : kPermanentLockout;
  penalty_measures_[hex] = entry.next_time;

  Json payload;
  payload["type"] = "contract";
  payload["contract"] = "SCPM";
  payload["method"] = "penalize";
  payload["subject"] = hex;
  payload["violations"] = t;
  if (entry.next_time == kPermanentLockout)
    payload["next_time"] = "PERMANENT";
  else
    payload["next_time"] = entry.next_time;
  submit_tx(manager_id_, payload);
  return entry;
}

std::optional<PenaltyEntry> Engine::penalty_state(const Digest32& subject) const {
  std::string hex = digest_hex(subject);
  auto it = illegal_records_.find(hex);
  if (it == illegal_records_.end()) return std::nullopt;
  PenaltyEntry entry;
  entry.violations = it->second;
  auto pm = penalty_measures_.find(hex);
  entry.next_time = pm == penalty_measures_.end() ? 0 : pm->second;
  return entry;
}

// ---- SCPE ----

EnforceResult Engine::scpe_enforce(const Digest32& subject, const Digest32& object,
                                   std::uint64_t tick) {
  EnforceResult result;
  std::string subj_hex = digest_hex(subject);
  std::string obj_hex = digest_hex(object);

  auto record_outcome = [&](EnforceOutcome outcome, const std::string& reason) {
    result.outcome = outcome;
    Json payload;
    payload["type"] = "contract";
    payload["contract"] = "SCPE";
    payload["method"] = "enforce";
    payload["subject"] = subj_hex;
    payload["object"] = obj_hex;
    payload["outcome"] = outcome_name(outcome);
    payload["reason"] = reason;
    submit_tx(manager_id_, payload);
  };

  if (!node_state(subject) || !node_state(object)) {
    result.decision = AccessDecision{false, subject, object, tick, "unknown-id"};
    record_outcome(EnforceOutcome::kDeniedUnknown, "unknown-id");
    return result;
  }
  if (busy_objects_.count(obj_hex)) {
    result.decision = AccessDecision{false, subject, object, tick, "object-busy"};
    record_outcome(EnforceOutcome::kDeniedBusy, "object-busy");
    return result;
  }

  auto pm = penalty_measures_.find(subj_hex);
  if (pm != penalty_measures_.end()) {
    std::uint64_t next_time = pm->second;
    if (tick < next_time) {
      // Still locked out: the retry itself escalates the record.
      std::uint64_t t = illegal_records_[subj_hex] + 1;
      illegal_records_[subj_hex] = t;
      std::uint64_t recomputed = t <= 10 ? tick + (1ull << t) : kPermanentLockout;
      penalty_measures_[subj_hex] = recomputed;
      Json payload;
      payload["type"] = "contract";
      payload["contract"] = "SCPM";
      payload["method"] = "penalize";
      payload["subject"] = subj_hex;
      payload["violations"] = t;
      if (recomputed == kPermanentLockout)
        payload["next_time"] = "PERMANENT";
      else
        payload["next_time"] = recomputed;
      submit_tx(manager_id_, payload);

      result.decision = AccessDecision{false, subject, object, tick, "locked"};
      record_outcome(EnforceOutcome::kDeniedLocked, "locked");
      return result;
    }
    // Lockout expired: the record cools down before re-judgment.
    std::uint64_t t = illegal_records_[subj_hex];
    if (t <= 1) {
      illegal_records_.erase(subj_hex);
      penalty_measures_.erase(subj_hex);
    } else {
      illegal_records_[subj_hex] = t - 1;
    }
    Json payload;
    payload["type"] = "contract";
    payload["contract"] = "SCPM";
    payload["method"] = "cooldown";
    payload["subject"] = subj_hex;
    payload["violations"] = t - 1;
    submit_tx(manager_id_, payload);
  }

  AccessDecision decision = scpd_judge_policy(subject, object);
  decision.tick = tick;
  result.decision = decision;
  if (decision.granted) {
    busy_objects_.insert(obj_hex);
    open_grants_.insert(pair_key(subject, object));
    record_outcome(EnforceOutcome::kGranted, decision.reason);
    return result;
  }
  scpm_penalize(subject, tick);
  record_outcome(EnforceOutcome::kDeniedPenalized, decision.reason);
  return result;
}

// ---- SCED ----

FieldElement Engine::identity_exponent(const Digest32& id) {
  std::string hex = digest_hex(id);
  auto it = identity_points_.find(hex);
  if (it != identity_points_.end()) return it->second.second;
  auto point = params_->hash_to_group(hex, rng_);
  identity_points_.emplace(hex, point);
  return point.second;
}

Digest32 Engine::sced_encrypt(const Digest32& owner, const Bytes& payload,
                              const std::string& policy_text) {
  if (!node_state(owner)) throw NotFoundError("owner not registered");

  policy::FormulaPtr formula = policy::parse_policy(policy_text);
  for (const std::string& leaf : formula->leaf_labels()) universe_point(leaf);

  std::string normalized;
  auto record = compile_policy(policy_text, &normalized);
  abe::AttributePoints points = universe_points(record->skeleton.leaf_labels());
  FieldElement h = identity_exponent(owner);
  abe::WrappedPayload wrapped = abe::wrap(pk_, payload, record, points, h, rng_);

  Json tx_payload;
  tx_payload["type"] = "data";
  tx_payload["owner"] = digest_hex(owner);
  tx_payload["policy_id"] = digest_hex(record->policy_id);
  tx_payload["wrapped"] = wrapped.to_json();

  NodeState* st = node_state(owner);
  chain::Transaction tx =
      chain::sign_tx(st->keys, owner, to_bytes(tx_payload.dump()), tick_);
  Digest32 reference = tx.tx_digest();
  mempool_.push_back(tx);
  if (mempool_.size() >= config_.txs_per_block) {
    std::vector<Digest32> edges = edge_ids();
    seal_pending(edges.empty() ? manager_id_ : edges.front());
  }

  data_store_.insert_or_assign(digest_hex(reference),
                               DataRecord{std::move(wrapped), owner, normalized, true});
  object_refs_[digest_hex(owner)].push_back(reference);
  return reference;
}

const Engine::DataRecord* Engine::find_data(const Digest32& reference) const {
  auto it = data_store_.find(digest_hex(reference));
  return it == data_store_.end() ? nullptr : &it->second;
}

std::vector<Digest32> Engine::object_data_refs(const Digest32& object) const {
  auto it = object_refs_.find(digest_hex(object));
  if (it == object_refs_.end()) return {};
  std::vector<Digest32> active;
  for (const Digest32& ref : it->second) {
    const DataRecord* rec = find_data(ref);
    if (rec && rec->active) active.push_back(ref);
  }
  return active;
}

Engine::DecryptResult Engine::sced_decrypt(const Digest32& subject,
                                           const Digest32& reference) {
  const DataRecord* rec = find_data(reference);
  if (!rec || !rec->active) throw NotFoundError("no active data at reference");
  if (!open_grants_.count(pair_key(subject, rec->owner)))
    throw StateError("SCED decrypt requires a standing SCPE grant");

  const std::vector<std::string>* labels = labels_of(subject);
  if (!labels || labels->empty()) throw StateError("subject has no attributes");
  abe::AttributePoints points = universe_points(*labels);
  FieldElement h = identity_exponent(rec->owner);
  abe::PrivateKey key = abe::keygen(pk_, mk_, *labels, points, h, rng_);
  issued_keys_.emplace(key.key_id(), key);
  return decrypt_with_key(subject, reference, key);
}

Engine::DecryptResult Engine::sced_decrypt_reusing(const Digest32& subject,
                                                   const Digest32& reference,
                                                   const std::string& key_id) {
  if (spent_keys_.count(key_id))
    throw StateError("private key handle was invalidated after use");
  auto it = issued_keys_.find(key_id);
  if (it == issued_keys_.end()) throw NotFoundError("unknown key handle");
  return decrypt_with_key(subject, reference, it->second);
}

Engine::DecryptResult Engine::decrypt_with_key(const Digest32& subject,
                                               const Digest32& reference,
                                               const abe::PrivateKey& key) {
  (void)subject;  // the grant was checked by the caller
  const DataRecord* rec = find_data(reference);
  if (!rec || !rec->active) throw NotFoundError("no active data at reference");

  std::vector<Digest32> edges = edge_ids();
  if (edges.size() < 3)
    throw StateError("outsourced decryption needs at least 3 edge nodes");
  std::sort(edges.begin(), edges.end(),
            [](const Digest32& a, const Digest32& b) { return digest_hex(a) < digest_hex(b); });

  // Each edge computes its own result; the improved PoW round settles
  // which one the chain accepts.
  std::vector<chain::MinerState> miners;
  std::vector<Bytes> results;
  for (const Digest32& edge : edges) {
    NodeState* st = node_state(edge);
    chain::MinerState miner;
    miner.node_id = edge;
    miner.strategy = config_.strategy;
    miner.rng = st->miner_rng;
    Bytes m;
    switch (st->behavior) {
      case EdgeBehavior::kForgeDecrypt:
        m = kForgedResult;
        break;
      case EdgeBehavior::kSkipWork:
        miner.participates = false;
        m = kDecryptFailSentinel;
        break;
      default: {
        auto plain = abe::unwrap(pk_, key, rec->wrapped);
        m = plain ? *plain : kDecryptFailSentinel;
        break;
      }
    }
    miners.push_back(std::move(miner));
    results.push_back(std::move(m));
  }

  chain::ConsensusResult round = chain::consensus_round(
      miners, results, chain_.head().block_hash, config_.difficulty, tick_);
  if (!round.accepted) throw StateError("consensus failure: fragmented decrypt results");

  chain_.append(round.block);
  block_attempts_.push_back(round.total_attempts);

  Json result_tx;
  result_tx["type"] = "contract";
  result_tx["contract"] = "SCED";
  result_tx["method"] = "decrypt_result";
  result_tx["reference"] = digest_hex(reference);
  result_tx["m_digest"] = digest_hex(sha256(round.m));
  submit_tx(round.block.creator, result_tx);

  std::string key_id = key.key_id();
  spent_keys_.insert(key_id);
  issued_keys_.erase(key_id);

  if (round.m == kDecryptFailSentinel)
    throw StateError("decryption failed: attributes do not satisfy the encryption policy");

  // Re-encrypt under a fresh share assignment so every ciphertext is
  // single-serve (new policy and key after each decrypt).
  Digest32 owner = rec->owner;
  std::string policy_text = rec->policy_text;
  data_store_.find(digest_hex(reference))->second.active = false;
  Digest32 new_ref = sced_encrypt(owner, round.m, policy_text);

  DecryptResult out;
  out.payload = round.m;
  out.key_id = key_id;
  out.new_reference = new_ref;
  out.consensus_attempts = round.total_attempts;
  return out;
}

// ---- simulation plumbing ----

void Engine::set_edge_behavior(const Digest32& edge, EdgeBehavior behavior) {
  NodeState* st = node_state(edge);
  if (!st) throw NotFoundError("unknown node");
  if (st->record.role != Role::kEdge)
    throw InputError("malicious behavior can only be injected on edge nodes");
  st->behavior = behavior;
}

void Engine::set_tick(std::uint64_t tick) {
  tick_ = tick;
  busy_objects_.clear();
  open_grants_.clear();
}

bool Engine::verify_recorded_tx(const Digest32& tx_digest) const {
  auto tx = chain_.find_transaction(tx_digest);
  if (!tx) return false;
  const auto& keys = chain_.key_registry();
  auto it = keys.find(digest_hex(tx->sender));
  if (it == keys.end()) return false;
  return chain::verify_tx(*tx, it->second);
}

}  // namespace abechain::contracts
