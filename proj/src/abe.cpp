#include "abechain/abe.hpp"

#include <algorithm>

#include "abechain/errors.hpp"

namespace abechain::abe {

Json PublicKey::to_json() const {
  Json j;
  j["params"] = params->serialize();
  j["g_alpha"] = base64_encode(g_alpha.serialize());
  j["g_beta"] = base64_encode(g_beta.serialize());
  return j;
}

std::vector<std::string> PrivateKey::attr_labels() const {
  std::vector<std::string> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.attr_label);
  return out;
}

std::string PrivateKey::key_id() const {
  Bytes data = pk.serialize();
  Bytes db = d.serialize();
  data.insert(data.end(), db.begin(), db.end());
  for (const auto& c : components) {
    Bytes cb = c.d.serialize();
    data.insert(data.end(), cb.begin(), cb.end());
    cb = c.a.serialize();
    data.insert(data.end(), cb.begin(), cb.end());
  }
  return digest_hex(sha256(data));
}

Json Ciphertext::to_json() const {
  Json j;
  j["ct0"] = base64_encode(ct0.serialize());
  j["c"] = base64_encode(c.serialize());
  Json comps = Json::array();
  for (const auto& comp : components) {
    Json cj;
    cj["row"] = comp.row;
    cj["col"] = comp.col;
    cj["c"] = base64_encode(comp.c.serialize());
    cj["m"] = base64_encode(comp.m.serialize());
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  j["policy_id"] = digest_hex(policy_id);
  if (record) j["matrix"] = record->matrix.rows_json();
  return j;
}

std::pair<PublicKey, MasterKey> setup(const GroupParamsPtr& params, RandomStream& rng) {
  FieldElement alpha = params->random_scalar(rng);
  FieldElement beta = params->random_scalar(rng);
  G1Element g = params->g();
  PublicKey pk{params, g.pow(alpha), g.pow(beta)};
  MasterKey mk{pk.g_alpha, beta};
  return {std::move(pk), std::move(mk)};
}

namespace {

FieldElement root_secret(const policy::PolicyMatrix& matrix) {
  const policy::MatrixRow& root = matrix.rows.at(0);
  std::vector<std::pair<std::uint64_t, FieldElement>> shares;
  for (std::uint64_t x = 1; x <= root.t; ++x)
    shares.emplace_back(x, FieldElement(root.shares[x - 1], matrix.modulus));
  return policy::reconstruct_secret(shares, root.t);
}

}  // namespace

Ciphertext encrypt(const PublicKey& pk, const GTElement& m,
                   const std::shared_ptr<const policy::PolicyRecord>& record,
                   const AttributePoints& points, const FieldElement& h) {
  if (!record || record->matrix.rows.empty())
    throw StateError("encrypt requires a compiled policy matrix with shares");
  const policy::PolicyMatrix& matrix = record->matrix;
  for (const auto& row : matrix.rows)
    if (row.n == 0 || row.shares.size() < row.n)
      throw StateError("policy matrix row without shares");

  const GroupParamsPtr& params = pk.params;
  G1Element g = params->g();
  FieldElement s = root_secret(matrix);

  // CT0 = m * e(g^{alpha} * g^{h}, g^{s}) = m * e(g,g)^{(alpha+h)s}
  GTElement mask = pair(pk.g_alpha.mul(g.pow(h)), g.pow(s));
  Ciphertext ct{m.mul(mask), pk.g_beta.pow(s), {}, record->policy_id, record};

  for (const auto& [pos, label] : matrix.rho) {
    auto it = points.find(label);
    if (it == points.end())
      throw InputError("no hash point registered for attribute '" + label + "'");
    FieldElement share(matrix.rows[pos.first].shares[pos.second], matrix.modulus);
    CiphertextComponent comp{pos.first, pos.second, g.pow(share), it->second.pow(share)};
    ct.components.push_back(std::move(comp));
  }
  return ct;
}

PrivateKey keygen(const PublicKey& pk, const MasterKey& mk,
                  const std::vector<std::string>& subject_attrs,
                  const AttributePoints& points, const FieldElement& h, RandomStream& rng) {
  if (subject_attrs.empty()) throw InputError("subject attribute set is empty");
  const GroupParamsPtr& params = pk.params;
  G1Element g = params->g();

  FieldElement rv = params->random_scalar(rng);
  FieldElement beta_inv = mk.beta.inv();

  PrivateKey sk{g.pow((rv + h) * beta_inv), mk.g_alpha.pow(beta_inv), {}};
  G1Element g_rv = g.pow(rv);
  for (const std::string& attr : subject_attrs) {
    auto it = points.find(attr);
    if (it == points.end())
      throw InputError("no hash point registered for attribute '" + attr + "'");
    FieldElement rv_j = params->random_scalar(rng);
    PrivateKeyComponent comp{attr, it->second, g.pow(rv_j), g_rv.mul(it->second.pow(rv_j))};
    sk.components.push_back(std::move(comp));
  }
  return sk;
}

GTElement interpolate_in_exponent(
    const std::vector<std::pair<std::uint64_t, GTElement>>& shares, std::uint64_t t) {
  if (t == 0) throw InputError("threshold must be at least 1");
  if (shares.size() < t)
    throw InsufficientSharesError("need " + std::to_string(t) + " exponent shares, got " +
                                  std::to_string(shares.size()));
  std::set<std::uint64_t> seen;
  for (const auto& [x, y] : shares) {
    if (x == 0) throw InputError("share x-coordinate must be nonzero");
    if (!seen.insert(x).second) throw InputError("duplicate share x-coordinate");
  }
  std::uint64_t modulus = shares.front().second.params()->prime();
  std::vector<std::uint64_t> xs;
  for (std::uint64_t i = 0; i < t; ++i) xs.push_back(shares[i].first);
  std::vector<FieldElement> lambda = policy::lagrange_at_zero(xs, modulus);
  GTElement acc = shares.front().second.params()->gt_identity();
  for (std::uint64_t i = 0; i < t; ++i) acc = acc.mul(shares[i].second.pow(lambda[i]));
  return acc;
}

namespace {

// Gate-by-gate recovery of e(g,g)^{rv * secret}: the two-pairing ratio
// per chosen leaf, then interpolation in the exponent per gate,
// children first.
std::optional<GTElement> gate_exponent_share(
    const Ciphertext& ct, const PrivateKey& sk,
    const std::map<std::pair<std::size_t, std::size_t>, const CiphertextComponent*>& by_pos,
    const std::map<std::string, const PrivateKeyComponent*>& by_label, std::size_t index) {
  const policy::ThresholdTree& tree = ct.record->skeleton;
  const policy::Gate& gate = tree.gates[index];
  std::vector<std::pair<std::uint64_t, GTElement>> collected;
  for (std::size_t j = 0; j < gate.children.size(); ++j) {
    const policy::GateChild& child = gate.children[j];
    if (child.is_gate) {
      auto v = gate_exponent_share(ct, sk, by_pos, by_label, child.gate_index);
      if (v) collected.emplace_back(j + 1, *v);
    } else {
      auto key_it = by_label.find(child.label);
      auto comp_it = by_pos.find({index, j});
      if (key_it != by_label.end() && comp_it != by_pos.end()) {
        const PrivateKeyComponent& kc = *key_it->second;
        const CiphertextComponent& cc = *comp_it->second;
        // e(C_i, A_aj) / e(D_j, M_ai) = e(g,g)^{rv * s_i}
        GTElement share = pair(cc.c, kc.a).div(pair(kc.d, cc.m));
        collected.emplace_back(j + 1, std::move(share));
      }
    }
    if (collected.size() == gate.threshold) break;
  }
  if (collected.size() < gate.threshold) return std::nullopt;
  return interpolate_in_exponent(collected, gate.threshold);
}

}  // namespace

GTElement decrypt(const PublicKey& pk, const PrivateKey& sk, const Ciphertext& ct) {
  if (!pk.params->same_group(*ct.ct0.params()))
    throw ParamError("ciphertext and key use different group parameters");
  if (!ct.record) throw StateError("ciphertext carries no policy record");

  std::map<std::pair<std::size_t, std::size_t>, const CiphertextComponent*> by_pos;
  for (const auto& comp : ct.components) by_pos[{comp.row, comp.col}] = &comp;
  std::map<std::string, const PrivateKeyComponent*> by_label;
  for (const auto& comp : sk.components) by_label.emplace(comp.attr_label, &comp);

  auto root = gate_exponent_share(ct, sk, by_pos, by_label, 0);
  // An unsatisfied policy still yields an element, just not the message.
  GTElement rv_s = root ? *root : pk.params->gt_identity();

  GTElement denom = pair(sk.pk, ct.c).mul(pair(sk.d, ct.c));
  return ct.ct0.mul(rv_s).div(denom);
}

Json WrappedPayload::to_json() const {
  Json j;
  j["header"] = header.to_json();
  j["body"] = base64_encode(body);
  j["length"] = length;
  j["digest"] = digest_hex(plaintext_digest);
  return j;
}

WrappedPayload wrap(const PublicKey& pk, const Bytes& payload,
                    const std::shared_ptr<const policy::PolicyRecord>& record,
                    const AttributePoints& points, const FieldElement& h, RandomStream& rng) {
  GTElement k = pk.params->gT().pow(pk.params->random_scalar(rng));
  WrappedPayload wp{encrypt(pk, k, record, points, h), payload,
                    static_cast<std::uint64_t>(payload.size()), sha256(payload)};
  Sha256Keystream stream(k.serialize());
  stream.apply(wp.body.data(), wp.body.size());
  return wp;
}

std::optional<Bytes> unwrap(const PublicKey& pk, const PrivateKey& sk,
                            const WrappedPayload& wp) {
  GTElement k = decrypt(pk, sk, wp.header);
  Bytes plain = wp.body;
  Sha256Keystream stream(k.serialize());
  stream.apply(plain.data(), plain.size());
  if (plain.size() != wp.length || sha256(plain) != wp.plaintext_digest)
    return std::nullopt;
  return plain;
}

}  // namespace abechain::abe
