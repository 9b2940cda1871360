#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "abechain/group.hpp"
#include "abechain/hash.hpp"
#include "abechain/json.hpp"
#include "abechain/policy.hpp"
#include "abechain/rng.hpp"

namespace abechain::abe {

// PK = {G1, GT, g, p, e, g^alpha, g^beta, H}; the params handle carries
// the group and the hash-to-group entry point.
struct PublicKey {
  GroupParamsPtr params;
  G1Element g_alpha;
  G1Element g_beta;

  Json to_json() const;
};

// MK = {g^alpha, beta}; held by the trust anchor only.
struct MasterKey {
  G1Element g_alpha;
  FieldElement beta;
};

struct PrivateKeyComponent {
  std::string attr_label;
  G1Element attr_point;  // H(attr)
  G1Element d;           // D_j = g^{rv_j}
  G1Element a;           // A_aj = g^{rv} * H(attr_j)^{rv_j}
};

// Single-use decryption key; SCED tracks spent key ids.
struct PrivateKey {
  G1Element pk;  // g^{(rv+h)/beta}
  G1Element d;   // g^{alpha/beta}
  std::vector<PrivateKeyComponent> components;

  std::vector<std::string> attr_labels() const;
  std::string key_id() const;  // digest over the serialized key material
};

struct CiphertextComponent {
  std::size_t row = 0;  // leaf position in the share matrix
  std::size_t col = 0;
  G1Element c;  // C_i = g^{s_i}
  G1Element m;  // M_ai = H(rho(i))^{s_i}
};

struct Ciphertext {
  GTElement ct0;  // m * e(g,g)^{(alpha+h)s}
  G1Element c;    // g^{beta*s}
  std::vector<CiphertextComponent> components;  // one per policy leaf
  Digest32 policy_id{};
  std::shared_ptr<const policy::PolicyRecord> record;

  Json to_json() const;
};

// Cached H(label) points supplied by the attribute registry.
using AttributePoints = std::map<std::string, G1Element>;

std::pair<PublicKey, MasterKey> setup(const GroupParamsPtr& params, RandomStream& rng);

// The share matrix must carry assigned shares; s is recovered from the
// root row. h is the exponent bound to the data owner identity.
Ciphertext encrypt(const PublicKey& pk, const GTElement& m,
                   const std::shared_ptr<const policy::PolicyRecord>& record,
                   const AttributePoints& points, const FieldElement& h);

PrivateKey keygen(const PublicKey& pk, const MasterKey& mk,
                  const std::vector<std::string>& subject_attrs,
                  const AttributePoints& points, const FieldElement& h, RandomStream& rng);

// Share-wise pairing and gate-by-gate interpolation in the exponent.
// Always returns a GT element; it equals the encrypted message exactly
// when the key's attribute set satisfies the policy tree.
GTElement decrypt(const PublicKey& pk, const PrivateKey& sk, const Ciphertext& ct);

// Product of shares raised to the Lagrange coefficients at x=0.
GTElement interpolate_in_exponent(
    const std::vector<std::pair<std::uint64_t, GTElement>>& shares, std::uint64_t t);

// KEM-DEM wrapper for byte payloads: the header encapsulates a random GT
// element K; the body is XORed with the SHA-256(serialize(K) || counter)
// keystream; the digest authenticates the plaintext.
struct WrappedPayload {
  Ciphertext header;
  Bytes body;
  std::uint64_t length = 0;
  Digest32 plaintext_digest{};

  Json to_json() const;
};

WrappedPayload wrap(const PublicKey& pk, const Bytes& payload,
                    const std::shared_ptr<const policy::PolicyRecord>& record,
                    const AttributePoints& points, const FieldElement& h, RandomStream& rng);

// nullopt on digest mismatch (policy not satisfied or tampered body);
// never returns garbage bytes.
std::optional<Bytes> unwrap(const PublicKey& pk, const PrivateKey& sk,
                            const WrappedPayload& wp);

}  // namespace abechain::abe
