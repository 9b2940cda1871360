#pragma once

#include <memory>
#include <string>
#include <utility>

#include "abechain/bytes.hpp"
#include "abechain/field.hpp"
#include "abechain/rng.hpp"

namespace abechain {

class GroupParams;
class G1Element;
class GTElement;

enum class Backend {
  kExponentTracking,  // element = its discrete log; insecure, fully testable
  kSymmetricPairing,  // supersingular curve with a modified Tate pairing
};

std::string backend_tag(Backend b);

// Bilinear pairing group of prime order p with generator g of G1 and
// gT = e(g, g) of GT. Immutable once created; safe to share across threads.
class GroupParams : public std::enable_shared_from_this<GroupParams> {
 public:
  // Backed by discrete logs. Every protocol identity is checkable.
  static std::shared_ptr<const GroupParams> exponent_tracking(std::uint64_t p);

  // Real pairing over y^2 = x^3 + x on F_q, q = p*k - 1 prime, q = 3 mod 4.
  // min_q_bits inflates q (and the unit of work) toward realistic sizes.
  static std::shared_ptr<const GroupParams> symmetric_pairing(std::uint64_t p,
                                                              int min_q_bits = 0);

  ~GroupParams();
  GroupParams(const GroupParams&) = delete;
  GroupParams& operator=(const GroupParams&) = delete;

  Backend backend() const { return backend_; }
  std::uint64_t prime() const { return p_; }

  G1Element g() const;
  GTElement gT() const;
  G1Element g1_identity() const;
  GTElement gt_identity() const;

  FieldElement field(std::uint64_t v) const { return FieldElement(v, p_); }
  // Uniform scalar in [1, p); zero is reserved for padding.
  FieldElement random_scalar(RandomStream& rng) const;

  // Maps an attribute label to (g^rv, rv) for a fresh rv. Caching one
  // point per label is the registry's job, not this function's.
  std::pair<G1Element, FieldElement> hash_to_group(const std::string& label,
                                                   RandomStream& rng) const;

  // Canonical text form: decimal p, decimal generator logs, backend tag.
  std::string serialize() const;

  bool same_group(const GroupParams& o) const;

 private:
  friend class G1Element;
  friend class GTElement;
  friend GTElement pair(const G1Element& u, const G1Element& v);
  GroupParams() = default;

  Backend backend_ = Backend::kExponentTracking;
  std::uint64_t p_ = 0;
  struct EcState;
  std::unique_ptr<EcState> ec_;  // pairing backend only
};

using GroupParamsPtr = std::shared_ptr<const GroupParams>;

class G1Element {
 public:
  G1Element mul(const G1Element& o) const;
  G1Element pow(const FieldElement& e) const;
  G1Element inverse() const;
  bool is_identity() const;

  // Exponent-tracking backend only: the x with this = g^x.
  FieldElement discrete_log() const;

  Bytes serialize() const;
  std::string serialize_hex() const;

  const GroupParamsPtr& params() const { return params_; }

  friend bool operator==(const G1Element& a, const G1Element& b);
  friend bool operator!=(const G1Element& a, const G1Element& b) { return !(a == b); }

 private:
  friend class GroupParams;
  friend GTElement pair(const G1Element& u, const G1Element& v);
  G1Element(GroupParamsPtr params, std::uint64_t log, std::shared_ptr<const void> pt)
      : params_(std::move(params)), log_(log), pt_(std::move(pt)) {}

  GroupParamsPtr params_;
  std::uint64_t log_ = 0;             // exponent backend
  std::shared_ptr<const void> pt_;    // pairing backend point
};

class GTElement {
 public:
  GTElement mul(const GTElement& o) const;
  GTElement pow(const FieldElement& e) const;
  GTElement inverse() const;
  GTElement div(const GTElement& o) const { return mul(o.inverse()); }
  bool is_identity() const;

  FieldElement discrete_log() const;

  Bytes serialize() const;
  std::string serialize_hex() const;

  const GroupParamsPtr& params() const { return params_; }

  friend bool operator==(const GTElement& a, const GTElement& b);
  friend bool operator!=(const GTElement& a, const GTElement& b) { return !(a == b); }

 private:
  friend class GroupParams;
  friend GTElement pair(const G1Element& u, const G1Element& v);
  GTElement(GroupParamsPtr params, std::uint64_t log, std::shared_ptr<const void> val)
      : params_(std::move(params)), log_(log), val_(std::move(val)) {}

  GroupParamsPtr params_;
  std::uint64_t log_ = 0;
  std::shared_ptr<const void> val_;
};

// The bilinear map e: G1 x G1 -> GT. Mismatched params -> ParamError.
GTElement pair(const G1Element& u, const G1Element& v);

}  // namespace abechain
