#include "abechain/group.hpp"

#include <openssl/bn.h>

#include <cstring>

#include "abechain/errors.hpp"

namespace abechain {

namespace {

// Value-semantic BIGNUM.
class Bn {
 public:
  Bn() : p_(BN_new()) {
    if (!p_) throw CryptoError("BN_new failed");
    BN_zero(p_);
  }
  explicit Bn(std::uint64_t v) : Bn() {
    if (BN_set_word(p_, v) != 1) throw CryptoError("BN_set_word failed");
  }
  Bn(const Bn& o) : p_(BN_dup(o.p_)) {
    if (!p_) throw CryptoError("BN_dup failed");
  }
  Bn(Bn&& o) noexcept : p_(o.p_) { o.p_ = nullptr; }
  Bn& operator=(const Bn& o) {
    if (this != &o) {
      if (!BN_copy(p_, o.p_)) throw CryptoError("BN_copy failed");
    }
    return *this;
  }
  Bn& operator=(Bn&& o) noexcept {
    std::swap(p_, o.p_);
    return *this;
  }
  ~Bn() { BN_free(p_); }

  BIGNUM* get() { return p_; }
  const BIGNUM* get() const { return p_; }

  bool is_zero() const { return BN_is_zero(p_); }
  bool operator==(const Bn& o) const { return BN_cmp(p_, o.p_) == 0; }

 private:
  BIGNUM* p_;
};

struct CtxGuard {
  BN_CTX* ctx;
  CtxGuard() : ctx(BN_CTX_new()) {
    if (!ctx) throw CryptoError("BN_CTX_new failed");
  }
  ~CtxGuard() { BN_CTX_free(ctx); }
};

// ---- F_q arithmetic ----

Bn fq_add(const Bn& a, const Bn& b, const Bn& q, BN_CTX* ctx) {
  Bn r;
  BN_mod_add(r.get(), a.get(), b.get(), q.get(), ctx);
  return r;
}
Bn fq_sub(const Bn& a, const Bn& b, const Bn& q, BN_CTX* ctx) {
  Bn r;
  BN_mod_sub(r.get(), a.get(), b.get(), q.get(), ctx);
  return r;
}
Bn fq_mul(const Bn& a, const Bn& b, const Bn& q, BN_CTX* ctx) {
  Bn r;
  BN_mod_mul(r.get(), a.get(), b.get(), q.get(), ctx);
  return r;
}
Bn fq_sqr(const Bn& a, const Bn& q, BN_CTX* ctx) {
  Bn r;
  BN_mod_sqr(r.get(), a.get(), q.get(), ctx);
  return r;
}
Bn fq_inv(const Bn& a, const Bn& q, BN_CTX* ctx) {
  Bn r;
  if (!BN_mod_inverse(r.get(), a.get(), q.get(), ctx))
    throw CryptoError("F_q inverse does not exist");
  return r;
}
Bn fq_neg(const Bn& a, const Bn& q, BN_CTX* ctx) {
  Bn zero;
  return fq_sub(zero, a, q, ctx);
}

// ---- F_q^2 = F_q[i], i^2 = -1 (q = 3 mod 4) ----

struct Fq2 {
  Bn a, b;  // a + b*i

  bool operator==(const Fq2& o) const { return a == o.a && b == o.b; }
};

Fq2 fq2_one() {
  Fq2 r;
  r.a = Bn(1);
  return r;
}

bool fq2_is_one(const Fq2& x) { return BN_is_one(x.a.get()) && x.b.is_zero(); }

Fq2 fq2_mul(const Fq2& x, const Fq2& y, const Bn& q, BN_CTX* ctx) {
  // (a+bi)(c+di) = (ac - bd) + (ad + bc)i
  Fq2 r;
  Bn ac = fq_mul(x.a, y.a, q, ctx);
  Bn bd = fq_mul(x.b, y.b, q, ctx);
  Bn ad = fq_mul(x.a, y.b, q, ctx);
  Bn bc = fq_mul(x.b, y.a, q, ctx);
  r.a = fq_sub(ac, bd, q, ctx);
  r.b = fq_add(ad, bc, q, ctx);
  return r;
}

Fq2 fq2_sqr(const Fq2& x, const Bn& q, BN_CTX* ctx) {
  // (a+bi)^2 = (a+b)(a-b) + 2ab i
  Fq2 r;
  Bn s = fq_add(x.a, x.b, q, ctx);
  Bn d = fq_sub(x.a, x.b, q, ctx);
  r.a = fq_mul(s, d, q, ctx);
  Bn ab = fq_mul(x.a, x.b, q, ctx);
  r.b = fq_add(ab, ab, q, ctx);
  return r;
}

Fq2 fq2_conj(const Fq2& x, const Bn& q, BN_CTX* ctx) {
  Fq2 r;
  r.a = x.a;
  r.b = fq_neg(x.b, q, ctx);
  return r;
}

Fq2 fq2_inv(const Fq2& x, const Bn& q, BN_CTX* ctx) {
  // (a+bi)^-1 = (a-bi)/(a^2+b^2)
  Bn norm = fq_add(fq_sqr(x.a, q, ctx), fq_sqr(x.b, q, ctx), q, ctx);
  Bn ninv = fq_inv(norm, q, ctx);
  Fq2 r;
  r.a = fq_mul(x.a, ninv, q, ctx);
  r.b = fq_mul(fq_neg(x.b, q, ctx), ninv, q, ctx);
  return r;
}

Fq2 fq2_pow_bn(const Fq2& x, const BIGNUM* e, const Bn& q, BN_CTX* ctx) {
  Fq2 r = fq2_one();
  int bits = BN_num_bits(e);
  for (int i = bits - 1; i >= 0; --i) {
    r = fq2_sqr(r, q, ctx);
    if (BN_is_bit_set(e, i)) r = fq2_mul(r, x, q, ctx);
  }
  return r;
}

Fq2 fq2_pow_u64(const Fq2& x, std::uint64_t e, const Bn& q, BN_CTX* ctx) {
  Bn be(e);
  return fq2_pow_bn(x, be.get(), q, ctx);
}

// ---- points on y^2 = x^3 + x over F_q ----

struct EcPoint {
  Bn x, y;
  bool inf = true;

  bool operator==(const EcPoint& o) const {
    if (inf || o.inf) return inf == o.inf;
    return x == o.x && y == o.y;
  }
};

EcPoint ec_double(const EcPoint& p, const Bn& q, BN_CTX* ctx) {
  if (p.inf || p.y.is_zero()) return EcPoint{};
  // lambda = (3x^2 + 1) / 2y
  Bn x2 = fq_sqr(p.x, q, ctx);
  Bn num = fq_add(fq_add(x2, x2, q, ctx), fq_add(x2, Bn(1), q, ctx), q, ctx);
  Bn den = fq_inv(fq_add(p.y, p.y, q, ctx), q, ctx);
  Bn lambda = fq_mul(num, den, q, ctx);
  EcPoint r;
  r.inf = false;
  r.x = fq_sub(fq_sqr(lambda, q, ctx), fq_add(p.x, p.x, q, ctx), q, ctx);
  r.y = fq_sub(fq_mul(lambda, fq_sub(p.x, r.x, q, ctx), q, ctx), p.y, q, ctx);
  return r;
}

EcPoint ec_add(const EcPoint& p, const EcPoint& s, const Bn& q, BN_CTX* ctx) {
  if (p.inf) return s;
  if (s.inf) return p;
  if (p.x == s.x) {
    if (p.y == s.y) return ec_double(p, q, ctx);
    return EcPoint{};
  }
  Bn lambda =
      fq_mul(fq_sub(s.y, p.y, q, ctx), fq_inv(fq_sub(s.x, p.x, q, ctx), q, ctx), q, ctx);
  EcPoint r;
  r.inf = false;
  r.x = fq_sub(fq_sub(fq_sqr(lambda, q, ctx), p.x, q, ctx), s.x, q, ctx);
  r.y = fq_sub(fq_mul(lambda, fq_sub(p.x, r.x, q, ctx), q, ctx), p.y, q, ctx);
  return r;
}

EcPoint ec_mul_bn(const EcPoint& p, const BIGNUM* e, const Bn& q, BN_CTX* ctx) {
  EcPoint r;
  int bits = BN_num_bits(e);
  for (int i = bits - 1; i >= 0; --i) {
    r = ec_double(r, q, ctx);
    if (BN_is_bit_set(e, i)) r = ec_add(r, p, q, ctx);
  }
  return r;
}

EcPoint ec_mul_u64(const EcPoint& p, std::uint64_t e, const Bn& q, BN_CTX* ctx) {
  Bn be(e);
  return ec_mul_bn(p, be.get(), q, ctx);
}

EcPoint ec_neg(const EcPoint& p, const Bn& q, BN_CTX* ctx) {
  if (p.inf) return p;
  EcPoint r = p;
  r.y = fq_neg(p.y, q, ctx);
  return r;
}

bool ec_on_curve(const EcPoint& p, const Bn& q, BN_CTX* ctx) {
  if (p.inf) return true;
  Bn lhs = fq_sqr(p.y, q, ctx);
  Bn rhs = fq_add(fq_mul(fq_sqr(p.x, q, ctx), p.x, q, ctx), p.x, q, ctx);
  return lhs == rhs;
}

// Line through T (slope lambda) evaluated at the distorted point
// phi(Q) = (-x_Q, i*y_Q): value = lambda*(x_Q + x_T) - y_T  +  i*y_Q.
Fq2 line_value(const EcPoint& t, const Bn& lambda, const EcPoint& distorted_src,
               const Bn& q, BN_CTX* ctx) {
  Fq2 v;
  v.a = fq_sub(fq_mul(lambda, fq_add(distorted_src.x, t.x, q, ctx), q, ctx), t.y, q, ctx);
  v.b = distorted_src.y;
  return v;
}

}  // namespace

struct GroupParams::EcState {
  Bn q;         // field prime, q = p*k - 1, q = 3 mod 4
  Bn cofactor;  // k = (q+1)/p
  EcPoint gen;  // generator of the order-p subgroup
  Fq2 gt;       // e(gen, gen)

  // Miller loop for the modified Tate pairing e(P, phi(Q)). Vertical
  // lines take values in F_q* and vanish at the final exponentiation,
  // so they are skipped.
  Fq2 miller(const EcPoint& p, const EcPoint& src, std::uint64_t order, BN_CTX* ctx) const {
    Fq2 f = fq2_one();
    EcPoint t = p;
    int top = 63;
    while (top > 0 && ((order >> top) & 1) == 0) --top;
    for (int i = top - 1; i >= 0; --i) {
      f = fq2_sqr(f, q, ctx);
      if (!t.inf && !t.y.is_zero()) {
        Bn x2 = fq_sqr(t.x, q, ctx);
        Bn num = fq_add(fq_add(x2, x2, q, ctx), fq_add(x2, Bn(1), q, ctx), q, ctx);
        Bn lambda = fq_mul(num, fq_inv(fq_add(t.y, t.y, q, ctx), q, ctx), q, ctx);
        f = fq2_mul(f, line_value(t, lambda, src, q, ctx), q, ctx);
        t = ec_double(t, q, ctx);
      } else {
        t = EcPoint{};
      }
      if ((order >> i) & 1) {
        if (t.inf) {
          t = p;
        } else if (t.x == p.x) {
          // T + P vertical (T == -P): F_q factor, skipped.
          t = (t.y == p.y) ? ec_double(t, q, ctx) : EcPoint{};
        } else {
          Bn lambda = fq_mul(fq_sub(p.y, t.y, q, ctx),
                             fq_inv(fq_sub(p.x, t.x, q, ctx), q, ctx), q, ctx);
          f = fq2_mul(f, line_value(t, lambda, src, q, ctx), q, ctx);
          t = ec_add(t, p, q, ctx);
        }
      }
    }
    return f;
  }

  Fq2 tate(const EcPoint& u, const EcPoint& v, std::uint64_t order, BN_CTX* ctx) const {
    if (u.inf || v.inf) return fq2_one();
    Fq2 f = miller(u, v, order, ctx);
    // f^((q^2-1)/p) = (conj(f)/f)^((q+1)/p)
    Fq2 z = fq2_mul(fq2_conj(f, q, ctx), fq2_inv(f, q, ctx), q, ctx);
    return fq2_pow_bn(z, cofactor.get(), q, ctx);
  }
};

std::string backend_tag(Backend b) {
  return b == Backend::kExponentTracking ? "exponent-tracking" : "symmetric-pairing";
}

GroupParams::~GroupParams() = default;

std::shared_ptr<const GroupParams> GroupParams::exponent_tracking(std::uint64_t p) {
  if (!is_prime_u64(p)) throw ParamError("group order must be prime");
  if (p >= (1ull << 62)) throw ParamError("group order too large");
  auto params = std::shared_ptr<GroupParams>(new GroupParams());
  params->backend_ = Backend::kExponentTracking;
  params->p_ = p;
  return params;
}

std::shared_ptr<const GroupParams> GroupParams::symmetric_pairing(std::uint64_t p,
                                                                  int min_q_bits) {
  if (!is_prime_u64(p)) throw ParamError("group order must be prime");
  if (p < 5 || p >= (1ull << 62)) throw ParamError("group order out of range");

  auto params = std::shared_ptr<GroupParams>(new GroupParams());
  params->backend_ = Backend::kSymmetricPairing;
  params->p_ = p;
  params->ec_ = std::make_unique<EcState>();
  EcState& ec = *params->ec_;

  CtxGuard guard;
  BN_CTX* ctx = guard.ctx;

  // q = p*k - 1 with 4 | k, so q is odd and q = 3 mod 4. Search the
  // smallest such k at or above the requested size.
  int p_bits = 64 - __builtin_clzll(p);
  Bn k(4);
  if (min_q_bits > p_bits + 2) {
    BN_set_word(k.get(), 1);
    BN_lshift(k.get(), k.get(), min_q_bits - p_bits);
    BN_mask_bits(k.get(), min_q_bits);  // keep deterministic small form
    // round down to a multiple of 4
    BN_clear_bit(k.get(), 0);
    BN_clear_bit(k.get(), 1);
  }
  Bn bp(p);
  for (;;) {
    Bn q;
    BN_mul(q.get(), bp.get(), k.get(), ctx);
    BN_sub_word(q.get(), 1);
    int rc = BN_check_prime(q.get(), ctx, nullptr);
    if (rc < 0) throw CryptoError("primality test failed");
    if (rc == 1) {
      ec.q = q;
      ec.cofactor = k;
      break;
    }
    BN_add_word(k.get(), 4);
  }

  // sqrt exponent (q+1)/4 for finding curve points
  Bn sqrt_exp = ec.q;
  BN_add_word(sqrt_exp.get(), 1);
  BN_rshift(sqrt_exp.get(), sqrt_exp.get(), 2);

  for (std::uint64_t x0 = 1;; ++x0) {
    Bn x(x0);
    Bn rhs = fq_add(fq_mul(fq_sqr(x, ec.q, ctx), x, ec.q, ctx), x, ec.q, ctx);
    if (rhs.is_zero()) continue;
    Bn y;
    BN_mod_exp(y.get(), rhs.get(), sqrt_exp.get(), ec.q.get(), ctx);
    if (!(fq_sqr(y, ec.q, ctx) == rhs)) continue;  // not a square
    EcPoint p0;
    p0.inf = false;
    p0.x = x;
    p0.y = y;
    if (!ec_on_curve(p0, ec.q, ctx)) throw CryptoError("candidate point off curve");
    EcPoint gen = ec_mul_bn(p0, ec.cofactor.get(), ec.q, ctx);
    if (gen.inf) continue;
    if (!ec_mul_u64(gen, p, ec.q, ctx).inf)
      throw CryptoError("subgroup generator has wrong order");
    Fq2 gt = ec.tate(gen, gen, p, ctx);
    if (fq2_is_one(gt)) continue;  // degenerate base point, try the next
    ec.gen = gen;
    ec.gt = gt;
    break;
  }
  return params;
}

bool GroupParams::same_group(const GroupParams& o) const {
  if (backend_ != o.backend_ || p_ != o.p_) return false;
  if (backend_ == Backend::kSymmetricPairing) return ec_->q == o.ec_->q;
  return true;
}

static void check_params(const GroupParamsPtr& a, const GroupParamsPtr& b) {
  if (!a->same_group(*b)) throw ParamError("elements belong to different group parameters");
}

G1Element GroupParams::g() const {
  if (backend_ == Backend::kExponentTracking)
    return G1Element(shared_from_this(), 1, nullptr);
  return G1Element(shared_from_this(), 0, std::make_shared<EcPoint>(ec_->gen));
}

GTElement GroupParams::gT() const {
  if (backend_ == Backend::kExponentTracking)
    return GTElement(shared_from_this(), 1, nullptr);
  return GTElement(shared_from_this(), 0, std::make_shared<Fq2>(ec_->gt));
}

G1Element GroupParams::g1_identity() const {
  if (backend_ == Backend::kExponentTracking)
    return G1Element(shared_from_this(), 0, nullptr);
  return G1Element(shared_from_this(), 0, std::make_shared<EcPoint>());
}

GTElement GroupParams::gt_identity() const {
  if (backend_ == Backend::kExponentTracking)
    return GTElement(shared_from_this(), 0, nullptr);
  return GTElement(shared_from_this(), 0, std::make_shared<Fq2>(fq2_one()));
}

FieldElement GroupParams::random_scalar(RandomStream& rng) const {
  return FieldElement(rng.uniform(1, p_), p_);
}

std::pair<G1Element, FieldElement> GroupParams::hash_to_group(const std::string& label,
                                                              RandomStream& rng) const {
  if (label.empty()) throw InputError("attribute label must be non-empty");
  FieldElement rv = random_scalar(rng);
  return {g().pow(rv), rv};
}

std::string GroupParams::serialize() const {
  std::string out = "p=" + std::to_string(p_);
  if (backend_ == Backend::kExponentTracking) {
    out += ";glog=1;gTlog=1";
  } else {
    char* qs = BN_bn2dec(ec_->q.get());
    char* gx = BN_bn2dec(ec_->gen.x.get());
    char* gy = BN_bn2dec(ec_->gen.y.get());
    out += ";q=" + std::string(qs) + ";gx=" + gx + ";gy=" + gy;
    OPENSSL_free(qs);
    OPENSSL_free(gx);
    OPENSSL_free(gy);
  }
  out += ";backend=" + backend_tag(backend_);
  return out;
}

// ---- G1Element ----

static const EcPoint& as_point(const std::shared_ptr<const void>& p) {
  return *static_cast<const EcPoint*>(p.get());
}
static const Fq2& as_fq2(const std::shared_ptr<const void>& p) {
  return *static_cast<const Fq2*>(p.get());
}

G1Element G1Element::mul(const G1Element& o) const {
  check_params(params_, o.params_);
  if (params_->backend_ == Backend::kExponentTracking) {
    std::uint64_t p = params_->p_;
    return G1Element(params_, (log_ + o.log_) % p, nullptr);
  }
  CtxGuard guard;
  return G1Element(params_, 0,
                   std::make_shared<EcPoint>(ec_add(as_point(pt_), as_point(o.pt_),
                                                    params_->ec_->q, guard.ctx)));
}

G1Element G1Element::pow(const FieldElement& e) const {
  if (e.modulus() != params_->p_) throw ParamError("exponent modulus mismatch");
  if (params_->backend_ == Backend::kExponentTracking)
    return G1Element(params_, mulmod_u64(log_, e.value(), params_->p_), nullptr);
  CtxGuard guard;
  return G1Element(params_, 0,
                   std::make_shared<EcPoint>(
                       ec_mul_u64(as_point(pt_), e.value(), params_->ec_->q, guard.ctx)));
}

G1Element G1Element::inverse() const {
  if (params_->backend_ == Backend::kExponentTracking) {
    std::uint64_t p = params_->p_;
    return G1Element(params_, log_ == 0 ? 0 : p - log_, nullptr);
  }
  CtxGuard guard;
  return G1Element(params_, 0,
                   std::make_shared<EcPoint>(ec_neg(as_point(pt_), params_->ec_->q, guard.ctx)));
}

bool G1Element::is_identity() const {
  if (params_->backend_ == Backend::kExponentTracking) return log_ == 0;
  return as_point(pt_).inf;
}

FieldElement G1Element::discrete_log() const {
  if (params_->backend_ != Backend::kExponentTracking)
    throw StateError("discrete logs are only visible on the exponent-tracking backend");
  return FieldElement(log_, params_->p_);
}

Bytes G1Element::serialize() const {
  Bytes out;
  if (params_->backend_ == Backend::kExponentTracking) {
    out.push_back(0x01);
    append_u64_be(out, log_);
    return out;
  }
  const EcPoint& pt = as_point(pt_);
  if (pt.inf) {
    out.push_back(0x00);
    return out;
  }
  out.push_back(0x02);
  int qlen = BN_num_bytes(params_->ec_->q.get());
  Bytes xb(qlen, 0), yb(qlen, 0);
  BN_bn2binpad(pt.x.get(), xb.data(), qlen);
  BN_bn2binpad(pt.y.get(), yb.data(), qlen);
  append_len_prefixed_bytes(out, xb);
  append_len_prefixed_bytes(out, yb);
  return out;
}

std::string G1Element::serialize_hex() const { return hex_encode(serialize()); }

bool operator==(const G1Element& a, const G1Element& b) {
  check_params(a.params_, b.params_);
  if (a.params_->backend() == Backend::kExponentTracking) return a.log_ == b.log_;
  return as_point(a.pt_) == as_point(b.pt_);
}

// ---- GTElement ----

GTElement GTElement::mul(const GTElement& o) const {
  check_params(params_, o.params_);
  if (params_->backend_ == Backend::kExponentTracking)
    return GTElement(params_, (log_ + o.log_) % params_->p_, nullptr);
  CtxGuard guard;
  return GTElement(params_, 0,
                   std::make_shared<Fq2>(fq2_mul(as_fq2(val_), as_fq2(o.val_),
                                                 params_->ec_->q, guard.ctx)));
}

GTElement GTElement::pow(const FieldElement& e) const {
  if (e.modulus() != params_->p_) throw ParamError("exponent modulus mismatch");
  if (params_->backend_ == Backend::kExponentTracking)
    return GTElement(params_, mulmod_u64(log_, e.value(), params_->p_), nullptr);
  CtxGuard guard;
  return GTElement(params_, 0,
                   std::make_shared<Fq2>(
                       fq2_pow_u64(as_fq2(val_), e.value(), params_->ec_->q, guard.ctx)));
}

GTElement GTElement::inverse() const {
  if (params_->backend_ == Backend::kExponentTracking) {
    std::uint64_t p = params_->p_;
    return GTElement(params_, log_ == 0 ? 0 : p - log_, nullptr);
  }
  CtxGuard guard;
  return GTElement(params_, 0,
                   std::make_shared<Fq2>(fq2_inv(as_fq2(val_), params_->ec_->q, guard.ctx)));
}

bool GTElement::is_identity() const {
  if (params_->backend_ == Backend::kExponentTracking) return log_ == 0;
  return fq2_is_one(as_fq2(val_));
}

FieldElement GTElement::discrete_log() const {
  if (params_->backend_ != Backend::kExponentTracking)
    throw StateError("discrete logs are only visible on the exponent-tracking backend");
  return FieldElement(log_, params_->p_);
}

Bytes GTElement::serialize() const {
  Bytes out;
  if (params_->backend_ == Backend::kExponentTracking) {
    out.push_back(0x11);
    append_u64_be(out, log_);
    return out;
  }
  out.push_back(0x12);
  const Fq2& v = as_fq2(val_);
  int qlen = BN_num_bytes(params_->ec_->q.get());
  Bytes ab(qlen, 0), bb(qlen, 0);
  BN_bn2binpad(v.a.get(), ab.data(), qlen);
  BN_bn2binpad(v.b.get(), bb.data(), qlen);
  append_len_prefixed_bytes(out, ab);
  append_len_prefixed_bytes(out, bb);
  return out;
}

std::string GTElement::serialize_hex() const { return hex_encode(serialize()); }

bool operator==(const GTElement& a, const GTElement& b) {
  check_params(a.params_, b.params_);
  if (a.params_->backend() == Backend::kExponentTracking) return a.log_ == b.log_;
  return as_fq2(a.val_) == as_fq2(b.val_);
}

GTElement pair(const G1Element& u, const G1Element& v) {
  check_params(u.params_, v.params_);
  const GroupParamsPtr& params = u.params_;
  if (params->backend_ == Backend::kExponentTracking)
    return GTElement(params, mulmod_u64(u.log_, v.log_, params->p_), nullptr);
  CtxGuard guard;
  return GTElement(params, 0,
                   std::make_shared<Fq2>(params->ec_->tate(as_point(u.pt_), as_point(v.pt_),
                                                           params->p_, guard.ctx)));
}

}  // namespace abechain
