#include "abechain/ecdsa.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include <cstring>

#include "abechain/errors.hpp"

namespace abechain {

namespace {

struct BnCtxDeleter {
  void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct BnDeleter {
  void operator()(BIGNUM* p) const { BN_free(p); }
};
struct GroupDeleter {
  void operator()(EC_GROUP* p) const { EC_GROUP_free(p); }
};
struct PointDeleter {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};

using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;

const EC_GROUP* curve() {
  static EC_GROUP* g = EC_GROUP_new_by_curve_name(NID_secp256k1);
  if (!g) throw CryptoError("secp256k1 unavailable");
  return g;
}

const BIGNUM* curve_order() {
  static BIGNUM* n = []() {
    BIGNUM* order = BN_new();
    BnCtxPtr ctx(BN_CTX_new());
    if (!order || EC_GROUP_get_order(curve(), order, ctx.get()) != 1)
      throw CryptoError("secp256k1 order unavailable");
    return order;
  }();
  return n;
}

BnPtr bn_from_bytes(const std::uint8_t* data, std::size_t len) {
  BnPtr bn(BN_bin2bn(data, static_cast<int>(len), nullptr));
  if (!bn) throw CryptoError("BN_bin2bn failed");
  return bn;
}

Bytes bn_to_fixed(const BIGNUM* bn, std::size_t len) {
  Bytes out(len, 0);
  if (BN_bn2binpad(bn, out.data(), static_cast<int>(len)) < 0)
    throw CryptoError("BN_bn2binpad failed");
  return out;
}

// Deterministic nonce: reduce SHA-256(priv || digest || counter) mod n,
// bumping the counter until the scalar is usable.
BnPtr derive_nonce(const Bytes& priv, const Digest32& digest, std::uint32_t counter,
                   BN_CTX* ctx) {
  Bytes material = priv;
  material.insert(material.end(), digest.begin(), digest.end());
  append_u32_be(material, counter);
  Digest32 h = sha256(material);
  BnPtr k = bn_from_bytes(h.data(), h.size());
  BnPtr reduced(BN_new());
  if (!reduced || BN_mod(reduced.get(), k.get(), curve_order(), ctx) != 1)
    throw CryptoError("nonce reduction failed");
  return reduced;
}

}  // namespace

EcdsaKeyPair EcdsaKeyPair::generate(RandomStream& rng) {
  // 256 random bits reduced mod n; retry on zero.
  for (;;) {
    Bytes raw;
    for (int i = 0; i < 4; ++i) append_u64_be(raw, rng.next_u64());
    BnCtxPtr ctx(BN_CTX_new());
    BnPtr d = bn_from_bytes(raw.data(), raw.size());
    BnPtr reduced(BN_new());
    if (!reduced || BN_mod(reduced.get(), d.get(), curve_order(), ctx.get()) != 1)
      throw CryptoError("key reduction failed");
    if (BN_is_zero(reduced.get())) continue;
    return from_private_bytes(bn_to_fixed(reduced.get(), 32));
  }
}

EcdsaKeyPair EcdsaKeyPair::from_private_bytes(const Bytes& priv) {
  if (priv.size() != 32) throw InputError("private key must be 32 bytes");
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr d = bn_from_bytes(priv.data(), priv.size());
  if (BN_is_zero(d.get()) || BN_cmp(d.get(), curve_order()) >= 0)
    throw InputError("private scalar out of range");
  PointPtr q(EC_POINT_new(curve()));
  if (!q || EC_POINT_mul(curve(), q.get(), d.get(), nullptr, nullptr, ctx.get()) != 1)
    throw CryptoError("public point derivation failed");
  std::uint8_t buf[33];
  std::size_t n = EC_POINT_point2oct(curve(), q.get(), POINT_CONVERSION_COMPRESSED, buf,
                                     sizeof buf, ctx.get());
  if (n != 33) throw CryptoError("public key encoding failed");
  return EcdsaKeyPair(priv, Bytes(buf, buf + n));
}

Bytes EcdsaKeyPair::sign(const Digest32& digest) const {
  BnCtxPtr ctx(BN_CTX_new());
  const BIGNUM* n = curve_order();
  BnPtr d = bn_from_bytes(priv_.data(), priv_.size());
  BnPtr z = bn_from_bytes(digest.data(), digest.size());
  BnPtr zr(BN_new());
  if (BN_mod(zr.get(), z.get(), n, ctx.get()) != 1) throw CryptoError("digest reduction");

  for (std::uint32_t counter = 0; counter < 64; ++counter) {
    BnPtr k = derive_nonce(priv_, digest, counter, ctx.get());
    if (BN_is_zero(k.get())) continue;

    PointPtr kg(EC_POINT_new(curve()));
    if (!kg || EC_POINT_mul(curve(), kg.get(), k.get(), nullptr, nullptr, ctx.get()) != 1)
      throw CryptoError("nonce point failed");
    BnPtr x(BN_new()), r(BN_new());
    if (EC_POINT_get_affine_coordinates(curve(), kg.get(), x.get(), nullptr, ctx.get()) != 1)
      throw CryptoError("nonce point coordinates failed");
    if (BN_mod(r.get(), x.get(), n, ctx.get()) != 1) throw CryptoError("r reduction");
    if (BN_is_zero(r.get())) continue;

    // s = k^-1 (z + r d) mod n
    BnPtr kinv(BN_mod_inverse(nullptr, k.get(), n, ctx.get()));
    if (!kinv) continue;
    BnPtr rd(BN_new()), sum(BN_new()), s(BN_new());
    if (BN_mod_mul(rd.get(), r.get(), d.get(), n, ctx.get()) != 1 ||
        BN_mod_add(sum.get(), zr.get(), rd.get(), n, ctx.get()) != 1 ||
        BN_mod_mul(s.get(), kinv.get(), sum.get(), n, ctx.get()) != 1)
      throw CryptoError("s computation failed");
    if (BN_is_zero(s.get())) continue;

    // Canonical low-s form.
    BnPtr half(BN_dup(n));
    BN_rshift1(half.get(), half.get());
    if (BN_cmp(s.get(), half.get()) > 0) {
      BnPtr ns(BN_new());
      BN_sub(ns.get(), n, s.get());
      s = std::move(ns);
    }

    Bytes sig = bn_to_fixed(r.get(), 32);
    Bytes sb = bn_to_fixed(s.get(), 32);
    sig.insert(sig.end(), sb.begin(), sb.end());
    return sig;
  }
  throw CryptoError("signature nonce derivation exhausted");
}

bool ecdsa_verify(const Bytes& public_key, const Digest32& digest, const Bytes& signature) {
  if (signature.size() != 64 || public_key.size() != 33) return false;
  BnCtxPtr ctx(BN_CTX_new());
  const BIGNUM* n = curve_order();

  PointPtr q(EC_POINT_new(curve()));
  if (!q ||
      EC_POINT_oct2point(curve(), q.get(), public_key.data(), public_key.size(), ctx.get()) != 1)
    return false;

  BnPtr r = bn_from_bytes(signature.data(), 32);
  BnPtr s = bn_from_bytes(signature.data() + 32, 32);
  if (BN_is_zero(r.get()) || BN_is_zero(s.get())) return false;
  if (BN_cmp(r.get(), n) >= 0 || BN_cmp(s.get(), n) >= 0) return false;

  BnPtr z = bn_from_bytes(digest.data(), digest.size());
  BnPtr zr(BN_new());
  if (BN_mod(zr.get(), z.get(), n, ctx.get()) != 1) return false;

  BnPtr sinv(BN_mod_inverse(nullptr, s.get(), n, ctx.get()));
  if (!sinv) return false;
  BnPtr u1(BN_new()), u2(BN_new());
  if (BN_mod_mul(u1.get(), zr.get(), sinv.get(), n, ctx.get()) != 1 ||
      BN_mod_mul(u2.get(), r.get(), sinv.get(), n, ctx.get()) != 1)
    return false;

  PointPtr p(EC_POINT_new(curve()));
  if (!p || EC_POINT_mul(curve(), p.get(), u1.get(), q.get(), u2.get(), ctx.get()) != 1)
    return false;
  if (EC_POINT_is_at_infinity(curve(), p.get())) return false;

  BnPtr x(BN_new()), xr(BN_new());
  if (EC_POINT_get_affine_coordinates(curve(), p.get(), x.get(), nullptr, ctx.get()) != 1)
    return false;
  if (BN_mod(xr.get(), x.get(), n, ctx.get()) != 1) return false;
  return BN_cmp(xr.get(), r.get()) == 0;
}

}  // namespace abechain
