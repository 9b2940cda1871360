#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "abechain/bytes.hpp"
#include "abechain/hash.hpp"
#include "abechain/rng.hpp"

namespace abechain {

// ECDSA over secp256k1. Signatures use a deterministic nonce
// (SHA-256 over private key || digest || retry counter) so a replayed
// simulation produces byte-identical transactions.
class EcdsaKeyPair {
 public:
  // Private scalar drawn from the stream; public point derived.
  static EcdsaKeyPair generate(RandomStream& rng);

  // 32-byte big-endian private scalar.
  static EcdsaKeyPair from_private_bytes(const Bytes& priv);

  const Bytes& public_key() const { return pub_; }   // compressed SEC1, 33 bytes
  const Bytes& private_key() const { return priv_; }  // 32 bytes

  // Signature over a 32-byte digest: r || s, 64 bytes, low-s normalized.
  Bytes sign(const Digest32& digest) const;

 private:
  EcdsaKeyPair(Bytes priv, Bytes pub) : priv_(std::move(priv)), pub_(std::move(pub)) {}
  Bytes priv_;
  Bytes pub_;
};

bool ecdsa_verify(const Bytes& public_key, const Digest32& digest, const Bytes& signature);

}  // namespace abechain
