#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "abechain/bytes.hpp"

namespace abechain {

using Digest32 = std::array<std::uint8_t, 32>;

Digest32 sha256(const Bytes& data);
Digest32 sha256(const std::string& data);

std::string digest_hex(const Digest32& d);
Digest32 digest_from_hex(const std::string& s);

Bytes digest_bytes(const Digest32& d);

// Number of leading zero bits; the PoW difficulty test.
int leading_zero_bits(const Digest32& d);

// Incremental keystream: block i is SHA-256(key_material || i_be64).
// The key material is absorbed once and the midstate cloned per block.
class Sha256Keystream {
 public:
  explicit Sha256Keystream(const Bytes& key_material);
  ~Sha256Keystream();
  Sha256Keystream(const Sha256Keystream&) = delete;
  Sha256Keystream& operator=(const Sha256Keystream&) = delete;

  // XOR the keystream into buf (counter starts at 0 for each stream).
  void apply(std::uint8_t* buf, std::size_t len);

 private:
  void* base_ctx_;  // EVP_MD_CTX with the key material absorbed
  std::uint64_t counter_ = 0;
};

}  // namespace abechain
