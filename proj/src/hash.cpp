#include "abechain/hash.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "abechain/errors.hpp"

namespace abechain {

Digest32 sha256(const Bytes& data) {
  Digest32 out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != 32)
    throw CryptoError("SHA-256 failed");
  return out;
}

Digest32 sha256(const std::string& data) { return sha256(to_bytes(data)); }

std::string digest_hex(const Digest32& d) {
  return hex_encode(Bytes(d.begin(), d.end()));
}

Digest32 digest_from_hex(const std::string& s) {
  Bytes b = hex_decode(s);
  if (b.size() != 32) throw InputError("digest hex must decode to 32 bytes");
  Digest32 d{};
  std::memcpy(d.data(), b.data(), 32);
  return d;
}

Bytes digest_bytes(const Digest32& d) { return Bytes(d.begin(), d.end()); }

int leading_zero_bits(const Digest32& d) {
  int bits = 0;
  for (std::uint8_t byte : d) {
    if (byte == 0) {
      bits += 8;
      continue;
    }
    for (int i = 7; i >= 0; --i) {
      if (byte & (1u << i)) return bits;
      ++bits;
    }
  }
  return bits;
}

Sha256Keystream::Sha256Keystream(const Bytes& key_material) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, key_material.data(), key_material.size()) != 1)
    throw CryptoError("keystream init failed");
  base_ctx_ = ctx;
}

Sha256Keystream::~Sha256Keystream() {
  EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(base_ctx_));
}

void Sha256Keystream::apply(std::uint8_t* buf, std::size_t len) {
  EVP_MD_CTX* block_ctx = EVP_MD_CTX_new();
  if (!block_ctx) throw CryptoError("keystream ctx alloc failed");
  std::size_t pos = 0;
  std::uint8_t block[32];
  while (pos < len) {
    std::uint8_t ctr[8];
    std::uint64_t c = counter_++;
    for (int i = 7; i >= 0; --i) {
      ctr[i] = static_cast<std::uint8_t>(c & 0xff);
      c >>= 8;
    }
    unsigned int outlen = 0;
    if (EVP_MD_CTX_copy_ex(block_ctx, static_cast<EVP_MD_CTX*>(base_ctx_)) != 1 ||
        EVP_DigestUpdate(block_ctx, ctr, 8) != 1 ||
        EVP_DigestFinal_ex(block_ctx, block, &outlen) != 1) {
      EVP_MD_CTX_free(block_ctx);
      throw CryptoError("keystream block failed");
    }
    std::size_t n = std::min<std::size_t>(32, len - pos);
    for (std::size_t i = 0; i < n; ++i) buf[pos + i] ^= block[i];
    pos += n;
  }
  EVP_MD_CTX_free(block_ctx);
}

}  // namespace abechain
