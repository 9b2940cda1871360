#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace abechain {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(const std::string& s);
std::string to_string(const Bytes& b);

std::string hex_encode(const Bytes& b);
Bytes hex_decode(const std::string& s);  // throws InputError on bad input

std::string base64_encode(const Bytes& b);
Bytes base64_decode(const std::string& s);

void append_u32_be(Bytes& out, std::uint32_t v);
void append_u64_be(Bytes& out, std::uint64_t v);

// Minimal-length big-endian encoding preceded by a one-byte length.
// Zero encodes as a bare 0x00 length byte. Used by every canonical
// serialization that feeds a digest.
void append_len_prefixed_uint(Bytes& out, std::uint64_t v);

// Length-prefixed (u32 BE) raw byte string.
void append_len_prefixed_bytes(Bytes& out, const Bytes& b);

}  // namespace abechain
