#include "abechain/rng.hpp"

#include "abechain/bytes.hpp"
#include "abechain/errors.hpp"
#include "abechain/hash.hpp"

namespace abechain {

std::uint64_t RandomStream::uniform(std::uint64_t lo, std::uint64_t hi) {
  if (hi <= lo) throw InputError("uniform: empty range");
  std::uint64_t range = hi - lo;
  // Largest multiple of range that fits in 64 bits; reject above it.
  std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  for (;;) {
    std::uint64_t u = next_u64();
    if (u < limit) return lo + (u % range);
  }
}

std::uint64_t SequenceStream::next_u64() {
  if (values_.empty()) throw StateError("scripted random sequence exhausted");
  std::uint64_t v = values_.front();
  values_.pop_front();
  return v;
}

std::uint64_t SequenceStream::uniform(std::uint64_t lo, std::uint64_t hi) {
  std::uint64_t v = next_u64();
  if (v < lo || v >= hi) throw StateError("scripted value outside requested range");
  return v;
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& purpose) {
  Bytes data;
  append_u64_be(data, master);
  Bytes p = to_bytes(purpose);
  data.insert(data.end(), p.begin(), p.end());
  Digest32 d = sha256(data);
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | d[i];
  return out;
}

}  // namespace abechain
