#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <string>

namespace abechain {

// All randomness in the library is drawn through this interface so that
// every run is replayable from explicit seeds. No component touches a
// global RNG.
class RandomStream {
 public:
  virtual ~RandomStream() = default;

  virtual std::uint64_t next_u64() = 0;

  // Uniform draw from [lo, hi), hi > lo. Rejection-sampled so the result
  // does not depend on platform distribution internals.
  virtual std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);
};

// mt19937_64 is fully specified by the standard, so streams replay
// identically across platforms.
class SeededRng : public RandomStream {
 public:
  explicit SeededRng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() override { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

// Replays a fixed value sequence; used to force the worked-example secret
// and polynomial coefficients in golden tests and demos.
class SequenceStream : public RandomStream {
 public:
  explicit SequenceStream(std::deque<std::uint64_t> values)
      : values_(std::move(values)) {}

  std::uint64_t next_u64() override;
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) override;

  bool exhausted() const { return values_.empty(); }

 private:
  std::deque<std::uint64_t> values_;
};

// Stable derivation of per-node / per-purpose seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t master, const std::string& purpose);

}  // namespace abechain
