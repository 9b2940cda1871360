#pragma once

#include <cstdint>

#include "abechain/errors.hpp"

namespace abechain {

// Element of Z_p for a word-sized prime p (p < 2^62 so products fit in
// the 128-bit intermediate). Arithmetic between elements of different
// moduli is a ParamError.
class FieldElement {
 public:
  FieldElement(std::uint64_t value, std::uint64_t modulus);

  std::uint64_t value() const { return value_; }
  std::uint64_t modulus() const { return modulus_; }

  FieldElement add(const FieldElement& o) const;
  FieldElement sub(const FieldElement& o) const;
  FieldElement mul(const FieldElement& o) const;
  FieldElement neg() const;
  FieldElement inv() const;  // throws DivisionByZeroError on 0
  FieldElement pow(std::uint64_t e) const;

  bool is_zero() const { return value_ == 0; }

  friend FieldElement operator+(const FieldElement& a, const FieldElement& b) {
    return a.add(b);
  }
  friend FieldElement operator-(const FieldElement& a, const FieldElement& b) {
    return a.sub(b);
  }
  friend FieldElement operator*(const FieldElement& a, const FieldElement& b) {
    return a.mul(b);
  }
  friend FieldElement operator-(const FieldElement& a) { return a.neg(); }
  friend bool operator==(const FieldElement& a, const FieldElement& b) {
    return a.modulus_ == b.modulus_ && a.value_ == b.value_;
  }
  friend bool operator!=(const FieldElement& a, const FieldElement& b) {
    return !(a == b);
  }

 private:
  void check_same(const FieldElement& o) const;
  std::uint64_t value_;
  std::uint64_t modulus_;
};

std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m);
bool is_prime_u64(std::uint64_t n);

}  // namespace abechain
