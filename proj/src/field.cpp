#include "abechain/field.hpp"

namespace abechain {

std::uint64_t mulmod_u64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<__uint128_t>(a) * b) % m);
}

static std::uint64_t powmod_u64(std::uint64_t base, std::uint64_t e, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (e != 0) {
    if (e & 1) result = mulmod_u64(result, base, m);
    base = mulmod_u64(base, base, m);
    e >>= 1;
  }
  return result;
}

bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                          29ull, 31ull, 37ull}) {
    if (n == p) return true;
    if (n % p == 0) return false;
  }
  // Deterministic Miller-Rabin for 64-bit inputs with the standard base set.
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                          29ull, 31ull, 37ull}) {
    std::uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

FieldElement::FieldElement(std::uint64_t value, std::uint64_t modulus)
    : value_(value % modulus), modulus_(modulus) {
  if (modulus < 2 || modulus >= (1ull << 62))
    throw ParamError("field modulus out of supported range");
}

void FieldElement::check_same(const FieldElement& o) const {
  if (modulus_ != o.modulus_)
    throw ParamError("field elements have different moduli");
}

FieldElement FieldElement::add(const FieldElement& o) const {
  check_same(o);
  std::uint64_t s = value_ + o.value_;
  if (s >= modulus_) s -= modulus_;
  return FieldElement(s, modulus_);
}

FieldElement FieldElement::sub(const FieldElement& o) const {
  check_same(o);
  std::uint64_t s = value_ >= o.value_ ? value_ - o.value_ : value_ + modulus_ - o.value_;
  return FieldElement(s, modulus_);
}

FieldElement FieldElement::mul(const FieldElement& o) const {
  check_same(o);
  return FieldElement(mulmod_u64(value_, o.value_, modulus_), modulus_);
}

FieldElement FieldElement::neg() const {
  return FieldElement(value_ == 0 ? 0 : modulus_ - value_, modulus_);
}

FieldElement FieldElement::inv() const {
  if (value_ == 0) throw DivisionByZeroError();
  // Extended Euclid; modulus is prime so the inverse always exists.
  __int128 t = 0, new_t = 1;
  std::uint64_t r = modulus_, new_r = value_;
  while (new_r != 0) {
    std::uint64_t quotient = r / new_r;
    __int128 tmp_t = t - static_cast<__int128>(quotient) * new_t;
    t = new_t;
    new_t = tmp_t;
    std::uint64_t tmp_r = r - quotient * new_r;
    r = new_r;
    new_r = tmp_r;
  }
  if (t < 0) t += modulus_;
  return FieldElement(static_cast<std::uint64_t>(t), modulus_);
}

FieldElement FieldElement::pow(std::uint64_t e) const {
  return FieldElement(powmod_u64(value_, e, modulus_), modulus_);
}

}  // namespace abechain
