#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "abechain/errors.hpp"
#include "abechain/field.hpp"
#include "abechain/group.hpp"
#include "abechain/rng.hpp"

using namespace abechain;

namespace {
constexpr std::uint64_t kLargePrime = (1ull << 61) - 1;
}

TEST_CASE("field arithmetic basics") {
  FieldElement three(3, 7);
  CHECK(three.inv().value() == 5);  // 3 * 5 = 15 = 1 mod 7

  FieldElement two(2, 1009);
  CHECK(two.pow(1008).value() == 1);  // Fermat

  CHECK((FieldElement(5, 7) + FieldElement(4, 7)).value() == 2);
  CHECK((FieldElement(5, 7) - FieldElement(6, 7)).value() == 6);
  CHECK((-FieldElement(3, 7)).value() == 4);
  CHECK((-FieldElement(0, 7)).value() == 0);

  CHECK_THROWS_AS(FieldElement(0, 7).inv(), DivisionByZeroError);
  CHECK_THROWS_AS(FieldElement(1, 7) + FieldElement(1, 11), ParamError);
}

TEST_CASE("field inverse property over random elements") {
  SeededRng rng(11);
  for (int i = 0; i < 200; ++i) {
    std::uint64_t v = rng.uniform(1, kLargePrime);
    FieldElement a(v, kLargePrime);
    CHECK((a * a.inv()).value() == 1);
  }
  for (int i = 0; i < 200; ++i) {
    std::uint64_t v = rng.uniform(1, 1009);
    FieldElement a(v, 1009);
    CHECK((a * a.inv()).value() == 1);
  }
}

TEST_CASE("is_prime_u64 on known values") {
  CHECK(is_prime_u64(2));
  CHECK(is_prime_u64(1009));
  CHECK(is_prime_u64(kLargePrime));
  CHECK_FALSE(is_prime_u64(1));
  CHECK_FALSE(is_prime_u64(1008));
  CHECK_FALSE(is_prime_u64((1ull << 61) + 1));
}

TEST_CASE("exponent backend pairing identities") {
  auto params = GroupParams::exponent_tracking(1009);
  G1Element g = params->g();
  GTElement gT = params->gT();

  CHECK(pair(g, g) == gT);  // logs are 1, product 1

  // pair(g^2, g^3) = gT^6 by bilinearity
  FieldElement two = params->field(2), three = params->field(3);
  CHECK(pair(g.pow(two), g.pow(three)) == gT.pow(params->field(6)));

  CHECK_FALSE(pair(g, g).is_identity());  // non-degeneracy

  auto other = GroupParams::exponent_tracking(1013);
  CHECK_THROWS_AS(pair(g, other->g()), ParamError);
}

TEST_CASE("bilinearity against independent exponent multiplication") {
  auto params = GroupParams::exponent_tracking(kLargePrime);
  G1Element g = params->g();
  GTElement gT = params->gT();
  SeededRng rng(7);
  for (int i = 0; i < 128; ++i) {
    FieldElement a = params->random_scalar(rng);
    FieldElement b = params->random_scalar(rng);
    GTElement lhs = pair(g.pow(a), g.pow(b));
    // Independent route: multiply exponents mod p, then exponentiate gT.
    FieldElement ab(mulmod_u64(a.value(), b.value(), kLargePrime), kLargePrime);
    CHECK(lhs == gT.pow(ab));
    CHECK(lhs == pair(g, g).pow(a * b));
  }
}

TEST_CASE("bilinearity exhaustive for small primes") {
  for (std::uint64_t p : {5ull, 31ull, 101ull}) {
    auto params = GroupParams::exponent_tracking(p);
    G1Element g = params->g();
    GTElement gT = params->gT();
    for (std::uint64_t a = 0; a < p; ++a) {
      for (std::uint64_t b = 0; b < p; ++b) {
        GTElement lhs = pair(g.pow(params->field(a)), g.pow(params->field(b)));
        CHECK(lhs == gT.pow(params->field(mulmod_u64(a, b, p))));
      }
    }
  }
}

TEST_CASE("hash_to_group behaviour") {
  auto params = GroupParams::exponent_tracking(kLargePrime);

  SeededRng rng_a(7), rng_b(7);
  auto [elem_a, rv_a] = params->hash_to_group("SA_1", rng_a);
  auto [elem_b, rv_b] = params->hash_to_group("SA_1", rng_b);
  CHECK(elem_a == elem_b);  // seeded determinism
  CHECK(rv_a == rv_b);
  CHECK(elem_a == params->g().pow(rv_a));

  SeededRng rng(123);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    auto [elem, rv] = params->hash_to_group("label_" + std::to_string(i), rng);
    CHECK(seen.insert(rv.value()).second);  // no collisions at p ~ 2^61
  }

  CHECK_THROWS_AS(params->hash_to_group("", rng), InputError);
}

TEST_CASE("group element serialization and identities") {
  auto params = GroupParams::exponent_tracking(1009);
  G1Element g = params->g();
  CHECK(params->g1_identity().is_identity());
  CHECK(g.mul(g.inverse()).is_identity());
  CHECK(g.pow(params->field(0)).is_identity());
  CHECK(g.pow(params->field(5)).discrete_log().value() == 5);

  std::string text = params->serialize();
  CHECK(text.find("p=1009") != std::string::npos);
  CHECK(text.find("backend=exponent-tracking") != std::string::npos);
}

TEST_CASE("symmetric pairing backend at small scale") {
  auto params = GroupParams::symmetric_pairing(1009);
  G1Element g = params->g();
  GTElement gT = params->gT();

  CHECK_FALSE(gT.is_identity());   // non-degeneracy
  CHECK(pair(g, g) == gT);
  CHECK(g.pow(params->field(0)).is_identity());

  SeededRng rng(99);
  for (int i = 0; i < 24; ++i) {
    FieldElement a = params->random_scalar(rng);
    FieldElement b = params->random_scalar(rng);
    CHECK(pair(g.pow(a), g.pow(b)) == gT.pow(a * b));
    CHECK(pair(g.pow(a), g.pow(b)) == pair(g.pow(b), g.pow(a)));  // symmetry
  }

  // group law consistency
  FieldElement x = params->random_scalar(rng), y = params->random_scalar(rng);
  CHECK(g.pow(x).mul(g.pow(y)) == g.pow(x + y));
  CHECK(g.pow(x).inverse() == g.pow(-x));

  std::string text = params->serialize();
  CHECK(text.find("backend=symmetric-pairing") != std::string::npos);
}

TEST_CASE("backends agree on identities expressible without logs") {
  auto exp_params = GroupParams::exponent_tracking(1009);
  auto ec_params = GroupParams::symmetric_pairing(1009);
  SeededRng rng(5);

  for (const auto& params : {exp_params, ec_params}) {
    G1Element g = params->g();
    GTElement gT = params->gT();
    // hash_to_group returns its exponent, so these identities are
    // checkable on both backends.
    auto [h1, rv1] = params->hash_to_group("attr_one", rng);
    auto [h2, rv2] = params->hash_to_group("attr_two", rng);
    CHECK(pair(h1, h2) == gT.pow(rv1 * rv2));
    CHECK(pair(h1, g) == gT.pow(rv1));
    CHECK(h1.mul(h2) == g.pow(rv1 + rv2));
  }
}

TEST_CASE("gT has order p on the pairing backend") {
  auto params = GroupParams::symmetric_pairing(101);
  GTElement gT = params->gT();
  // gT^p must close the cycle; p is prime so gT^k != 1 for 0 < k < p.
  GTElement acc = params->gt_identity();
  int period = 0;
  for (int k = 1; k <= 101; ++k) {
    acc = acc.mul(gT);
    if (acc.is_identity()) {
      period = k;
      break;
    }
  }
  CHECK(period == 101);
}
