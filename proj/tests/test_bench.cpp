#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "abechain/bench.hpp"
#include "abechain/errors.hpp"

using namespace abechain;
using namespace abechain::bench;

TEST_CASE("linear_r2 basics") {
  CHECK(linear_r2({1, 2, 3, 4}, {2, 4, 6, 8}) == doctest::Approx(1.0));
  double noisy = linear_r2({1, 2, 3, 4, 5, 6}, {2.1, 3.9, 6.2, 8.05, 9.9, 12.1});
  CHECK(noisy > 0.99);
  // A flat line has no attribute dependence to explain.
  CHECK(linear_r2({1, 2, 3, 4}, {5, 5, 5, 5}) == doctest::Approx(0.0));
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == doctest::Approx(2.5));
  CHECK(median({}) == 0);
}

TEST_CASE("config validation") {
  AbeBenchConfig bad;
  bad.repetitions = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  AbeBenchConfig none;
  none.mode_all_and = false;
  none.mode_all_or = false;
  CHECK_THROWS_AS(none.validate(), ConfigError);

  PowBenchConfig pow_bad;
  pow_bad.n_bits_list.clear();
  CHECK_THROWS_AS(pow_bad.validate(), ConfigError);
}

TEST_CASE("abe bench on the exponent backend produces a full grid") {
  // Exponent backend keeps this test fast; shape flags are asserted on
  // the pairing backend in the acceptance suite.
  AbeBenchConfig cfg;
  cfg.attribute_counts = {2, 4, 6};
  cfg.payload_sizes = {1, 1024};
  cfg.repetitions = 3;
  cfg.use_pairing_backend = false;
  AbeBenchReport report = run_bench_abe(cfg);
  CHECK(report.rows.size() == 2 * 3 * 2);  // modes x attrs x sizes
  for (const auto& row : report.rows) {
    CHECK(row.keygen_ms >= 0);
    CHECK(row.wrap_ms >= 0);
    CHECK(row.unwrap_ms >= 0);
  }
  CHECK_FALSE(report.config_digest.empty());
  Json j = report.to_json();
  CHECK(j.contains("rows"));
  CHECK(report.to_csv().find("mode,attrs,size") == 0);
}

TEST_CASE("pow bench distribution check at nBits=8") {
  PowBenchConfig cfg;
  cfg.n_bits_list = {0, 8};
  cfg.concurrency_levels = {1, 3};
  cfg.blocks = 100;
  PowBenchReport report = run_bench_pow(cfg);

  for (const std::string& strategy : {"sequential", "random", "hybrid"}) {
    const PowBenchRow* zero = report.find(0, strategy, 1);
    REQUIRE(zero != nullptr);
    CHECK(zero->mean_attempts == doctest::Approx(1.0));  // nBits=0: first nonce

    const PowBenchRow* eight = report.find(8, strategy, 1);
    REQUIRE(eight != nullptr);
    CHECK(eight->within_3_sigma);

    // Racing miners finish in fewer attempts than a single one.
    const PowBenchRow* racing = report.find(8, strategy, 3);
    REQUIRE(racing != nullptr);
    CHECK(racing->mean_attempts < eight->mean_attempts);
  }
}

TEST_CASE("throughput bench ordering") {
  ThroughputConfig cfg;
  cfg.operations = 120;
  ThroughputReport report = run_bench_throughput(cfg);
  CHECK(report.success_tps > 0);
  CHECK(report.failed_tps > 0);
  CHECK(report.verify_tps > 0);
  // success > failure > verification.
  CHECK(report.ordering_flag);
}
