#pragma once

#include <map>
#include <string>
#include <vector>

#include "abechain/chain.hpp"
#include "abechain/group.hpp"
#include "abechain/json.hpp"

namespace abechain::bench {

double linear_r2(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> values);

struct AbeBenchConfig {
  std::vector<int> attribute_counts = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::vector<std::size_t> payload_sizes = {1, 1024, 64 * 1024, 1024 * 1024,
                                            10 * 1024 * 1024};
  bool mode_all_and = true;
  bool mode_all_or = true;
  int repetitions = 3;
  std::uint64_t seed = 42;
  std::uint64_t prime = (1ull << 61) - 1;
  bool use_pairing_backend = true;
  int pairing_q_bits = 1024;  // realistic unit of work for the shape claims

  void validate() const;
  void apply_json(const Json& j);
  Json to_json() const;
  std::string digest_hex_string() const;
};

struct AbeBenchRow {
  std::string mode;  // "and" | "or"
  int attrs = 0;
  std::size_t size = 0;
  double keygen_ms = 0;
  double wrap_ms = 0;
  double unwrap_ms = 0;
};

struct AbeBenchReport {
  std::vector<AbeBenchRow> rows;
  // Linear fit of cost against attribute count (worst case over sizes).
  double encrypt_r2 = 0;
  double keygen_r2 = 0;
  double and_decrypt_r2 = 0;
  // max/min of the all-OR unwrap medians across attribute counts.
  double or_decrypt_flat_ratio = 0;
  // per attribute count: max/min of wrap medians across sizes <= 1 MiB.
  std::map<int, double> size_constancy_wrap;
  std::map<int, double> size_constancy_unwrap;

  bool encrypt_linear_flag = false;   // R^2 >= 0.9
  bool keygen_linear_flag = false;    // R^2 >= 0.9
  bool or_flat_flag = false;          // ratio <= 1.5
  bool and_linear_flag = false;       // R^2 >= 0.9
  bool size_constant_flag = false;    // ratio <= 2 at the upper half of the sweep

  std::uint64_t seed = 0;
  std::string config_digest;

  Json to_json() const;
  std::string to_csv() const;
};

AbeBenchReport run_bench_abe(const AbeBenchConfig& config);

struct PowBenchConfig {
  std::vector<std::uint32_t> n_bits_list = {8, 12, 16, 20};
  std::vector<chain::MineStrategy> strategies = {chain::MineStrategy::kSequential,
                                                 chain::MineStrategy::kRandom,
                                                 chain::MineStrategy::kHybrid};
  std::vector<int> concurrency_levels = {1, 3, 4, 5};
  int blocks = 100;
  std::uint64_t seed = 42;

  void validate() const;
  void apply_json(const Json& j);
  Json to_json() const;
  std::string digest_hex_string() const;
};

struct PowBenchRow {
  std::uint32_t n_bits = 0;
  std::string strategy;
  int concurrency = 1;
  double mean_attempts = 0;   // attempts by the winning miner
  double stddev_attempts = 0;
  double mean_ms = 0;
  // |mean - 2^nBits| <= 3 * stddev / sqrt(blocks), sequential-miner rows only
  bool within_3_sigma = false;
};

struct PowBenchReport {
  std::vector<PowBenchRow> rows;
  std::uint64_t seed = 0;
  std::string config_digest;

  const PowBenchRow* find(std::uint32_t n_bits, const std::string& strategy,
                          int concurrency) const;
  Json to_json() const;
  std::string to_csv() const;
};

PowBenchReport run_bench_pow(const PowBenchConfig& config);

struct ThroughputConfig {
  int operations = 300;
  int background_population = 20000;  // ledger size the query walk covers
  std::uint32_t difficulty = 4;
  std::uint64_t seed = 42;

  void validate() const;
  void apply_json(const Json& j);
  Json to_json() const;
  std::string digest_hex_string() const;
};

struct ThroughputReport {
  double success_tps = 0;
  double failed_tps = 0;
  double verify_tps = 0;
  int operations = 0;
  bool ordering_flag = false;  // success > failed > verify
  std::uint64_t seed = 0;
  std::string config_digest;

  Json to_json() const;
  std::string to_csv() const;
};

// Successful accesses, failing accesses (penalty path), and stored-
// transaction signature verification, measured on the same engine.
ThroughputReport run_bench_throughput(const ThroughputConfig& config);

}  // namespace abechain::bench
