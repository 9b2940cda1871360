#include "abechain/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "abechain/abe.hpp"
#include "abechain/contracts.hpp"
#include "abechain/errors.hpp"
#include "abechain/policy.hpp"

namespace abechain::bench {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string config_digest_of(const Json& j) {
  return digest_hex(sha256(j.dump())).substr(0, 16);
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return 0;
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0) return 0;
  double b = (n * sxy - sx * sy) / denom;
  double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0;
  double mean_y = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double fit = a + b * x[i];
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  if (ss_tot == 0) return 0;
  return 1.0 - ss_res / ss_tot;
}

// ---- ABE bench ----

void AbeBenchConfig::validate() const {
  if (repetitions < 3) throw ConfigError("bench repetitions must be >= 3");
  if (attribute_counts.empty() || payload_sizes.empty())
    throw ConfigError("bench sweeps must be non-empty");
  if (!mode_all_and && !mode_all_or) throw ConfigError("no gate mode selected");
}

Json AbeBenchConfig::to_json() const {
  Json j;
  j["attribute_counts"] = attribute_counts;
  j["payload_sizes"] = payload_sizes;
  j["mode_all_and"] = mode_all_and;
  j["mode_all_or"] = mode_all_or;
  j["repetitions"] = repetitions;
  j["seed"] = seed;
  j["prime"] = prime;
  j["use_pairing_backend"] = use_pairing_backend;
  j["pairing_q_bits"] = pairing_q_bits;
  return j;
}

std::string AbeBenchConfig::digest_hex_string() const { return config_digest_of(to_json()); }

void AbeBenchConfig::apply_json(const Json& j) {
  if (j.contains("attribute_counts"))
    attribute_counts = j.at("attribute_counts").get<std::vector<int>>();
  if (j.contains("payload_sizes"))
    payload_sizes = j.at("payload_sizes").get<std::vector<std::size_t>>();
  if (j.contains("mode_all_and")) mode_all_and = j.at("mode_all_and").get<bool>();
  if (j.contains("mode_all_or")) mode_all_or = j.at("mode_all_or").get<bool>();
  if (j.contains("repetitions")) repetitions = j.at("repetitions").get<int>();
  if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("prime")) prime = j.at("prime").get<std::uint64_t>();
  if (j.contains("use_pairing_backend"))
    use_pairing_backend = j.at("use_pairing_backend").get<bool>();
  if (j.contains("pairing_q_bits")) pairing_q_bits = j.at("pairing_q_bits").get<int>();
}

Json AbeBenchReport::to_json() const {
  Json j;
  j["seed"] = seed;
  j["config_digest"] = config_digest;
  j["encrypt_r2"] = encrypt_r2;
  j["keygen_r2"] = keygen_r2;
  j["and_decrypt_r2"] = and_decrypt_r2;
  j["or_decrypt_flat_ratio"] = or_decrypt_flat_ratio;
  j["encrypt_linear_flag"] = encrypt_linear_flag;
  j["keygen_linear_flag"] = keygen_linear_flag;
  j["or_flat_flag"] = or_flat_flag;
  j["and_linear_flag"] = and_linear_flag;
  j["size_constant_flag"] = size_constant_flag;
  Json sc = Json::object();
  for (const auto& [k, v] : size_constancy_wrap) sc[std::to_string(k)] = v;
  j["size_constancy_wrap"] = std::move(sc);
  Json scu = Json::object();
  for (const auto& [k, v] : size_constancy_unwrap) scu[std::to_string(k)] = v;
  j["size_constancy_unwrap"] = std::move(scu);
  Json rows_j = Json::array();
  for (const AbeBenchRow& r : rows) {
    Json rj;
    rj["mode"] = r.mode;
    rj["attrs"] = r.attrs;
    rj["size"] = r.size;
    rj["keygen_ms"] = r.keygen_ms;
    rj["wrap_ms"] = r.wrap_ms;
    rj["unwrap_ms"] = r.unwrap_ms;
    rows_j.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows_j);
  return j;
}

std::string AbeBenchReport::to_csv() const {
  std::ostringstream out;
  out << "mode,attrs,size,keygen_ms,wrap_ms,unwrap_ms\n";
  for (const AbeBenchRow& r : rows)
    out << r.mode << "," << r.attrs << "," << r.size << "," << r.keygen_ms << ","
        << r.wrap_ms << "," << r.unwrap_ms << "\n";
  return out.str();
}

AbeBenchReport run_bench_abe(const AbeBenchConfig& config) {
  config.validate();
  GroupParamsPtr params =
      config.use_pairing_backend
          ? GroupParams::symmetric_pairing(config.prime, config.pairing_q_bits)
          : GroupParams::exponent_tracking(config.prime);

  SeededRng rng(derive_seed(config.seed, "bench-abe"));
  auto [pk, mk] = abe::setup(params, rng);

  AbeBenchReport report;
  report.seed = config.seed;
  report.config_digest = config.digest_hex_string();

  std::vector<std::string> modes;
  if (config.mode_all_and) modes.push_back("and");
  if (config.mode_all_or) modes.push_back("or");

  std::size_t max_fixed_size = 1024 * 1024;  // the <= 1 MiB constancy window

  for (const std::string& mode : modes) {
    for (int attrs : config.attribute_counts) {
      // Labels carry '_' so they can never collide with hex or base64 text.
      std::vector<std::string> labels;
      abe::AttributePoints points;
      for (int i = 0; i < attrs; ++i) {
        std::string label = "BA_" + mode + "_" + std::to_string(i);
        auto [point, rv] = params->hash_to_group(label, rng);
        labels.push_back(label);
        points.emplace(label, point);
      }
      std::string joiner = mode == "and" ? " AND " : " OR ";
      std::string text;
      for (int i = 0; i < attrs; ++i) {
        if (i) text += joiner;
        text += labels[i];
      }
      policy::ThresholdTree tree = policy::build_tree(policy::parse_policy(text));
      FieldElement h = params->random_scalar(rng);

      std::vector<double> keygen_times;
      abe::PrivateKey key = abe::keygen(pk, mk, labels, points, h, rng);
      for (int rep = 0; rep < config.repetitions; ++rep) {
        double t0 = now_ms();
        abe::PrivateKey k2 = abe::keygen(pk, mk, labels, points, h, rng);
        keygen_times.push_back(now_ms() - t0);
        if (rep + 1 == config.repetitions) key = std::move(k2);
      }
      double keygen_ms = median(keygen_times);

      for (std::size_t size : config.payload_sizes) {
        Bytes payload(size);
        for (std::size_t i = 0; i < size; ++i)
          payload[i] = static_cast<std::uint8_t>((i * 1103515245u + 12345u) >> 16);

        std::vector<double> wrap_times, unwrap_times;
        for (int rep = 0; rep < config.repetitions; ++rep) {
          policy::ShareAssignment assignment = policy::assign_shares(tree, rng, *params);
          auto record = std::make_shared<policy::PolicyRecord>(policy::PolicyRecord{
              policy::compute_policy_id(assignment.matrix, assignment.phi_s),
              assignment.matrix, assignment.tree});

          double t0 = now_ms();
          abe::WrappedPayload wp = abe::wrap(pk, payload, record, points, h, rng);
          wrap_times.push_back(now_ms() - t0);

          t0 = now_ms();
          auto plain = abe::unwrap(pk, key, wp);
          unwrap_times.push_back(now_ms() - t0);
          if (!plain || *plain != payload)
            throw StateError("bench round-trip failed; backend is broken");
        }
        AbeBenchRow row;
        row.mode = mode;
        row.attrs = attrs;
        row.size = size;
        row.keygen_ms = keygen_ms;
        row.wrap_ms = median(wrap_times);
        row.unwrap_ms = median(unwrap_times);
        report.rows.push_back(row);
      }
    }
  }

  // Shape statistics.
  double encrypt_r2 = 1.0, keygen_r2 = 1.0, and_r2 = 1.0;
  double or_ratio = 1.0;
  bool have_encrypt = false, have_keygen = false, have_and = false, have_or = false;
  for (const std::string& mode : modes) {
    for (std::size_t size : config.payload_sizes) {
      std::vector<double> xs, wraps, unwraps, keygens;
      for (const AbeBenchRow& r : report.rows) {
        if (r.mode != mode || r.size != size) continue;
        xs.push_back(r.attrs);
        wraps.push_back(r.wrap_ms);
        unwraps.push_back(r.unwrap_ms);
        keygens.push_back(r.keygen_ms);
      }
      if (xs.size() < 2) continue;
      encrypt_r2 = std::min(encrypt_r2, linear_r2(xs, wraps));
      have_encrypt = true;
      keygen_r2 = std::min(keygen_r2, linear_r2(xs, keygens));
      have_keygen = true;
      if (mode == "and") {
        and_r2 = std::min(and_r2, linear_r2(xs, unwraps));
        have_and = true;
      } else {
        double lo = *std::min_element(unwraps.begin(), unwraps.end());
        double hi = *std::max_element(unwraps.begin(), unwraps.end());
        if (lo > 0) or_ratio = std::max(or_ratio, hi / lo);
        have_or = true;
      }
    }
  }
  report.encrypt_r2 = have_encrypt ? encrypt_r2 : 0;
  report.keygen_r2 = have_keygen ? keygen_r2 : 0;
  report.and_decrypt_r2 = have_and ? and_r2 : 0;
  report.or_decrypt_flat_ratio = have_or ? or_ratio : 0;

  for (int attrs : config.attribute_counts) {
    std::vector<double> wraps, unwraps;
    for (const AbeBenchRow& r : report.rows) {
      if (r.attrs != attrs || r.size > max_fixed_size) continue;
      wraps.push_back(r.wrap_ms);
      unwraps.push_back(r.unwrap_ms);
    }
    if (wraps.size() < 2) continue;
    auto ratio = [](const std::vector<double>& v) {
      double lo = *std::min_element(v.begin(), v.end());
      double hi = *std::max_element(v.begin(), v.end());
      return lo > 0 ? hi / lo : 0.0;
    };
    report.size_constancy_wrap[attrs] = ratio(wraps);
    report.size_constancy_unwrap[attrs] = ratio(unwraps);
  }

  report.encrypt_linear_flag = have_encrypt && report.encrypt_r2 >= 0.9;
  report.keygen_linear_flag = have_keygen && report.keygen_r2 >= 0.9;
  report.or_flat_flag = have_or && report.or_decrypt_flat_ratio <= 1.5;
  report.and_linear_flag = have_and && report.and_decrypt_r2 >= 0.9;

  // The fixed pairing work dominates the keystream only once the policy
  // has a reasonable number of attributes; assert on the sweep's upper half.
  if (!config.attribute_counts.empty()) {
    std::vector<int> sorted_attrs = config.attribute_counts;
    std::sort(sorted_attrs.begin(), sorted_attrs.end());
    int threshold = sorted_attrs[sorted_attrs.size() / 2];
    bool ok = false, any = false;
    for (const auto& [attrs, ratio] : report.size_constancy_wrap) {
      if (attrs < threshold) continue;
      any = true;
      ok = ratio <= 2.0;
      if (!ok) break;
    }
    report.size_constant_flag = any && ok;
  }
  return report;
}

// ---- PoW bench ----

void PowBenchConfig::validate() const {
  if (blocks < 3) throw ConfigError("bench repetitions must be >= 3");
  if (n_bits_list.empty() || strategies.empty() || concurrency_levels.empty())
    throw ConfigError("bench sweeps must be non-empty");
}

Json PowBenchConfig::to_json() const {
  Json j;
  j["n_bits_list"] = n_bits_list;
  Json strats = Json::array();
  for (auto s : strategies) strats.push_back(chain::strategy_name(s));
  j["strategies"] = std::move(strats);
  j["concurrency_levels"] = concurrency_levels;
  j["blocks"] = blocks;
  j["seed"] = seed;
  return j;
}

std::string PowBenchConfig::digest_hex_string() const { return config_digest_of(to_json()); }

void PowBenchConfig::apply_json(const Json& j) {
  if (j.contains("n_bits_list"))
    n_bits_list = j.at("n_bits_list").get<std::vector<std::uint32_t>>();
  if (j.contains("strategies")) {
    strategies.clear();
    for (const Json& name : j.at("strategies"))
      strategies.push_back(chain::strategy_from_name(name.get<std::string>()));
  }
  if (j.contains("concurrency_levels"))
    concurrency_levels = j.at("concurrency_levels").get<std::vector<int>>();
  if (j.contains("blocks")) blocks = j.at("blocks").get<int>();
  if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
}

const PowBenchRow* PowBenchReport::find(std::uint32_t n_bits, const std::string& strategy,
                                        int concurrency) const {
  for (const PowBenchRow& r : rows)
    if (r.n_bits == n_bits && r.strategy == strategy && r.concurrency == concurrency)
      return &r;
  return nullptr;
}

Json PowBenchReport::to_json() const {
  Json j;
  j["seed"] = seed;
  j["config_digest"] = config_digest;
  Json rows_j = Json::array();
  for (const PowBenchRow& r : rows) {
    Json rj;
    rj["n_bits"] = r.n_bits;
    rj["strategy"] = r.strategy;
    rj["concurrency"] = r.concurrency;
    rj["mean_attempts"] = r.mean_attempts;
    rj["stddev_attempts"] = r.stddev_attempts;
    rj["mean_ms"] = r.mean_ms;
    rj["within_3_sigma"] = r.within_3_sigma;
    rows_j.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows_j);
  return j;
}

std::string PowBenchReport::to_csv() const {
  std::ostringstream out;
  out << "n_bits,strategy,concurrency,mean_attempts,stddev_attempts,mean_ms,within_3_sigma\n";
  for (const PowBenchRow& r : rows)
    out << r.n_bits << "," << r.strategy << "," << r.concurrency << "," << r.mean_attempts
        << "," << r.stddev_attempts << "," << r.mean_ms << "," << (r.within_3_sigma ? 1 : 0)
        << "\n";
  return out.str();
}

PowBenchReport run_bench_pow(const PowBenchConfig& config) {
  config.validate();
  PowBenchReport report;
  report.seed = config.seed;
  report.config_digest = config.digest_hex_string();

  for (std::uint32_t n_bits : config.n_bits_list) {
    for (chain::MineStrategy strategy : config.strategies) {
      for (int conc : config.concurrency_levels) {
        std::vector<double> attempts, times;
        for (int b = 0; b < config.blocks; ++b) {
          // A fresh template per block; the digest varies with b.
          chain::BlockTemplate tmpl;
          Bytes seed_material;
          append_u64_be(seed_material, config.seed);
          append_u32_be(seed_material, n_bits);
          append_u64_be(seed_material, static_cast<std::uint64_t>(b));
          seed_material.push_back(static_cast<std::uint8_t>(conc));
          tmpl.data_digest = sha256(seed_material);
          tmpl.n_bits = n_bits;

          double t0 = now_ms();
          if (conc <= 1) {
            SeededRng rng(derive_seed(config.seed,
                                      "pow:" + chain::strategy_name(strategy) + ":" +
                                          std::to_string(n_bits) + ":" + std::to_string(b)));
            chain::MineResult res = chain::mine(tmpl, strategy, rng);
            attempts.push_back(static_cast<double>(res.attempts));
          } else {
            // conc miners race on distinct creator ids; the winner's
            // attempt count is what the round costs.
            std::uint64_t best = 0;
            bool found = false;
            for (int m = 0; m < conc; ++m) {
              chain::BlockTemplate mt = tmpl;
              mt.creator[0] = static_cast<std::uint8_t>(m + 1);
              SeededRng rng(derive_seed(
                  config.seed, "pow:" + chain::strategy_name(strategy) + ":" +
                                   std::to_string(n_bits) + ":" + std::to_string(b) + ":" +
                                   std::to_string(m)));
              chain::MineResult res = chain::mine(mt, strategy, rng);
              if (!found || res.attempts < best) best = res.attempts;
              found = true;
            }
            attempts.push_back(static_cast<double>(best));
          }
          times.push_back(now_ms() - t0);
        }

        double mean = 0;
        for (double a : attempts) mean += a;
        mean /= attempts.size();
        double var = 0;
        for (double a : attempts) var += (a - mean) * (a - mean);
        var /= attempts.size();
        double sd = std::sqrt(var);
        double mean_ms = 0;
        for (double t : times) mean_ms += t;
        mean_ms /= times.size();

        PowBenchRow row;
        row.n_bits = n_bits;
        row.strategy = chain::strategy_name(strategy);
        row.concurrency = conc;
        row.mean_attempts = mean;
        row.stddev_attempts = sd;
        row.mean_ms = mean_ms;
        if (conc <= 1) {
          double expect = std::pow(2.0, static_cast<double>(n_bits));
          double sigma_mean = sd / std::sqrt(static_cast<double>(attempts.size()));
          row.within_3_sigma = std::abs(mean - expect) <= 3.0 * sigma_mean;
        }
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

// ---- throughput bench ----

void ThroughputConfig::validate() const {
  if (operations < 10) throw ConfigError("need at least 10 operations per class");
  if (background_population < 1000)
    throw ConfigError("background population too small for a query workload");
}

Json ThroughputConfig::to_json() const {
  Json j;
  j["operations"] = operations;
  j["background_population"] = background_population;
  j["difficulty"] = difficulty;
  j["seed"] = seed;
  return j;
}

std::string ThroughputConfig::digest_hex_string() const { return config_digest_of(to_json()); }

void ThroughputConfig::apply_json(const Json& j) {
  if (j.contains("operations")) operations = j.at("operations").get<int>();
  if (j.contains("background_population"))
    background_population = j.at("background_population").get<int>();
  if (j.contains("difficulty")) difficulty = j.at("difficulty").get<std::uint32_t>();
  if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
}

Json ThroughputReport::to_json() const {
  Json j;
  j["operations"] = operations;
  j["success_tps"] = success_tps;
  j["failed_tps"] = failed_tps;
  j["verify_tps"] = verify_tps;
  j["ordering_flag"] = ordering_flag;
  j["seed"] = seed;
  j["config_digest"] = config_digest;
  return j;
}

std::string ThroughputReport::to_csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  out << "operations," << operations << "\n";
  out << "success_tps," << success_tps << "\n";
  out << "failed_tps," << failed_tps << "\n";
  out << "verify_tps," << verify_tps << "\n";
  out << "ordering_flag," << (ordering_flag ? 1 : 0) << "\n";
  return out.str();
}

ThroughputReport run_bench_throughput(const ThroughputConfig& config) {
  config.validate();
  GroupParamsPtr params = GroupParams::exponent_tracking((1ull << 61) - 1);
  contracts::EngineConfig ecfg;
  ecfg.seed = config.seed;
  ecfg.difficulty = config.difficulty;
  contracts::Engine engine(params, ecfg);

  for (int i = 0; i < 3; ++i)
    engine.register_device("edge" + std::to_string(i), "", "", "edge:" + std::to_string(i),
                           contracts::Role::kEdge);
  Digest32 terminal =
      engine.register_device("sensor", "COM1", "02:00:00:00:00:01", "10.0.0.2:9000",
                             contracts::Role::kTerminal);
  Digest32 good_user = engine.register_user("good_user");
  Digest32 bad_user = engine.register_user("bad_user");

  engine.scpi_add_att(terminal, {"ObA_site_x", "OpA_read"});
  engine.scpi_add_att(good_user, {"SA_role_ops", "OpA_read"});
  engine.scpi_add_att(bad_user, {"SA_role_guest"});
  engine.scpa_add_policy(good_user, terminal, "(SA_role_ops OR ObA_site_x) AND OpA_read");

  // Populate the ledger first; the verification workload includes the
  // query walk over this history. Each failed access comes from a
  // distinct subject so every denial runs the full judge-and-penalize
  // path.
  for (int i = 0; i < config.background_population; ++i)
    engine.register_user("background");
  std::vector<Digest32> violators;
  violators.reserve(config.operations);
  for (int i = 0; i < config.operations; ++i) {
    Digest32 v = engine.register_user("violator");
    engine.scpi_add_att(v, {"SA_role_guest"});
    violators.push_back(v);
  }

  ThroughputReport report;
  report.operations = config.operations;
  report.seed = config.seed;
  report.config_digest = config.digest_hex_string();

  // Untimed warm-up of each path.
  std::uint64_t tick = 1;
  for (int i = 0; i < 16; ++i) {
    engine.set_tick(tick);
    engine.scpe_enforce(good_user, terminal, tick);
    ++tick;
  }

  double t0 = now_ms();
  int granted = 0;
  for (int i = 0; i < config.operations; ++i) {
    engine.set_tick(tick);
    auto r = engine.scpe_enforce(good_user, terminal, tick);
    if (r.outcome == contracts::EnforceOutcome::kGranted) ++granted;
    ++tick;
  }
  double success_s = (now_ms() - t0) / 1000.0;

  t0 = now_ms();
  int denied = 0;
  for (int i = 0; i < config.operations; ++i) {
    engine.set_tick(tick);
    auto r = engine.scpe_enforce(violators[i], terminal, tick);
    if (r.outcome == contracts::EnforceOutcome::kDeniedPenalized) ++denied;
    ++tick;
  }
  double failed_s = (now_ms() - t0) / 1000.0;

  std::vector<Digest32> digests;
  for (const auto& block : engine.blockchain().blocks())
    for (const auto& tx : block.transactions) digests.push_back(tx.tx_digest());
  // Query recent transactions: the walk covers most of the ledger.
  std::size_t window = std::min<std::size_t>(digests.size(), 64);
  t0 = now_ms();
  int verified = 0;
  for (int i = 0; i < config.operations; ++i) {
    const Digest32& d =
        digests[digests.size() - 1 - ((static_cast<std::size_t>(i) * 31) % window)];
    if (engine.verify_recorded_tx(d)) ++verified;
  }
  double verify_s = (now_ms() - t0) / 1000.0;

  if (granted != config.operations)
    throw StateError("throughput bench: success path did not grant");
  if (denied != config.operations)
    throw StateError("throughput bench: failure path did not deny");
  if (verified != config.operations)
    throw StateError("throughput bench: verification did not find transactions");

  report.success_tps = config.operations / success_s;
  report.failed_tps = config.operations / failed_s;
  report.verify_tps = config.operations / verify_s;
  report.ordering_flag =
      report.success_tps > report.failed_tps && report.failed_tps > report.verify_tps;
  return report;
}

}  // namespace abechain::bench
