// Operator entry point: deployment init, scenario runs, chain validation,
// and the ABE / PoW / throughput benchmark sweeps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "abechain/bench.hpp"
#include "abechain/chain.hpp"
#include "abechain/errors.hpp"
#include "abechain/netsim.hpp"

namespace fs = std::filesystem;
using namespace abechain;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitUsage = 2;

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
}

void emit_report(const Json& j, const std::string& csv, const fs::path& out_dir,
                 const std::string& name, const std::string& format) {
  fs::create_directories(out_dir);
  if (format == "json" || format == "both")
    write_file(out_dir / (name + ".json"), j.dump(2) + "\n");
  if (format == "csv" || format == "both") write_file(out_dir / (name + ".csv"), csv);
}

int cmd_init(const std::string& topology_path, const std::string& out_dir) {
  sim::Scenario scenario;
  if (!topology_path.empty()) {
    std::ifstream in(topology_path);
    if (!in) throw IoError("cannot open '" + topology_path + "'");
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("topology file is not valid JSON");
    // Reuse the scenario parser; it rejects duplicate node names.
    Json wrapper;
    wrapper["topology"] = j.contains("topology") ? j.at("topology") : j;
    if (j.contains("difficulty")) wrapper["difficulty"] = j.at("difficulty");
    scenario = sim::Scenario::from_json(wrapper);
  } else {
    scenario = sim::canonical_scenario();
  }
  fs::path dir(out_dir);
  fs::create_directories(dir);
  write_file(dir / "scenario.json", scenario.to_json().dump(2) + "\n");
  write_file(dir / "sensors.csv", sim::sensor_fixture_csv(48));
  std::cout << "initialized deployment in " << dir.string() << "\n";
  return kExitOk;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir,
            std::uint64_t seed, const std::string& format) {
  sim::Scenario scenario = scenario_path.empty() ? sim::canonical_scenario()
                                                 : sim::Scenario::load(scenario_path);
  sim::Simulator simulator(scenario, seed);
  sim::SimResult result = simulator.run();

  fs::path dir(out_dir);
  fs::create_directories(dir);
  write_file(dir / "chain.jsonl", result.chain_jsonl);
  Json meta = result.metrics.to_json();
  meta["seed"] = seed;
  meta["chain_valid"] = result.chain_valid;
  emit_report(meta, result.metrics.to_csv(), dir, "metrics", format);

  std::cout << "blocks=" << result.metrics.blocks
            << " successful_access=" << result.metrics.successful_access
            << " failed_access=" << result.metrics.failed_access
            << " rejected_txs=" << result.metrics.rejected_txs
            << " chain_valid=" << (result.chain_valid ? "yes" : "no") << "\n";
  return result.chain_valid ? kExitOk : kExitValidationFailure;
}

int cmd_validate(const std::string& chain_path) {
  std::ifstream in(chain_path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + chain_path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();

  // The difficulty schedule is read from the first mined block.
  std::uint32_t difficulty = 0;
  {
    std::istringstream lines(text);
    std::string line;
    int index = 0;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      if (index++ == 0) continue;  // genesis
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded()) break;
      difficulty = j.value("n_bits", 0u);
      break;
    }
  }

  try {
    chain::Chain c = chain::Chain::from_jsonl(text, difficulty);
    chain::ValidationResult r = chain::validate_chain(c);
    if (r.ok) {
      std::cout << "chain OK: " << c.height() << " blocks\n";
      return kExitOk;
    }
    std::cerr << "chain INVALID at block " << r.block_index << ": " << r.reason << "\n";
    return kExitValidationFailure;
  } catch (const Error& e) {
    std::cerr << "chain INVALID: " << e.what() << "\n";
    return kExitValidationFailure;
  }
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

Json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file is not valid JSON");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribute-based encryption access control on a lightweight blockchain"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string out_dir = "out";
  std::string format = "both";
  app.add_option("--seed", seed, "master seed for every random stream");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "report format: csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));

  auto* init = app.add_subcommand("init", "write a deployment skeleton");
  std::string topology_path;
  init->add_option("--config", topology_path, "topology JSON (defaults to the canonical one)");

  auto* run = app.add_subcommand("run", "run a scenario script");
  std::string scenario_path;
  run->add_option("scenario", scenario_path, "scenario JSON path (defaults to canonical)");

  auto* validate = app.add_subcommand("validate", "validate a persisted chain file");
  std::string chain_path;
  validate->add_option("chain", chain_path, "chain JSONL path")->required();

  auto* bench_abe = app.add_subcommand("bench-abe", "encrypt/keygen/decrypt sweeps");
  std::string attrs_csv = "2,4,6,8,10,12,14,16,18,20";
  std::string sizes_csv = "1,1024,65536,1048576,10485760";
  int reps = 3;
  int qbits = 1024;
  bool exponent_backend = false;
  std::string abe_config;
  bench_abe->add_option("--attrs", attrs_csv, "attribute counts, comma separated");
  bench_abe->add_option("--sizes", sizes_csv, "payload sizes in bytes, comma separated");
  bench_abe->add_option("--reps", reps, "repetitions per cell (>= 3)");
  bench_abe->add_option("--qbits", qbits, "pairing base field size");
  bench_abe->add_flag("--exponent-backend", exponent_backend,
                      "time the exponent-tracking backend instead of the pairing");
  bench_abe->add_option("--config", abe_config, "JSON config overriding the flags");

  auto* bench_pow = app.add_subcommand("bench-pow", "nonce-search strategy sweeps");
  std::string nbits_csv = "8,12,16,20";
  std::string conc_csv = "1,3,4,5";
  int blocks = 100;
  std::string pow_config;
  bench_pow->add_option("--nbits", nbits_csv, "difficulties, comma separated");
  bench_pow->add_option("--concurrency", conc_csv, "concurrent miners, comma separated");
  bench_pow->add_option("--blocks", blocks, "blocks per configuration");
  bench_pow->add_option("--config", pow_config, "JSON config overriding the flags");

  auto* bench_tp = app.add_subcommand("bench-throughput", "access/verification throughput");
  int operations = 300;
  std::string tp_config;
  bench_tp->add_option("--operations", operations, "operations per class");
  bench_tp->add_option("--config", tp_config, "JSON config overriding the flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (init->parsed()) return cmd_init(topology_path, out_dir);
    if (run->parsed()) return cmd_run(scenario_path, out_dir, seed, format);
    if (validate->parsed()) return cmd_validate(chain_path);

    if (bench_abe->parsed()) {
      bench::AbeBenchConfig cfg;
      cfg.attribute_counts = parse_int_list(attrs_csv);
      cfg.payload_sizes.clear();
      for (int v : parse_int_list(sizes_csv)) cfg.payload_sizes.push_back(v);
      cfg.repetitions = reps;
      cfg.seed = seed;
      cfg.pairing_q_bits = qbits;
      cfg.use_pairing_backend = !exponent_backend;
      if (!abe_config.empty()) cfg.apply_json(load_config_json(abe_config));
      bench::AbeBenchReport report = bench::run_bench_abe(cfg);
      emit_report(report.to_json(), report.to_csv(), out_dir, "bench_abe", format);
      std::cout << "encrypt_r2=" << report.encrypt_r2 << " keygen_r2=" << report.keygen_r2
                << " and_decrypt_r2=" << report.and_decrypt_r2
                << " or_flat_ratio=" << report.or_decrypt_flat_ratio
                << " size_constant=" << (report.size_constant_flag ? "yes" : "no") << "\n";
      return kExitOk;
    }
    if (bench_pow->parsed()) {
      bench::PowBenchConfig cfg;
      cfg.n_bits_list.clear();
      for (int v : parse_int_list(nbits_csv)) cfg.n_bits_list.push_back(v);
      cfg.concurrency_levels = parse_int_list(conc_csv);
      cfg.blocks = blocks;
      cfg.seed = seed;
      if (!pow_config.empty()) cfg.apply_json(load_config_json(pow_config));
      bench::PowBenchReport report = bench::run_bench_pow(cfg);
      emit_report(report.to_json(), report.to_csv(), out_dir, "bench_pow", format);
      for (const auto& row : report.rows)
        if (row.concurrency == 1)
          std::cout << "nbits=" << row.n_bits << " strategy=" << row.strategy
                    << " mean_attempts=" << row.mean_attempts
                    << " sigma_ok=" << (row.within_3_sigma ? "yes" : "no") << "\n";
      return kExitOk;
    }
    if (bench_tp->parsed()) {
      bench::ThroughputConfig cfg;
      cfg.operations = operations;
      cfg.seed = seed;
      if (!tp_config.empty()) cfg.apply_json(load_config_json(tp_config));
      bench::ThroughputReport report = bench::run_bench_throughput(cfg);
      emit_report(report.to_json(), report.to_csv(), out_dir, "bench_throughput", format);
      std::cout << "success_tps=" << report.success_tps << " failed_tps=" << report.failed_tps
                << " verify_tps=" << report.verify_tps
                << " ordering=" << (report.ordering_flag ? "ok" : "violated") << "\n";
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidationFailure;
  }
  return kExitUsage;
}
