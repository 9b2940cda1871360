#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abechain/contracts.hpp"
#include "abechain/json.hpp"

namespace abechain::sim {

struct Message {
  std::string from;  // node name
  std::string to;
  Json body;
};

// Inspectable per-node state; the tick loop asserts the agent boundary
// over these fields (terminals never hold MK or delegated keys).
struct SimNodeState {
  std::string name;
  contracts::Role role = contracts::Role::kTerminal;
  Digest32 id{};
  std::deque<Message> inbox;
  std::uint64_t rng_seed = 0;
  bool holds_master_key = false;
  std::vector<std::string> delegated_key_ids;
  std::size_t replica_height = 0;
};

struct Metrics {
  std::uint64_t successful_access = 0;
  std::uint64_t failed_access = 0;
  std::uint64_t verifications = 0;
  std::uint64_t verification_failures = 0;
  std::uint64_t rejected_txs = 0;
  std::uint64_t consensus_rounds = 0;
  std::uint64_t decrypt_failures = 0;
  std::uint64_t records_ingested = 0;
  std::uint64_t blocks = 0;
  std::uint64_t ticks = 0;
  double success_seconds = 0;
  double failed_seconds = 0;
  double verify_seconds = 0;
  double block_seconds = 0;  // cumulative sealing + mining time
  std::vector<std::uint64_t> attempts_per_block;
  std::vector<double> rss_mb_samples;
  std::vector<double> cpu_seconds_samples;

  double success_tps() const;
  double failed_tps() const;
  double verify_tps() const;
  double mean_attempts_per_block() const;
  double mean_block_ms() const;

  Json to_json() const;
  std::string to_csv() const;
};

// Script events:
//   {"op":"register","node":NAME}
//   {"op":"add_att","node":NAME,"labels":[...]}
//   {"op":"add_policy","subject":NAME,"object":NAME,"formula":TEXT}
//   {"op":"ingest","terminal":NAME,"records":[[tick,site,temp,hum],...]}
//   {"op":"ingest","terminal":NAME,"csv":PATH}
//   {"op":"request_access","subject":NAME,"object":NAME}
//   {"op":"inject_malicious","node":NAME,"behavior":"forge_decrypt"|"skip_work"|"tamper_tx"}
//   {"op":"verify_sample","count":N}
//   {"op":"advance","ticks":N}
struct Scenario {
  std::uint32_t difficulty = 12;
  chain::MineStrategy strategy = chain::MineStrategy::kHybrid;
  double drop_rate = 0.0;
  std::uint64_t prime = 1009;
  std::vector<std::string> terminals;
  std::vector<std::string> edges;
  std::vector<std::string> users;
  Json events = Json::array();

  static Scenario from_json(const Json& j);
  static Scenario load(const std::string& path);
  Json to_json() const;
};

struct SimResult {
  std::string chain_jsonl;
  Metrics metrics;
  bool chain_valid = false;
  std::map<std::string, std::string> node_ids;  // name -> id hex
};

class Simulator {
 public:
  Simulator(Scenario scenario, std::uint64_t seed);

  SimResult run();

  contracts::Engine& engine() { return *engine_; }
  const std::map<std::string, SimNodeState>& nodes() const { return nodes_; }

 private:
  void handle_event(const Json& event);
  void do_register(const std::string& name);
  void do_ingest(const Json& event);
  void do_request_access(const std::string& subject, const std::string& object);
  void process_message(const Message& msg);
  void advance(std::uint64_t ticks);
  void inspect_agent_boundary() const;
  Digest32 id_of(const std::string& name) const;
  contracts::Role role_of(const std::string& name) const;
  void sample_resources();

  Scenario scenario_;
  std::uint64_t seed_;
  GroupParamsPtr params_;
  std::unique_ptr<contracts::Engine> engine_;
  SeededRng drop_rng_;
  std::map<std::string, SimNodeState> nodes_;
  std::vector<Message> pending_messages_;
  Metrics metrics_;
  std::uint64_t tick_ = 0;
};

// The register -> attrs -> policy -> ingest -> grant pipeline used by the
// end-to-end tests: three terminals, three edges, one user.
Scenario canonical_scenario();

// Deterministic (tick, site, temperature, humidity) fixture rows shaped
// like a three-site day of sensor readings.
std::string sensor_fixture_csv(std::size_t rows_per_site);

}  // namespace abechain::sim
