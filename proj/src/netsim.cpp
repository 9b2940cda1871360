#include "abechain/netsim.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "abechain/errors.hpp"

namespace abechain::sim {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double rss_mb() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      std::istringstream ss(line.substr(6));
      double kb = 0;
      ss >> kb;
      return kb / 1024.0;
    }
  }
  return 0;
}

double cpu_seconds() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  return ru.ru_utime.tv_sec + ru.ru_utime.tv_usec * 1e-6 + ru.ru_stime.tv_sec +
         ru.ru_stime.tv_usec * 1e-6;
}

}  // namespace

double Metrics::success_tps() const {
  return success_seconds > 0 ? successful_access / success_seconds : 0;
}
double Metrics::failed_tps() const {
  return failed_seconds > 0 ? failed_access / failed_seconds : 0;
}
double Metrics::verify_tps() const {
  return verify_seconds > 0 ? verifications / verify_seconds : 0;
}
double Metrics::mean_attempts_per_block() const {
  if (attempts_per_block.empty()) return 0;
  double sum = 0;
  for (std::uint64_t a : attempts_per_block) sum += static_cast<double>(a);
  return sum / attempts_per_block.size();
}
double Metrics::mean_block_ms() const {
  return blocks > 0 ? block_seconds * 1000.0 / static_cast<double>(blocks) : 0;
}

Json Metrics::to_json() const {
  Json j;
  j["successful_access"] = successful_access;
  j["failed_access"] = failed_access;
  j["verifications"] = verifications;
  j["verification_failures"] = verification_failures;
  j["rejected_txs"] = rejected_txs;
  j["consensus_rounds"] = consensus_rounds;
  j["decrypt_failures"] = decrypt_failures;
  j["records_ingested"] = records_ingested;
  j["blocks"] = blocks;
  j["ticks"] = ticks;
  j["success_tps"] = success_tps();
  j["failed_tps"] = failed_tps();
  j["verify_tps"] = verify_tps();
  j["mean_attempts_per_block"] = mean_attempts_per_block();
  j["mean_block_ms"] = mean_block_ms();
  j["rss_mb_samples"] = rss_mb_samples;
  j["cpu_seconds_samples"] = cpu_seconds_samples;
  return j;
}

std::string Metrics::to_csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  out << "successful_access," << successful_access << "\n";
  out << "failed_access," << failed_access << "\n";
  out << "verifications," << verifications << "\n";
  out << "verification_failures," << verification_failures << "\n";
  out << "rejected_txs," << rejected_txs << "\n";
  out << "consensus_rounds," << consensus_rounds << "\n";
  out << "decrypt_failures," << decrypt_failures << "\n";
  out << "records_ingested," << records_ingested << "\n";
  out << "blocks," << blocks << "\n";
  out << "ticks," << ticks << "\n";
  out << "success_tps," << success_tps() << "\n";
  out << "failed_tps," << failed_tps() << "\n";
  out << "verify_tps," << verify_tps() << "\n";
  out << "mean_attempts_per_block," << mean_attempts_per_block() << "\n";
  out << "mean_block_ms," << mean_block_ms() << "\n";
  return out.str();
}

Scenario Scenario::from_json(const Json& j) {
  Scenario s;
  s.difficulty = j.value("difficulty", 12u);
  s.strategy = chain::strategy_from_name(j.value("strategy", std::string("hybrid")));
  s.drop_rate = j.value("drop_rate", 0.0);
  s.prime = j.value("prime", std::uint64_t{1009});
  const Json& topo = j.at("topology");
  for (const Json& t : topo.value("terminals", Json::array()))
    s.terminals.push_back(t.get<std::string>());
  for (const Json& e : topo.value("edges", Json::array()))
    s.edges.push_back(e.get<std::string>());
  for (const Json& u : topo.value("users", Json::array()))
    s.users.push_back(u.get<std::string>());
  s.events = j.value("events", Json::array());

  std::set<std::string> seen;
  for (const auto& list : {s.terminals, s.edges, s.users})
    for (const std::string& name : list)
      if (!seen.insert(name).second)
        throw ConfigError("duplicate node name '" + name + "' in topology");
  return s;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError("scenario '" + path + "' is not valid JSON");
  return from_json(j);
}

Json Scenario::to_json() const {
  Json j;
  j["difficulty"] = difficulty;
  j["strategy"] = chain::strategy_name(strategy);
  j["drop_rate"] = drop_rate;
  j["prime"] = prime;
  j["topology"] = Json{{"terminals", terminals}, {"edges", edges}, {"users", users}};
  j["events"] = events;
  return j;
}

Simulator::Simulator(Scenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      seed_(seed),
      params_(GroupParams::exponent_tracking(scenario_.prime)),
      drop_rng_(derive_seed(seed, "drop")) {
  contracts::EngineConfig cfg;
  cfg.seed = seed;
  cfg.difficulty = scenario_.difficulty;
  cfg.strategy = scenario_.strategy;
  engine_ = std::make_unique<contracts::Engine>(params_, cfg);

  SimNodeState manager;
  manager.name = "data-manager";
  manager.role = contracts::Role::kManager;
  manager.id = engine_->manager_id();
  manager.rng_seed = derive_seed(seed, "node:data-manager");
  manager.holds_master_key = true;  // the trust anchor
  nodes_.emplace(manager.name, std::move(manager));
}

Digest32 Simulator::id_of(const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end() || it->second.id == Digest32{})
    throw ConfigError("script references unknown or unregistered node '" + name + "'");
  return it->second.id;
}

contracts::Role Simulator::role_of(const std::string& name) const {
  if (std::find(scenario_.terminals.begin(), scenario_.terminals.end(), name) !=
      scenario_.terminals.end())
    return contracts::Role::kTerminal;
  if (std::find(scenario_.edges.begin(), scenario_.edges.end(), name) !=
      scenario_.edges.end())
    return contracts::Role::kEdge;
  if (std::find(scenario_.users.begin(), scenario_.users.end(), name) !=
      scenario_.users.end())
    return contracts::Role::kUser;
  throw ConfigError("node '" + name + "' is not in the topology");
}

void Simulator::do_register(const std::string& name) {
  contracts::Role role = role_of(name);
  SimNodeState node;
  node.name = name;
  node.role = role;
  node.rng_seed = derive_seed(seed_, "node:" + name);
  if (role == contracts::Role::kUser) {
    node.id = engine_->register_user(name);
  } else {
    // Synthetic but deterministic device dimensions.
    std::string idx = std::to_string(nodes_.size());
    node.id = engine_->register_device(name, "COM" + idx,
                                       "02:00:00:00:00:" + idx, "10.0.0." + idx + ":9000",
                                       role);
  }
  nodes_[name] = std::move(node);
}

void Simulator::do_ingest(const Json& event) {
  std::string terminal = event.at("terminal").get<std::string>();
  id_of(terminal);  // must be registered before ingesting

  std::vector<std::tuple<std::uint64_t, std::string, double, double>> records;
  if (event.contains("csv")) {
    std::ifstream in(event.at("csv").get<std::string>());
    if (!in) throw IoError("cannot open sensor csv");
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (header) {
        header = false;
        continue;
      }
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string tick_s, site, temp_s, hum_s;
      std::getline(ss, tick_s, ',');
      std::getline(ss, site, ',');
      std::getline(ss, temp_s, ',');
      std::getline(ss, hum_s, ',');
      records.emplace_back(std::stoull(tick_s), site, std::stod(temp_s), std::stod(hum_s));
    }
  } else {
    for (const Json& r : event.at("records"))
      records.emplace_back(r.at(0).get<std::uint64_t>(), r.at(1).get<std::string>(),
                           r.at(2).get<double>(), r.at(3).get<double>());
  }

  for (const auto& [rtick, site, temp, hum] : records) {
    std::ostringstream payload;
    payload << rtick << "," << site << "," << temp << "," << hum;
    pending_messages_.push_back(
        Message{terminal, "data-manager",
                Json{{"kind", "ingest"}, {"terminal", terminal}, {"payload", payload.str()}}});
    ++metrics_.records_ingested;
  }
}

void Simulator::do_request_access(const std::string& subject, const std::string& object) {
  pending_messages_.push_back(Message{
      subject, "data-manager",
      Json{{"kind", "access_request"}, {"subject", subject}, {"object", object}}});
}

void Simulator::process_message(const Message& msg) {
  const std::string kind = msg.body.at("kind").get<std::string>();
  if (kind == "ingest") {
    std::string terminal = msg.body.at("terminal").get<std::string>();
    Digest32 id = id_of(terminal);
    Bytes payload = to_bytes(msg.body.at("payload").get<std::string>());
    auto policy_id = engine_->object_policy(id);
    if (!policy_id)
      throw ConfigError("terminal '" + terminal + "' has no policy; add_policy first");
    // Encrypt under the terminal's own policy text (owner side).
    engine_->sced_encrypt(id, payload, engine_->object_policy_text(id));
    return;
  }
  if (kind == "access_request") {
    std::string subject = msg.body.at("subject").get<std::string>();
    std::string object = msg.body.at("object").get<std::string>();
    Digest32 subj = id_of(subject);
    Digest32 obj = id_of(object);

    double t0 = now_seconds();
    contracts::EnforceResult r = engine_->scpe_enforce(subj, obj, tick_);
    if (r.outcome == contracts::EnforceOutcome::kGranted) {
      auto refs = engine_->object_data_refs(obj);
      if (!refs.empty()) {
        ++metrics_.consensus_rounds;
        // Every edge transiently holds the delegated key during the round.
        for (auto& [name, node] : nodes_)
          if (node.role == contracts::Role::kEdge && node.id != Digest32{})
            node.delegated_key_ids.push_back("in-round");
        try {
          engine_->sced_decrypt(subj, refs.back());
        } catch (const Error&) {
          ++metrics_.decrypt_failures;
        }
        for (auto& [name, node] : nodes_) node.delegated_key_ids.clear();
      }
      metrics_.success_seconds += now_seconds() - t0;
      ++metrics_.successful_access;
    } else {
      metrics_.failed_seconds += now_seconds() - t0;
      ++metrics_.failed_access;
    }
    return;
  }
  throw ConfigError("unknown message kind '" + kind + "'");
}

void Simulator::inspect_agent_boundary() const {
  for (const auto& [name, node] : nodes_) {
    if (node.role == contracts::Role::kTerminal || node.role == contracts::Role::kUser) {
      if (node.holds_master_key)
        throw StateError("agent boundary violated: " + name + " holds MK");
      if (!node.delegated_key_ids.empty())
        throw StateError("agent boundary violated: " + name + " holds delegated keys");
    }
    if (node.role == contracts::Role::kEdge && node.holds_master_key)
      throw StateError("agent boundary violated: edge " + name + " holds MK");
  }
}

void Simulator::sample_resources() {
  metrics_.rss_mb_samples.push_back(rss_mb());
  metrics_.cpu_seconds_samples.push_back(cpu_seconds());
}

void Simulator::advance(std::uint64_t ticks) {
  for (std::uint64_t i = 0; i < ticks; ++i) {
    // Deliver queued messages in sender-id order.
    std::stable_sort(pending_messages_.begin(), pending_messages_.end(),
                     [&](const Message& a, const Message& b) {
                       const auto& na = nodes_.at(a.from);
                       const auto& nb = nodes_.at(b.from);
                       return digest_hex(na.id) < digest_hex(nb.id);
                     });
    std::vector<Message> batch;
    batch.swap(pending_messages_);
    for (const Message& msg : batch) {
      if (scenario_.drop_rate > 0) {
        double draw = static_cast<double>(drop_rng_.next_u64()) /
                      static_cast<double>(UINT64_MAX);
        if (draw < scenario_.drop_rate) continue;
      }
      nodes_.at(msg.to).inbox.push_back(msg);
    }
    for (auto& [name, node] : nodes_) {
      while (!node.inbox.empty()) {
        Message msg = node.inbox.front();
        node.inbox.pop_front();
        process_message(msg);
      }
    }

    // Seal the tick's transactions; edges take turns mining.
    std::vector<Digest32> edges = engine_->edge_ids();
    std::sort(edges.begin(), edges.end(), [](const Digest32& a, const Digest32& b) {
      return digest_hex(a) < digest_hex(b);
    });
    if (engine_->has_pending()) {
      Digest32 creator = edges.empty() ? engine_->manager_id() : edges[tick_ % edges.size()];
      double t0 = now_seconds();
      engine_->seal_pending(creator);
      metrics_.block_seconds += now_seconds() - t0;
    }

    inspect_agent_boundary();
    sample_resources();

    ++tick_;
    engine_->set_tick(tick_);
    for (auto& [name, node] : nodes_)
      node.replica_height = engine_->blockchain().height();
    ++metrics_.ticks;
  }
}

void Simulator::handle_event(const Json& event) {
  const std::string op = event.at("op").get<std::string>();
  if (op == "register") {
    do_register(event.at("node").get<std::string>());
  } else if (op == "add_att") {
    std::vector<std::string> labels;
    for (const Json& l : event.at("labels")) labels.push_back(l.get<std::string>());
    engine_->scpi_add_att(id_of(event.at("node").get<std::string>()), labels);
  } else if (op == "add_policy") {
    engine_->scpa_add_policy(id_of(event.at("subject").get<std::string>()),
                             id_of(event.at("object").get<std::string>()),
                             event.at("formula").get<std::string>());
  } else if (op == "ingest") {
    do_ingest(event);
  } else if (op == "request_access") {
    do_request_access(event.at("subject").get<std::string>(),
                      event.at("object").get<std::string>());
  } else if (op == "inject_malicious") {
    std::string name = event.at("node").get<std::string>();
    std::string behavior = event.at("behavior").get<std::string>();
    contracts::EdgeBehavior b;
    if (behavior == "forge_decrypt")
      b = contracts::EdgeBehavior::kForgeDecrypt;
    else if (behavior == "skip_work")
      b = contracts::EdgeBehavior::kSkipWork;
    else if (behavior == "tamper_tx")
      b = contracts::EdgeBehavior::kTamperTx;
    else
      throw ConfigError("unknown behavior '" + behavior + "'");
    engine_->set_edge_behavior(id_of(name), b);
  } else if (op == "verify_sample") {
    std::size_t count = event.value("count", std::size_t{16});
    std::vector<Digest32> digests;
    for (const auto& block : engine_->blockchain().blocks())
      for (const auto& tx : block.transactions) digests.push_back(tx.tx_digest());
    double t0 = now_seconds();
    for (std::size_t i = 0; i < count && !digests.empty(); ++i) {
      const Digest32& d = digests[(i * 7919) % digests.size()];
      if (engine_->verify_recorded_tx(d))
        ++metrics_.verifications;
      else
        ++metrics_.verification_failures;
    }
    metrics_.verify_seconds += now_seconds() - t0;
  } else if (op == "advance") {
    advance(event.value("ticks", std::uint64_t{1}));
  } else {
    throw ConfigError("unknown scenario op '" + op + "'");
  }
}

SimResult Simulator::run() {
  for (const Json& event : scenario_.events) handle_event(event);
  // Flush anything still queued.
  if (!pending_messages_.empty() || engine_->has_pending()) advance(1);

  SimResult result;
  metrics_.rejected_txs = engine_->rejected_tx_count();
  metrics_.blocks = engine_->blockchain().height();
  metrics_.attempts_per_block = engine_->block_attempts();
  result.metrics = metrics_;
  result.chain_jsonl = engine_->blockchain().to_jsonl();
  result.chain_valid = static_cast<bool>(chain::validate_chain(engine_->blockchain()));
  for (const auto& [name, node] : nodes_)
    if (node.id != Digest32{}) result.node_ids[name] = digest_hex(node.id);
  return result;
}

Scenario canonical_scenario() {
  Scenario s;
  s.difficulty = 12;
  s.prime = (1ull << 61) - 1;
  s.terminals = {"term_outside", "term_lab", "term_aisle"};
  s.edges = {"edge_a", "edge_b", "edge_c"};
  s.users = {"user_ops"};

  Json events = Json::array();
  for (const std::string& n :
       {std::string("edge_a"), std::string("edge_b"), std::string("edge_c"),
        std::string("term_outside"), std::string("term_lab"), std::string("term_aisle"),
        std::string("user_ops")})
    events.push_back(Json{{"op", "register"}, {"node", n}});

  events.push_back(Json{
      {"op", "add_att"},
      {"node", "user_ops"},
      {"labels",
       Json::array({"SA_role_ops", "SA_clearance_2", "OpA_read", "EnA_zone_1"})}});
  events.push_back(Json{{"op", "add_att"},
                        {"node", "term_outside"},
                        {"labels", Json::array({"ObA_site_outside", "OpA_read", "EnA_zone_1"})}});
  events.push_back(Json{{"op", "add_att"},
                        {"node", "term_lab"},
                        {"labels", Json::array({"ObA_site_lab", "OpA_read", "EnA_zone_1"})}});
  events.push_back(Json{{"op", "add_att"},
                        {"node", "term_aisle"},
                        {"labels", Json::array({"ObA_site_aisle", "OpA_read", "EnA_zone_1"})}});

  // Canonical four-clause Sub/Ob/Op/En policy: root gate (4,4).
  events.push_back(
      Json{{"op", "add_policy"},
           {"subject", "user_ops"},
           {"object", "term_outside"},
           {"formula", "(SA_role_ops OR ObA_site_outside) AND "
                       "(SA_clearance_2 OR ObA_site_outside) AND OpA_read AND EnA_zone_1"}});
  events.push_back(Json{{"op", "advance"}, {"ticks", 1}});

  Json records = Json::array();
  records.push_back(Json::array({1, "outside", 18.5, 62.0}));
  records.push_back(Json::array({2, "outside", 19.1, 60.5}));
  records.push_back(Json::array({3, "outside", 20.4, 58.0}));
  events.push_back(Json{{"op", "ingest"}, {"terminal", "term_outside"}, {"records", records}});
  events.push_back(Json{{"op", "advance"}, {"ticks", 1}});

  events.push_back(
      Json{{"op", "request_access"}, {"subject", "user_ops"}, {"object", "term_outside"}});
  events.push_back(Json{{"op", "advance"}, {"ticks", 1}});
  events.push_back(Json{{"op", "verify_sample"}, {"count", 16}});
  events.push_back(Json{{"op", "advance"}, {"ticks", 1}});

  s.events = std::move(events);
  return s;
}

std::string sensor_fixture_csv(std::size_t rows_per_site) {
  std::ostringstream out;
  out << "tick,site,temperature_c,humidity_pct\n";
  const char* sites[] = {"outside", "lab504", "aisle"};
  const double base_temp[] = {16.0, 23.5, 21.0};
  const double base_hum[] = {70.0, 45.0, 52.0};
  for (std::size_t i = 0; i < rows_per_site; ++i) {
    for (int s = 0; s < 3; ++s) {
      double phase = 2.0 * 3.14159265358979 * static_cast<double>(i) / 24.0;
      double temp = base_temp[s] + (s == 0 ? 6.0 : 1.5) * std::sin(phase);
      double hum = base_hum[s] - (s == 0 ? 12.0 : 3.0) * std::sin(phase);
      out << i << "," << sites[s] << "," << std::fixed << std::setprecision(1) << temp
          << "," << hum << "\n";
      out.unsetf(std::ios::fixed);
    }
  }
  return out.str();
}

}  // namespace abechain::sim
