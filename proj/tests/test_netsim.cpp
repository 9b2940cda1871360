#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <memory>
#include <fstream>

#include "abechain/errors.hpp"
#include "abechain/netsim.hpp"

using namespace abechain;
using namespace abechain::sim;

TEST_CASE("empty script yields a genesis-only chain") {
  Scenario s;
  s.terminals = {"t0"};
  s.edges = {"e0"};
  Simulator simulator(s, 42);
  SimResult r = simulator.run();
  // Only the engine bootstrap block (manager registration + setup).
  CHECK(r.metrics.blocks <= 2);
  CHECK(r.chain_valid);
}

TEST_CASE("canonical scenario runs end to end") {
  Scenario s = canonical_scenario();
  Simulator simulator(s, 42);
  SimResult r = simulator.run();

  CHECK(r.chain_valid);
  CHECK(r.metrics.successful_access == 1);
  CHECK(r.metrics.failed_access == 0);
  CHECK(r.metrics.records_ingested == 3);
  CHECK(r.metrics.consensus_rounds == 1);
  CHECK(r.metrics.decrypt_failures == 0);
  CHECK(r.metrics.verifications > 0);
  CHECK(r.metrics.verification_failures == 0);
  CHECK(r.metrics.blocks > 2);

  // Determinism: same script and seeds give byte-identical chains.
  Simulator again(canonical_scenario(), 42);
  CHECK(again.run().chain_jsonl == r.chain_jsonl);

  // A different seed gives a different chain.
  Simulator other(canonical_scenario(), 43);
  CHECK(other.run().chain_jsonl != r.chain_jsonl);
}

TEST_CASE("anonymity: serialized chain carries no labels or formula text") {
  Scenario s = canonical_scenario();
  Simulator simulator(s, 42);
  SimResult r = simulator.run();

  std::vector<std::string> secrets = {"SA_role_ops",   "SA_clearance_2", "ObA_site_outside",
                                      "ObA_site_lab",  "ObA_site_aisle", "OpA_read",
                                      "EnA_zone_1"};
  for (const std::string& label : secrets)
    CHECK(r.chain_jsonl.find(label) == std::string::npos);
  CHECK(r.chain_jsonl.find(" OR ") == std::string::npos);
  CHECK(r.chain_jsonl.find(" AND ") == std::string::npos);
}

TEST_CASE("ingested records decrypt after a grant") {
  Scenario s = canonical_scenario();
  Simulator simulator(s, 7);
  simulator.run();

  auto& engine = simulator.engine();
  Digest32 term{};
  for (const auto& [name, node] : simulator.nodes())
    if (name == "term_outside") term = node.id;
  auto refs = engine.object_data_refs(term);
  REQUIRE_FALSE(refs.empty());

  Digest32 user{};
  for (const auto& [name, node] : simulator.nodes())
    if (name == "user_ops") user = node.id;

  engine.set_tick(100);
  REQUIRE(engine.scpe_enforce(user, term, 100).outcome ==
          contracts::EnforceOutcome::kGranted);
  auto result = engine.sced_decrypt(user, refs.back());
  // Record 3 of the canonical scenario round-trips bit-exactly.
  CHECK(to_string(result.payload) == "3,outside,20.4,58");
}

TEST_CASE("malicious injection: one forger tolerated, two capture the round") {
  auto run_with_forgers = [](int forgers, std::uint64_t seed) {
    Scenario s = canonical_scenario();
    Json events = Json::array();
    bool injected = false;
    for (const Json& e : s.events) {
      // Inject right after registrations, before any decrypt.
      if (!injected && e.value("op", "") == "add_att") {
        for (int i = 0; i < forgers; ++i)
          events.push_back(Json{{"op", "inject_malicious"},
                                {"node", std::string("edge_") + char('a' + i)},
                                {"behavior", "forge_decrypt"}});
        injected = true;
      }
      events.push_back(e);
    }
    s.events = events;
    return std::make_unique<Simulator>(s, seed);
  };

  // After a decrypt round the record is re-encrypted with whatever the
  // consensus accepted, so an all-honest read afterwards reveals what won.
  auto accepted_payload = [](Simulator& simulator) {
    auto& engine = simulator.engine();
    Digest32 term{}, user{};
    for (const auto& [name, node] : simulator.nodes()) {
      if (name == "term_outside") term = node.id;
      if (name == "user_ops") user = node.id;
    }
    for (const Digest32& edge : engine.edge_ids())
      engine.set_edge_behavior(edge, contracts::EdgeBehavior::kHonest);
    engine.set_tick(500);
    REQUIRE(engine.scpe_enforce(user, term, 500).outcome ==
            contracts::EnforceOutcome::kGranted);
    auto refs = engine.object_data_refs(term);
    REQUIRE_FALSE(refs.empty());
    return to_string(engine.sced_decrypt(user, refs.back()).payload);
  };

  auto one = run_with_forgers(1, 42);
  SimResult r1 = one->run();
  CHECK(r1.chain_valid);
  CHECK(r1.metrics.decrypt_failures == 0);           // majority honest
  CHECK(accepted_payload(*one) == "3,outside,20.4,58");  // true record survived

  auto two = run_with_forgers(2, 42);
  SimResult r2 = two->run();
  CHECK(r2.chain_valid);
  CHECK(r2.metrics.decrypt_failures == 0);  // the round succeeded...
  // ...but the forger majority captured it: the on-chain record now holds
  // the forged bytes. This documents that the 50% bound is tight.
  CHECK(accepted_payload(*two) != "3,outside,20.4,58");
}

TEST_CASE("a work-skipping edge costs liveness but not safety") {
  Scenario s = canonical_scenario();
  Json events = Json::array();
  bool injected = false;
  for (const Json& e : s.events) {
    if (!injected && e.value("op", "") == "add_att") {
      events.push_back(Json{
          {"op", "inject_malicious"}, {"node", "edge_b"}, {"behavior", "skip_work"}});
      injected = true;
    }
    events.push_back(e);
  }
  s.events = events;
  Simulator simulator(s, 42);
  SimResult r = simulator.run();
  CHECK(r.chain_valid);
  // Two of three edges still form a strict majority.
  CHECK(r.metrics.successful_access == 1);
  CHECK(r.metrics.decrypt_failures == 0);
}

TEST_CASE("tampering edge transactions are rejected and counted") {
  Scenario s = canonical_scenario();
  Json events = Json::array();
  for (const Json& e : s.events) {
    events.push_back(e);
    if (e.value("op", "") == "add_policy")
      events.push_back(
          Json{{"op", "inject_malicious"}, {"node", "edge_a"}, {"behavior", "tamper_tx"}});
  }
  s.events = events;
  Simulator simulator(s, 42);
  SimResult r = simulator.run();
  CHECK(r.metrics.rejected_txs > 0);
  CHECK(r.chain_valid);  // rejected transactions never reach the chain
}

TEST_CASE("injecting on a terminal is a script error") {
  Scenario s = canonical_scenario();
  Json events = Json::array();
  events.push_back(Json{{"op", "register"}, {"node", "term_outside"}});
  events.push_back(Json{
      {"op", "inject_malicious"}, {"node", "term_outside"}, {"behavior", "forge_decrypt"}});
  s.events = events;
  Simulator simulator(s, 42);
  CHECK_THROWS_AS(simulator.run(), InputError);
}

TEST_CASE("scripts referencing unknown nodes fail") {
  Scenario s = canonical_scenario();
  s.events = Json::array({Json{{"op", "request_access"},
                               {"subject", "nobody"},
                               {"object", "term_outside"}}});
  Simulator simulator(s, 42);
  CHECK_THROWS_AS(simulator.run(), ConfigError);
}

TEST_CASE("duplicate topology names are rejected") {
  Json j;
  j["topology"] = Json{{"terminals", Json::array({"x", "x"})},
                       {"edges", Json::array()},
                       {"users", Json::array()}};
  CHECK_THROWS_AS(Scenario::from_json(j), ConfigError);
}

TEST_CASE("csv fixture ingests without error") {
  std::string csv = sensor_fixture_csv(4);
  auto path = std::filesystem::temp_directory_path() / "abechain_sensors.csv";
  {
    std::ofstream out(path);
    out << csv;
  }

  Scenario s = canonical_scenario();
  Json events = Json::array();
  for (const Json& e : s.events) {
    events.push_back(e);
    if (e.value("op", "") == "add_policy")
      events.push_back(
          Json{{"op", "ingest"}, {"terminal", "term_outside"}, {"csv", path.string()}});
  }
  s.events = events;
  Simulator simulator(s, 42);
  SimResult r = simulator.run();
  CHECK(r.chain_valid);
  CHECK(r.metrics.records_ingested == 3 + 12);  // canonical 3 + 4 rows x 3 sites
  std::filesystem::remove(path);
}

TEST_CASE("repo sensor fixture: three sites, 48 rows each") {
  Scenario s = canonical_scenario();
  Json events = Json::array();
  for (const Json& e : s.events) {
    events.push_back(e);
    if (e.value("op", "") == "add_policy")
      events.push_back(Json{{"op", "ingest"},
                            {"terminal", "term_outside"},
                            {"csv", std::string(ABECHAIN_FIXTURE_DIR) + "/sensors.csv"}});
  }
  s.events = events;
  Simulator simulator(s, 42);
  SimResult r = simulator.run();
  CHECK(r.chain_valid);
  CHECK(r.metrics.records_ingested == 3 + 48 * 3);
  CHECK(r.metrics.decrypt_failures == 0);
  CHECK(r.metrics.mean_block_ms() > 0);

  // One ciphertext reference per ingested record (the accessed one was
  // superseded by its re-encryption, which keeps the count stable).
  Digest32 term{};
  for (const auto& [name, node] : simulator.nodes())
    if (name == "term_outside") term = node.id;
  CHECK(simulator.engine().object_data_refs(term).size() == 3 + 48 * 3);
}

TEST_CASE("repo canonical scenario file loads and replays") {
  Scenario s = Scenario::load(std::string(ABECHAIN_FIXTURE_DIR) + "/canonical_scenario.json");
  Simulator simulator(s, 42);
  SimResult r = simulator.run();
  CHECK(r.chain_valid);
  CHECK(r.metrics.successful_access == 1);
}

TEST_CASE("drop rate knob drops messages deterministically") {
  Scenario s = canonical_scenario();
  s.drop_rate = 1.0;  // everything dropped
  Simulator simulator(s, 42);
  SimResult r = simulator.run();
  CHECK(r.metrics.successful_access == 0);
  CHECK(r.metrics.records_ingested == 3);  // queued but never delivered
  auto& engine = simulator.engine();
  Digest32 term{};
  for (const auto& [name, node] : simulator.nodes())
    if (name == "term_outside") term = node.id;
  CHECK(engine.object_data_refs(term).empty());
}
