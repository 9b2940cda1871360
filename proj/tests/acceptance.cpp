// Acceptance suite: every criterion prints exactly one PASS/FAIL line.
// The process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "abechain/abe.hpp"
#include "abechain/bench.hpp"
#include "abechain/chain.hpp"
#include "abechain/contracts.hpp"
#include "abechain/errors.hpp"
#include "abechain/netsim.hpp"
#include "abechain/policy.hpp"
#include "testutil.hpp"

using namespace abechain;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion(int number, const std::string& title,
               const std::function<std::string()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  try {
    std::string detail = body();
    std::ostringstream line;
    line << "PASS criterion " << number << " [" << title << "] " << detail << " ("
         << std::fixed << std::setprecision(2) << seconds_since(t0) << "s)";
    std::cout << line.str() << std::endl;
  } catch (const std::exception& e) {
    ++g_failures;
    std::cout << "FAIL criterion " << number << " [" << title << "] " << e.what()
              << std::endl;
  }
}

void require(bool cond, const std::string& message) {
  if (!cond) throw std::runtime_error(message);
}

constexpr std::uint64_t kLargePrime = (1ull << 61) - 1;
const char* kGoldenPolicy = "(SA_1 OR ObA_1) AND (SA_2 OR ObA_2) AND (SA_3 OR ObA_3)";

// The shared enumeration corpus for criteria 2 and 3.
struct EnumerationCase {
  testutil::RandomPolicy rp;
  policy::ThresholdTree tree;
};

std::vector<EnumerationCase> enumeration_corpus(int count, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<EnumerationCase> out;
  for (int i = 0; i < count; ++i) {
    EnumerationCase c;
    c.rp = testutil::random_policy(rng, 12);
    c.tree = policy::build_tree(policy::parse_policy(c.rp.text));
    out.push_back(std::move(c));
  }
  return out;
}

// ---- criterion 1 ----

std::string golden_lsss() {
  auto t0 = std::chrono::steady_clock::now();
  auto params = GroupParams::exponent_tracking(1009);
  policy::ThresholdTree tree = policy::build_tree(policy::parse_policy(kGoldenPolicy));
  SequenceStream script({7, 1, 1});  // phi_s = 7, f(x) = x^2 + x + 7
  policy::ShareAssignment a = policy::assign_shares(tree, script, *params);

  auto row = [&](std::size_t i) {
    std::vector<std::uint64_t> out{a.matrix.rows[i].t, a.matrix.rows[i].n};
    for (std::uint64_t s : a.matrix.rows[i].shares) out.push_back(s);
    return out;
  };
  require(a.phi_s.value() == 7, "phi_s != 7");
  require(row(0) == std::vector<std::uint64_t>{3, 3, 9, 13, 19}, "root row mismatch");
  require(row(1) == std::vector<std::uint64_t>{1, 2, 9, 9, 0}, "child row 1 mismatch");
  require(row(2) == std::vector<std::uint64_t>{1, 2, 13, 13, 0}, "child row 2 mismatch");
  require(row(3) == std::vector<std::uint64_t>{1, 2, 19, 19, 0}, "child row 3 mismatch");

  std::vector<std::pair<std::uint64_t, FieldElement>> shares = {
      {1, FieldElement(9, 1009)}, {2, FieldElement(13, 1009)}, {3, FieldElement(19, 1009)}};
  require(policy::reconstruct_secret(shares, 3).value() == 7, "reconstruction != 7");

  bool rejected = false;
  try {
    policy::reconstruct_secret({{1, FieldElement(9, 1009)}, {2, FieldElement(13, 1009)}}, 3);
  } catch (const InsufficientSharesError&) {
    rejected = true;
  }
  require(rejected, "two shares did not fail");
  require(seconds_since(t0) < 1.0, "runtime exceeded 1s");
  return "matrix rows and reconstruction exact";
}

// ---- criterion 2 ----

std::string decision_soundness() {
  auto corpus = enumeration_corpus(200, 20240601);
  auto params = GroupParams::exponent_tracking(kLargePrime);
  contracts::EngineConfig cfg;
  cfg.seed = 99;
  cfg.difficulty = 4;
  contracts::Engine engine(params, cfg);

  Digest32 object = engine.register_device("obj", "", "", "obj:1", contracts::Role::kTerminal);
  std::vector<std::string> pool;
  for (int i = 0; i < 16; ++i) pool.push_back("T_" + std::to_string(i));
  engine.scpi_add_att(object, pool);
  Digest32 subject = engine.register_user("probe");

  std::uint64_t checked = 0, mismatches = 0;
  for (const auto& c : corpus) {
    engine.scpa_add_policy(object, object, c.rp.text);
    std::size_t k = c.rp.labels.size();
    for (std::uint64_t mask = 0; mask < (1ull << k); ++mask) {
      std::set<std::string> attrs = testutil::subset_by_mask(c.rp.labels, mask);
      try {
        engine.scpi_del_att(subject);
      } catch (const NotFoundError&) {
      }
      if (!attrs.empty())
        engine.scpi_add_att(subject, std::vector<std::string>(attrs.begin(), attrs.end()));
      bool verdict = engine.scpd_judge_policy(subject, object).granted;
      bool expected = policy::satisfies(c.tree, attrs);
      ++checked;
      if (verdict != expected) ++mismatches;
    }
  }
  require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  return std::to_string(corpus.size()) + " policies, " + std::to_string(checked) +
         " subset judgments, 0 mismatches";
}

// ---- criterion 3 ----

std::string abe_correctness() {
  auto corpus = enumeration_corpus(200, 20240601);  // same corpus as #2
  auto params = GroupParams::exponent_tracking(kLargePrime);
  SeededRng rng(555);
  auto [pk, mk] = abe::setup(params, rng);

  abe::AttributePoints points;
  std::map<std::string, FieldElement> logs;
  for (int i = 0; i < 16; ++i) {
    std::string label = "T_" + std::to_string(i);
    auto [point, rv] = params->hash_to_group(label, rng);
    points.emplace(label, point);
    logs.emplace(label, rv);
  }

  Bytes payload = to_bytes("12,outside,18.5,62.0");
  std::uint64_t checked = 0, mismatches = 0;
  bool eq9_checked = false;

  for (const auto& c : corpus) {
    policy::ShareAssignment a = policy::assign_shares(c.tree, rng, *params);
    auto record = std::make_shared<policy::PolicyRecord>(policy::PolicyRecord{
        policy::compute_policy_id(a.matrix, a.phi_s), a.matrix, a.tree});
    FieldElement h = params->random_scalar(rng);
    abe::WrappedPayload wp = abe::wrap(pk, payload, record, points, h, rng);

    std::size_t k = c.rp.labels.size();
    for (std::uint64_t mask = 1; mask < (1ull << k); ++mask) {
      std::set<std::string> attrs = testutil::subset_by_mask(c.rp.labels, mask);
      std::vector<std::string> attr_list(attrs.begin(), attrs.end());
      abe::PrivateKey sk = abe::keygen(pk, mk, attr_list, points, h, rng);
      auto out = abe::unwrap(pk, sk, wp);
      bool expected = policy::satisfies(c.tree, attrs);
      bool got = out.has_value() && *out == payload;
      ++checked;
      if (got != expected) ++mismatches;

      // Per-leaf pairing-ratio identity and the final unblinding
      // identity, bit-exact in the exponent.
      if (expected && !eq9_checked) {
        GTElement m = params->gT().pow(params->random_scalar(rng));
        abe::Ciphertext ct = abe::encrypt(pk, m, record, points, h);
        FieldElement rv = sk.pk.discrete_log() * mk.beta - h;
        for (const auto& comp : ct.components) {
          const std::string& label = record->matrix.rho.at({comp.row, comp.col});
          if (!attrs.count(label)) continue;
          const abe::PrivateKeyComponent* kc = nullptr;
          for (const auto& cand : sk.components)
            if (cand.attr_label == label) kc = &cand;
          GTElement share_gt = pair(comp.c, kc->a).div(pair(kc->d, comp.m));
          FieldElement share(record->matrix.rows[comp.row].shares[comp.col], kLargePrime);
          require(share_gt.discrete_log() == rv * share, "per-leaf pairing identity broken");
        }
        require(abe::decrypt(pk, sk, ct) == m, "final unblinding identity broken");
        require(abe::decrypt(pk, sk, ct).discrete_log() == m.discrete_log(),
                "final unblinding exponent mismatch");
        eq9_checked = true;
      }
    }
  }
  require(eq9_checked, "no satisfying subset exercised the pairing identities");
  require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  return std::to_string(checked) + " wrap/unwrap checks, identity iff satisfying";
}

// ---- criterion 4 ----

std::string penalty_schedule() {
  auto params = GroupParams::exponent_tracking(kLargePrime);
  contracts::EngineConfig cfg;
  cfg.seed = 4;
  cfg.difficulty = 4;
  contracts::Engine engine(params, cfg);

  Digest32 term = engine.register_device("t", "COM1", "", "t:1", contracts::Role::kTerminal);
  engine.scpi_add_att(term, {"ObA_1"});
  Digest32 owner = engine.register_user("owner");
  engine.scpi_add_att(owner, {"SA_1"});
  engine.scpa_add_policy(owner, term, "SA_1 AND ObA_1");

  // Scripted violator: first denial penalizes, every locked retry escalates.
  Digest32 intruder = engine.register_user("intruder");
  engine.scpi_add_att(intruder, {"SA_none"});
  engine.set_tick(0);
  auto r0 = engine.scpe_enforce(intruder, term, 0);
  require(r0.outcome == contracts::EnforceOutcome::kDeniedPenalized, "first denial");
  require(engine.penalty_state(intruder)->violations == 1, "t != 1");
  require(engine.penalty_state(intruder)->next_time == 2, "lockout != 2h");

  std::uint64_t tick = 0;
  for (int t = 2; t <= 10; ++t) {
    ++tick;
    engine.set_tick(tick);
    auto r = engine.scpe_enforce(intruder, term, tick);
    require(r.outcome == contracts::EnforceOutcome::kDeniedLocked, "locked retry");
    auto st = engine.penalty_state(intruder);
    require(st->violations == static_cast<std::uint64_t>(t), "t ladder broken");
    require(st->next_time == tick + (1ull << t),
            "lockout != " + std::to_string(1ull << t) + "h at t=" + std::to_string(t));
  }
  ++tick;
  engine.set_tick(tick);
  engine.scpe_enforce(intruder, term, tick);
  require(engine.penalty_state(intruder)->violations == 11, "t != 11");
  require(engine.penalty_state(intruder)->next_time == contracts::kPermanentLockout,
          "t=11 not PERMANENT");

  // Decrement path: one violation, waiting out the lockout, satisfying
  // attributes -> re-granted.
  Digest32 reformed = engine.register_user("reformed");
  engine.scpi_add_att(reformed, {"SA_1", "ObA_1"});
  Digest32 bare = engine.register_device("bare", "", "", "b:1", contracts::Role::kTerminal);
  engine.set_tick(50);
  auto rv = engine.scpe_enforce(reformed, bare, 50);  // no policy -> violation
  require(rv.outcome == contracts::EnforceOutcome::kDeniedPenalized, "setup violation");
  engine.set_tick(53);
  auto rg = engine.scpe_enforce(reformed, term, 53);  // 53 >= 50+2
  require(rg.outcome == contracts::EnforceOutcome::kGranted, "expiry did not re-grant");
  require(!engine.penalty_state(reformed).has_value(), "record not cleared");
  return "lockouts 2..1024 then PERMANENT; expiry path re-grants";
}

// ---- criterion 5 ----

std::string consensus_threshold() {
  Bytes honest = to_bytes(std::string("honest-payload"));
  Bytes forged = to_bytes(std::string("forged-payload"));
  std::uint64_t rounds = 0;
  for (int n : {3, 5, 7}) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<chain::MinerState> nodes;
      std::vector<Bytes> results;
      int f = 0;
      for (int i = 0; i < n; ++i) {
        chain::MinerState ms;
        ms.node_id = sha256("acc5-" + std::to_string(n) + "-" + std::to_string(i));
        ms.rng = std::make_shared<SeededRng>(9000 + n * 64 + i);
        nodes.push_back(ms);
        bool malicious = mask & (1u << i);
        if (malicious) ++f;
        results.push_back(malicious ? forged : honest);
      }
      chain::ConsensusResult r =
          chain::consensus_round(nodes, results, sha256(std::string("prev")), 4, 1);
      ++rounds;
      bool honest_won = r.accepted && r.m == honest;
      require(honest_won == (f * 2 < n),
              "n=" + std::to_string(n) + " f=" + std::to_string(f) + " wrong outcome");
      if (f == (n + 1) / 2)
        require(r.accepted && r.m == forged,
                "f=ceil(n/2) did not demonstrably capture the round");
    }
  }
  return std::to_string(rounds) + " exhaustive rounds; boundary at f = n/2 tight";
}

// ---- criterion 6 ----

std::string chain_integrity() {
  SeededRng rng(606);
  EcdsaKeyPair key = EcdsaKeyPair::generate(rng);
  Digest32 node = sha256(std::string("acc6-node"));
  chain::Chain c(12);

  auto make_block = [&](std::vector<chain::Transaction> txs, std::uint64_t tick) {
    chain::Block b;
    b.transactions = std::move(txs);
    b.prev_hash = c.head().block_hash;
    b.creator = node;
    b.created_at = tick;
    b.data_digest = chain::tx_list_digest(b.transactions);
    b.n_bits = 12;
    chain::BlockTemplate tmpl{b.data_digest, b.prev_hash, b.created_at,
                              b.creator,     b.n_bits,    b.kind};
    chain::MineResult r = chain::mine(tmpl, chain::MineStrategy::kHybrid, rng);
    b.nonce = r.nonce;
    b.block_hash = r.hash;
    c.append(std::move(b));
  };

  Json reg;
  reg["type"] = "register";
  reg["id"] = digest_hex(node);
  reg["verify_key"] = hex_encode(key.public_key());
  make_block({chain::sign_tx(key, node, to_bytes(reg.dump()), 0)}, 0);
  for (int i = 1; i < 100; ++i) {
    Json j;
    j["type"] = "data";
    j["n"] = i;
    make_block({chain::sign_tx(key, node, to_bytes(j.dump()), i)}, i);
  }
  require(c.height() == 101, "chain height");
  require(static_cast<bool>(chain::validate_chain(c)), "clean 100-block chain invalid");

  // Single-bit mutations across every persisted field must invalidate.
  std::string jsonl = c.to_jsonl();
  std::vector<Json> lines;
  {
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) lines.push_back(Json::parse(line));
  }
  auto revalidate = [&](const std::vector<Json>& mutated) {
    std::string text;
    for (const Json& j : mutated) text += j.dump() + "\n";
    chain::Chain loaded = chain::Chain::from_jsonl(text, 12);
    return static_cast<bool>(chain::validate_chain(loaded));
  };
  auto flip_hex = [](Json& j, const char* field) {
    Bytes raw = hex_decode(j.at(field).get<std::string>());
    raw[raw.size() / 3] ^= 0x01;
    j[field] = hex_encode(raw);
  };

  int mutations = 0;
  for (std::size_t index : {std::size_t{1}, std::size_t{50}, std::size_t{100}}) {
    for (const char* field : {"prev_hash", "creator", "data_digest", "block_hash"}) {
      std::vector<Json> mutated = lines;
      flip_hex(mutated[index], field);
      require(!revalidate(mutated), std::string("undetected: ") + field);
      ++mutations;
    }
    for (const char* field : {"created_at", "nonce", "n_bits"}) {
      std::vector<Json> mutated = lines;
      mutated[index][field] = mutated[index][field].get<std::uint64_t>() ^ 1;
      require(!revalidate(mutated), std::string("undetected: ") + field);
      ++mutations;
    }
    {
      std::vector<Json> mutated = lines;
      mutated[index]["kind"] = "consensus";
      require(!revalidate(mutated), "undetected: kind");
      ++mutations;
    }
    for (const char* field : {"sender", "signature"}) {
      std::vector<Json> mutated = lines;
      flip_hex(mutated[index]["transactions"][0], field);
      require(!revalidate(mutated), std::string("undetected tx field: ") + field);
      ++mutations;
    }
    {
      std::vector<Json> mutated = lines;
      std::string payload = mutated[index]["transactions"][0]["payload"].get<std::string>();
      payload[payload.size() / 2] ^= 0x01;
      mutated[index]["transactions"][0]["payload"] = payload;
      require(!revalidate(mutated), "undetected tx payload flip");
      ++mutations;
    }
    {
      std::vector<Json> mutated = lines;
      mutated[index]["transactions"][0]["timestamp"] =
          mutated[index]["transactions"][0]["timestamp"].get<std::uint64_t>() ^ 1;
      require(!revalidate(mutated), "undetected tx timestamp flip");
      ++mutations;
    }
  }
  return "100 blocks at nBits=12 clean; " + std::to_string(mutations) +
         " single-bit mutations all detected";
}

// ---- criterion 7 ----

std::string anonymity() {
  sim::Scenario scenario = sim::canonical_scenario();
  sim::Simulator simulator(scenario, 42);
  sim::SimResult r = simulator.run();
  require(r.chain_valid, "scenario chain invalid");
  require(r.metrics.successful_access >= 1, "scenario did not grant");

  std::vector<std::string> labels = {"SA_role_ops",   "SA_clearance_2", "ObA_site_outside",
                                     "ObA_site_lab",  "ObA_site_aisle", "OpA_read",
                                     "EnA_zone_1"};
  for (const std::string& label : labels)
    require(r.chain_jsonl.find(label) == std::string::npos, "label leaked: " + label);
  std::string formula = "(SA_role_ops OR ObA_site_outside) AND "
                        "(SA_clearance_2 OR ObA_site_outside) AND OpA_read AND EnA_zone_1";
  require(r.chain_jsonl.find(formula) == std::string::npos, "formula leaked");
  require(r.chain_jsonl.find(" OR ") == std::string::npos, "formula fragment leaked");
  return "no attribute label or policy text in " +
         std::to_string(r.chain_jsonl.size()) + " chain bytes";
}

// ---- criterion 8 ----

std::string performance_shape() {
  auto t0 = std::chrono::steady_clock::now();

  bench::AbeBenchConfig acfg;
  acfg.attribute_counts = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  acfg.payload_sizes = {1, 1024, 64 * 1024, 1024 * 1024};
  acfg.repetitions = 3;
  acfg.seed = 8;
  bench::AbeBenchReport abe_report = bench::run_bench_abe(acfg);

  require(abe_report.encrypt_linear_flag,
          "encrypt R^2 = " + std::to_string(abe_report.encrypt_r2));
  require(abe_report.keygen_linear_flag,
          "keygen R^2 = " + std::to_string(abe_report.keygen_r2));
  require(abe_report.or_flat_flag,
          "all-OR decrypt max/min = " + std::to_string(abe_report.or_decrypt_flat_ratio));
  require(abe_report.size_constant_flag, "sub-1MiB variation exceeded 2x");

  bench::PowBenchConfig pcfg;
  pcfg.n_bits_list = {8, 12, 16};
  pcfg.concurrency_levels = {1};
  pcfg.blocks = 100;
  pcfg.seed = 8;
  bench::PowBenchReport pow_report = bench::run_bench_pow(pcfg);
  for (std::uint32_t n_bits : pcfg.n_bits_list) {
    for (const std::string& strategy : {"sequential", "random", "hybrid"}) {
      const bench::PowBenchRow* row = pow_report.find(n_bits, strategy, 1);
      require(row != nullptr, "missing row");
      require(row->within_3_sigma, strategy + " attempts mean " +
                                       std::to_string(row->mean_attempts) + " off 2^" +
                                       std::to_string(n_bits));
    }
  }

  double elapsed = seconds_since(t0);
  require(elapsed < 600.0, "runtime exceeded 10 minutes");
  std::ostringstream detail;
  detail << "encrypt R2=" << abe_report.encrypt_r2 << " keygen R2=" << abe_report.keygen_r2
         << " OR-flat=" << abe_report.or_decrypt_flat_ratio
         << " AND R2=" << abe_report.and_decrypt_r2 << "; attempts within 3 sigma";
  return detail.str();
}

// ---- criterion 9 ----

std::string throughput_ordering() {
  bench::ThroughputConfig cfg;
  cfg.operations = 300;
  cfg.seed = 9;
  bench::ThroughputReport report = bench::run_bench_throughput(cfg);
  require(report.ordering_flag, "ordering violated: success=" +
                                    std::to_string(report.success_tps) + " failed=" +
                                    std::to_string(report.failed_tps) + " verify=" +
                                    std::to_string(report.verify_tps));
  std::ostringstream detail;
  detail << "success=" << static_cast<long>(report.success_tps)
         << " > failed=" << static_cast<long>(report.failed_tps)
         << " > verify=" << static_cast<long>(report.verify_tps) << " TPS";
  return detail.str();
}

}  // namespace

int main() {
  criterion(1, "golden LSSS worked example", golden_lsss);
  criterion(2, "decision soundness vs satisfies oracle", decision_soundness);
  criterion(3, "ABE correctness and pairing identities", abe_correctness);
  criterion(4, "penalty schedule and expiry re-grant", penalty_schedule);
  criterion(5, "consensus majority threshold", consensus_threshold);
  criterion(6, "chain tamper evidence", chain_integrity);
  criterion(7, "attribute/policy anonymity on chain", anonymity);
  criterion(8, "performance shape reproduction", performance_shape);
  criterion(9, "throughput ordering", throughput_ordering);

  if (g_failures == 0) {
    std::cout << "ACCEPTANCE: all 9 criteria passed" << std::endl;
    return 0;
  }
  std::cout << "ACCEPTANCE: " << g_failures << " criterion(s) failed" << std::endl;
  return 1;
}
