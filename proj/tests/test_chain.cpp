#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "abechain/chain.hpp"
#include "abechain/errors.hpp"

using namespace abechain;
using namespace abechain::chain;

namespace {

EcdsaKeyPair test_key(std::uint64_t seed) {
  SeededRng rng(seed);
  return EcdsaKeyPair::generate(rng);
}

Digest32 id_from(const std::string& name) { return sha256(name); }

Transaction registration_tx(const EcdsaKeyPair& key, const Digest32& id,
                            std::uint64_t tick) {
  Json j;
  j["type"] = "register";
  j["role"] = "edge";
  j["id"] = digest_hex(id);
  j["verify_key"] = hex_encode(key.public_key());
  return sign_tx(key, id, to_bytes(j.dump()), tick);
}

// A small valid chain: one registration block then `blocks` data blocks.
Chain build_chain(std::uint32_t difficulty, int blocks, std::uint64_t seed = 9000) {
  Chain c(difficulty);
  SeededRng rng(seed);
  EcdsaKeyPair key = test_key(seed);
  Digest32 node = id_from("node-" + std::to_string(seed));

  auto append_block = [&](std::vector<Transaction> txs, std::uint64_t tick) {
    Block b;
    b.transactions = std::move(txs);
    b.prev_hash = c.head().block_hash;
    b.creator = node;
    b.created_at = tick;
    b.data_digest = tx_list_digest(b.transactions);
    b.n_bits = difficulty;
    BlockTemplate tmpl{b.data_digest, b.prev_hash, b.created_at,
                       b.creator,     b.n_bits,    b.kind};
    MineResult r = mine(tmpl, MineStrategy::kHybrid, rng);
    b.nonce = r.nonce;
    b.block_hash = r.hash;
    c.append(std::move(b));
  };

  append_block({registration_tx(key, node, 0)}, 0);
  for (int i = 1; i <= blocks; ++i) {
    Json j;
    j["type"] = "data";
    j["n"] = i;
    append_block({sign_tx(key, node, to_bytes(j.dump()), i)}, i);
  }
  return c;
}

}  // namespace

TEST_CASE("deterministic ecdsa sign and verify") {
  EcdsaKeyPair key = test_key(1);
  Digest32 digest = sha256(std::string("payload"));

  Bytes sig = key.sign(digest);
  CHECK(sig.size() == 64);
  CHECK(ecdsa_verify(key.public_key(), digest, sig));
  CHECK(key.sign(digest) == sig);  // deterministic nonce

  Digest32 other = sha256(std::string("payloae"));
  CHECK_FALSE(ecdsa_verify(key.public_key(), other, sig));

  EcdsaKeyPair wrong = test_key(2);
  CHECK_FALSE(ecdsa_verify(wrong.public_key(), digest, sig));

  Bytes mangled = sig;
  mangled[10] ^= 0x40;
  CHECK_FALSE(ecdsa_verify(key.public_key(), digest, mangled));
}

TEST_CASE("transaction sign/verify and digest avalanche") {
  EcdsaKeyPair key = test_key(3);
  Digest32 sender = id_from("sender");
  Transaction tx = sign_tx(key, sender, to_bytes(std::string("{\"a\":1}")), 5);
  CHECK(verify_tx(tx, key.public_key()));

  Transaction tampered = tx;
  tampered.payload[2] ^= 0x01;
  CHECK_FALSE(verify_tx(tampered, key.public_key()));

  EcdsaKeyPair other = test_key(4);
  CHECK_FALSE(verify_tx(tx, other.public_key()));

  // JSON round trip is exact.
  Transaction back = Transaction::from_json(tx.to_json());
  CHECK(back.canonical_bytes() == tx.canonical_bytes());
}

TEST_CASE("mine honors difficulty for every strategy") {
  BlockTemplate tmpl;
  tmpl.data_digest = sha256(std::string("template"));

  for (MineStrategy s :
       {MineStrategy::kSequential, MineStrategy::kRandom, MineStrategy::kHybrid}) {
    SeededRng rng(17);
    tmpl.n_bits = 0;
    MineResult r0 = mine(tmpl, s, rng);
    CHECK(r0.attempts == 1);  // empty difficulty accepts the first nonce
    if (s == MineStrategy::kSequential) CHECK(r0.nonce == 0);

    tmpl.n_bits = 8;
    MineResult r8 = mine(tmpl, s, rng);
    CHECK(r8.hash[0] == 0x00);  // first byte zero
    CHECK(leading_zero_bits(r8.hash) >= 8);
  }

  tmpl.n_bits = 40;
  SeededRng rng(18);
  CHECK_THROWS_AS(mine(tmpl, MineStrategy::kSequential, rng), InputError);
}

TEST_CASE("attempt counts are geometric with mean ~ 2^nBits") {
  // Monte-Carlo over 100 runs per strategy; the mean must sit within
  // 3 sigma of 2^nBits (sigma of the mean for a geometric distribution).
  for (std::uint32_t n_bits : {8u, 12u}) {
    for (MineStrategy s :
         {MineStrategy::kSequential, MineStrategy::kRandom, MineStrategy::kHybrid}) {
      const int runs = 100;
      double sum = 0, sumsq = 0;
      for (int i = 0; i < runs; ++i) {
        BlockTemplate tmpl;
        Bytes seed_material;
        append_u64_be(seed_material, i);
        seed_material.push_back(static_cast<std::uint8_t>(n_bits));
        tmpl.data_digest = sha256(seed_material);
        tmpl.n_bits = n_bits;
        SeededRng rng(1000 + i);
        MineResult r = mine(tmpl, s, rng);
        sum += static_cast<double>(r.attempts);
        sumsq += static_cast<double>(r.attempts) * static_cast<double>(r.attempts);
      }
      double mean = sum / runs;
      double var = sumsq / runs - mean * mean;
      double sigma_mean = std::sqrt(var / runs);
      double expect = std::pow(2.0, n_bits);
      INFO("strategy ", strategy_name(s), " nbits ", n_bits, " mean ", mean);
      CHECK(std::abs(mean - expect) <= 3.0 * sigma_mean);
    }
  }
}

TEST_CASE("chain append and validation") {
  Chain c = build_chain(8, 10);
  CHECK(c.height() == 12);  // genesis + registration + 10
  CHECK(static_cast<bool>(validate_chain(c)));

  // Appending with a stale prev_hash is rejected.
  Block stale;
  stale.prev_hash = c.blocks().front().block_hash;
  stale.data_digest = tx_list_digest({});
  stale.n_bits = 8;
  CHECK_THROWS_AS(c.append(stale), StateError);
}

TEST_CASE("single-bit tampering of any persisted field invalidates the chain") {
  Chain original = build_chain(8, 3);
  std::string jsonl = original.to_jsonl();

  // Block 2 is a data block; flip one bit in each field in turn.
  auto reload_with = [&](std::size_t block_index, auto&& mutate) {
    std::istringstream in(jsonl);
    std::string line;
    std::vector<Json> lines;
    while (std::getline(in, line))
      if (!line.empty()) lines.push_back(Json::parse(line));
    mutate(lines.at(block_index));
    std::string text;
    for (const Json& j : lines) text += j.dump() + "\n";
    Chain c = Chain::from_jsonl(text, 8);
    return static_cast<bool>(validate_chain(c));
  };

  auto flip_hex_bit = [](Json& j, const char* field) {
    std::string hex = j.at(field).get<std::string>();
    Bytes raw = hex_decode(hex);
    raw[raw.size() / 2] ^= 0x01;
    j[field] = hex_encode(raw);
  };

  CHECK(reload_with(2, [](Json&) {}));  // untouched chain still validates

  CHECK_FALSE(reload_with(2, [&](Json& j) { flip_hex_bit(j, "prev_hash"); }));
  CHECK_FALSE(reload_with(2, [&](Json& j) { flip_hex_bit(j, "creator"); }));
  CHECK_FALSE(reload_with(2, [&](Json& j) { flip_hex_bit(j, "data_digest"); }));
  CHECK_FALSE(reload_with(2, [&](Json& j) { flip_hex_bit(j, "block_hash"); }));
  CHECK_FALSE(reload_with(2, [&](Json& j) {
    j["created_at"] = j.at("created_at").get<std::uint64_t>() ^ 1;
  }));
  CHECK_FALSE(
      reload_with(2, [&](Json& j) { j["nonce"] = j.at("nonce").get<std::uint64_t>() ^ 1; }));
  CHECK_FALSE(reload_with(
      2, [&](Json& j) { j["n_bits"] = j.at("n_bits").get<std::uint32_t>() ^ 4; }));
  CHECK_FALSE(reload_with(2, [&](Json& j) { j["kind"] = "consensus"; }));

  // Transaction fields are covered through the data digest and signature.
  CHECK_FALSE(reload_with(2, [&](Json& j) {
    std::string payload = j["transactions"][0]["payload"].get<std::string>();
    payload[payload.size() / 2] ^= 0x01;
    j["transactions"][0]["payload"] = payload;
  }));
  CHECK_FALSE(
      reload_with(2, [&](Json& j) { flip_hex_bit(j["transactions"][0], "signature"); }));
  CHECK_FALSE(
      reload_with(2, [&](Json& j) { flip_hex_bit(j["transactions"][0], "sender"); }));
  CHECK_FALSE(reload_with(2, [&](Json& j) {
    j["transactions"][0]["timestamp"] =
        j["transactions"][0]["timestamp"].get<std::uint64_t>() ^ 1;
  }));

  // Genesis is a fixed constant.
  CHECK_FALSE(reload_with(0, [&](Json& j) { flip_hex_bit(j, "block_hash"); }));
}

TEST_CASE("chain file round trip") {
  Chain c = build_chain(8, 5);
  std::string path = (std::filesystem::temp_directory_path() / "abechain_test.jsonl").string();
  c.save_jsonl(path);
  Chain back = Chain::load_jsonl(path, 8);
  CHECK(back.to_jsonl() == c.to_jsonl());
  CHECK(static_cast<bool>(validate_chain(back)));
  std::filesystem::remove(path);
}

TEST_CASE("consensus: unanimous honest round") {
  Bytes m = to_bytes(std::string("same result"));
  std::vector<MinerState> nodes;
  std::vector<Bytes> results;
  for (int i = 0; i < 5; ++i) {
    MinerState ms;
    ms.node_id = id_from("node" + std::to_string(i));
    ms.strategy = MineStrategy::kHybrid;
    ms.rng = std::make_shared<SeededRng>(100 + i);
    nodes.push_back(ms);
    results.push_back(m);
  }
  Digest32 prev = sha256(std::string("prev"));
  ConsensusResult r = consensus_round(nodes, results, prev, 8, 3);
  REQUIRE(r.accepted);
  CHECK(r.m == m);
  CHECK(r.result_set.size() == 1);
  CHECK(r.result_set[0].support == 5);
  CHECK(r.block.kind == BlockKind::kConsensus);
  CHECK(r.block.data_digest == sha256(m));
  CHECK(leading_zero_bits(r.block.block_hash) >= 8);
}

TEST_CASE("consensus: majority honest beats forgers") {
  Bytes honest = to_bytes(std::string("honest"));
  Bytes forged = to_bytes(std::string("forged"));
  std::vector<MinerState> nodes;
  std::vector<Bytes> results;
  for (int i = 0; i < 5; ++i) {
    MinerState ms;
    ms.node_id = id_from("node" + std::to_string(i));
    ms.rng = std::make_shared<SeededRng>(200 + i);
    nodes.push_back(ms);
    results.push_back(i < 2 ? forged : honest);  // 2 of 5 malicious
  }
  ConsensusResult r = consensus_round(nodes, results, sha256(std::string("p")), 6, 1);
  REQUIRE(r.accepted);
  CHECK(r.m == honest);
  CHECK(r.result_set.size() == 2);  // one candidate per distinct m
}

TEST_CASE("consensus: 2/2 split has no strict majority") {
  std::vector<MinerState> nodes;
  std::vector<Bytes> results;
  for (int i = 0; i < 4; ++i) {
    MinerState ms;
    ms.node_id = id_from("node" + std::to_string(i));
    ms.rng = std::make_shared<SeededRng>(300 + i);
    nodes.push_back(ms);
    results.push_back(to_bytes(std::string(i < 2 ? "a" : "b")));
  }
  ConsensusResult r = consensus_round(nodes, results, sha256(std::string("p")), 6, 1);
  CHECK_FALSE(r.accepted);
}

TEST_CASE("consensus threshold is exhaustive over malicious assignments") {
  // For n in {3,5,7} and every subset of forgers, the honest payload wins
  // exactly when forgers are fewer than half.
  Bytes honest = to_bytes(std::string("honest"));
  Bytes forged = to_bytes(std::string("forged"));
  for (int n : {3, 5, 7}) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<MinerState> nodes;
      std::vector<Bytes> results;
      int f = 0;
      for (int i = 0; i < n; ++i) {
        MinerState ms;
        ms.node_id = id_from("n" + std::to_string(n) + "_" + std::to_string(i));
        ms.rng = std::make_shared<SeededRng>(400 + n * 100 + i);
        nodes.push_back(ms);
        bool malicious = mask & (1u << i);
        if (malicious) ++f;
        results.push_back(malicious ? forged : honest);
      }
      ConsensusResult r =
          consensus_round(nodes, results, sha256(std::string("prev")), 4, 1);
      bool honest_accepted = r.accepted && r.m == honest;
      CHECK(honest_accepted == (f < (n + 1) / 2));
      if (f > n / 2) {  // forger majority captures the round: the 50% bound
        CHECK(r.accepted);
        CHECK(r.m == forged);
      }
    }
  }
}

TEST_CASE("consensus blocks append to the chain") {
  Chain c = build_chain(6, 1, 9100);
  Bytes m = to_bytes(std::string("payload"));
  std::vector<MinerState> nodes;
  std::vector<Bytes> results;
  for (int i = 0; i < 3; ++i) {
    MinerState ms;
    ms.node_id = id_from("edge" + std::to_string(i));
    ms.rng = std::make_shared<SeededRng>(500 + i);
    nodes.push_back(ms);
    results.push_back(m);
  }
  ConsensusResult r = consensus_round(nodes, results, c.head().block_hash, 6, 7);
  REQUIRE(r.accepted);
  c.append(r.block);
  CHECK(static_cast<bool>(validate_chain(c)));
}
