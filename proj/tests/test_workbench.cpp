#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "netdiag/error.hpp"
#include "netdiag/features.hpp"
#include "netdiag/selection.hpp"
#include "netdiag/workbench.hpp"

using namespace netdiag;

namespace {

double feature(const Signature& s, const std::string& name) {
  const auto names = default_catalog().names();
  const auto it = std::find(names.begin(), names.end(), name);
  REQUIRE(it != names.end());
  return s.values[static_cast<std::size_t>(it - names.begin())];
}

std::string render(const TracePair& p) {
  std::ostringstream out;
  format_trace(p.download, out);
  format_trace(p.upload, out);
  return out.str();
}

std::uint64_t acked_payload(const TraceRecord& t) {
  const Direction data = t.direction_of_transfer == Transfer::Download ? Direction::ServerToClient
                                                                       : Direction::ClientToServer;
  std::uint32_t isn = 0;
  std::uint32_t last_ack = 0;
  bool have_isn = false;
  for (const auto& e : t.events) {
    if (e.dir == data && e.syn) {
      isn = e.seq;
      have_isn = true;
    }
    if (e.dir != data && e.ack_flag) last_ack = e.ack;
  }
  REQUIRE(have_isn);
  return static_cast<std::uint32_t>(last_ack - isn);
}

}  // namespace

TEST_SUITE("workbench") {

TEST_CASE("simulator is deterministic") {
  const LinkParams link = faulty_link(5);
  ClientParams client;
  client.sack_enabled = false;
  const auto a = simulate_flow(link, client, 400000, 9);
  const auto b = simulate_flow(link, client, 400000, 9);
  CHECK(a == b);
  CHECK(render(a) == render(b));
  const auto c = simulate_flow(link, client, 400000, 10);
  CHECK(render(a) != render(c));
}

TEST_CASE("payload is conserved in both directions") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    LinkParams link = healthy_link();
    link.loss_rate = 0.01 * static_cast<double>(seed);
    link.reorder_rate = seed % 2 ? 0.02 : 0.0;
    ClientParams client = faulty_client(seed % 2 ? "read_buffer" : "healthy", seed);
    const std::uint64_t bytes = 150000 + 7919 * seed;
    const auto r = simulate_flow_detailed(link, client, bytes, seed);
    CHECK(r.download.delivered_bytes == bytes);
    CHECK(r.upload.delivered_bytes == bytes);
    CHECK(r.download.highest_acked_bytes <= bytes + 1);
    CHECK(r.upload.highest_acked_bytes <= bytes + 1);
    CHECK(r.pair.download.declared_transfer_bytes == bytes);
    const auto acked = acked_payload(r.pair.download);
    CHECK(acked >= bytes);
    CHECK(acked <= bytes + 2);
  }
}

TEST_CASE("lossless link gives zero retransmissions and dup acks") {
  const auto pair = simulate_flow(LinkParams{}, ClientParams{}, kDefaultTransferBytes, 3);
  const auto s = extract_signature(pair, default_catalog());
  for (const char* dir : {"down_", "up_"}) {
    CHECK(feature(s, std::string(dir) + "retransmitted_packets") == 0.0);
    CHECK(feature(s, std::string(dir) + "dup_ack_count") == 0.0);
  }
}

TEST_CASE("loss inflates the retransmission family tenfold") {
  LinkParams lossy;
  lossy.loss_rate = 0.05;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto h = extract_signature(simulate_flow(LinkParams{}, ClientParams{}, kDefaultTransferBytes, seed),
                                     default_catalog());
    const auto f = extract_signature(simulate_flow(lossy, ClientParams{}, kDefaultTransferBytes, seed),
                                     default_catalog());
    for (const char* name : {"down_retransmitted_packets", "down_retransmitted_bytes", "up_retransmitted_packets",
                             "up_retransmitted_bytes"}) {
      CHECK_MESSAGE(feature(f, name) > 10.0 * std::max(feature(h, name), 1.0), name);
    }
  }
}

TEST_CASE("read buffer caps the advertised window and throughput") {
  const auto run = [](std::uint64_t buf) {
    ClientParams c;
    c.read_buffer = buf;
    return extract_signature(simulate_flow(healthy_link(), c, kDefaultTransferBytes, 4), default_catalog());
  };
  const auto small = run(16u << 10);
  const auto large = run(1u << 20);
  const double ratio = feature(small, "down_win_max") / feature(large, "down_win_max");
  CHECK(ratio == doctest::Approx(16.0 / 1024.0).epsilon(0.05));
  CHECK(feature(small, "down_throughput") < feature(large, "down_throughput"));
  const double rtt = 2 * healthy_link().one_way_delay;
  CHECK(feature(small, "down_throughput") <= 1.1 * (16u << 10) / rtt);
}

TEST_CASE("write buffer throttles the upload") {
  ClientParams c;
  c.write_buffer = 16u << 10;
  const auto s = extract_signature(simulate_flow(healthy_link(), c, kDefaultTransferBytes, 4), default_catalog());
  const auto d = extract_signature(simulate_flow(healthy_link(), ClientParams{}, kDefaultTransferBytes, 4),
                                   default_catalog());
  CHECK(feature(s, "up_throughput") < 0.5 * feature(d, "up_throughput"));
}

TEST_CASE("sack gating") {
  LinkParams lossy = healthy_link();
  lossy.loss_rate = 0.04;
  ClientParams off;
  off.sack_enabled = false;
  const auto p = simulate_flow(lossy, off, 600000, 8);
  for (const auto* t : {&p.download, &p.upload}) {
    for (const auto& e : t->events) CHECK(e.sack_cnt == 0);
  }
  const auto on = simulate_flow(lossy, ClientParams{}, 600000, 8);
  std::size_t with_sack = 0;
  for (const auto& e : on.download.events) with_sack += e.sack_cnt > 0;
  CHECK(with_sack > 0);
}

TEST_CASE("dsack only when enabled") {
  LinkParams link = healthy_link();
  link.loss_rate = 0.03;
  link.reorder_rate = 0.05;
  ClientParams off;
  off.dsack_enabled = false;
  const auto a = simulate_flow_detailed(link, off, 800000, 6);
  // The client only generates the download's acks.
  CHECK(a.download.dsack_blocks == 0);
  std::uint64_t seen = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    seen += simulate_flow_detailed(link, ClientParams{}, 800000, seed).download.dsack_blocks;
  }
  CHECK(seen > 0);
}

TEST_CASE("more loss never means fewer retransmissions") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::uint64_t prev = 0;
    for (double loss : {0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.08}) {
      LinkParams link = healthy_link();
      link.loss_rate = loss;
      const auto r = simulate_flow_detailed(link, ClientParams{}, 500000, seed);
      const std::uint64_t retx = r.download.retransmissions + r.upload.retransmissions;
      CHECK_MESSAGE(retx >= prev, "seed " << seed << " loss " << loss);
      prev = retx;
    }
  }
}

TEST_CASE("parameter validation") {
  LinkParams bad;
  bad.bandwidth = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  LinkParams neg;
  neg.one_way_delay = -1;
  CHECK_THROWS_AS(neg.validate(), Error);
  LinkParams loss;
  loss.loss_rate = 1.0;
  CHECK_THROWS_AS(loss.validate(), Error);
  ClientParams c;
  c.read_buffer = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_THROWS_AS(simulate_flow(LinkParams{}, ClientParams{}, 0, 1), Error);
}

TEST_CASE("synthetic signatures") {
  ClassArtifactSpec zero;
  zero.m = 30;
  zero.noise = {NoiseKind::Constant, 0.0, 0.0};
  zero.informative = {{3, 0.4, 0.0}, {9, 5.0, 0.0}};
  const auto a = generate_synthetic_signature(zero, 1);
  const auto b = generate_synthetic_signature(zero, 2);
  CHECK(a == b);
  CHECK(a.values[3] == 0.4);
  CHECK(a.values[0] == 0.0);

  ClassArtifactSpec clip;
  clip.m = 4;
  clip.noise = {NoiseKind::Normal, 0.0, 5e6};
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (double v : generate_synthetic_signature(clip, s).values) {
      CHECK(v >= 0.0);
      CHECK(v <= kSyntheticClip);
    }
  }
  CHECK(generate_synthetic_signature(clip, 4) == generate_synthetic_signature(clip, 4));

  ClassArtifactSpec dup;
  dup.m = 5;
  dup.informative = {{1, 0.0, 0.0}, {1, 1.0, 0.0}};
  CHECK_THROWS_AS(dup.validate(), Error);
  dup.informative = {{5, 0.0, 0.0}};
  CHECK_THROWS_AS(dup.validate(), Error);
}

TEST_CASE("disjoint class artifacts outrank noise") {
  auto db = fixture::empty_db(40);
  db.stage = DbStage::Scaled;
  std::uint64_t s = 0;
  for (int i = 0; i < 100; ++i) {
    db.rows.push_back(generate_synthetic_signature(fixture::block_spec(40, 0, 6, 0.8, Label::faulty_link()), ++s));
    db.rows.push_back(generate_synthetic_signature(fixture::block_spec(40, 6, 6, 0.8, Label::healthy_link()), ++s));
  }
  const auto r = rank_features(db, 1, -1);
  for (std::size_t k = 0; k < 12; ++k) CHECK(r.abs_t_order[k] < 12);
}

TEST_CASE("planted features land in the top 25") {
  std::size_t worst = 20;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SplitMix64 rng(seed);
    std::vector<std::size_t> idx(280);
    for (std::size_t j = 0; j < 280; ++j) idx[j] = j;
    rng.shuffle(idx);
    ClassArtifactSpec pos, neg;
    pos.m = neg.m = 280;
    pos.label = Label::faulty_link();
    neg.label = Label::healthy_link();
    for (std::size_t k = 0; k < 20; ++k) {
      pos.informative.push_back({idx[k], 0.7, 0.05});
      neg.informative.push_back({idx[k], 0.3, 0.05});
    }
    auto db = fixture::empty_db(280);
    db.stage = DbStage::Scaled;
    for (int i = 0; i < 100; ++i) {
      db.rows.push_back(generate_synthetic_signature(pos, seed * 1000 + 2 * i));
      db.rows.push_back(generate_synthetic_signature(neg, seed * 1000 + 2 * i + 1));
    }
    const auto r = rank_features(db, 1, -1);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < 25; ++k) {
      hits += std::find(idx.begin(), idx.begin() + 20, r.abs_t_order[k]) != idx.begin() + 20;
    }
    worst = std::min(worst, hits);
  }
  CHECK(worst >= 18);
}

TEST_CASE("scenario JSON") {
  const nlohmann::json j = {{"link", {{"loss_rate", 0.04}, {"queue_limit", 50}}},
                            {"client", {{"sack_enabled", false}, {"cwnd_growth_profile", "renolike"}}},
                            {"bytes", 123456},
                            {"seed", 77}};
  const Scenario s = scenario_from_json(j);
  CHECK(s.link.loss_rate == 0.04);
  CHECK(s.link.queue_limit == 50);
  CHECK_FALSE(s.client.sack_enabled);
  CHECK(s.client.cwnd_growth_profile == GrowthProfile::Renolike);
  CHECK(s.bytes == 123456);
  CHECK(s.seed == 77);
  CHECK(scenario_from_json(to_json(s)) == s);
  CHECK_THROWS_AS(scenario_from_json({{"bytez", 1}}), Error);
  CHECK_THROWS_AS(scenario_from_json({{"link", {{"los_rate", 0.1}}}}), Error);
  CHECK_THROWS_AS(scenario_from_json({{"client", {{"read_buffer", 0}}}}), Error);
  CHECK_THROWS_AS(scenario_from_json({{"link", {{"loss_rate", "high"}}}}), Error);
}

TEST_CASE("presets") {
  const auto healthy = preset_scenarios("healthy", 1, 1);
  REQUIRE(healthy.size() == 1);
  const auto r = simulate_flow_detailed(healthy[0].link, healthy[0].client, healthy[0].bytes, healthy[0].seed);
  CHECK(r.download.random_drops + r.download.queue_drops == 0);
  CHECK(r.download.retransmissions + r.upload.retransmissions == 0);

  const auto matrix = preset_scenarios("paper-matrix", 11, 1);
  std::map<std::string, std::size_t> per_class;
  for (const auto& s : matrix) {
    std::string key = s.link_faulty ? "fl:" : "hl:";
    for (const auto& f : s.client_faults) key += f + ",";
    per_class[key]++;
    if (s.link_faulty) {
      CHECK(s.link.loss_rate >= 0.03);
      CHECK(s.link.loss_rate <= 0.05);
    } else {
      CHECK(s.link.loss_rate == 0.0);
    }
  }
  CHECK(per_class.size() == 11);
  for (const auto& [k, n] : per_class) CHECK(n == 11);
  CHECK(per_class.count("hl:read_buffer,write_buffer,") == 1);

  const auto rb = preset_scenarios("read_buffer", 3, 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rb[i].client.read_buffer == kBufferLevels[i]);
  CHECK(preset_scenarios("paper-matrix", 2, 5) == preset_scenarios("paper-matrix", 2, 5));
  CHECK_THROWS_AS(preset_scenarios("nope", 1, 1), Error);
  CHECK_THROWS_AS(faulty_client("nope", 0), Error);
}

TEST_CASE("growth profiles change the trace") {
  LinkParams link = healthy_link();
  link.loss_rate = 0.02;
  ClientParams a, b;
  a.cwnd_growth_profile = GrowthProfile::Cubiclike;
  b.cwnd_growth_profile = GrowthProfile::Renolike;
  CHECK(render(simulate_flow(link, a, 500000, 3)) != render(simulate_flow(link, b, 500000, 3)));
  CHECK(parse_growth_profile(to_string(GrowthProfile::Biclike)) == GrowthProfile::Biclike);
}

}  // TEST_SUITE
