#include <doctest.h>

#include <cmath>
#include <set>

#include "netdiag/error.hpp"
#include "netdiag/features.hpp"
#include "netdiag/rng.hpp"
#include "netdiag/workbench.hpp"

using namespace netdiag;

namespace {

PacketEvent ev(double ts, Direction dir, std::uint32_t seq, std::uint32_t ack, std::uint32_t len) {
  PacketEvent e;
  e.ts = ts;
  e.dir = dir;
  e.seq = seq;
  e.ack = ack;
  e.payload_len = len;
  e.ack_flag = true;
  e.win = 65535;
  return e;
}

constexpr auto S2C = Direction::ServerToClient;
constexpr auto C2S = Direction::ClientToServer;

TraceRecord download(std::vector<PacketEvent> events) {
  TraceRecord t;
  t.capture_point = CapturePoint::Client;
  t.direction_of_transfer = Transfer::Download;
  t.declared_transfer_bytes = 1000;
  t.events = std::move(events);
  return t;
}

double stat(const TraceRecord& t, Statistic s) { return compute_statistic(t, s); }

std::size_t index_of(const std::string& name) {
  const auto names = default_catalog().names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  FAIL("no feature " << name);
  return 0;
}

/// Data stream with random segment sizes, one ack per two segments.
TraceRecord random_stream(SplitMix64& rng) {
  std::vector<PacketEvent> evs;
  std::uint32_t seq = 0;
  double ts = 0.0;
  std::size_t segs = 4 + rng.index(40);
  for (std::size_t i = 0; i < segs; ++i) {
    const auto len = static_cast<std::uint32_t>(100 + rng.index(1349));
    evs.push_back(ev(ts, S2C, seq, 1, len));
    seq += len;
    if (i % 2 == 1 || i + 1 == segs) evs.push_back(ev(ts + 0.01 + 0.01 * rng.uniform(), C2S, 1, seq, 0));
    ts += 0.002 * rng.uniform();
  }
  std::stable_sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
  const double t0 = evs.front().ts;
  for (auto& e : evs) e.ts -= t0;
  auto t = download(evs);
  t.declared_transfer_bytes = seq;
  return t;
}

TracePair pair_of(const TraceRecord& down) {
  TracePair p;
  p.download = down;
  p.upload = down;
  p.upload.capture_point = CapturePoint::Server;
  p.upload.direction_of_transfer = Transfer::Upload;
  for (auto& e : p.upload.events) e.dir = opposite(e.dir);
  return p;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("catalog v1 has 74 distinct names") {
  const auto& c = default_catalog();
  CHECK(c.version == "v1");
  CHECK(c.size() == 74);
  const auto all = c.names();
  std::set<std::string> names(all.begin(), all.end());
  CHECK(names.size() == 74);
  CHECK_NOTHROW(validate_catalog(c));
}

TEST_CASE("total bytes and elapsed time") {
  auto t = download({ev(0.0, S2C, 0, 1, 1448), ev(0.5, S2C, 1448, 1, 1448), ev(2.0, S2C, 2896, 1, 552)});
  CHECK(stat(t, Statistic::TotalBytes) == 3448);
  CHECK(stat(t, Statistic::ElapsedTime) == doctest::Approx(2.0));
  CHECK(stat(t, Statistic::TotalPackets) == 3);
}

TEST_CASE("rtt average on a hand-matched trace") {
  auto t = download({ev(0.00, S2C, 0, 1, 100), ev(0.10, C2S, 1, 100, 0), ev(0.10, S2C, 100, 1, 100),
                     ev(0.30, C2S, 1, 200, 0)});
  CHECK(stat(t, Statistic::RttAvg) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(stat(t, Statistic::RttMin) == doctest::Approx(0.10));
  CHECK(stat(t, Statistic::RttMax) == doctest::Approx(0.20));
  CHECK(stat(t, Statistic::RttSamples) == 2);
}

TEST_CASE("retransmitted range is excluded from rtt samples") {
  auto t = download({ev(0.00, S2C, 0, 1, 100), ev(0.20, S2C, 0, 1, 100), ev(0.25, C2S, 1, 100, 0)});
  CHECK(stat(t, Statistic::RetransmittedPackets) == 1);
  CHECK(stat(t, Statistic::RetransmittedBytes) == 100);
  CHECK(stat(t, Statistic::RttSamples) == 0);
}

TEST_CASE("single SYN degenerates to zeros") {
  PacketEvent syn = ev(0.0, C2S, 0, 0, 0);
  syn.syn = true;
  syn.ack_flag = false;
  auto t = download({syn});
  const auto s = summarize_trace(t);
  CHECK(s[static_cast<std::size_t>(Statistic::Throughput)].value == 0.0);
  CHECK(s[static_cast<std::size_t>(Statistic::RttAvg)].value == 0.0);
  CHECK_FALSE(s[static_cast<std::size_t>(Statistic::RttAvg)].defined);
  CHECK(s[static_cast<std::size_t>(Statistic::TotalPackets)].value == 1);
  CHECK(s[static_cast<std::size_t>(Statistic::SynCount)].value == 1);
}

TEST_CASE("wrapped sequence numbers are not retransmissions") {
  const std::uint32_t base = 0xFFFFFF00u;
  auto t = download({ev(0.0, S2C, base, 1, 200), ev(0.001, S2C, base + 200, 1, 200),
                     ev(0.02, C2S, 1, base + 400, 0)});
  CHECK(stat(t, Statistic::RetransmittedPackets) == 0);
  CHECK(stat(t, Statistic::OutOfOrderPackets) == 0);
  CHECK(stat(t, Statistic::RttSamples) == 1);
}

TEST_CASE("duplicate acks and triple-dup events") {
  auto t = download({ev(0.0, S2C, 0, 1, 100), ev(0.001, S2C, 200, 1, 100), ev(0.011, C2S, 1, 100, 0),
                     ev(0.012, C2S, 1, 100, 0), ev(0.013, C2S, 1, 100, 0), ev(0.014, C2S, 1, 100, 0)});
  CHECK(stat(t, Statistic::DupAckCount) == 3);
  CHECK(stat(t, Statistic::TripleDupAckEvents) == 1);
}

TEST_CASE("lossless simulator run has no retransmissions or dupacks") {
  const auto pair = simulate_flow(LinkParams{}, ClientParams{}, kDefaultTransferBytes, 9);
  const auto sig = extract_signature(pair, default_catalog());
  for (const char* dir : {"down_", "up_"}) {
    CHECK(sig.values[index_of(std::string(dir) + "retransmitted_packets")] == 0);
    CHECK(sig.values[index_of(std::string(dir) + "dup_ack_count")] == 0);
  }
}

TEST_CASE("extraction is deterministic and finite on simulator output") {
  LinkParams link = faulty_link(4);
  const auto pair = simulate_flow(link, faulty_client("read_buffer", 0), kDefaultTransferBytes, 4);
  const auto a = extract_signature(pair, default_catalog());
  const auto b = extract_signature(pair, default_catalog());
  CHECK(a == b);
  CHECK(a.values.size() == 74);
  CHECK(a.catalog_version == "v1");
  for (double v : a.values) CHECK(std::isfinite(v));
}

TEST_CASE("time shift invariance") {
  const auto pair = simulate_flow(healthy_link(), ClientParams{}, 500000, 2);
  TracePair shifted = pair;
  for (auto* t : {&shifted.download, &shifted.upload}) {
    for (auto& e : t->events) e.ts += 123.25;
  }
  const auto a = extract_signature(pair, default_catalog());
  const auto b = extract_signature(shifted, default_catalog());
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t j = 0; j < a.values.size(); ++j) {
    CHECK(b.values[j] == doctest::Approx(a.values[j]).epsilon(1e-9).scale(1e-9));
  }
}

TEST_CASE("doubling payloads scales byte features only") {
  SplitMix64 rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const TraceRecord t = random_stream(rng);
    TraceRecord d = t;
    for (auto& e : d.events) {
      e.payload_len *= 2;
      if (e.dir == S2C) e.seq *= 2;
      else e.ack *= 2;
    }
    const auto a = summarize_trace(t);
    const auto b = summarize_trace(d);
    auto v = [](const TraceSummary& s, Statistic k) { return s[static_cast<std::size_t>(k)].value; };
    CHECK(v(b, Statistic::TotalBytes) == doctest::Approx(2 * v(a, Statistic::TotalBytes)));
    CHECK(v(b, Statistic::Throughput) == doctest::Approx(2 * v(a, Statistic::Throughput)));
    CHECK(v(b, Statistic::MeanSegmentSize) == doctest::Approx(2 * v(a, Statistic::MeanSegmentSize)));
    CHECK(v(b, Statistic::TotalPackets) == v(a, Statistic::TotalPackets));
    for (auto k : {Statistic::RttAvg, Statistic::RttMin, Statistic::RttMax, Statistic::RttStdev,
                   Statistic::RttSamples}) {
      CHECK(v(b, k) == doctest::Approx(v(a, k)));
    }
  }
}

TEST_CASE("fuzz: random traces give finite features") {
  SplitMix64 rng(77);
  for (int rep = 0; rep < 300; ++rep) {
    TraceRecord t = download({});
    const std::size_t n = 1 + rng.index(50);
    double ts = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ts += rng.uniform() < 0.3 ? 0.0 : rng.uniform();
      PacketEvent e = ev(ts, rng.uniform() < 0.5 ? S2C : C2S, static_cast<std::uint32_t>(rng.next()),
                         static_cast<std::uint32_t>(rng.next()), static_cast<std::uint32_t>(rng.index(3000)));
      e.syn = rng.uniform() < 0.1;
      e.fin = rng.uniform() < 0.1;
      e.rst = rng.uniform() < 0.05;
      e.ack_flag = rng.uniform() < 0.8;
      e.win = static_cast<std::uint32_t>(rng.index(1u << 20));
      e.sack_cnt = static_cast<std::uint32_t>(rng.index(4));
      t.events.push_back(e);
    }
    const auto sig = extract_signature(pair_of(t), default_catalog());
    for (double v : sig.values) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("empty trace and wrong roles are rejected") {
  TracePair p = pair_of(download({ev(0, S2C, 0, 1, 10)}));
  p.upload.events.clear();
  CHECK_THROWS_AS(extract_signature(p, default_catalog()), Error);
  TracePair q = pair_of(download({ev(0, S2C, 0, 1, 10)}));
  q.upload.capture_point = CapturePoint::Client;
  CHECK_THROWS_AS(extract_signature(q, default_catalog()), Error);
}

}  // TEST_SUITE
