#include "netdiag/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>

#include "netdiag/error.hpp"

namespace netdiag {

namespace {

constexpr std::uint32_t kSmallSegment = 512;

/// Maps raw 32-bit sequence numbers onto a 64-bit line anchored at the first
/// value seen, taking the signed shortest distance from the previous value.
class SeqUnwrapper {
 public:
  std::int64_t unwrap(std::uint32_t raw) {
    if (!anchored_) {
      anchored_ = true;
      last_raw_ = raw;
      last_ = 0;
      return 0;
    }
    auto delta = static_cast<std::int32_t>(raw - last_raw_);
    last_ += delta;
    last_raw_ = raw;
    return last_;
  }
  /// Position of `raw` relative to the anchor without moving the reference.
  std::int64_t peek(std::uint32_t raw) const {
    auto delta = static_cast<std::int32_t>(raw - last_raw_);
    return last_ + delta;
  }
  bool anchored() const { return anchored_; }

 private:
  bool anchored_ = false;
  std::uint32_t last_raw_ = 0;
  std::int64_t last_ = 0;
};

/// Disjoint half-open byte ranges seen so far.
class RangeSet {
 public:
  bool overlaps(std::int64_t lo, std::int64_t hi) const {
    auto it = ranges_.upper_bound(lo);
    if (it != ranges_.begin()) {
      auto prev = std::prev(it);
      if (prev->second > lo) return true;
    }
    return it != ranges_.end() && it->first < hi;
  }
  void insert(std::int64_t lo, std::int64_t hi) {
    auto it = ranges_.upper_bound(lo);
    if (it != ranges_.begin()) {
      auto prev = std::prev(it);
      if (prev->second >= lo) {
        lo = prev->first;
        hi = std::max(hi, prev->second);
        it = ranges_.erase(prev);
      }
    }
    while (it != ranges_.end() && it->first <= hi) {
      hi = std::max(hi, it->second);
      it = ranges_.erase(it);
    }
    ranges_.emplace(lo, hi);
  }
  std::int64_t covered() const {
    std::int64_t total = 0;
    for (const auto& [lo, hi] : ranges_) total += hi - lo;
    return total;
  }

 private:
  std::map<std::int64_t, std::int64_t> ranges_;
};

struct Outstanding {
  double ts;
  std::int64_t lo;
  bool valid;
};

bool is_pure_ack(const PacketEvent& ev) {
  return ev.payload_len == 0 && ev.ack_flag && !ev.syn && !ev.fin && !ev.rst;
}

void set(TraceSummary& s, Statistic stat, double value, bool defined = true) {
  auto& slot = s[static_cast<std::size_t>(stat)];
  slot.value = defined && std::isfinite(value) ? value : 0.0;
  slot.defined = defined && std::isfinite(value);
}

}  // namespace

std::string_view statistic_name(Statistic stat) {
  switch (stat) {
    case Statistic::ElapsedTime: return "elapsed_time";
    case Statistic::TotalPacketsC2S: return "total_packets_c2s";
    case Statistic::TotalPacketsS2C: return "total_packets_s2c";
    case Statistic::TotalBytesC2S: return "total_bytes_c2s";
    case Statistic::TotalBytesS2C: return "total_bytes_s2c";
    case Statistic::DataPacketsC2S: return "data_packets_c2s";
    case Statistic::DataPacketsS2C: return "data_packets_s2c";
    case Statistic::PureAckPacketsC2S: return "pure_ack_packets_c2s";
    case Statistic::PureAckPacketsS2C: return "pure_ack_packets_s2c";
    case Statistic::Throughput: return "throughput";
    case Statistic::RetransmittedPackets: return "retransmitted_packets";
    case Statistic::RetransmittedBytes: return "retransmitted_bytes";
    case Statistic::OutOfOrderPackets: return "out_of_order_packets";
    case Statistic::DupAckCount: return "dup_ack_count";
    case Statistic::TripleDupAckEvents: return "triple_dup_ack_events";
    case Statistic::SackBlocksTotal: return "sack_blocks_total";
    case Statistic::MaxSackCnt: return "max_sack_cnt";
    case Statistic::WinMin: return "win_min";
    case Statistic::WinMax: return "win_max";
    case Statistic::WinAvg: return "win_avg";
    case Statistic::ZeroWindowCount: return "zero_window_count";
    case Statistic::RttAvg: return "rtt_avg";
    case Statistic::RttMin: return "rtt_min";
    case Statistic::RttMax: return "rtt_max";
    case Statistic::RttStdev: return "rtt_stdev";
    case Statistic::RttSamples: return "rtt_samples";
    case Statistic::IdleTimeMax: return "idle_time_max";
    case Statistic::MeanSegmentSize: return "mean_segment_size";
    case Statistic::MaxSegmentSize: return "max_segment_size";
    case Statistic::MinSegmentSize: return "min_segment_size";
    case Statistic::PushLikeSmallSegmentCount: return "push_like_small_segment_count";
    case Statistic::SynCount: return "syn_count";
    case Statistic::FinCount: return "fin_count";
    case Statistic::RstCount: return "rst_count";
    case Statistic::InitialWindowBytes: return "initial_window_bytes";
    case Statistic::AckCompressionRatio: return "ack_compression_ratio";
    case Statistic::BytesPerAck: return "bytes_per_ack";
    case Statistic::TotalPackets: return "total_packets";
    case Statistic::TotalBytes: return "total_bytes";
  }
  return "unknown";
}

TraceSummary summarize_trace(const TraceRecord& trace) {
  if (trace.events.empty()) throw Error(ErrorKind::EmptyTrace, "cannot summarize an empty trace");
  const auto& events = trace.events;
  const Direction data_dir = trace.data_direction();

  TraceSummary s{};

  double t_min = events.front().ts, t_max = events.front().ts;
  double idle_max = 0.0;
  double pkts[2] = {0, 0}, bytes[2] = {0, 0}, data_pkts[2] = {0, 0}, pure_acks[2] = {0, 0};
  double syn = 0, fin = 0, rst = 0;
  double total_bytes = 0;

  SeqUnwrapper seq_line;
  RangeSet seen;
  std::int64_t max_end = std::numeric_limits<std::int64_t>::min();
  std::int64_t first_data_lo = 0;
  bool have_data = false;
  double retx_pkts = 0, retx_bytes = 0, ooo_pkts = 0;
  double seg_sum = 0, seg_max = 0, seg_min = 0, small_segs = 0;

  // RTT bookkeeping: first transmissions keyed by range end.
  std::map<std::int64_t, Outstanding> outstanding;
  std::vector<double> rtts;

  bool have_last_ack = false;
  std::int64_t last_ack = 0;
  int dup_run = 0;
  double dup_acks = 0, triple_events = 0;
  double sack_total = 0, sack_max = 0;
  double win_min = 0, win_max = 0, win_sum = 0, zero_win = 0, ack_dir_pkts = 0;

  bool data_acked = false;
  double initial_window = 0;

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    t_min = std::min(t_min, ev.ts);
    t_max = std::max(t_max, ev.ts);
    if (i > 0) idle_max = std::max(idle_max, ev.ts - events[i - 1].ts);

    const int d = ev.dir == Direction::ClientToServer ? 0 : 1;
    pkts[d] += 1;
    bytes[d] += ev.payload_len;
    total_bytes += ev.payload_len;
    if (ev.payload_len > 0) data_pkts[d] += 1;
    if (is_pure_ack(ev)) pure_acks[d] += 1;
    syn += ev.syn;
    fin += ev.fin;
    rst += ev.rst;

    if (ev.dir == data_dir) {
      std::int64_t lo = seq_line.unwrap(ev.seq);
      if (ev.payload_len == 0) continue;
      std::int64_t hi = lo + ev.payload_len;
      if (!have_data) first_data_lo = lo;
      if (!data_acked) initial_window += ev.payload_len;

      const double len = ev.payload_len;
      seg_sum += len;
      seg_max = have_data ? std::max(seg_max, len) : len;
      seg_min = have_data ? std::min(seg_min, len) : len;
      if (ev.payload_len < kSmallSegment) small_segs += 1;

      if (have_data && seen.overlaps(lo, hi)) {
        retx_pkts += 1;
        retx_bytes += len;
        // Karn: any in-flight sample touching a resent range is ambiguous.
        for (auto it = outstanding.upper_bound(lo); it != outstanding.end(); ++it) {
          if (it->second.lo < hi) it->second.valid = false;
        }
      } else {
        if (have_data && lo < max_end) ooo_pkts += 1;
        outstanding[hi] = Outstanding{ev.ts, lo, true};
      }
      seen.insert(lo, hi);
      max_end = have_data ? std::max(max_end, hi) : hi;
      have_data = true;
    } else {
      ack_dir_pkts += 1;
      win_min = ack_dir_pkts == 1 ? ev.win : std::min<double>(win_min, ev.win);
      win_max = std::max<double>(win_max, ev.win);
      win_sum += ev.win;
      if (ev.win == 0) zero_win += 1;
      sack_total += ev.sack_cnt;
      sack_max = std::max<double>(sack_max, ev.sack_cnt);

      if (!ev.ack_flag || !seq_line.anchored()) continue;
      const std::int64_t ack = seq_line.peek(ev.ack);
      if (have_data && ack > first_data_lo) data_acked = true;

      if (is_pure_ack(ev) && have_last_ack && ack == last_ack && have_data && max_end > ack) {
        dup_acks += 1;
        if (++dup_run == 3) triple_events += 1;
      } else if (!have_last_ack || ack != last_ack) {
        dup_run = 0;
      }
      have_last_ack = true;
      last_ack = ack;

      // One RTT sample per ack: the most recent fully covered first transmission.
      auto end = outstanding.upper_bound(ack);
      if (end != outstanding.begin()) {
        auto newest = std::prev(end);
        if (newest->second.valid && ev.ts >= newest->second.ts) {
          rtts.push_back(ev.ts - newest->second.ts);
        }
        outstanding.erase(outstanding.begin(), end);
      }
    }
  }

  const double elapsed = t_max - t_min;
  const double unique = seen.covered();
  const double data_count = data_pkts[data_dir == Direction::ClientToServer ? 0 : 1];
  const double ack_pure = pure_acks[data_dir == Direction::ClientToServer ? 1 : 0];

  set(s, Statistic::ElapsedTime, elapsed);
  set(s, Statistic::TotalPacketsC2S, pkts[0]);
  set(s, Statistic::TotalPacketsS2C, pkts[1]);
  set(s, Statistic::TotalBytesC2S, bytes[0]);
  set(s, Statistic::TotalBytesS2C, bytes[1]);
  set(s, Statistic::DataPacketsC2S, data_pkts[0]);
  set(s, Statistic::DataPacketsS2C, data_pkts[1]);
  set(s, Statistic::PureAckPacketsC2S, pure_acks[0]);
  set(s, Statistic::PureAckPacketsS2C, pure_acks[1]);
  set(s, Statistic::Throughput, elapsed > 0 ? unique / elapsed : 0.0, elapsed > 0);
  set(s, Statistic::RetransmittedPackets, retx_pkts);
  set(s, Statistic::RetransmittedBytes, retx_bytes);
  set(s, Statistic::OutOfOrderPackets, ooo_pkts);
  set(s, Statistic::DupAckCount, dup_acks);
  set(s, Statistic::TripleDupAckEvents, triple_events);
  set(s, Statistic::SackBlocksTotal, sack_total);
  set(s, Statistic::MaxSackCnt, sack_max);

  const bool have_acks = ack_dir_pkts > 0;
  set(s, Statistic::WinMin, win_min, have_acks);
  set(s, Statistic::WinMax, win_max, have_acks);
  set(s, Statistic::WinAvg, have_acks ? win_sum / ack_dir_pkts : 0.0, have_acks);
  set(s, Statistic::ZeroWindowCount, zero_win);

  const std::size_t n_rtt = rtts.size();
  double rtt_sum = 0, rtt_min = 0, rtt_max = 0;
  for (std::size_t i = 0; i < n_rtt; ++i) {
    rtt_sum += rtts[i];
    rtt_min = i == 0 ? rtts[i] : std::min(rtt_min, rtts[i]);
    rtt_max = i == 0 ? rtts[i] : std::max(rtt_max, rtts[i]);
  }
  const double rtt_mean = n_rtt > 0 ? rtt_sum / n_rtt : 0.0;
  double rtt_var = 0;
  for (double r : rtts) rtt_var += (r - rtt_mean) * (r - rtt_mean);
  set(s, Statistic::RttAvg, rtt_mean, n_rtt > 0);
  set(s, Statistic::RttMin, rtt_min, n_rtt > 0);
  set(s, Statistic::RttMax, rtt_max, n_rtt > 0);
  set(s, Statistic::RttStdev, n_rtt > 1 ? std::sqrt(rtt_var / (n_rtt - 1)) : 0.0, n_rtt > 1);
  set(s, Statistic::RttSamples, static_cast<double>(n_rtt));

  set(s, Statistic::IdleTimeMax, idle_max, events.size() > 1);
  set(s, Statistic::MeanSegmentSize, have_data ? seg_sum / data_count : 0.0, have_data);
  set(s, Statistic::MaxSegmentSize, seg_max, have_data);
  set(s, Statistic::MinSegmentSize, seg_min, have_data);
  set(s, Statistic::PushLikeSmallSegmentCount, small_segs);
  set(s, Statistic::SynCount, syn);
  set(s, Statistic::FinCount, fin);
  set(s, Statistic::RstCount, rst);
  set(s, Statistic::InitialWindowBytes, initial_window, have_data);
  set(s, Statistic::AckCompressionRatio, have_data ? ack_pure / data_count : 0.0, have_data);
  set(s, Statistic::BytesPerAck, ack_pure > 0 ? unique / ack_pure : 0.0, ack_pure > 0);
  set(s, Statistic::TotalPackets, static_cast<double>(events.size()));
  set(s, Statistic::TotalBytes, total_bytes);
  return s;
}

double compute_statistic(const TraceRecord& trace, Statistic stat) {
  return summarize_trace(trace)[static_cast<std::size_t>(stat)].value;
}

std::vector<std::string> FeatureCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

const FeatureCatalog& default_catalog() {
  static const FeatureCatalog catalog = [] {
    FeatureCatalog c;
    c.version = "v1";
    for (Transfer t : {Transfer::Download, Transfer::Upload}) {
      const std::string prefix = t == Transfer::Download ? "down_" : "up_";
      for (std::size_t i = 0; i <= static_cast<std::size_t>(Statistic::BytesPerAck); ++i) {
        auto stat = static_cast<Statistic>(i);
        c.features.push_back({prefix + std::string(statistic_name(stat)), t, stat});
      }
    }
    return c;
  }();
  return catalog;
}

void validate_catalog(const FeatureCatalog& catalog) {
  if (catalog.version.empty()) throw Error(ErrorKind::ConfigError, "catalog version is empty");
  if (catalog.features.empty()) throw Error(ErrorKind::ConfigError, "catalog has no features");
  std::set<std::string> names;
  for (const auto& f : catalog.features) {
    if (!names.insert(f.name).second) {
      throw Error(ErrorKind::ConfigError, "duplicate feature name " + f.name);
    }
  }
}

Extraction extract_with_diagnostics(const TracePair& pair, const FeatureCatalog& catalog) {
  validate_pair_roles(pair);
  if (pair.download.events.empty() || pair.upload.events.empty()) {
    throw Error(ErrorKind::EmptyTrace, "both traces of a pair must be non-empty");
  }
  const TraceSummary down = summarize_trace(pair.download);
  const TraceSummary up = summarize_trace(pair.upload);

  Extraction out;
  out.signature.catalog_version = catalog.version;
  out.signature.values.reserve(catalog.size());
  out.diagnostics.defined.reserve(catalog.size());
  for (const auto& f : catalog.features) {
    const auto& summary = f.trace == Transfer::Download ? down : up;
    const auto& v = summary[static_cast<std::size_t>(f.statistic)];
    out.signature.values.push_back(v.value);
    out.diagnostics.defined.push_back(v.defined);
  }
  return out;
}

Signature extract_signature(const TracePair& pair, const FeatureCatalog& catalog) {
  return extract_with_diagnostics(pair, catalog).signature;
}

}  // namespace netdiag
