#include "netdiag/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>

#include "netdiag/error.hpp"
#include "netdiag/rng.hpp"

namespace netdiag {

using nlohmann::json;

namespace {

constexpr double kDelayedAck = 0.040;
constexpr double kMinRto = 0.200;
constexpr double kInitialRto = 1.0;
constexpr double kMaxRto = 60.0;
constexpr double kInitialCwnd = 3.0;
constexpr int kDupThresh = 3;
constexpr std::size_t kMaxSackBlocks = 3;
constexpr std::uint32_t kHeaderBytes = 52;
constexpr double kReorderMin = 0.0005;
constexpr double kReorderMax = 0.003;
constexpr double kHostJitter = 50e-6;
constexpr std::uint64_t kEventBudget = 50'000'000;

double keyed_unit(std::uint64_t stream, std::uint64_t key) {
  return static_cast<double>(SplitMix64::mix64(stream ^ SplitMix64::mix64(key)) >> 11) * 0x1.0p-53;
}

std::uint32_t clamp32(std::uint64_t v) {
  return static_cast<std::uint32_t>(std::min<std::uint64_t>(v, 0xFFFFFFFFu));
}

double beta_of(GrowthProfile p) {
  switch (p) {
    case GrowthProfile::Cubiclike: return 0.7;
    case GrowthProfile::Biclike: return 0.8;
    case GrowthProfile::Renolike: return 0.5;
  }
  return 0.5;
}

/// FIFO bottleneck: serialization at `bandwidth`, then propagation delay.
class Pipe {
 public:
  Pipe(double bandwidth, double delay, std::size_t limit)
      : bandwidth_(bandwidth), delay_(delay), limit_(limit) {}

  std::optional<double> enqueue(double t, std::uint32_t bytes) {
    while (!finish_.empty() && finish_.front() <= t) finish_.pop_front();
    if (limit_ > 0 && finish_.size() >= limit_) return std::nullopt;
    busy_ = std::max(t, busy_) + bytes * 8.0 / bandwidth_;
    finish_.push_back(busy_);
    return busy_ + delay_;
  }

 private:
  double bandwidth_;
  double delay_;
  std::size_t limit_;
  double busy_ = 0.0;
  std::deque<double> finish_;
};

/// Tapped: a data segment the capture sees but the link then drops.
enum class EvType { Data, Tapped, Ack, Rto, DelAck, Fin, FinAck, LastAck };

struct Block {
  std::int64_t lo;
  std::int64_t hi;
};

struct Event {
  double t = 0.0;
  std::uint64_t order = 0;
  EvType type = EvType::Data;
  std::int64_t seg = 0;
  std::uint64_t gen = 0;
  std::int64_t cum = 0;
  std::vector<Block> blocks;
  bool dsack = false;
};

Event make_event(double t, EvType type) {
  Event ev;
  ev.t = t;
  ev.type = type;
  return ev;
}

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.t != b.t ? a.t > b.t : a.order > b.order;
  }
};

struct TransferSetup {
  Transfer kind = Transfer::Download;
  std::uint64_t bytes = 0;
  std::uint64_t sndbuf = 0;
  std::uint64_t rcvbuf = 0;
  std::uint64_t sender_rcvbuf = 0;
  bool sack = true;
  bool dsack = true;
  GrowthProfile profile = GrowthProfile::Cubiclike;
  std::uint32_t isn_sender = 0;
  std::uint32_t isn_receiver = 0;
  std::uint64_t stream = 0;
};

class TransferSim {
 public:
  TransferSim(const LinkParams& link, const TransferSetup& setup)
      : link_(link),
        s_(setup),
        fwd_(link.bandwidth, link.one_way_delay, link.queue_limit),
        rev_(link.bandwidth, link.one_way_delay, 0),
        n_(static_cast<std::int64_t>((setup.bytes + kMss - 1) / kMss)),
        sacked_(n_, 0),
        retx_rec_(n_, 0),
        ever_retx_(n_, 0),
        attempts_(n_, 0),
        sent_time_(n_, 0.0),
        have_(n_, 0),
        lost_(n_, 0) {
    data_dir_ = setup.kind == Transfer::Download ? Direction::ServerToClient : Direction::ClientToServer;
    ack_dir_ = opposite(data_dir_);
    beta_ = beta_of(setup.profile);
    loss_stream_ = SplitMix64::mix64(setup.stream ^ 1);
    reorder_stream_ = SplitMix64::mix64(setup.stream ^ 2);
    reorder_amount_stream_ = SplitMix64::mix64(setup.stream ^ 3);
    ack_stream_ = SplitMix64::mix64(setup.stream ^ 4);
    jitter_stream_ = SplitMix64::mix64(setup.stream ^ 5);
    trace_.capture_point = setup.kind == Transfer::Download ? CapturePoint::Client : CapturePoint::Server;
    trace_.direction_of_transfer = setup.kind;
    trace_.declared_transfer_bytes = setup.bytes;
  }

  void run() {
    handshake();
    std::uint64_t budget = kEventBudget;
    while (!events_.empty()) {
      if (--budget == 0) throw std::logic_error("simulation exceeded its event budget");
      Event ev = events_.top();
      events_.pop();
      switch (ev.type) {
        case EvType::Data: on_data(ev.t, ev.seg); break;
        case EvType::Tapped:
          record(ev.t, data_dir_, seq_of(ev.seg), s_.isn_receiver + 1, seg_len(ev.seg), false, false,
                 s_.sender_rcvbuf, 0);
          break;
        case EvType::Ack: on_ack(ev.t, ev.cum, ev.blocks, ev.dsack); break;
        case EvType::Rto: on_rto(ev.t, ev.gen); break;
        case EvType::DelAck:
          if (ev.gen == delack_gen_ && pending_ > 0) send_ack(ev.t, std::nullopt);
          break;
        case EvType::Fin: on_fin(ev.t); break;
        case EvType::FinAck: on_fin_ack(ev.t); break;
        case EvType::LastAck:
          record(ev.t, data_dir_, s_.isn_sender + 1 + clamp32(s_.bytes) + 1, s_.isn_receiver + 2, 0,
                 false, false, s_.sender_rcvbuf, 0);
          break;
      }
    }
    stats_.delivered_bytes = byte_offset(rcv_nxt_);
    stats_.highest_acked_bytes = byte_offset(una_);
    const double t0 = trace_.events.empty() ? 0.0 : trace_.events.front().ts;
    for (auto& e : trace_.events) e.ts -= t0;
    stats_.completion_time = trace_.events.empty() ? 0.0 : trace_.events.back().ts;
  }

  TraceRecord& trace() { return trace_; }
  const FlowStats& stats() const { return stats_; }

 private:
  std::uint64_t byte_offset(std::int64_t seg) const {
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(seg) * kMss, s_.bytes);
  }
  std::uint32_t seg_len(std::int64_t seg) const {
    return static_cast<std::uint32_t>(byte_offset(seg + 1) - byte_offset(seg));
  }
  std::uint32_t seq_of(std::int64_t seg) const {
    return s_.isn_sender + 1 + static_cast<std::uint32_t>(byte_offset(seg));
  }

  void push(Event ev) {
    ev.order = order_++;
    events_.push(std::move(ev));
  }

  void record(double t, Direction dir, std::uint32_t seq, std::uint32_t ack, std::uint32_t len,
              bool syn, bool fin, std::uint64_t win, std::uint32_t sack_cnt, bool ack_flag = true) {
    PacketEvent e;
    e.ts = t;
    e.dir = dir;
    e.seq = seq;
    e.ack = ack;
    e.payload_len = len;
    e.syn = syn;
    e.fin = fin;
    e.ack_flag = ack_flag;
    e.win = clamp32(win);
    e.sack_cnt = sack_cnt;
    trace_.events.push_back(e);
  }

  void handshake() {
    const std::uint32_t isn_c = s_.kind == Transfer::Download ? s_.isn_receiver : s_.isn_sender;
    const std::uint32_t isn_s = s_.kind == Transfer::Download ? s_.isn_sender : s_.isn_receiver;
    const std::uint64_t win_c = s_.kind == Transfer::Download ? s_.rcvbuf : s_.sender_rcvbuf;
    const std::uint64_t win_s = s_.kind == Transfer::Download ? s_.sender_rcvbuf : s_.rcvbuf;
    // Client -> server travels on the reverse pipe for a download and on the
    // forward pipe for an upload.
    Pipe& c2s = s_.kind == Transfer::Download ? rev_ : fwd_;
    Pipe& s2c = s_.kind == Transfer::Download ? fwd_ : rev_;
    const double syn_at_server = *c2s.enqueue(0.0, kHeaderBytes);
    const double synack_at_client = *s2c.enqueue(syn_at_server, kHeaderBytes);
    const double ack_at_server = *c2s.enqueue(synack_at_client, kHeaderBytes);
    const bool at_client = s_.kind == Transfer::Download;
    const double t_syn = at_client ? 0.0 : syn_at_server;
    const double t_synack = at_client ? synack_at_client : syn_at_server;
    const double t_ack = at_client ? synack_at_client : ack_at_server;
    record(t_syn, Direction::ClientToServer, isn_c, 0, 0, true, false, win_c, 0, false);
    record(t_synack, Direction::ServerToClient, isn_s, isn_c + 1, 0, true, false, win_s, 0);
    record(t_ack, Direction::ClientToServer, isn_c + 1, isn_s + 1, 0, false, false, win_c, 0);
    const double start = s_.kind == Transfer::Download ? ack_at_server : synack_at_client;
    try_send(start);
  }

  // ---- sender -------------------------------------------------------------

  bool window_allows(std::int64_t seg) const {
    const std::uint64_t limit = std::min(s_.rcvbuf, s_.sndbuf);
    return byte_offset(seg + 1) - byte_offset(una_) <= std::max<std::uint64_t>(limit, kMss);
  }

  void arm_rto(double t) {
    ++rto_gen_;
    rto_armed_ = true;
    Event ev = make_event(t + rto_, EvType::Rto);
    ev.gen = rto_gen_;
    push(std::move(ev));
  }

  void cancel_rto() {
    ++rto_gen_;
    rto_armed_ = false;
  }

  void transmit(double t, std::int64_t seg) {
    const auto attempt = ++attempts_[seg];
    if (attempt > 1) {
      ++stats_.retransmissions;
      ever_retx_[seg] = 1;
      if (undo_active_) ++undo_retrans_;
    }
    ++stats_.segments_sent;
    sent_time_[seg] = t;
    high_ = std::max(high_, seg + 1);
    if (!rto_armed_) arm_rto(t);

    const std::uint64_t key = static_cast<std::uint64_t>(seg) * 4096 + attempt;
    const double wire = t + kHostJitter * keyed_unit(jitter_stream_, key);
    auto arrival = fwd_.enqueue(wire, seg_len(seg) + kHeaderBytes);
    if (!arrival) {
      ++stats_.queue_drops;
      return;
    }
    // Random loss sits between the capture tap and the receiving stack.
    if (keyed_unit(loss_stream_, key) < link_.loss_rate) {
      ++stats_.random_drops;
      Event ev = make_event(*arrival, EvType::Tapped);
      ev.seg = seg;
      push(std::move(ev));
      return;
    }
    double at = *arrival;
    if (keyed_unit(reorder_stream_, key) < link_.reorder_rate) {
      at += kReorderMin + (kReorderMax - kReorderMin) * keyed_unit(reorder_amount_stream_, key);
    }
    Event ev = make_event(at, EvType::Data);
    ev.seg = seg;
    push(std::move(ev));
  }

  /// Marks segments presumed lost (at least kDupThresh SACKed segments above)
  /// and returns the RFC 6675 style pipe estimate.
  double scoreboard() {
    double pipe = 0;
    int above = 0;
    for (std::int64_t s = high_ - 1; s >= una_; --s) {
      lost_[s] = !sacked_[s] && above >= kDupThresh;
      if (sacked_[s]) {
        ++above;
        continue;
      }
      if (!lost_[s]) pipe += 1;
      if (retx_rec_[s]) pipe += 1;
    }
    return pipe;
  }

  void try_send(double t) {
    if (done_) return;
    if (s_.sack && in_recovery_) {
      double pipe = scoreboard();
      std::int64_t scan = una_;
      while (pipe < cwnd_) {
        while (scan < high_ && (sacked_[scan] || !lost_[scan] || retx_rec_[scan])) ++scan;
        if (scan < high_) {
          retx_rec_[scan] = 1;
          transmit(t, scan);
          pipe += 1;
          continue;
        }
        if (nxt_ < n_ && window_allows(nxt_)) {
          transmit(t, nxt_++);
          pipe += 1;
          continue;
        }
        break;
      }
      return;
    }
    while (nxt_ < n_ && static_cast<double>(nxt_ - una_) < std::floor(cwnd_) && window_allows(nxt_)) {
      transmit(t, nxt_++);
    }
  }

  void reduce(double t) {
    (void)t;
    prior_cwnd_ = cwnd_;
    prior_ssthresh_ = ssthresh_;
    undo_active_ = true;
    undone_ = false;
    undo_retrans_ = 0;
    w_max_ = cwnd_;
    epoch_start_ = -1.0;
    ssthresh_ = std::max(cwnd_ * beta_, 2.0);
  }

  void enter_recovery(double t) {
    ++stats_.fast_retransmits;
    reduce(t);
    cwnd_ = s_.sack ? ssthresh_ : ssthresh_ + kDupThresh;
    recover_ = high_;
    in_recovery_ = true;
    std::fill(retx_rec_.begin(), retx_rec_.end(), 0);
    retx_rec_[una_] = 1;
    transmit(t, una_);
  }

  void grow(double t, std::int64_t acked) {
    const double a = static_cast<double>(acked);
    if (cwnd_ < ssthresh_) {
      cwnd_ += std::min(a, 2.0);
      return;
    }
    switch (s_.profile) {
      case GrowthProfile::Renolike:
        cwnd_ += a / cwnd_;
        break;
      case GrowthProfile::Cubiclike: {
        if (epoch_start_ < 0) {
          epoch_start_ = t;
          if (cwnd_ < w_max_) {
            cubic_k_ = std::cbrt((w_max_ - cwnd_) / 0.4);
            cubic_origin_ = w_max_;
          } else {
            cubic_k_ = 0.0;
            cubic_origin_ = cwnd_;
          }
        }
        const double rtt = srtt_ > 0 ? srtt_ : 2 * link_.one_way_delay;
        const double dt = t - epoch_start_ + rtt - cubic_k_;
        const double target = cubic_origin_ + 0.4 * dt * dt * dt;
        const double inc = target > cwnd_ ? std::min((target - cwnd_) / cwnd_, 0.5) : 0.01 / cwnd_;
        cwnd_ += a * inc;
        break;
      }
      case GrowthProfile::Biclike: {
        const double gap = w_max_ > cwnd_ ? (w_max_ - cwnd_) / 2.0 : cwnd_ - w_max_;
        cwnd_ += a * std::clamp(gap, 1.0, 16.0) / cwnd_;
        break;
      }
    }
  }

  void rtt_sample(double sample) {
    if (srtt_ < 0) {
      srtt_ = sample;
      rttvar_ = sample / 2;
    } else {
      rttvar_ = 0.75 * rttvar_ + 0.25 * std::abs(srtt_ - sample);
      srtt_ = 0.875 * srtt_ + 0.125 * sample;
    }
    rto_ = std::clamp(srtt_ + 4 * rttvar_, kMinRto, kMaxRto);
  }

  void on_ack(double t, std::int64_t cum, const std::vector<Block>& blocks, bool dsack) {
    if (done_) return;
    if (dsack && undo_active_ && undo_retrans_ > 0 && --undo_retrans_ == 0) {
      cwnd_ = std::max(cwnd_, prior_cwnd_);
      ssthresh_ = std::max(ssthresh_, prior_ssthresh_);
      undo_active_ = false;
      undone_ = true;
    }
    for (const auto& b : blocks) {
      for (std::int64_t s = std::max(b.lo, una_); s < std::min(b.hi, n_); ++s) sacked_[s] = 1;
    }
    if (cum > una_) {
      const std::int64_t acked = cum - una_;
      if (!ever_retx_[cum - 1]) rtt_sample(t - sent_time_[cum - 1]);
      una_ = cum;
      nxt_ = std::max(nxt_, una_);
      dupacks_ = 0;
      if (in_recovery_) {
        if (una_ >= recover_) {
          in_recovery_ = false;
          if (!undone_) cwnd_ = ssthresh_;
        } else if (!s_.sack) {
          transmit(t, una_);
          cwnd_ = std::max(cwnd_ - static_cast<double>(acked) + 1.0, 1.0);
        }
      } else {
        grow(t, acked);
      }
      if (una_ >= n_) {
        finish(t);
        return;
      }
      arm_rto(t);
    } else if (cum == una_ && una_ < high_) {
      ++dupacks_;
      if (!in_recovery_ && dupacks_ == kDupThresh) {
        enter_recovery(t);
      } else if (in_recovery_ && !s_.sack) {
        cwnd_ += 1.0;
      }
    }
    try_send(t);
  }

  void on_rto(double t, std::uint64_t gen) {
    if (gen != rto_gen_ || done_) return;
    rto_armed_ = false;
    ++stats_.timeouts;
    reduce(t);
    cwnd_ = 1.0;
    nxt_ = una_;
    in_recovery_ = false;
    dupacks_ = 0;
    std::fill(sacked_.begin(), sacked_.end(), 0);
    rto_ = std::min(rto_ * 2, kMaxRto);
    arm_rto(t);
    try_send(t);
  }

  void finish(double t) {
    done_ = true;
    cancel_rto();
    const auto at = fwd_.enqueue(t, kHeaderBytes);
    push(make_event(*at, EvType::Fin));
  }

  void on_fin(double t) {
    const std::uint32_t fin_seq = s_.isn_sender + 1 + clamp32(s_.bytes);
    record(t, data_dir_, fin_seq, s_.isn_receiver + 1, 0, false, true, s_.sender_rcvbuf, 0);
    record(t, ack_dir_, s_.isn_receiver + 1, fin_seq + 1, 0, false, true, s_.rcvbuf, 0);
    const auto at_sender = rev_.enqueue(t, kHeaderBytes);
    push(make_event(*at_sender, EvType::FinAck));
  }

  void on_fin_ack(double t) {
    const auto at = fwd_.enqueue(t, kHeaderBytes);
    push(make_event(*at, EvType::LastAck));
  }

  // ---- receiver -----------------------------------------------------------

  void on_data(double t, std::int64_t seg) {
    record(t, data_dir_, seq_of(seg), s_.isn_receiver + 1, seg_len(seg), false, false,
           s_.sender_rcvbuf, 0);
    if (seg < rcv_nxt_ || have_[seg]) {
      ++stats_.duplicate_segments;
      send_ack(t, seg);
      return;
    }
    if (seg == rcv_nxt_) {
      const bool had_ooo = ooo_count_ > 0;
      ++rcv_nxt_;
      while (rcv_nxt_ < n_ && have_[rcv_nxt_]) {
        have_[rcv_nxt_] = 0;
        --ooo_count_;
        ++rcv_nxt_;
      }
      if (had_ooo || ++pending_ >= 2) {
        send_ack(t, std::nullopt);
      } else {
        ++delack_gen_;
        Event ev = make_event(t + kDelayedAck, EvType::DelAck);
        ev.gen = delack_gen_;
        push(std::move(ev));
      }
      return;
    }
    have_[seg] = 1;
    ++ooo_count_;
    last_ooo_ = seg;
    send_ack(t, std::nullopt);
  }

  std::vector<Block> sack_blocks() const {
    std::vector<Block> blocks;
    if (ooo_count_ == 0) return blocks;
    for (std::int64_t s = rcv_nxt_; s < n_;) {
      if (!have_[s]) {
        ++s;
        continue;
      }
      std::int64_t e = s;
      while (e < n_ && have_[e]) ++e;
      blocks.push_back({s, e});
      s = e;
    }
    // Most recently changed block first, then the rest from the highest down.
    std::sort(blocks.begin(), blocks.end(), [&](const Block& a, const Block& b) {
      const bool ra = a.lo <= last_ooo_ && last_ooo_ < a.hi;
      const bool rb = b.lo <= last_ooo_ && last_ooo_ < b.hi;
      if (ra != rb) return ra;
      return a.lo > b.lo;
    });
    return blocks;
  }

  void send_ack(double t, std::optional<std::int64_t> duplicate) {
    pending_ = 0;
    ++delack_gen_;
    std::vector<Block> blocks;
    bool dsack = false;
    if (s_.sack) {
      blocks = sack_blocks();
      dsack = duplicate.has_value() && s_.dsack;
      const std::size_t room = dsack ? kMaxSackBlocks - 1 : kMaxSackBlocks;
      if (blocks.size() > room) blocks.resize(room);
      if (dsack) ++stats_.dsack_blocks;
    }
    const auto sack_cnt = static_cast<std::uint32_t>(blocks.size() + (dsack ? 1 : 0));
    record(t, ack_dir_, s_.isn_receiver + 1, s_.isn_sender + 1 + static_cast<std::uint32_t>(byte_offset(rcv_nxt_)),
           0, false, false, s_.rcvbuf, sack_cnt);
    const std::uint64_t serial = ack_serial_++;
    if (keyed_unit(ack_stream_, serial) < link_.loss_rate) {
      ++stats_.ack_drops;
      return;
    }
    const double wire = t + kHostJitter * keyed_unit(jitter_stream_, ~serial);
    const auto at = rev_.enqueue(wire, kHeaderBytes);
    Event ev = make_event(*at, EvType::Ack);
    ev.cum = rcv_nxt_;
    ev.blocks = std::move(blocks);
    ev.dsack = dsack;
    push(std::move(ev));
  }

  const LinkParams& link_;
  TransferSetup s_;
  Pipe fwd_;
  Pipe rev_;
  std::int64_t n_;
  Direction data_dir_;
  Direction ack_dir_;
  double beta_ = 0.5;
  std::uint64_t loss_stream_ = 0, reorder_stream_ = 0, reorder_amount_stream_ = 0, ack_stream_ = 0,
                jitter_stream_ = 0;

  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t order_ = 0;
  TraceRecord trace_;
  FlowStats stats_;

  // sender
  std::int64_t una_ = 0, nxt_ = 0, high_ = 0, recover_ = 0;
  double cwnd_ = kInitialCwnd;
  double ssthresh_ = std::numeric_limits<double>::infinity();
  int dupacks_ = 0;
  bool in_recovery_ = false;
  bool done_ = false;
  std::vector<char> sacked_, retx_rec_, ever_retx_;
  std::vector<std::uint16_t> attempts_;
  std::vector<double> sent_time_;
  double srtt_ = -1.0, rttvar_ = 0.0, rto_ = kInitialRto;
  std::uint64_t rto_gen_ = 0;
  bool rto_armed_ = false;
  double w_max_ = 0.0, epoch_start_ = -1.0, cubic_k_ = 0.0, cubic_origin_ = 0.0;
  bool undo_active_ = false;
  bool undone_ = false;
  int undo_retrans_ = 0;
  double prior_cwnd_ = 0.0, prior_ssthresh_ = 0.0;

  // receiver
  std::vector<char> have_;
  std::vector<char> lost_;
  std::int64_t rcv_nxt_ = 0;
  std::int64_t ooo_count_ = 0;
  std::int64_t last_ooo_ = -1;
  int pending_ = 0;
  std::uint64_t delack_gen_ = 0;
  std::uint64_t ack_serial_ = 0;
};

const char* const kFaultNames[] = {"sack_disabled", "dsack_disabled", "read_buffer", "write_buffer"};

template <typename T>
void take(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorKind::ConfigError, where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; })) {
      throw Error(ErrorKind::ConfigError, "unknown key '" + k + "' in " + where);
    }
  }
}

}  // namespace

void LinkParams::validate() const {
  if (!(bandwidth > 0) || !std::isfinite(bandwidth)) {
    throw Error(ErrorKind::ConfigError, "link bandwidth must be positive");
  }
  if (!(one_way_delay >= 0) || !std::isfinite(one_way_delay)) {
    throw Error(ErrorKind::ConfigError, "link delay must be non-negative");
  }
  if (!(loss_rate >= 0 && loss_rate < 1)) throw Error(ErrorKind::ConfigError, "loss_rate outside [0, 1)");
  if (!(reorder_rate >= 0 && reorder_rate < 1)) {
    throw Error(ErrorKind::ConfigError, "reorder_rate outside [0, 1)");
  }
}

std::string_view to_string(GrowthProfile profile) {
  switch (profile) {
    case GrowthProfile::Cubiclike: return "cubiclike";
    case GrowthProfile::Biclike: return "biclike";
    case GrowthProfile::Renolike: return "renolike";
  }
  return "cubiclike";
}

GrowthProfile parse_growth_profile(std::string_view name) {
  if (name == "cubiclike") return GrowthProfile::Cubiclike;
  if (name == "biclike") return GrowthProfile::Biclike;
  if (name == "renolike") return GrowthProfile::Renolike;
  throw Error(ErrorKind::ConfigError, "unknown growth profile '" + std::string(name) + "'");
}

void ClientParams::validate() const {
  if (read_buffer == 0 || write_buffer == 0) {
    throw Error(ErrorKind::ConfigError, "socket buffers must be positive");
  }
}

SimulationResult simulate_flow_detailed(const LinkParams& link, const ClientParams& client,
                                        std::uint64_t transfer_bytes, std::uint64_t seed) {
  link.validate();
  client.validate();
  if (transfer_bytes == 0) throw Error(ErrorKind::ConfigError, "transfer size must be positive");
  const std::uint64_t base = SplitMix64::stream(seed, client.seed).next();
  SplitMix64 isn(SplitMix64::mix64(base ^ SplitMix64::hash_label("isn")));
  const auto isn_server = static_cast<std::uint32_t>(isn.next());
  const auto isn_client = static_cast<std::uint32_t>(isn.next());
  const auto isn_server_up = static_cast<std::uint32_t>(isn.next());
  const auto isn_client_up = static_cast<std::uint32_t>(isn.next());

  TransferSetup down;
  down.kind = Transfer::Download;
  down.bytes = transfer_bytes;
  down.sndbuf = kServerBuffer;
  down.rcvbuf = client.read_buffer;
  down.sender_rcvbuf = kServerBuffer;
  down.sack = client.sack_enabled;
  down.dsack = client.sack_enabled && client.dsack_enabled;
  down.profile = client.cwnd_growth_profile;
  down.isn_sender = isn_server;
  down.isn_receiver = isn_client;
  down.stream = SplitMix64::mix64(base ^ SplitMix64::hash_label("download"));

  TransferSetup up;
  up.kind = Transfer::Upload;
  up.bytes = transfer_bytes;
  up.sndbuf = client.write_buffer;
  up.rcvbuf = kServerBuffer;
  up.sender_rcvbuf = client.read_buffer;
  up.sack = client.sack_enabled;
  up.dsack = client.sack_enabled;
  up.profile = client.cwnd_growth_profile;
  up.isn_sender = isn_client_up;
  up.isn_receiver = isn_server_up;
  up.stream = SplitMix64::mix64(base ^ SplitMix64::hash_label("upload"));

  SimulationResult result;
  TransferSim d(link, down);
  d.run();
  result.pair.download = std::move(d.trace());
  result.download = d.stats();
  TransferSim u(link, up);
  u.run();
  result.pair.upload = std::move(u.trace());
  result.upload = u.stats();
  return result;
}

TracePair simulate_flow(const LinkParams& link, const ClientParams& client,
                        std::uint64_t transfer_bytes, std::uint64_t seed) {
  return simulate_flow_detailed(link, client, transfer_bytes, seed).pair;
}

void ClassArtifactSpec::validate() const {
  std::vector<char> seen(m, 0);
  for (const auto& f : informative) {
    if (f.index >= m) {
      throw Error(ErrorKind::ConfigError, "informative index " + std::to_string(f.index) +
                                              " outside [0, " + std::to_string(m) + ")");
    }
    if (seen[f.index]) {
      throw Error(ErrorKind::ConfigError, "duplicate informative index " + std::to_string(f.index));
    }
    seen[f.index] = 1;
  }
  if (noise.kind == NoiseKind::Uniform && !(noise.b >= noise.a)) {
    throw Error(ErrorKind::ConfigError, "uniform noise needs b >= a");
  }
  if (noise.kind == NoiseKind::Normal && !(noise.b >= 0)) {
    throw Error(ErrorKind::ConfigError, "normal noise needs a non-negative deviation");
  }
}

Signature generate_synthetic_signature(const ClassArtifactSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<const InformativeFeature*> by_index(spec.m, nullptr);
  for (const auto& f : spec.informative) by_index[f.index] = &f;
  SplitMix64 rng = SplitMix64::stream(seed, SplitMix64::hash_label("synthetic-signature"));
  Signature sig;
  sig.label = spec.label;
  sig.catalog_version = "synthetic";
  sig.values.resize(spec.m);
  for (std::size_t j = 0; j < spec.m; ++j) {
    double v;
    if (const auto* f = by_index[j]) {
      v = f->target + (f->jitter > 0 ? f->jitter * rng.normal() : 0.0);
    } else {
      switch (spec.noise.kind) {
        case NoiseKind::Constant: v = spec.noise.a; break;
        case NoiseKind::Uniform: v = spec.noise.a + (spec.noise.b - spec.noise.a) * rng.uniform(); break;
        case NoiseKind::Normal: v = spec.noise.a + spec.noise.b * rng.normal(); break;
        default: v = 0.0;
      }
    }
    sig.values[j] = std::clamp(v, 0.0, kSyntheticClip);
  }
  return sig;
}

Scenario scenario_from_json(const json& j) {
  try {
    reject_unknown(j, {"id", "link", "client", "bytes", "seed", "link_faulty", "client_faults"},
                   "scenario");
    Scenario s;
    take(j, "id", s.id);
    take(j, "bytes", s.bytes);
    take(j, "seed", s.seed);
    take(j, "link_faulty", s.link_faulty);
    take(j, "client_faults", s.client_faults);
    if (auto it = j.find("link"); it != j.end()) {
      reject_unknown(*it, {"bandwidth", "one_way_delay", "loss_rate", "reorder_rate", "queue_limit"},
                     "scenario.link");
      take(*it, "bandwidth", s.link.bandwidth);
      take(*it, "one_way_delay", s.link.one_way_delay);
      take(*it, "loss_rate", s.link.loss_rate);
      take(*it, "reorder_rate", s.link.reorder_rate);
      take(*it, "queue_limit", s.link.queue_limit);
    }
    if (auto it = j.find("client"); it != j.end()) {
      reject_unknown(*it, {"sack_enabled", "dsack_enabled", "read_buffer", "write_buffer",
                           "cwnd_growth_profile", "seed"},
                     "scenario.client");
      take(*it, "sack_enabled", s.client.sack_enabled);
      take(*it, "dsack_enabled", s.client.dsack_enabled);
      take(*it, "read_buffer", s.client.read_buffer);
      take(*it, "write_buffer", s.client.write_buffer);
      take(*it, "seed", s.client.seed);
      if (auto p = it->find("cwnd_growth_profile"); p != it->end()) {
        s.client.cwnd_growth_profile = parse_growth_profile(p->get<std::string>());
      }
    }
    s.link.validate();
    s.client.validate();
    if (s.bytes == 0) throw Error(ErrorKind::ConfigError, "scenario bytes must be positive");
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed scenario: ") + e.what());
  }
}

json to_json(const Scenario& s) {
  return {{"id", s.id},
          {"link",
           {{"bandwidth", s.link.bandwidth},
            {"one_way_delay", s.link.one_way_delay},
            {"loss_rate", s.link.loss_rate},
            {"reorder_rate", s.link.reorder_rate},
            {"queue_limit", s.link.queue_limit}}},
          {"client",
           {{"sack_enabled", s.client.sack_enabled},
            {"dsack_enabled", s.client.dsack_enabled},
            {"read_buffer", s.client.read_buffer},
            {"write_buffer", s.client.write_buffer},
            {"cwnd_growth_profile", to_string(s.client.cwnd_growth_profile)},
            {"seed", s.client.seed}}},
          {"bytes", s.bytes},
          {"seed", s.seed},
          {"link_faulty", s.link_faulty},
          {"client_faults", s.client_faults}};
}

LinkParams healthy_link() {
  LinkParams l;
  l.bandwidth = 80e6;
  l.one_way_delay = 0.010;
  l.queue_limit = 100;
  return l;
}

LinkParams faulty_link(std::uint64_t seed) {
  LinkParams l = healthy_link();
  SplitMix64 rng = SplitMix64::stream(seed, SplitMix64::hash_label("faulty-link"));
  l.loss_rate = 0.03 + 0.02 * rng.uniform();
  return l;
}

ClientParams faulty_client(const std::string& fault, std::size_t variant) {
  ClientParams c;
  const std::uint64_t level = kBufferLevels[variant % std::size(kBufferLevels)];
  if (fault == "healthy") return c;
  if (fault == "sack_disabled") {
    c.sack_enabled = false;
  } else if (fault == "dsack_disabled") {
    c.dsack_enabled = false;
  } else if (fault == "read_buffer") {
    c.read_buffer = level;
  } else if (fault == "write_buffer") {
    c.write_buffer = level;
  } else if (fault == "read_write_buffer") {
    c.read_buffer = level;
    c.write_buffer = level;
  } else {
    throw Error(ErrorKind::ConfigError, "unknown client fault '" + fault + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"healthy",      "faulty-link",  "sack_disabled",     "dsack_disabled",
          "read_buffer",  "write_buffer", "read_write_buffer", "paper-matrix"};
}

std::vector<Scenario> preset_scenarios(const std::string& name, std::size_t per_class,
                                       std::uint64_t seed, GrowthProfile profile) {
  std::vector<Scenario> out;
  auto add = [&](const std::string& client_kind, bool link_faulty, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      Scenario s;
      const std::string prefix = link_faulty ? "fl-" : "hl-";
      char suffix[32];
      std::snprintf(suffix, sizeof suffix, "-%03zu", i);
      s.id = prefix + client_kind + suffix;
      const std::uint64_t key = SplitMix64::hash_label(s.id);
      s.seed = SplitMix64::stream(seed, key).next();
      s.link = link_faulty ? faulty_link(s.seed) : healthy_link();
      s.link_faulty = link_faulty;
      s.client = faulty_client(client_kind, i);
      s.client.cwnd_growth_profile = profile;
      s.client.seed = i;
      if (client_kind == "read_write_buffer") {
        s.client_faults = {"read_buffer", "write_buffer"};
      } else if (client_kind != "healthy") {
        s.client_faults = {client_kind};
      }
      out.push_back(std::move(s));
    }
  };
  if (name == "healthy") {
    add("healthy", false, per_class);
    for (auto& s : out) s.link = LinkParams{};
  } else if (name == "faulty-link") {
    add("healthy", true, per_class);
  } else if (name == "paper-matrix") {
    add("healthy", false, per_class);
    for (const char* f : kFaultNames) add(f, false, per_class);
    add("read_write_buffer", false, per_class);
    add("healthy", true, per_class);
    for (const char* f : kFaultNames) add(f, true, per_class);
  } else {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(ErrorKind::ConfigError, "unknown preset '" + name + "'");
    }
    add(name, false, per_class);
  }
  return out;
}

}  // namespace netdiag
