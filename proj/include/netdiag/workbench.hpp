#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "netdiag/signature.hpp"
#include "netdiag/trace.hpp"

namespace netdiag {

/// Bottleneck link shared by both transfer directions (one queue each way).
struct LinkParams {
  double bandwidth = 80e6;       // bits/s
  double one_way_delay = 0.010;  // seconds
  double loss_rate = 0.0;
  double reorder_rate = 0.0;
  /// Drop-tail queue length in packets; 0 means unbounded.
  std::size_t queue_limit = 0;

  void validate() const;
  bool operator==(const LinkParams&) const = default;
};

enum class GrowthProfile { Cubiclike, Biclike, Renolike };

std::string_view to_string(GrowthProfile profile);
GrowthProfile parse_growth_profile(std::string_view name);

struct ClientParams {
  bool sack_enabled = true;
  bool dsack_enabled = true;
  std::uint64_t read_buffer = 4u << 20;   // bytes
  std::uint64_t write_buffer = 4u << 20;  // bytes
  GrowthProfile cwnd_growth_profile = GrowthProfile::Cubiclike;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ClientParams&) const = default;
};

inline constexpr std::uint32_t kMss = 1448;
inline constexpr std::uint64_t kServerBuffer = 4u << 20;
inline constexpr std::uint64_t kDefaultTransferBytes = 2u << 20;

/// Sender/receiver bookkeeping for one simulated transfer.
struct FlowStats {
  std::uint64_t segments_sent = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t random_drops = 0;
  std::uint64_t queue_drops = 0;
  std::uint64_t ack_drops = 0;
  std::uint64_t delivered_bytes = 0;
  std::uint64_t duplicate_segments = 0;
  std::uint64_t dsack_blocks = 0;
  std::uint64_t highest_acked_bytes = 0;
  double completion_time = 0.0;
};

struct SimulationResult {
  TracePair pair;
  FlowStats download;
  FlowStats upload;
};

/// Download (server -> client, captured at the client) followed by an upload
/// (client -> server, captured at the server) of `transfer_bytes` each.
SimulationResult simulate_flow_detailed(const LinkParams& link, const ClientParams& client,
                                        std::uint64_t transfer_bytes, std::uint64_t seed);
TracePair simulate_flow(const LinkParams& link, const ClientParams& client,
                        std::uint64_t transfer_bytes, std::uint64_t seed);

enum class NoiseKind { Constant, Uniform, Normal };

/// Constant: a. Uniform: [a, b). Normal: mean a, standard deviation b.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::Uniform;
  double a = 0.0;
  double b = 1.0;
};

struct InformativeFeature {
  std::size_t index = 0;
  double target = 0.0;
  double jitter = 0.0;  // standard deviation
};

struct ClassArtifactSpec {
  std::size_t m = 0;
  std::vector<InformativeFeature> informative;
  NoiseSpec noise;
  std::optional<Label> label;

  /// Throws ConfigError on duplicate or out-of-range indices.
  void validate() const;
};

inline constexpr double kSyntheticClip = 1e6;

/// Informative features are target + jitter * N(0, 1), the rest are noise;
/// everything clipped to [0, 1e6].
Signature generate_synthetic_signature(const ClassArtifactSpec& spec, std::uint64_t seed);

/// One simulated pair with its ground truth.
struct Scenario {
  std::string id;
  LinkParams link;
  ClientParams client;
  std::uint64_t bytes = kDefaultTransferBytes;
  std::uint64_t seed = 1;
  bool link_faulty = false;
  std::set<std::string> client_faults;

  bool operator==(const Scenario&) const = default;
};

/// `{link:{...}, client:{...}, bytes, seed}` plus optional id and truth
/// fields; unknown keys are rejected.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& scenario);

/// 80 Mb/s, 10 ms, no loss, 100-packet queue. The `healthy` preset uses an
/// unbounded queue instead so nothing is ever dropped.
LinkParams healthy_link();
/// healthy_link() with loss drawn uniformly from [0.03, 0.05].
LinkParams faulty_link(std::uint64_t seed);

/// Read/write buffer levels cycled through by the buffer presets.
inline constexpr std::uint64_t kBufferLevels[] = {16u << 10, 32u << 10, 64u << 10};

ClientParams faulty_client(const std::string& fault, std::size_t variant);

/// Preset names: healthy, faulty-link, sack_disabled, dsack_disabled,
/// read_buffer, write_buffer, read_write_buffer, paper-matrix.
std::vector<std::string> preset_names();
std::vector<Scenario> preset_scenarios(const std::string& name, std::size_t per_class,
                                       std::uint64_t seed,
                                       GrowthProfile profile = GrowthProfile::Cubiclike);

}  // namespace netdiag
