#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "netdiag/signature.hpp"
#include "netdiag/trace.hpp"

namespace netdiag {

/// Per-trace statistics. "Data" direction is the direction carrying the bulk
/// transfer; "ack" direction is the opposite one (receiver feedback).
enum class Statistic : std::size_t {
  ElapsedTime,
  TotalPacketsC2S,
  TotalPacketsS2C,
  TotalBytesC2S,
  TotalBytesS2C,
  DataPacketsC2S,
  DataPacketsS2C,
  PureAckPacketsC2S,
  PureAckPacketsS2C,
  Throughput,
  RetransmittedPackets,
  RetransmittedBytes,
  OutOfOrderPackets,
  DupAckCount,
  TripleDupAckEvents,
  SackBlocksTotal,
  MaxSackCnt,
  WinMin,
  WinMax,
  WinAvg,
  ZeroWindowCount,
  RttAvg,
  RttMin,
  RttMax,
  RttStdev,
  RttSamples,
  IdleTimeMax,
  MeanSegmentSize,
  MaxSegmentSize,
  MinSegmentSize,
  PushLikeSmallSegmentCount,
  SynCount,
  FinCount,
  RstCount,
  InitialWindowBytes,
  AckCompressionRatio,
  BytesPerAck,
  // Whole-trace aggregates; not part of the v1 catalog.
  TotalPackets,
  TotalBytes,
};

inline constexpr std::size_t kStatisticCount =
    static_cast<std::size_t>(Statistic::TotalBytes) + 1;

std::string_view statistic_name(Statistic stat);

struct StatisticValue {
  double value = 0.0;
  bool defined = true;
};

using TraceSummary = std::array<StatisticValue, kStatisticCount>;

/// Computes every statistic in one pass over the trace. Undefined statistics
/// (no samples, zero denominators) are reported as 0 with defined = false.
TraceSummary summarize_trace(const TraceRecord& trace);

/// Value of one statistic; always finite. Throws EmptyTrace on an empty trace.
double compute_statistic(const TraceRecord& trace, Statistic stat);

struct FeatureDef {
  std::string name;
  Transfer trace = Transfer::Download;
  Statistic statistic = Statistic::ElapsedTime;
};

struct FeatureCatalog {
  std::string version;
  std::vector<FeatureDef> features;

  std::size_t size() const noexcept { return features.size(); }
  std::vector<std::string> names() const;
};

/// Catalog "v1": the 37 per-trace statistics for the download trace followed
/// by the same 37 for the upload trace.
const FeatureCatalog& default_catalog();

/// Throws ConfigError on duplicate names.
void validate_catalog(const FeatureCatalog& catalog);

struct ExtractionDiagnostics {
  std::vector<bool> defined;
};

struct Extraction {
  Signature signature;
  ExtractionDiagnostics diagnostics;
};

Extraction extract_with_diagnostics(const TracePair& pair, const FeatureCatalog& catalog);

/// Unlabeled signature for a trace pair.
Signature extract_signature(const TracePair& pair, const FeatureCatalog& catalog);

}  // namespace netdiag
