#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace netdiag {

enum class Direction : std::uint8_t { ClientToServer, ServerToClient };
enum class CapturePoint : std::uint8_t { Client, Server };
enum class Transfer : std::uint8_t { Download, Upload };

/// One captured TCP packet. `ts` is seconds relative to the first packet of
/// the capture; sequence numbers are raw 32-bit values (they may wrap).
struct PacketEvent {
  double ts = 0.0;
  Direction dir = Direction::ClientToServer;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint32_t payload_len = 0;
  bool syn = false;
  bool fin = false;
  bool rst = false;
  bool ack_flag = false;
  std::uint32_t win = 0;
  std::uint32_t sack_cnt = 0;

  bool operator==(const PacketEvent&) const = default;
};

struct TraceRecord {
  CapturePoint capture_point = CapturePoint::Client;
  Transfer direction_of_transfer = Transfer::Download;
  std::vector<PacketEvent> events;
  std::uint64_t declared_transfer_bytes = 0;

  bool operator==(const TraceRecord&) const = default;

  /// Direction that carries the bulk payload for this transfer.
  Direction data_direction() const noexcept {
    return direction_of_transfer == Transfer::Download
               ? Direction::ServerToClient
               : Direction::ClientToServer;
  }
};

/// Download captured at the client, upload captured at the server.
struct TracePair {
  TraceRecord download;
  TraceRecord upload;

  bool operator==(const TracePair&) const = default;
};

Direction opposite(Direction d) noexcept;

/// Throws CatalogMismatch when capture point / transfer roles break the
/// pairing rule.
void validate_pair_roles(const TracePair& pair);

/// Parses the CSV trace format. Non-fatal oddities (payload on SYN/FIN/RST)
/// are appended to `warnings` when it is non-null.
TraceRecord parse_trace(std::istream& in,
                        std::vector<std::string>* warnings = nullptr);
TraceRecord read_trace(const std::filesystem::path& path,
                       std::vector<std::string>* warnings = nullptr);

void format_trace(const TraceRecord& trace, std::ostream& out);
void write_trace(const TraceRecord& trace, const std::filesystem::path& path);

/// Shortest round-trip decimal for `ts`, padded to at least six fractional
/// digits.
std::string format_timestamp(double ts);

}  // namespace netdiag
