#include "netdiag/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "netdiag/error.hpp"

namespace netdiag {

namespace {

constexpr std::string_view kColumnHeader =
    "ts,dir,seq,ack,len,syn,fin,rst,ack_flag,win,sack_cnt";
constexpr std::size_t kColumns = 11;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out,
                                   std::chars_format::fixed);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "0") {
    out = false;
    return true;
  }
  if (s == "1") {
    out = true;
    return true;
  }
  return false;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void parse_metadata(std::string_view line, TraceRecord& rec) {
  if (line.empty() || line.front() != '#') {
    throw Error(ErrorKind::BadHeader, "first line must be '#capture=...,transfer=...,bytes=...'");
  }
  auto fields = split(line.substr(1), ',');
  bool have_capture = false, have_transfer = false, have_bytes = false;
  for (auto field : fields) {
    auto eq = field.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::BadHeader, "metadata field without '=': " + std::string(field));
    }
    auto key = field.substr(0, eq);
    auto value = field.substr(eq + 1);
    if (key == "capture") {
      if (value == "client") rec.capture_point = CapturePoint::Client;
      else if (value == "server") rec.capture_point = CapturePoint::Server;
      else throw Error(ErrorKind::BadHeader, "bad capture value: " + std::string(value));
      have_capture = true;
    } else if (key == "transfer") {
      if (value == "download") rec.direction_of_transfer = Transfer::Download;
      else if (value == "upload") rec.direction_of_transfer = Transfer::Upload;
      else throw Error(ErrorKind::BadHeader, "bad transfer value: " + std::string(value));
      have_transfer = true;
    } else if (key == "bytes") {
      if (!parse_uint(value, rec.declared_transfer_bytes) || rec.declared_transfer_bytes == 0) {
        throw Error(ErrorKind::BadHeader, "bytes must be a positive integer");
      }
      have_bytes = true;
    } else {
      throw Error(ErrorKind::BadHeader, "unknown metadata key: " + std::string(key));
    }
  }
  if (!have_capture || !have_transfer || !have_bytes) {
    throw Error(ErrorKind::BadHeader, "metadata line missing capture, transfer or bytes");
  }
}

PacketEvent parse_row(std::string_view line, std::size_t row) {
  auto cols = split(line, ',');
  auto bad = [&](const std::string& what) {
    return Error(ErrorKind::MalformedRow,
                 "data row " + std::to_string(row) + ": " + what, row);
  };
  if (cols.size() != kColumns) {
    throw bad("expected 11 columns, got " + std::to_string(cols.size()));
  }
  PacketEvent ev;
  if (!parse_double(cols[0], ev.ts) || !std::isfinite(ev.ts) || ev.ts < 0.0) {
    throw bad("bad ts '" + std::string(cols[0]) + "'");
  }
  if (cols[1] == "c2s") ev.dir = Direction::ClientToServer;
  else if (cols[1] == "s2c") ev.dir = Direction::ServerToClient;
  else throw bad("bad dir '" + std::string(cols[1]) + "'");
  if (!parse_uint(cols[2], ev.seq)) throw bad("bad seq");
  if (!parse_uint(cols[3], ev.ack)) throw bad("bad ack");
  if (!parse_uint(cols[4], ev.payload_len)) throw bad("bad len");
  if (!parse_bool(cols[5], ev.syn)) throw bad("bad syn");
  if (!parse_bool(cols[6], ev.fin)) throw bad("bad fin");
  if (!parse_bool(cols[7], ev.rst)) throw bad("bad rst");
  if (!parse_bool(cols[8], ev.ack_flag)) throw bad("bad ack_flag");
  if (!parse_uint(cols[9], ev.win)) throw bad("bad win");
  if (!parse_uint(cols[10], ev.sack_cnt)) throw bad("bad sack_cnt");
  return ev;
}

}  // namespace

Direction opposite(Direction d) noexcept {
  return d == Direction::ClientToServer ? Direction::ServerToClient
                                        : Direction::ClientToServer;
}

void validate_pair_roles(const TracePair& pair) {
  if (pair.download.capture_point != CapturePoint::Client ||
      pair.download.direction_of_transfer != Transfer::Download) {
    throw Error(ErrorKind::CatalogMismatch,
                "download trace must be captured at the client with transfer=download");
  }
  if (pair.upload.capture_point != CapturePoint::Server ||
      pair.upload.direction_of_transfer != Transfer::Upload) {
    throw Error(ErrorKind::CatalogMismatch,
                "upload trace must be captured at the server with transfer=upload");
  }
}

TraceRecord parse_trace(std::istream& in, std::vector<std::string>* warnings) {
  TraceRecord rec;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::BadHeader, "missing metadata line");
  }
  strip_cr(line);
  parse_metadata(line, rec);
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::BadHeader, "missing column header line");
  }
  strip_cr(line);
  if (line != kColumnHeader) {
    throw Error(ErrorKind::BadHeader, "unexpected column header: " + line);
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    PacketEvent ev = parse_row(line, row);
    if (ev.payload_len > 0 && (ev.syn || ev.fin || ev.rst) && warnings) {
      warnings->push_back("data row " + std::to_string(row) +
                          ": payload on SYN/FIN/RST packet");
    }
    rec.events.push_back(ev);
    ++row;
  }
  if (rec.events.empty()) {
    throw Error(ErrorKind::EmptyTrace, "trace has no event rows");
  }
  std::stable_sort(rec.events.begin(), rec.events.end(),
                   [](const PacketEvent& a, const PacketEvent& b) { return a.ts < b.ts; });
  return rec;
}

TraceRecord read_trace(const std::filesystem::path& path,
                       std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  try {
    return parse_trace(in, warnings);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what(), e.row());
  }
}

std::string format_timestamp(double ts) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), ts,
                                 std::chars_format::fixed);
  std::string s(buf.data(), ptr);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += '.';
    dot = s.size() - 1;
  }
  while (s.size() - dot - 1 < 6) s += '0';
  return s;
}

void format_trace(const TraceRecord& trace, std::ostream& out) {
  out << "#capture=" << (trace.capture_point == CapturePoint::Client ? "client" : "server")
      << ",transfer="
      << (trace.direction_of_transfer == Transfer::Download ? "download" : "upload")
      << ",bytes=" << trace.declared_transfer_bytes << '\n';
  out << kColumnHeader << '\n';
  for (const auto& ev : trace.events) {
    out << format_timestamp(ev.ts) << ','
        << (ev.dir == Direction::ClientToServer ? "c2s" : "s2c") << ',' << ev.seq << ','
        << ev.ack << ',' << ev.payload_len << ',' << int(ev.syn) << ',' << int(ev.fin)
        << ',' << int(ev.rst) << ',' << int(ev.ack_flag) << ',' << ev.win << ','
        << ev.sack_cnt << '\n';
  }
}

void write_trace(const TraceRecord& trace, const std::filesystem::path& path) {
  if (trace.events.empty()) {
    throw Error(ErrorKind::EmptyTrace, "refusing to write a trace with no events");
  }
  std::ostringstream buf;
  format_trace(trace, buf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  out << buf.str();
  out.flush();
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

}  // namespace netdiag
