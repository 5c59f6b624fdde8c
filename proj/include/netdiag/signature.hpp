#pragma once

#include <optional>
#include <string>
#include <vector>

namespace netdiag {

enum class LabelKind { Link, Client };

/// Link labels are +1 (faulty) / -1 (healthy). Client labels are fault-class
/// indices: 0 is the healthy client, 1..p index the fault registry.
struct Label {
  LabelKind kind = LabelKind::Link;
  int value = -1;

  static constexpr Label faulty_link() { return {LabelKind::Link, +1}; }
  static constexpr Label healthy_link() { return {LabelKind::Link, -1}; }
  static constexpr Label client(int index) { return {LabelKind::Client, index}; }

  bool operator==(const Label&) const = default;
};

struct Signature {
  std::vector<double> values;
  std::optional<Label> label;
  std::string catalog_version;

  bool operator==(const Signature&) const = default;
};

}  // namespace netdiag
