#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace netdiag {

/// Binary outcome counts; the positive class is +1 (faulty).
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  void add(int truth, int predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double accuracy() const noexcept;
  /// fp / (fp + tn); 0 when there are no negatives.
  double false_positive_rate() const noexcept;

  bool operator==(const ConfusionMatrix&) const = default;
};

nlohmann::json to_json(const ConfusionMatrix& cm);

/// Stratified fold assignment for +1/-1 labels: each class is shuffled with a
/// seeded SplitMix64 stream and dealt round-robin across the k folds (the
/// second class continues the deal where the first stopped). Returns a fold
/// index per row.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t k,
                                          std::uint64_t seed);

}  // namespace netdiag
