#include "netdiag/metrics.hpp"

#include "netdiag/error.hpp"
#include "netdiag/rng.hpp"

namespace netdiag {

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth > 0) {
    predicted > 0 ? ++tp : ++fn;
  } else {
    predicted > 0 ? ++fp : ++tn;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

double ConfusionMatrix::accuracy() const noexcept {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

double ConfusionMatrix::false_positive_rate() const noexcept {
  const auto neg = fp + tn;
  return neg == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(neg);
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp},
          {"fp", cm.fp},
          {"tn", cm.tn},
          {"fn", cm.fn},
          {"accuracy", cm.accuracy()},
          {"false_positive_rate", cm.false_positive_rate()}};
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t k,
                                          std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::ConfigError, "need at least 2 folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  // Every training split must keep both classes: each class needs two rows
  // (round-robin then spreads it over two folds) and every fold needs a row.
  if (labels.size() < k || pos.size() < 2 || neg.size() < 2) {
    throw Error(ErrorKind::InsufficientRows,
                std::to_string(k) + "-fold CV on " + std::to_string(labels.size()) +
                    " rows needs n >= k and two rows per class (have " +
                    std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) +
                    " negative)");
  }
  auto rng_pos = SplitMix64::stream(seed, 1);
  auto rng_neg = SplitMix64::stream(seed, 2);
  rng_pos.shuffle(pos);
  rng_neg.shuffle(neg);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::size_t deal = 0;
  for (std::size_t idx : pos) fold[idx] = deal++ % k;
  for (std::size_t idx : neg) fold[idx] = deal++ % k;
  return fold;
}

}  // namespace netdiag
