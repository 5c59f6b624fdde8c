#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "netdiag/preprocess.hpp"
#include "netdiag/svm.hpp"

namespace netdiag {

/// Pooled-variance floor for the two-sample t statistic.
inline constexpr double kVarianceFloor = 1e-12;

/// Student's two-sample t: (mean(a) - mean(b)) / sqrt(s_p^2 (1/|a| + 1/|b|))
/// with the pooled unbiased variance s_p^2 floored at kVarianceFloor. With
/// `welch` the unpooled standard error is used instead (same floor on each
/// variance term). Requires |a|, |b| >= 2.
double t_statistic(std::span<const double> a, std::span<const double> b, bool welch = false);

struct TTestRanking {
  std::vector<double> t_statistic;
  /// Feature indices by |t| descending, lower index first on ties.
  std::vector<std::size_t> abs_t_order;

  bool operator==(const TTestRanking&) const = default;
};

/// Ranks the columns of a database by |t| between the rows labelled
/// `positive` and those labelled `negative`.
TTestRanking rank_features(const SignatureDatabase& db, int positive, int negative,
                           bool welch = false);

enum class SelectionObjective {
  Accuracy,
  /// accuracy - fp_penalty * false-positive rate
  AccuracyMinusFalsePositives,
};

struct WrapperConfig {
  /// Empty means default_candidate_sizes(m).
  std::vector<std::size_t> candidate_sizes;
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  SelectionObjective objective = SelectionObjective::Accuracy;
  double fp_penalty = 1.0;
};

/// {5, 10, 15, 20, 25, 50, 75, 100, m} restricted to [1, m].
std::vector<std::size_t> default_candidate_sizes(std::size_t m);

struct SelectionReport {
  std::vector<std::size_t> candidate_sizes;
  /// Mean stratified k-fold accuracy per candidate; nullopt when the size was
  /// fixed without cross-validation.
  std::vector<std::optional<double>> cv_accuracy;
  std::vector<std::optional<double>> cv_score;
  std::size_t chosen_q = 0;
  std::vector<std::size_t> chosen_indices;

  bool operator==(const SelectionReport&) const = default;
};

nlohmann::json to_json(const SelectionReport& report);
SelectionReport selection_from_json(const nlohmann::json& j);

/// Cross-validates an SVM on the top-q ranked features for every candidate q
/// and picks the best objective (smaller q on ties). `db` must carry +1/-1
/// labels.
SelectionReport wrapper_select(const SignatureDatabase& db, const TTestRanking& ranking,
                               const WrapperConfig& config, const SvmSettings& svm);

/// Report for a feature count fixed up front (no cross-validation).
SelectionReport fixed_selection(const TTestRanking& ranking, std::size_t q);

/// Column slice of a Scaled database; the result is stage Optimum.
SignatureDatabase project(const SignatureDatabase& db, std::span<const std::size_t> indices);

}  // namespace netdiag
