#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "netdiag/diagnosis.hpp"
#include "netdiag/metrics.hpp"

namespace netdiag {

struct CvResult {
  double mean_accuracy = 0.0;
  std::vector<ConfusionMatrix> folds;
  /// Model trained on the complement of each fold.
  std::vector<SvmModel> fold_models;
  std::vector<std::size_t> fold_of_row;
};

/// Stratified k-fold CV of the whole pipeline (scaler, ranking, selection and
/// SVM are re-fit on every training fold). `psd` is Preliminary with +1/-1
/// labels.
CvResult k_fold_cv(const SignatureDatabase& psd, const PipelineConfig& config, std::size_t k,
                   std::uint64_t seed);

/// Same, with an explicit fold index per row.
CvResult cross_validate(const SignatureDatabase& psd, const PipelineConfig& config,
                        std::span<const std::size_t> fold_of_row, std::size_t k);

struct GridSpec {
  std::vector<KernelType> kernels;
  std::vector<double> c_values;
  /// Only used by the RBF kernel.
  std::vector<double> sigma_factors = {1.0};
};

struct GridCell {
  KernelType kernel = KernelType::Linear;
  double c = 1.0;
  std::optional<double> sigma_factor;
  double accuracy = 0.0;
};

struct GridResult {
  GridSpec grid;
  std::vector<GridCell> cells;
  std::size_t best = 0;
  /// Cells sharing the best accuracy, in tie-break order.
  std::vector<std::size_t> tied;
};

/// Exhaustive CV over the grid. Ties go to the simpler kernel
/// (linear < quadratic < cubic < rbf), then smaller C, then smaller sigma.
GridResult select_model(const SignatureDatabase& psd, const GridSpec& grid,
                        const PipelineConfig& base, std::size_t k, std::uint64_t seed);

/// `base` with the kernel and C of the winning cell.
PipelineConfig apply_grid_choice(const PipelineConfig& base, const GridResult& result);

nlohmann::json to_json(const GridResult& result);

struct LabeledSignature {
  std::string id;
  Signature signature;
  bool link_faulty = false;
  std::set<std::string> client_faults;
};

struct LabeledPair {
  std::string id;
  TracePair pair;
  bool link_faulty = false;
  std::set<std::string> client_faults;
};

struct CategoryRow {
  std::string category;
  std::size_t n = 0;
  std::size_t correct = 0;
  /// Healthy-link items whose verdict contains every expected fault (for the
  /// default client: no fault at all). Faulty-link rows count correct ones.
  std::size_t flagged = 0;

  double accuracy() const noexcept { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }
  double detection() const noexcept { return n == 0 ? 0.0 : static_cast<double>(flagged) / n; }
};

struct VerdictReport {
  /// Link stage against the link ground truth.
  ConfusionMatrix lpd;
  /// Per CF module, over the items the CFD network actually ran on.
  std::map<std::string, ConfusionMatrix> modules;
  /// Per CF module, restricted to its own training task: healthy-link items
  /// that are either fault-free or carry exactly that fault.
  std::map<std::string, ConfusionMatrix> own_task;
  /// "faulty link", "default client" and one row per expected fault set.
  std::vector<CategoryRow> categories;
  std::vector<std::pair<std::string, Verdict>> verdicts;

  const CategoryRow* category(const std::string& name) const;
};

/// Category of a ground truth: "faulty link", "default client", or the
/// fault names joined with '+'.
std::string category_name(bool link_faulty, const std::set<std::string>& client_faults);

/// Correct iff the link verdict matches and, on a healthy link, the reported
/// fault set equals the expected one exactly.
VerdictReport evaluate_verdicts(std::span<const LabeledPair> pairs, const LpdClassifier& lpd,
                                const CfdNetwork& cfd);
VerdictReport evaluate_signature_verdicts(std::span<const LabeledSignature> items,
                                          const LpdClassifier& lpd, const CfdNetwork& cfd);
/// CFD network alone (no link gate); items must be healthy-link.
VerdictReport evaluate_cfd(std::span<const LabeledSignature> items, const CfdNetwork& cfd);

nlohmann::json to_json(const VerdictReport& report);
std::string text_table(const VerdictReport& report);

}  // namespace netdiag
