#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "netdiag/matrix.hpp"
#include "netdiag/preprocess.hpp"

namespace netdiag {

enum class KernelType { Linear, Quadratic, Cubic, Rbf };

std::string_view to_string(KernelType type);
KernelType parse_kernel_type(std::string_view name);

/// Linear: x.x'; Quadratic: (x.x' + 1)^2; Cubic: (x.x' + 1)^3;
/// Rbf: exp(-|x - x'|^2 / (2 sigma^2)).
struct KernelSpec {
  KernelType type = KernelType::Linear;
  double sigma = 1.0;  // Rbf only

  static KernelSpec linear() { return {KernelType::Linear, 1.0}; }
  static KernelSpec quadratic() { return {KernelType::Quadratic, 1.0}; }
  static KernelSpec cubic() { return {KernelType::Cubic, 1.0}; }
  static KernelSpec rbf(double sigma) { return {KernelType::Rbf, sigma}; }

  bool operator==(const KernelSpec&) const = default;
};

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// K(x_i, x_j) + delta_ij / C.
Matrix gram_matrix(const KernelSpec& spec, const Matrix& X, double C);

struct SvmConfig {
  KernelSpec kernel;
  double C = 10.0;
  int max_iter = 1000;
  double tol = 1e-3;
};

void validate(const SvmConfig& config);

/// Kernel family plus a sigma multiplier; the concrete RBF width is only known
/// once the feature count q is fixed: sigma = sigma_factor * sqrt(q / 2).
struct KernelChoice {
  KernelType type = KernelType::Quadratic;
  double sigma_factor = 1.0;

  KernelSpec resolve(std::size_t q) const;
  bool operator==(const KernelChoice&) const = default;
};

/// Training parameters with the kernel left at the family level.
struct SvmSettings {
  KernelChoice kernel;
  double C = 10.0;
  int max_iter = 1000;
  double tol = 1e-3;

  SvmConfig resolve(std::size_t q) const { return {kernel.resolve(q), C, max_iter, tol}; }
  bool operator==(const SvmSettings&) const = default;
};

struct TrainingMeta {
  std::size_t n = 0;
  std::size_t iterations_used = 0;
  double final_kkt_residual = 0.0;
  bool converged = false;

  bool operator==(const TrainingMeta&) const = default;
};

struct SvmModel {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> dual_coef;  // alpha_i * y_i
  double bias = 0.0;
  KernelSpec kernel;
  double C = 10.0;
  TrainingMeta training_meta;
  /// Indices into the scaled m-dimensional signature; empty = identity.
  std::vector<std::size_t> feature_subset;
  std::optional<ScalerParams> scaler;
  std::string catalog_version;

  std::size_t input_dim() const noexcept {
    return support_vectors.empty() ? 0 : support_vectors.front().size();
  }
  bool operator==(const SvmModel&) const = default;
};

/// Solver internals kept for verification: the full multiplier vector, the
/// ridge-shifted Gram matrix and the dual objective after every sweep.
struct TrainingState {
  std::vector<double> alpha;
  Matrix gram;
  std::vector<double> objective_trace;
};

struct TrainResult {
  SvmModel model;
  TrainingState state;
};

/// L2 soft-margin training: maximizes sum(alpha) - 1/2 alpha' (yy' o K~) alpha
/// over alpha >= 0, sum(alpha_i y_i) = 0, with pairwise maximal-violating-pair
/// updates. Labels must be +1 / -1.
TrainResult train_detailed(const Matrix& X, std::span<const int> y, const SvmConfig& config);
SvmModel train(const Matrix& X, std::span<const int> y, const SvmConfig& config);

/// Trains on a Link-labelled database (Scaled or Optimum stage).
SvmModel train(const SignatureDatabase& db, const SvmConfig& config);

double decision_value(const SvmModel& model, std::span<const double> x);

/// +1 iff D >= 0.
inline int classify(double decision) { return decision >= 0.0 ? +1 : -1; }
int classify(const SvmModel& model, std::span<const double> x);

/// Applies the model's stored scaler (with clamping) and feature subset to a
/// raw signature vector.
std::vector<double> prepare_input(const SvmModel& model, std::span<const double> raw);

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j gram_ij.
double dual_objective(std::span<const double> alpha, std::span<const int> y, const Matrix& gram);

/// Largest violation of the L2 soft-margin optimality conditions for a
/// multiplier vector and bias (see train_detailed).
double kkt_residual(const Matrix& X, std::span<const int> y, std::span<const double> alpha,
                    double bias, const SvmConfig& config);

nlohmann::json to_json(const SvmModel& model);
SvmModel model_from_json(const nlohmann::json& j);

/// Canonical serialized form (indented JSON, trailing newline).
std::string serialize_model(const SvmModel& model);

}  // namespace netdiag
