#include "netdiag/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netdiag/error.hpp"

namespace netdiag {

using nlohmann::json;

std::string_view to_string(KernelType type) {
  switch (type) {
    case KernelType::Linear: return "linear";
    case KernelType::Quadratic: return "quadratic";
    case KernelType::Cubic: return "cubic";
    case KernelType::Rbf: return "rbf";
  }
  return "unknown";
}

KernelType parse_kernel_type(std::string_view name) {
  if (name == "linear") return KernelType::Linear;
  if (name == "quadratic") return KernelType::Quadratic;
  if (name == "cubic") return KernelType::Cubic;
  if (name == "rbf") return KernelType::Rbf;
  throw Error(ErrorKind::ConfigError, "unknown kernel '" + std::string(name) + "'");
}

KernelSpec KernelChoice::resolve(std::size_t q) const {
  if (type != KernelType::Rbf) return {type, 1.0};
  return KernelSpec::rbf(sigma_factor * std::sqrt(static_cast<double>(std::max<std::size_t>(q, 1)) / 2.0));
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "kernel arguments have dimensions " +
                                                  std::to_string(x.size()) + " and " +
                                                  std::to_string(y.size()));
  }
  if (spec.type == KernelType::Rbf) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = x[k] - y[k];
      d2 += d * d;
    }
    return std::exp(-d2 / (2.0 * spec.sigma * spec.sigma));
  }
  double dot = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) dot += x[k] * y[k];
  switch (spec.type) {
    case KernelType::Linear: return dot;
    case KernelType::Quadratic: return (dot + 1.0) * (dot + 1.0);
    case KernelType::Cubic: return (dot + 1.0) * (dot + 1.0) * (dot + 1.0);
    case KernelType::Rbf: break;
  }
  return dot;
}

Matrix gram_matrix(const KernelSpec& spec, const Matrix& X, double C) {
  const std::size_t n = X.rows();
  Matrix K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = kernel_eval(spec, X.row(i), X.row(j));
      K(i, j) = v;
      K(j, i) = v;
    }
    K(i, i) += 1.0 / C;
  }
  return K;
}

void validate(const SvmConfig& config) {
  if (!(config.C > 0.0) || !std::isfinite(config.C)) throw Error(ErrorKind::ConfigError, "C must be positive");
  if (config.max_iter <= 0) throw Error(ErrorKind::ConfigError, "max_iter must be positive");
  if (!(config.tol > 0.0)) throw Error(ErrorKind::ConfigError, "tol must be positive");
  if (config.kernel.type == KernelType::Rbf && !(config.kernel.sigma > 0.0)) {
    throw Error(ErrorKind::ConfigError, "RBF sigma must be positive");
  }
}

double dual_objective(std::span<const double> alpha, std::span<const int> y, const Matrix& gram) {
  const std::size_t n = alpha.size();
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += alpha[j] * y[j] * gram(i, j);
    quad += alpha[i] * y[i] * row;
  }
  return linear - 0.5 * quad;
}

namespace {

/// F_i = sum_j alpha_j y_j K(x_j, x_i), without the 1/C ridge.
std::vector<double> expansion_values(const Matrix& gram, std::span<const int> y,
                                     std::span<const double> alpha, double C) {
  const std::size_t n = alpha.size();
  std::vector<double> F(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] != 0.0) s += alpha[j] * y[j] * gram(i, j);
    }
    F[i] = s - alpha[i] * y[i] / C;
  }
  return F;
}

double residual_from_expansion(std::span<const double> F, std::span<const int> y,
                               std::span<const double> alpha, double bias, double C,
                               double tol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double margin = y[i] * (F[i] + bias);
    const double target = 1.0 - alpha[i] / C;
    const double v = alpha[i] > tol ? std::abs(margin - target) : std::max(0.0, target - margin);
    worst = std::max(worst, v);
  }
  return worst;
}

double bias_from_expansion(std::span<const double> F, std::span<const int> y,
                           std::span<const double> alpha, double C, double tol) {
  double sum = 0.0;
  std::size_t count = 0;
  for (double threshold : {tol, 0.0}) {
    for (std::size_t i = 0; i < F.size(); ++i) {
      if (alpha[i] > threshold) {
        sum += y[i] - F[i] - alpha[i] * y[i] / C;
        ++count;
      }
    }
    if (count > 0) return sum / static_cast<double>(count);
  }
  return 0.0;
}

void check_inputs(const Matrix& X, std::span<const int> y) {
  if (X.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "label count does not match row count");
  }
  if (X.rows() < 2) throw Error(ErrorKind::SingleClassInput, "need at least two training rows");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) pos = true;
    else if (v == -1) neg = true;
    else throw Error(ErrorKind::UnknownLabel, "SVM labels must be +1 or -1");
  }
  if (!pos || !neg) throw Error(ErrorKind::SingleClassInput, "training data contains a single class");
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteInput, "training matrix has a non-finite value");
  }
}

}  // namespace

double kkt_residual(const Matrix& X, std::span<const int> y, std::span<const double> alpha,
                    double bias, const SvmConfig& config) {
  const Matrix gram = gram_matrix(config.kernel, X, config.C);
  const auto F = expansion_values(gram, y, alpha, config.C);
  return residual_from_expansion(F, y, alpha, bias, config.C, config.tol);
}

TrainResult train_detailed(const Matrix& X, std::span<const int> y, const SvmConfig& config) {
  validate(config);
  check_inputs(X, y);
  const std::size_t n = X.rows();
  const double C = config.C;

  TrainResult result;
  TrainingState& st = result.state;
  st.gram = gram_matrix(config.kernel, X, C);
  const Matrix& K = st.gram;
  st.alpha.assign(n, 0.0);
  auto& alpha = st.alpha;

  // Minimizing f = 1/2 a'Qa - e'a, Q_ij = y_i y_j K~_ij; G is its gradient.
  std::vector<double> G(n, -1.0);
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K(i, j); };
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (G[t] - 1.0);
    return -0.5 * f;
  };
  st.objective_trace.push_back(0.0);

  const std::size_t budget = static_cast<std::size_t>(config.max_iter) * n;
  std::size_t updates = 0;
  double eps = config.tol;
  bool converged = false;
  double bias = 0.0, residual = std::numeric_limits<double>::infinity();

  while (true) {
    // Maximal violating pair. I_up: y=+1 or alpha>0; I_low: y=-1 or alpha>0.
    std::size_t i = n, j = n;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      if ((y[t] == 1 || alpha[t] > 0.0) && v > gmax) {
        gmax = v;
        i = t;
      }
      if ((y[t] == -1 || alpha[t] > 0.0) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    const double gap = gmax - gmin;

    if (gap <= eps || i == n || j == n) {
      const auto F = expansion_values(K, y, alpha, C);
      bias = bias_from_expansion(F, y, alpha, C, config.tol);
      residual = residual_from_expansion(F, y, alpha, bias, C, config.tol);
      if (residual <= config.tol) {
        converged = true;
        break;
      }
      if (eps < 1e-15) break;
      eps *= 0.1;
      continue;
    }
    if (updates >= budget) {
      const auto F = expansion_values(K, y, alpha, C);
      bias = bias_from_expansion(F, y, alpha, C, config.tol);
      residual = residual_from_expansion(F, y, alpha, bias, C, config.tol);
      converged = residual <= config.tol;
      break;
    }

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      const double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
    } else {
      const double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;

    ++updates;
    if (updates % n == 0) st.objective_trace.push_back(objective());
  }
  st.objective_trace.push_back(objective());

  SvmModel& model = result.model;
  model.kernel = config.kernel;
  model.C = C;
  model.bias = bias;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > config.tol) {
      model.support_vectors.emplace_back(X.row(t).begin(), X.row(t).end());
      model.dual_coef.push_back(alpha[t] * y[t]);
    }
  }
  if (model.support_vectors.empty()) {
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] > 0.0) {
        model.support_vectors.emplace_back(X.row(t).begin(), X.row(t).end());
        model.dual_coef.push_back(alpha[t] * y[t]);
      }
    }
  }
  model.training_meta = TrainingMeta{n, (updates + n - 1) / n, residual, converged};
  return result;
}

SvmModel train(const Matrix& X, std::span<const int> y, const SvmConfig& config) {
  return train_detailed(X, y, config).model;
}

SvmModel train(const SignatureDatabase& db, const SvmConfig& config) {
  if (db.label_kind() != LabelKind::Link) {
    throw Error(ErrorKind::UnknownLabel, "SVM training needs +1/-1 labels");
  }
  if (db.stage == DbStage::Preliminary) {
    throw Error(ErrorKind::StageMismatch, "SVM training needs a scaled or optimum database");
  }
  const auto labels = db.label_values();
  SvmModel model = train(db.matrix(), labels, config);
  model.catalog_version = db.catalog_version;
  model.scaler = db.scaler;
  if (db.selected_features) model.feature_subset = *db.selected_features;
  return model;
}

double decision_value(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "model expects " + std::to_string(model.input_dim()) +
                                                  " features, got " + std::to_string(x.size()));
  }
  double d = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    d += model.dual_coef[i] * kernel_eval(model.kernel, model.support_vectors[i], x);
  }
  return d;
}

int classify(const SvmModel& model, std::span<const double> x) {
  return classify(decision_value(model, x));
}

std::vector<double> prepare_input(const SvmModel& model, std::span<const double> raw) {
  std::vector<double> scaled = model.scaler ? apply_scaler(raw, *model.scaler)
                                            : std::vector<double>(raw.begin(), raw.end());
  if (model.feature_subset.empty()) return scaled;
  std::vector<double> out;
  out.reserve(model.feature_subset.size());
  for (std::size_t idx : model.feature_subset) {
    if (idx >= scaled.size()) {
      throw Error(ErrorKind::IndexOutOfRange, "feature index " + std::to_string(idx) +
                                                  " outside signature of size " +
                                                  std::to_string(scaled.size()));
    }
    out.push_back(scaled[idx]);
  }
  return out;
}

json to_json(const SvmModel& model) {
  json kernel = {{"variant", std::string(to_string(model.kernel.type))}};
  if (model.kernel.type == KernelType::Rbf) kernel["sigma"] = model.kernel.sigma;
  json j;
  j["kernel"] = kernel;
  j["C"] = model.C;
  j["bias"] = model.bias;
  j["dual_coef"] = model.dual_coef;
  j["support_vectors"] = model.support_vectors;
  j["feature_subset"] = model.feature_subset;
  if (model.scaler) {
    j["scaler"] = {{"min", model.scaler->min},
                   {"max", model.scaler->max},
                   {"fitted_on", model.scaler->fitted_on}};
  } else {
    j["scaler"] = nullptr;
  }
  j["catalog_version"] = model.catalog_version;
  j["training_meta"] = {{"n", model.training_meta.n},
                        {"iterations_used", model.training_meta.iterations_used},
                        {"final_kkt_residual", model.training_meta.final_kkt_residual},
                        {"converged", model.training_meta.converged}};
  return j;
}

SvmModel model_from_json(const json& j) {
  try {
    SvmModel m;
    const auto& k = j.at("kernel");
    m.kernel.type = parse_kernel_type(k.at("variant").get<std::string>());
    if (m.kernel.type == KernelType::Rbf) m.kernel.sigma = k.at("sigma").get<double>();
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.dual_coef = j.at("dual_coef").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.feature_subset = j.at("feature_subset").get<std::vector<std::size_t>>();
    if (!j.at("scaler").is_null()) {
      const auto& s = j.at("scaler");
      m.scaler = ScalerParams{s.at("min").get<std::vector<double>>(),
                              s.at("max").get<std::vector<double>>(),
                              s.value("fitted_on", std::size_t{0})};
    }
    m.catalog_version = j.at("catalog_version").get<std::string>();
    const auto& meta = j.at("training_meta");
    m.training_meta.n = meta.at("n").get<std::size_t>();
    m.training_meta.iterations_used = meta.at("iterations_used").get<std::size_t>();
    m.training_meta.final_kkt_residual = meta.at("final_kkt_residual").get<double>();
    m.training_meta.converged = meta.at("converged").get<bool>();
    if (m.support_vectors.size() != m.dual_coef.size() || m.support_vectors.empty()) {
      throw Error(ErrorKind::ConfigError, "model needs matching, non-empty support vectors and coefficients");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed model JSON: ") + e.what());
  }
}

std::string serialize_model(const SvmModel& model) { return to_json(model).dump(2) + "\n"; }

}  // namespace netdiag
