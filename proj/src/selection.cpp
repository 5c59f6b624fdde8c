#include "netdiag/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "netdiag/error.hpp"
#include "netdiag/metrics.hpp"

namespace netdiag {

using nlohmann::json;

namespace {

struct Moments {
  double mean;
  double var;  // unbiased
};

Moments moments(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(v.size() - 1)};
}

json optional_array(const std::vector<std::optional<double>>& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x ? json(*x) : json(nullptr));
  return out;
}

std::vector<std::optional<double>> optional_from(const json& j) {
  std::vector<std::optional<double>> out;
  for (const auto& x : j) out.push_back(x.is_null() ? std::nullopt : std::optional<double>(x.get<double>()));
  return out;
}

}  // namespace

double t_statistic(std::span<const double> a, std::span<const double> b, bool welch) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorKind::TooFewSamples, "t-test needs at least 2 samples per group");
  }
  const auto ma = moments(a);
  const auto mb = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double se2;
  if (welch) {
    se2 = std::max(ma.var, kVarianceFloor) / na + std::max(mb.var, kVarianceFloor) / nb;
  } else {
    const double pooled = ((na - 1.0) * ma.var + (nb - 1.0) * mb.var) / (na + nb - 2.0);
    se2 = std::max(pooled, kVarianceFloor) * (1.0 / na + 1.0 / nb);
  }
  return (ma.mean - mb.mean) / std::sqrt(se2);
}

TTestRanking rank_features(const SignatureDatabase& db, int positive, int negative, bool welch) {
  std::vector<std::size_t> pos_rows, neg_rows;
  for (std::size_t i = 0; i < db.rows.size(); ++i) {
    const auto& label = db.rows[i].label;
    if (!label) continue;
    if (label->value == positive) pos_rows.push_back(i);
    else if (label->value == negative) neg_rows.push_back(i);
  }
  if (pos_rows.size() < 2 || neg_rows.size() < 2) {
    throw Error(ErrorKind::MissingClass, "ranking needs at least 2 rows of class " +
                                             std::to_string(positive) + " and of class " +
                                             std::to_string(negative));
  }
  const std::size_t m = db.dim();
  TTestRanking r;
  r.t_statistic.resize(m);
  std::vector<double> a(pos_rows.size()), b(neg_rows.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < pos_rows.size(); ++i) a[i] = db.rows[pos_rows[i]].values[j];
    for (std::size_t i = 0; i < neg_rows.size(); ++i) b[i] = db.rows[neg_rows[i]].values[j];
    r.t_statistic[j] = t_statistic(a, b, welch);
  }
  r.abs_t_order.resize(m);
  std::iota(r.abs_t_order.begin(), r.abs_t_order.end(), std::size_t{0});
  std::sort(r.abs_t_order.begin(), r.abs_t_order.end(), [&](std::size_t x, std::size_t y) {
    const double ax = std::abs(r.t_statistic[x]);
    const double ay = std::abs(r.t_statistic[y]);
    return ax != ay ? ax > ay : x < y;
  });
  return r;
}

std::vector<std::size_t> default_candidate_sizes(std::size_t m) {
  std::set<std::size_t> sizes;
  for (std::size_t q : {5, 10, 15, 20, 25, 50, 75, 100}) {
    if (q >= 1 && q <= m) sizes.insert(q);
  }
  if (m >= 1) sizes.insert(m);
  return {sizes.begin(), sizes.end()};
}

json to_json(const SelectionReport& report) {
  return {{"candidate_sizes", report.candidate_sizes},
          {"cv_accuracy", optional_array(report.cv_accuracy)},
          {"cv_score", optional_array(report.cv_score)},
          {"chosen_q", report.chosen_q},
          {"chosen_indices", report.chosen_indices}};
}

SelectionReport selection_from_json(const json& j) {
  try {
    SelectionReport r;
    r.candidate_sizes = j.at("candidate_sizes").get<std::vector<std::size_t>>();
    r.cv_accuracy = optional_from(j.at("cv_accuracy"));
    r.cv_score = optional_from(j.at("cv_score"));
    r.chosen_q = j.at("chosen_q").get<std::size_t>();
    r.chosen_indices = j.at("chosen_indices").get<std::vector<std::size_t>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed selection report: ") + e.what());
  }
}

SelectionReport fixed_selection(const TTestRanking& ranking, std::size_t q) {
  if (q == 0 || q > ranking.abs_t_order.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "feature count " + std::to_string(q) +
                                                " outside [1, " +
                                                std::to_string(ranking.abs_t_order.size()) + "]");
  }
  SelectionReport r;
  r.candidate_sizes = {q};
  r.cv_accuracy = {std::nullopt};
  r.cv_score = {std::nullopt};
  r.chosen_q = q;
  r.chosen_indices.assign(ranking.abs_t_order.begin(), ranking.abs_t_order.begin() + q);
  return r;
}

SelectionReport wrapper_select(const SignatureDatabase& db, const TTestRanking& ranking,
                               const WrapperConfig& config, const SvmSettings& svm) {
  const std::size_t m = db.dim();
  if (ranking.abs_t_order.size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "ranking does not match database width");
  }
  if (config.folds < 2) throw Error(ErrorKind::ConfigError, "wrapper selection needs k >= 2");
  std::vector<std::size_t> sizes =
      config.candidate_sizes.empty() ? default_candidate_sizes(m) : config.candidate_sizes;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (std::size_t q : sizes) {
    if (q == 0 || q > m) {
      throw Error(ErrorKind::IndexOutOfRange, "candidate size " + std::to_string(q) +
                                                  " outside [1, " + std::to_string(m) + "]");
    }
  }
  const std::vector<int> y = db.label_values();
  const auto n_pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const auto n_neg = static_cast<std::size_t>(std::count(y.begin(), y.end(), -1));
  if (n_pos + n_neg != y.size()) {
    throw Error(ErrorKind::UnknownLabel, "wrapper selection needs +1/-1 labels");
  }
  if (n_pos < config.folds || n_neg < config.folds) {
    throw Error(ErrorKind::InsufficientRows,
                "wrapper selection with k=" + std::to_string(config.folds) +
                    " needs at least k rows per class");
  }
  const auto folds = stratified_folds(y, config.folds, config.seed);
  const Matrix X = db.matrix();

  SelectionReport report;
  report.candidate_sizes = sizes;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t q : sizes) {
    const std::vector<std::size_t> cols(ranking.abs_t_order.begin(), ranking.abs_t_order.begin() + q);
    const SvmConfig cfg = svm.resolve(q);
    double acc_sum = 0.0;
    ConfusionMatrix pooled;
    for (std::size_t f = 0; f < config.folds; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      for (std::size_t i = 0; i < y.size(); ++i) (folds[i] == f ? test_rows : train_rows).push_back(i);
      Matrix Xtr(train_rows.size(), q);
      std::vector<int> ytr;
      for (std::size_t r = 0; r < train_rows.size(); ++r) {
        for (std::size_t c = 0; c < q; ++c) Xtr(r, c) = X(train_rows[r], cols[c]);
        ytr.push_back(y[train_rows[r]]);
      }
      const SvmModel model = train(Xtr, ytr, cfg);
      ConfusionMatrix cm;
      std::vector<double> x(q);
      for (std::size_t i : test_rows) {
        for (std::size_t c = 0; c < q; ++c) x[c] = X(i, cols[c]);
        cm.add(y[i], classify(model, x));
      }
      acc_sum += cm.accuracy();
      pooled += cm;
    }
    const double accuracy = acc_sum / static_cast<double>(config.folds);
    double score = accuracy;
    if (config.objective == SelectionObjective::AccuracyMinusFalsePositives) {
      score -= config.fp_penalty * pooled.false_positive_rate();
    }
    report.cv_accuracy.push_back(accuracy);
    report.cv_score.push_back(score);
    if (score > best_score) {
      best_score = score;
      report.chosen_q = q;
    }
  }
  report.chosen_indices.assign(ranking.abs_t_order.begin(),
                               ranking.abs_t_order.begin() + report.chosen_q);
  return report;
}

SignatureDatabase project(const SignatureDatabase& db, std::span<const std::size_t> indices) {
  if (db.stage != DbStage::Scaled) {
    throw Error(ErrorKind::StageMismatch, "projection applies to a scaled database, got " +
                                              std::string(to_string(db.stage)));
  }
  std::set<std::size_t> seen;
  for (std::size_t idx : indices) {
    if (idx >= db.dim()) {
      throw Error(ErrorKind::IndexOutOfRange, "feature index " + std::to_string(idx) +
                                                  " outside [0, " + std::to_string(db.dim()) + ")");
    }
    if (!seen.insert(idx).second) {
      throw Error(ErrorKind::IndexOutOfRange, "duplicate feature index " + std::to_string(idx));
    }
  }
  SignatureDatabase out;
  out.stage = DbStage::Optimum;
  out.catalog_version = db.catalog_version;
  out.fault_registry = db.fault_registry;
  out.scaler = db.scaler;
  out.selected_features = std::vector<std::size_t>(indices.begin(), indices.end());
  for (std::size_t idx : indices) out.feature_names.push_back(db.feature_names[idx]);
  out.rows.reserve(db.rows.size());
  for (const auto& r : db.rows) {
    Signature s;
    s.label = r.label;
    s.catalog_version = r.catalog_version;
    s.values.reserve(indices.size());
    for (std::size_t idx : indices) s.values.push_back(r.values[idx]);
    out.rows.push_back(std::move(s));
  }
  return out;
}

}  // namespace netdiag
