#include "netdiag/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "netdiag/error.hpp"

namespace netdiag {

using nlohmann::json;

namespace {

SignatureDatabase subset(const SignatureDatabase& db, std::span<const std::size_t> rows) {
  SignatureDatabase out;
  out.stage = db.stage;
  out.feature_names = db.feature_names;
  out.catalog_version = db.catalog_version;
  out.fault_registry = db.fault_registry;
  out.scaler = db.scaler;
  out.selected_features = db.selected_features;
  out.rows.reserve(rows.size());
  for (std::size_t r : rows) out.rows.push_back(db.rows[r]);
  return out;
}

int kernel_rank(KernelType t) { return static_cast<int>(t); }

bool simpler(const GridCell& a, const GridCell& b) {
  if (a.kernel != b.kernel) return kernel_rank(a.kernel) < kernel_rank(b.kernel);
  if (a.c != b.c) return a.c < b.c;
  return a.sigma_factor.value_or(0.0) < b.sigma_factor.value_or(0.0);
}

std::string join(const std::set<std::string>& names, const char* sep) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += sep;
    out += n;
  }
  return out;
}

class ReportBuilder {
 public:
  void add(const std::string& id, bool link_faulty, const std::set<std::string>& expected,
           const Verdict& v, bool gated = true) {
    const bool said_faulty = v.link == LinkStatus::Faulty;
    if (gated) report_.lpd.add(link_faulty ? 1 : -1, said_faulty ? 1 : -1);
    for (const auto& d : v.per_module_decisions) {
      if (d.stage == "lpd") continue;
      const int truth = expected.count(d.stage) ? 1 : -1;
      report_.modules[d.stage].add(truth, d.classification);
      if (!link_faulty && (expected.empty() || (expected.size() == 1 && truth == 1))) {
        report_.own_task[d.stage].add(truth, d.classification);
      }
    }
    const std::string cat = category_name(link_faulty, expected);
    bool correct;
    bool flagged;
    if (link_faulty) {
      correct = flagged = said_faulty;
    } else {
      correct = !said_faulty && v.client_faults == expected;
      flagged = !said_faulty && (expected.empty() ? v.client_faults.empty()
                                                  : std::includes(v.client_faults.begin(),
                                                                  v.client_faults.end(),
                                                                  expected.begin(), expected.end()));
    }
    auto& row = rows_[cat];
    row.category = cat;
    ++row.n;
    if (correct) ++row.correct;
    if (flagged) ++row.flagged;
    report_.verdicts.emplace_back(id, v);
  }

  VerdictReport finish() {
    // Fixed leading rows, then fault sets alphabetically.
    for (const char* fixed : {"faulty link", "default client"}) {
      if (auto it = rows_.find(fixed); it != rows_.end()) {
        report_.categories.push_back(it->second);
        rows_.erase(it);
      }
    }
    for (auto& [name, row] : rows_) report_.categories.push_back(row);
    return std::move(report_);
  }

 private:
  VerdictReport report_;
  std::map<std::string, CategoryRow> rows_;
};

void require_items(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::ConfigError, "nothing to evaluate");
}

}  // namespace

CvResult cross_validate(const SignatureDatabase& psd, const PipelineConfig& config,
                        std::span<const std::size_t> fold_of_row, std::size_t k) {
  if (fold_of_row.size() != psd.size()) {
    throw Error(ErrorKind::DimensionMismatch, "fold assignment does not match the database");
  }
  const std::vector<int> y = psd.label_values();
  CvResult out;
  out.fold_of_row.assign(fold_of_row.begin(), fold_of_row.end());
  double acc_sum = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < y.size(); ++i) (fold_of_row[i] == f ? test_rows : train_rows).push_back(i);
    const auto fit = fit_binary_pipeline(subset(psd, train_rows), config);
    ConfusionMatrix cm;
    for (std::size_t i : test_rows) {
      const auto x = prepare_input(fit.model, psd.rows[i].values);
      cm.add(y[i], classify(fit.model, x));
    }
    acc_sum += cm.accuracy();
    out.folds.push_back(cm);
    out.fold_models.push_back(fit.model);
  }
  out.mean_accuracy = k == 0 ? 0.0 : acc_sum / static_cast<double>(k);
  return out;
}

CvResult k_fold_cv(const SignatureDatabase& psd, const PipelineConfig& config, std::size_t k,
                   std::uint64_t seed) {
  if (psd.label_kind() != LabelKind::Link) {
    throw Error(ErrorKind::UnknownLabel, "cross-validation expects +1/-1 labels");
  }
  const std::vector<int> y = psd.label_values();
  const auto folds = stratified_folds(y, k, seed);
  return cross_validate(psd, config, folds, k);
}

GridResult select_model(const SignatureDatabase& psd, const GridSpec& grid,
                        const PipelineConfig& base, std::size_t k, std::uint64_t seed) {
  if (grid.kernels.empty() || grid.c_values.empty()) {
    throw Error(ErrorKind::ConfigError, "model grid is empty");
  }
  if (std::find(grid.kernels.begin(), grid.kernels.end(), KernelType::Rbf) != grid.kernels.end() &&
      grid.sigma_factors.empty()) {
    throw Error(ErrorKind::ConfigError, "rbf kernel in the grid needs at least one sigma factor");
  }
  const std::vector<int> y = psd.label_values();
  const auto folds = stratified_folds(y, k, seed);

  GridResult result;
  result.grid = grid;
  for (KernelType kernel : grid.kernels) {
    for (double c : grid.c_values) {
      std::vector<std::optional<double>> sigmas;
      if (kernel == KernelType::Rbf) {
        sigmas.assign(grid.sigma_factors.begin(), grid.sigma_factors.end());
      } else {
        sigmas.push_back(std::nullopt);
      }
      for (const auto& sigma : sigmas) {
        PipelineConfig cfg = base;
        cfg.svm.kernel = {kernel, sigma.value_or(1.0)};
        cfg.svm.C = c;
        GridCell cell;
        cell.kernel = kernel;
        cell.c = c;
        cell.sigma_factor = sigma;
        cell.accuracy = cross_validate(psd, cfg, folds, k).mean_accuracy;
        result.cells.push_back(cell);
      }
    }
  }
  double best_acc = -1.0;
  for (const auto& cell : result.cells) best_acc = std::max(best_acc, cell.accuracy);
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    if (result.cells[i].accuracy == best_acc) result.tied.push_back(i);
  }
  std::sort(result.tied.begin(), result.tied.end(), [&](std::size_t a, std::size_t b) {
    return simpler(result.cells[a], result.cells[b]);
  });
  result.best = result.tied.front();
  return result;
}

PipelineConfig apply_grid_choice(const PipelineConfig& base, const GridResult& result) {
  PipelineConfig cfg = base;
  const auto& cell = result.cells.at(result.best);
  cfg.svm.kernel = {cell.kernel, cell.sigma_factor.value_or(base.svm.kernel.sigma_factor)};
  cfg.svm.C = cell.c;
  return cfg;
}

json to_json(const GridResult& result) {
  json cells = json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"kernel", to_string(c.kernel)},
                     {"C", c.c},
                     {"sigma_factor", c.sigma_factor ? json(*c.sigma_factor) : json(nullptr)},
                     {"cv_accuracy", c.accuracy}});
  }
  return {{"cells", cells}, {"best", result.best}, {"tied", result.tied}};
}

const CategoryRow* VerdictReport::category(const std::string& name) const {
  for (const auto& row : categories) {
    if (row.category == name) return &row;
  }
  return nullptr;
}

std::string category_name(bool link_faulty, const std::set<std::string>& client_faults) {
  if (link_faulty) return "faulty link";
  if (client_faults.empty()) return "default client";
  return join(client_faults, "+");
}

VerdictReport evaluate_verdicts(std::span<const LabeledPair> pairs, const LpdClassifier& lpd,
                                const CfdNetwork& cfd) {
  require_items(pairs.size());
  ReportBuilder b;
  for (const auto& p : pairs) b.add(p.id, p.link_faulty, p.client_faults, diagnose(lpd, cfd, p.pair));
  return b.finish();
}

VerdictReport evaluate_signature_verdicts(std::span<const LabeledSignature> items,
                                          const LpdClassifier& lpd, const CfdNetwork& cfd) {
  require_items(items.size());
  ReportBuilder b;
  for (const auto& it : items) {
    b.add(it.id, it.link_faulty, it.client_faults, diagnose_signature(lpd, cfd, it.signature));
  }
  return b.finish();
}

VerdictReport evaluate_cfd(std::span<const LabeledSignature> items, const CfdNetwork& cfd) {
  require_items(items.size());
  ReportBuilder b;
  for (const auto& it : items) {
    if (it.link_faulty) {
      throw Error(ErrorKind::ConfigError, "CFD-only evaluation needs healthy-link items (" + it.id + ")");
    }
    Verdict v;
    v.per_module_decisions = run_cfd(cfd, it.signature);
    v.client_faults = cfd_collective(v.per_module_decisions);
    b.add(it.id, false, it.client_faults, v, false);
  }
  return b.finish();
}

json to_json(const VerdictReport& report) {
  json cats = json::array();
  for (const auto& c : report.categories) {
    cats.push_back({{"category", c.category},
                    {"n", c.n},
                    {"correct", c.correct},
                    {"accuracy", c.accuracy()},
                    {"flagged", c.flagged},
                    {"detection", c.detection()}});
  }
  json modules = json::object();
  for (const auto& [name, cm] : report.modules) modules[name] = to_json(cm);
  json own = json::object();
  for (const auto& [name, cm] : report.own_task) own[name] = to_json(cm);
  json verdicts = json::array();
  for (const auto& [id, v] : report.verdicts) {
    json j = to_json(v);
    j["id"] = id;
    verdicts.push_back(std::move(j));
  }
  return {{"lpd", to_json(report.lpd)},
          {"modules", modules},
          {"own_task", own},
          {"categories", cats},
          {"verdicts", verdicts}};
}

std::string text_table(const VerdictReport& report) {
  std::size_t width = std::string("category").size();
  for (const auto& c : report.categories) width = std::max(width, c.category.size());
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s %6s %8s %9s %10s\n", static_cast<int>(width), "category",
                "n", "correct", "accuracy", "detection");
  out << line;
  for (const auto& c : report.categories) {
    std::snprintf(line, sizeof line, "%-*s %6zu %8zu %8.2f%% %9.2f%%\n", static_cast<int>(width),
                  c.category.c_str(), c.n, c.correct, 100.0 * c.accuracy(), 100.0 * c.detection());
    out << line;
  }
  if (!report.modules.empty()) {
    out << "\n";
    std::size_t mw = std::string("module").size();
    for (const auto& [name, cm] : report.modules) mw = std::max(mw, name.size());
    std::snprintf(line, sizeof line, "%-*s %5s %5s %5s %5s %9s %7s %9s\n", static_cast<int>(mw),
                  "module", "tp", "fp", "tn", "fn", "accuracy", "fpr", "own_task");
    out << line;
    for (const auto& [name, cm] : report.modules) {
      auto it = report.own_task.find(name);
      const double own = it == report.own_task.end() ? 0.0 : it->second.accuracy();
      std::snprintf(line, sizeof line, "%-*s %5zu %5zu %5zu %5zu %8.2f%% %6.2f%% %8.2f%%\n",
                    static_cast<int>(mw), name.c_str(), cm.tp, cm.fp, cm.tn, cm.fn,
                    100.0 * cm.accuracy(), 100.0 * cm.false_positive_rate(), 100.0 * own);
      out << line;
    }
  }
  return out.str();
}

}  // namespace netdiag
