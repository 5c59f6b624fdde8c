#include "netdiag/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

#include "netdiag/error.hpp"

namespace netdiag {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ConfigError, where + ": " + what);
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) bad(where, "unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "wrong type");
  }
}

std::uint64_t get_count(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    bad(where + "." + key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string_view objective_name(SelectionObjective o) {
  return o == SelectionObjective::Accuracy ? "accuracy" : "accuracy_minus_fp";
}

SelectionObjective parse_objective(const std::string& s, const std::string& where) {
  if (s == "accuracy") return SelectionObjective::Accuracy;
  if (s == "accuracy_minus_fp") return SelectionObjective::AccuracyMinusFalsePositives;
  bad(where, "unknown objective '" + s + "'");
}

KernelType parse_kernel(const std::string& s, const std::string& where) {
  try {
    return parse_kernel_type(s);
  } catch (const Error&) {
    bad(where, "unknown kernel '" + s + "'");
  }
}

void validate_stage(const PipelineConfig& c, const std::string& where) {
  if (!(c.svm.C > 0.0)) bad(where, "C must be positive");
  if (c.svm.max_iter <= 0) bad(where, "max_iter must be positive");
  if (!(c.svm.tol > 0.0)) bad(where, "tol must be positive");
  if (!(c.svm.kernel.sigma_factor > 0.0)) bad(where, "sigma_factor must be positive");
  if (c.folds < 2) bad(where, "folds must be at least 2");
  if (c.fp_penalty < 0.0) bad(where, "fp_penalty must be non-negative");
  for (auto q : c.candidate_sizes) {
    if (q == 0) bad(where, "candidate sizes must be positive");
  }
}

GridSpec grid_from_json(const json& j, const std::string& where) {
  check_keys(j, {"kernels", "C", "sigma_factors"}, where);
  GridSpec g;
  for (const auto& k : get<std::vector<std::string>>(j, "kernels", where)) {
    g.kernels.push_back(parse_kernel(k, where + ".kernels"));
  }
  g.c_values = get<std::vector<double>>(j, "C", where);
  if (j.contains("sigma_factors")) g.sigma_factors = get<std::vector<double>>(j, "sigma_factors", where);
  return g;
}

json grid_to_json(const GridSpec& g) {
  json kernels = json::array();
  for (auto k : g.kernels) kernels.push_back(to_string(k));
  return {{"kernels", kernels}, {"C", g.c_values}, {"sigma_factors", g.sigma_factors}};
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig c) {
  const std::string where = "stage";
  check_keys(j,
             {"kernel", "sigma_factor", "C", "max_iter", "tol", "candidate_sizes", "folds", "objective",
              "fp_penalty", "welch"},
             where);
  if (j.contains("kernel")) c.svm.kernel.type = parse_kernel(get<std::string>(j, "kernel", where), where);
  if (j.contains("sigma_factor")) c.svm.kernel.sigma_factor = get<double>(j, "sigma_factor", where);
  if (j.contains("C")) c.svm.C = get<double>(j, "C", where);
  if (j.contains("max_iter")) c.svm.max_iter = static_cast<int>(get_count(j, "max_iter", where));
  if (j.contains("tol")) c.svm.tol = get<double>(j, "tol", where);
  if (j.contains("candidate_sizes")) {
    c.candidate_sizes = get<std::vector<std::size_t>>(j, "candidate_sizes", where);
  }
  if (j.contains("folds")) c.folds = get_count(j, "folds", where);
  if (j.contains("objective")) {
    c.objective = parse_objective(get<std::string>(j, "objective", where), where);
  }
  if (j.contains("fp_penalty")) c.fp_penalty = get<double>(j, "fp_penalty", where);
  if (j.contains("welch")) c.welch = get<bool>(j, "welch", where);
  return c;
}

json to_json(const PipelineConfig& c) {
  return {{"kernel", to_string(c.svm.kernel.type)},
          {"sigma_factor", c.svm.kernel.sigma_factor},
          {"C", c.svm.C},
          {"max_iter", c.svm.max_iter},
          {"tol", c.svm.tol},
          {"candidate_sizes", c.candidate_sizes},
          {"folds", c.folds},
          {"objective", objective_name(c.objective)},
          {"fp_penalty", c.fp_penalty},
          {"welch", c.welch}};
}

CliConfig::CliConfig() {
  for (const auto& [name, index] : fault_registry) cfd[name] = default_cf_config(name);
}

PipelineConfig CliConfig::lpd_stage() const {
  PipelineConfig c = lpd;
  c.seed = seed;
  return c;
}

std::map<std::string, PipelineConfig> CliConfig::cfd_stages() const {
  auto out = cfd;
  for (auto& [name, c] : out) c.seed = seed;
  return out;
}

void CliConfig::validate() const {
  if (catalog_version.empty()) bad("catalog_version", "must not be empty");
  if (link_profile.empty()) bad("link_profile", "must not be empty");
  validate_stage(lpd, "lpd");
  if (fault_registry.empty()) bad("fault_registry", "must not be empty");
  std::set<int> seen;
  for (const auto& [name, index] : fault_registry) {
    if (index < 1) bad("fault_registry." + name, "indices start at 1");
    if (!seen.insert(index).second) bad("fault_registry." + name, "duplicate index");
  }
  for (const auto& [name, c] : cfd) {
    if (!fault_registry.count(name)) bad("cfd." + name, "fault is not registered");
    validate_stage(c, "cfd." + name);
  }
  if (lpd_grid) {
    if (lpd_grid->kernels.empty() || lpd_grid->c_values.empty()) bad("lpd_grid", "empty grid");
    for (double c : lpd_grid->c_values) {
      if (!(c > 0.0)) bad("lpd_grid.C", "values must be positive");
    }
    for (double s : lpd_grid->sigma_factors) {
      if (!(s > 0.0)) bad("lpd_grid.sigma_factors", "values must be positive");
    }
  }
  if (grid_folds < 2) bad("grid_folds", "must be at least 2");
}

CliConfig config_from_json(const json& j) {
  check_keys(j,
             {"catalog_version", "seed", "link_profile", "lpd", "cfd", "fault_registry", "lpd_grid",
              "grid_folds", "paths"},
             "config");
  CliConfig c;
  if (j.contains("catalog_version")) c.catalog_version = get<std::string>(j, "catalog_version", "config");
  if (j.contains("seed")) c.seed = get_count(j, "seed", "config");
  if (j.contains("link_profile")) c.link_profile = get<std::string>(j, "link_profile", "config");
  if (j.contains("fault_registry")) {
    const json& r = j.at("fault_registry");
    require_object(r, "fault_registry");
    c.fault_registry.clear();
    for (const auto& [name, v] : r.items()) {
      if (!v.is_number_integer()) bad("fault_registry." + name, "expected an integer index");
      c.fault_registry[name] = v.get<int>();
    }
    c.cfd.clear();
    for (const auto& [name, index] : c.fault_registry) c.cfd[name] = default_cf_config(name);
  }
  if (j.contains("lpd")) {
    try {
      c.lpd = pipeline_config_from_json(j.at("lpd"), c.lpd);
    } catch (const Error& e) {
      bad("lpd", e.what());
    }
  }
  if (j.contains("cfd")) {
    const json& m = j.at("cfd");
    require_object(m, "cfd");
    for (const auto& [name, v] : m.items()) {
      if (!c.fault_registry.count(name)) bad("cfd." + name, "fault is not registered");
      try {
        c.cfd[name] = pipeline_config_from_json(v, c.cfd[name]);
      } catch (const Error& e) {
        bad("cfd." + name, e.what());
      }
    }
  }
  if (j.contains("lpd_grid")) c.lpd_grid = grid_from_json(j.at("lpd_grid"), "lpd_grid");
  if (j.contains("grid_folds")) c.grid_folds = get_count(j, "grid_folds", "config");
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    check_keys(p, {"bundle"}, "paths");
    if (p.contains("bundle")) c.bundle_path = get<std::string>(p, "bundle", "paths");
  }
  c.validate();
  return c;
}

json to_json(const CliConfig& c) {
  json cfd = json::object();
  for (const auto& [name, s] : c.cfd) cfd[name] = to_json(s);
  json j = {{"catalog_version", c.catalog_version},
            {"seed", c.seed},
            {"link_profile", c.link_profile},
            {"lpd", to_json(c.lpd)},
            {"cfd", cfd},
            {"fault_registry", c.fault_registry},
            {"grid_folds", c.grid_folds}};
  if (c.lpd_grid) j["lpd_grid"] = grid_to_json(*c.lpd_grid);
  if (c.bundle_path) j["paths"] = {{"bundle", c.bundle_path->string()}};
  return j;
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace netdiag
