#include "netdiag/diagnosis.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "netdiag/error.hpp"
#include "netdiag/rng.hpp"

namespace netdiag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_catalog(const SvmModel& model, const std::string& version, const std::string& stage) {
  if (!model.catalog_version.empty() && !version.empty() && model.catalog_version != version) {
    throw Error(ErrorKind::CatalogMismatch, stage + " model expects catalog '" +
                                                model.catalog_version + "', signature uses '" +
                                                version + "'");
  }
}

ModuleDecision evaluate(const SvmModel& model, const std::string& stage, const Signature& sig) {
  const auto x = prepare_input(model, sig.values);
  const double d = decision_value(model, x);
  return {stage, d, classify(d)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

WrapperConfig PipelineConfig::wrapper() const {
  return {candidate_sizes, folds, seed, objective, fp_penalty};
}

PipelineConfig default_lpd_config() {
  PipelineConfig c;
  c.svm.kernel = {KernelType::Quadratic, 1.0};
  c.svm.C = 10.0;
  c.svm.max_iter = 1000;
  return c;
}

PipelineConfig default_cf_config(const std::string& fault_name) {
  PipelineConfig c;
  c.svm.C = 10.0;
  c.svm.max_iter = 2000;
  c.objective = SelectionObjective::AccuracyMinusFalsePositives;
  if (fault_name == "sack_disabled") {
    c.svm.kernel = {KernelType::Linear, 1.0};
    c.candidate_sizes = {12};
  } else if (fault_name == "dsack_disabled") {
    c.svm.kernel = {KernelType::Rbf, 1.0};
    c.candidate_sizes = {32};
  } else if (fault_name == "read_buffer") {
    c.svm.kernel = {KernelType::Cubic, 1.0};
    c.candidate_sizes = {24};
  } else if (fault_name == "write_buffer") {
    c.svm.kernel = {KernelType::Rbf, 1.0};
    c.candidate_sizes = {16};
  } else {
    c.svm.kernel = {KernelType::Rbf, 1.0};
  }
  return c;
}

BinaryPipelineResult fit_binary_pipeline(const SignatureDatabase& psd, const PipelineConfig& config) {
  if (psd.stage != DbStage::Preliminary) {
    throw Error(ErrorKind::StageMismatch,
                "pipeline expects a preliminary database, got " + std::string(to_string(psd.stage)));
  }
  if (psd.label_kind() != LabelKind::Link) {
    throw Error(ErrorKind::UnknownLabel, "pipeline expects +1/-1 labels");
  }
  const std::size_t n_pos = psd.count_label(1);
  const std::size_t n_neg = psd.count_label(-1);
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorKind::SingleClassInput, "training data contains a single class (" +
                                                 std::to_string(n_pos) + " faulty, " +
                                                 std::to_string(n_neg) + " healthy)");
  }
  if (n_pos + n_neg != psd.size()) {
    throw Error(ErrorKind::UnknownLabel, "unlabelled rows in training data");
  }

  const ScalerParams scaler = fit_scaler(psd);
  const SignatureDatabase ssd = scale_database(psd, scaler);
  BinaryPipelineResult out;
  out.ranking = rank_features(ssd, 1, -1, config.welch);
  if (config.candidate_sizes.size() == 1) {
    out.selection = fixed_selection(out.ranking, config.candidate_sizes.front());
  } else {
    out.selection = wrapper_select(ssd, out.ranking, config.wrapper(), config.svm);
  }
  const SignatureDatabase osd = project(ssd, out.selection.chosen_indices);
  out.model = train(osd, config.svm.resolve(out.selection.chosen_q));
  return out;
}

SignatureDatabase cf_subset(const SignatureDatabase& cfd_db, int fault_index) {
  if (cfd_db.label_kind() != LabelKind::Client) {
    throw Error(ErrorKind::UnknownLabel, "client fault database expected");
  }
  if (cfd_db.stage != DbStage::Preliminary) {
    throw Error(ErrorKind::StageMismatch, "client fault subsets are cut from a preliminary database");
  }
  SignatureDatabase out;
  out.stage = DbStage::Preliminary;
  out.feature_names = cfd_db.feature_names;
  out.catalog_version = cfd_db.catalog_version;
  for (const auto& row : cfd_db.rows) {
    if (!row.label) continue;
    if (row.label->value != 0 && row.label->value != fault_index) continue;
    Signature s = row;
    s.label = row.label->value == fault_index ? Label::faulty_link() : Label::healthy_link();
    out.rows.push_back(std::move(s));
  }
  return out;
}

LpdClassifier train_lpd(const SignatureDatabase& psd, const PipelineConfig& config,
                        const std::string& link_profile) {
  if (psd.label_kind() != LabelKind::Link) {
    throw Error(ErrorKind::UnknownLabel, "link database expected for the LPD stage");
  }
  auto fit = fit_binary_pipeline(psd, config);
  return {std::move(fit.model), std::move(fit.selection), link_profile};
}

CfModule train_cf_module(const SignatureDatabase& cfd_db, int fault_index,
                         const PipelineConfig& config) {
  std::string name;
  for (const auto& [fault, idx] : cfd_db.fault_registry) {
    if (idx == fault_index) name = fault;
  }
  if (name.empty()) {
    throw Error(ErrorKind::UnknownLabel, "fault index " + std::to_string(fault_index) +
                                             " is not registered");
  }
  try {
    const SignatureDatabase sub = cf_subset(cfd_db, fault_index);
    auto fit = fit_binary_pipeline(sub, config);
    return {fault_index, name, std::move(fit.model), std::move(fit.selection)};
  } catch (const Error& e) {
    throw Error(e.kind(), "module " + name + ": " + e.what());
  }
}

CfdNetwork train_cfd(const SignatureDatabase& cfd_db,
                     const std::map<std::string, PipelineConfig>& configs) {
  if (cfd_db.fault_registry.empty()) {
    throw Error(ErrorKind::ConfigError, "fault registry is empty");
  }
  CfdNetwork net;
  net.fault_registry = cfd_db.fault_registry;
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [name, idx] : cfd_db.fault_registry) order.emplace_back(idx, name);
  std::sort(order.begin(), order.end());
  for (const auto& [idx, name] : order) {
    auto it = configs.find(name);
    const PipelineConfig cfg = it != configs.end() ? it->second : default_cf_config(name);
    net.modules.push_back(train_cf_module(cfd_db, idx, cfg));
  }
  return net;
}

void add_module(CfdNetwork& network, CfModule module) {
  network.fault_registry[module.fault_name] = module.fault_index;
  auto it = std::find_if(network.modules.begin(), network.modules.end(),
                         [&](const CfModule& m) { return m.fault_name == module.fault_name; });
  if (it != network.modules.end()) {
    *it = std::move(module);
  } else {
    network.modules.push_back(std::move(module));
  }
  std::stable_sort(network.modules.begin(), network.modules.end(),
                   [](const CfModule& a, const CfModule& b) { return a.fault_index < b.fault_index; });
}

std::set<std::string> cfd_collective(std::span<const ModuleDecision> decisions) {
  std::set<std::string> out;
  for (const auto& d : decisions) {
    if (d.stage != "lpd" && d.classification == 1) out.insert(d.stage);
  }
  return out;
}

json to_json(const Verdict& verdict) {
  json decisions = json::array();
  for (const auto& d : verdict.per_module_decisions) {
    decisions.push_back({{"stage", d.stage}, {"D", d.decision}, {"class", d.classification}});
  }
  return {{"link", verdict.link == LinkStatus::Faulty ? "faulty" : "healthy"},
          {"client_faults", verdict.client_faults},
          {"decisions", decisions},
          {"pipeline_note", verdict.pipeline_note == PipelineNote::LinkFaultStop ? "LinkFaultStop"
                                                                                 : "FullDiagnosis"}};
}

std::string summary_line(const Verdict& verdict) {
  std::ostringstream out;
  if (verdict.link == LinkStatus::Faulty) {
    out << "link: FAULTY (client checks skipped)";
    return out.str();
  }
  out << "link: healthy; client faults: ";
  if (verdict.client_faults.empty()) {
    out << "none";
  } else {
    bool first = true;
    for (const auto& f : verdict.client_faults) {
      out << (first ? "" : ", ") << f;
      first = false;
    }
  }
  return out.str();
}

std::vector<ModuleDecision> run_cfd(const CfdNetwork& network, const Signature& signature,
                                    std::span<const std::size_t> order) {
  std::vector<ModuleDecision> out(network.modules.size());
  std::vector<std::size_t> seq;
  if (order.empty()) {
    for (std::size_t i = 0; i < network.modules.size(); ++i) seq.push_back(i);
  } else {
    seq.assign(order.begin(), order.end());
  }
  for (std::size_t i : seq) {
    if (i >= network.modules.size()) {
      throw Error(ErrorKind::IndexOutOfRange, "module index " + std::to_string(i));
    }
    const auto& m = network.modules[i];
    check_catalog(m.model, signature.catalog_version, m.fault_name);
    out[i] = evaluate(m.model, m.fault_name, signature);
  }
  return out;
}

Verdict diagnose_signature(const LpdClassifier& lpd, const CfdNetwork& cfd,
                           const Signature& signature) {
  check_catalog(lpd.model, signature.catalog_version, "lpd");
  Verdict v;
  const ModuleDecision gate = evaluate(lpd.model, "lpd", signature);
  v.per_module_decisions.push_back(gate);
  if (gate.classification == 1) {
    v.link = LinkStatus::Faulty;
    v.pipeline_note = PipelineNote::LinkFaultStop;
    return v;
  }
  v.link = LinkStatus::Healthy;
  v.pipeline_note = PipelineNote::FullDiagnosis;
  const auto decisions = run_cfd(cfd, signature);
  v.per_module_decisions.insert(v.per_module_decisions.end(), decisions.begin(), decisions.end());
  v.client_faults = cfd_collective(decisions);
  return v;
}

Verdict diagnose(const LpdClassifier& lpd, const CfdNetwork& cfd, const TracePair& pair,
                 const FeatureCatalog& catalog) {
  check_catalog(lpd.model, catalog.version, "lpd");
  for (const auto& m : cfd.modules) check_catalog(m.model, catalog.version, m.fault_name);
  const Signature sig = extract_signature(pair, catalog);
  return diagnose_signature(lpd, cfd, sig);
}

void write_bundle(const Bundle& bundle, const fs::path& dir) {
  const fs::path target = dir.lexically_normal();
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(parent, ec);
  const std::string stem = target.filename().string();
  const std::uint64_t tag = SplitMix64::mix64(
      static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
  const fs::path tmp = parent / ("." + stem + ".tmp-" + std::to_string(tag % 1000000007ULL));
  const fs::path old = parent / ("." + stem + ".old-" + std::to_string(tag % 1000000007ULL));
  try {
    fs::create_directories(tmp / "lpd");
    fs::create_directories(tmp / "cfd");
    json lpd_list = json::array();
    for (const auto& [profile, clf] : bundle.lpd_profiles) {
      write_text(tmp / "lpd" / (profile + ".model.json"), serialize_model(clf.model));
      write_text(tmp / "lpd" / (profile + ".selection.json"), dump(to_json(clf.selection)));
      lpd_list.push_back(profile);
    }
    json cfd_list = json::array();
    for (const auto& m : bundle.cfd.modules) {
      write_text(tmp / "cfd" / (m.fault_name + ".model.json"), serialize_model(m.model));
      write_text(tmp / "cfd" / (m.fault_name + ".selection.json"), dump(to_json(m.selection)));
      cfd_list.push_back({{"fault", m.fault_name}, {"index", m.fault_index}});
    }
    const json registry = {{"catalog_version", bundle.catalog_version},
                           {"fault_registry", bundle.cfd.fault_registry},
                           {"lpd_profiles", lpd_list},
                           {"cfd_modules", cfd_list}};
    write_text(tmp / "registry.json", dump(registry));
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(tmp, ec);
    throw Error(ErrorKind::IoFailure, e.what());
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  const bool existed = fs::exists(target);
  if (existed) {
    fs::rename(target, old, ec);
    if (ec) {
      fs::remove_all(tmp, ec);
      throw Error(ErrorKind::IoFailure, "cannot replace bundle " + target.string());
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    if (existed) fs::rename(old, target, ignore);
    fs::remove_all(tmp, ignore);
    throw Error(ErrorKind::IoFailure, "cannot move bundle into place at " + target.string());
  }
  if (existed) fs::remove_all(old, ec);
}

Bundle read_bundle(const fs::path& dir) {
  const json registry = read_json(dir / "registry.json");
  Bundle b;
  try {
    b.catalog_version = registry.at("catalog_version").get<std::string>();
    b.cfd.fault_registry = registry.at("fault_registry").get<FaultRegistry>();
    for (const auto& p : registry.at("lpd_profiles")) {
      const auto profile = p.get<std::string>();
      LpdClassifier clf;
      clf.link_profile = profile;
      clf.model = model_from_json(read_json(dir / "lpd" / (profile + ".model.json")));
      clf.selection = selection_from_json(read_json(dir / "lpd" / (profile + ".selection.json")));
      b.lpd_profiles.emplace(profile, std::move(clf));
    }
    for (const auto& m : registry.at("cfd_modules")) {
      CfModule mod;
      mod.fault_name = m.at("fault").get<std::string>();
      mod.fault_index = m.at("index").get<int>();
      mod.model = model_from_json(read_json(dir / "cfd" / (mod.fault_name + ".model.json")));
      mod.selection =
          selection_from_json(read_json(dir / "cfd" / (mod.fault_name + ".selection.json")));
      b.cfd.modules.push_back(std::move(mod));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "malformed bundle registry: " + std::string(e.what()));
  }
  std::stable_sort(b.cfd.modules.begin(), b.cfd.modules.end(),
                   [](const CfModule& x, const CfModule& y) { return x.fault_index < y.fault_index; });
  return b;
}

}  // namespace netdiag
