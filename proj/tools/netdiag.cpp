#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netdiag/config.hpp"
#include "netdiag/diagnosis.hpp"
#include "netdiag/error.hpp"
#include "netdiag/evaluation.hpp"
#include "netdiag/features.hpp"
#include "netdiag/preprocess.hpp"
#include "netdiag/trace.hpp"
#include "netdiag/workbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace netdiag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTraining = 3;
constexpr int kExitCatalog = 4;
constexpr int kExitLinkFaulty = 10;
constexpr int kExitClientFault = 20;

struct Failure {
  int code;
  std::string message;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

Globals g;

void note(const std::string& s) {
  if (!g.quiet) std::cerr << s << '\n';
}

CliConfig load_cli_config() {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("NETDIAG_CONFIG"); env && *env) path = env;
  }
  CliConfig c = path.empty() ? CliConfig{} : load_config(path);
  if (g.seed) c.seed = *g.seed;
  if (c.catalog_version != default_catalog().version) {
    throw Failure{kExitUsage, "unknown catalog version '" + c.catalog_version + "'"};
  }
  return c;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

/// Rows of a small CSV, header skipped when its first cell is `header`.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header,
                                               std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitUsage, "cannot open " + path.string()};
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    for (auto& c : cells) c = trim(c);
    if (lineno == 1 && !cells.empty() && cells[0] == header) continue;
    if (cells.size() != columns) {
      throw Failure{kExitUsage, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                    std::to_string(columns) + " columns"};
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

TraceRecord load_trace(const fs::path& path) {
  try {
    std::vector<std::string> warnings;
    auto t = read_trace(path, &warnings);
    for (const auto& w : warnings) note(path.string() + ": warning: " + w);
    return t;
  } catch (const Error& e) {
    std::string where = path.string();
    if (e.row()) where += ": row " + std::to_string(*e.row());
    throw Failure{kExitUsage, where + ": " + e.what()};
  }
}

struct PairFiles {
  fs::path down;
  fs::path up;
};

/// Pairs `<id>.down.csv` with `<id>.up.csv`; other `.csv` inputs with a
/// sidecar are signature databases.
std::map<std::string, PairFiles> discover(const std::vector<std::string>& inputs,
                                          std::vector<fs::path>& databases) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw Failure{kExitUsage, "no such input: " + in};
    }
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, PairFiles> pairs;
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    if (ends_with(name, ".down.csv")) {
      pairs[name.substr(0, name.size() - 9)].down = f;
    } else if (ends_with(name, ".up.csv")) {
      pairs[name.substr(0, name.size() - 7)].up = f;
    } else if (ends_with(name, ".csv") && fs::exists(sidecar_path(f))) {
      databases.push_back(f);
    }
  }
  for (const auto& [id, p] : pairs) {
    if (p.up.empty()) throw Failure{kExitUsage, "orphan trace " + p.down.string() + ": missing " + id + ".up.csv"};
    if (p.down.empty()) throw Failure{kExitUsage, "orphan trace " + p.up.string() + ": missing " + id + ".down.csv"};
  }
  return pairs;
}

TracePair load_pair(const PairFiles& f) { return {load_trace(f.down), load_trace(f.up)}; }

LabelKind stage_kind(const std::string& stage) {
  if (stage == "lpd") return LabelKind::Link;
  if (stage == "cfd") return LabelKind::Client;
  throw Failure{kExitUsage, "stage must be lpd or cfd"};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{kExitUsage, "cannot write " + path.string()};
}

// --- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::vector<std::string> inputs;
  std::string labels;
  std::string stage = "lpd";
  std::string output;
};

int cmd_extract(const ExtractArgs& a) {
  const CliConfig cfg = load_cli_config();
  const FeatureCatalog& catalog = default_catalog();
  const LabelKind kind = stage_kind(a.stage);

  std::vector<fs::path> databases;
  const auto pairs = discover(a.inputs, databases);

  std::vector<TaggedRow> rows;
  std::size_t skipped = 0;
  if (!pairs.empty()) {
    if (a.labels.empty()) throw Failure{kExitUsage, "trace inputs need --labels"};
    std::map<std::string, std::string> tags;
    for (auto& r : read_csv(a.labels, "id", 2)) tags[r[0]] = r[1];
    for (const auto& [id, tag] : tags) {
      if (!pairs.count(id)) throw Failure{kExitUsage, a.labels + ": no trace pair for id '" + id + "'"};
    }
    for (const auto& [id, files] : pairs) {
      auto t = tags.find(id);
      if (t == tags.end()) {
        ++skipped;
        continue;
      }
      TracePair pair = load_pair(files);
      try {
        rows.push_back({extract_signature(pair, catalog).values, t->second});
      } catch (const Error& e) {
        throw Failure{kExitUsage, id + ": " + e.what()};
      }
    }
  }
  const FaultRegistry registry = kind == LabelKind::Client ? cfg.fault_registry : FaultRegistry{};
  SignatureDatabase db = encode_labels(rows, kind, registry, catalog.names(), catalog.version);
  for (const auto& path : databases) {
    SignatureDatabase other = read_database(path);
    if (other.catalog_version != db.catalog_version || other.feature_names != db.feature_names) {
      throw Error(ErrorKind::CatalogMismatch, path.string() + ": catalog '" + other.catalog_version +
                                                  "' does not match '" + db.catalog_version + "'");
    }
    if (other.stage != DbStage::Preliminary || other.label_kind() != kind ||
        other.fault_registry != db.fault_registry) {
      throw Error(ErrorKind::StageMismatch, path.string() + ": database does not match --stage " + a.stage);
    }
    for (auto& r : other.rows) db.rows.push_back(std::move(r));
  }
  if (db.rows.empty()) throw Failure{kExitUsage, "no labeled inputs"};
  write_database(db, a.output);
  std::cout << json{{"output", a.output}, {"rows", db.size()}, {"features", db.dim()},
                    {"catalog_version", db.catalog_version}, {"skipped_unlabeled", skipped}}
                   .dump(2)
            << '\n';
  note("extract: " + std::to_string(db.size()) + " rows x " + std::to_string(db.dim()) + " features -> " +
       a.output);
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string db;
  std::string stage;
  std::string output;
  std::string only;
};

fs::path bundle_dir(const std::string& given, const CliConfig& cfg) {
  if (!given.empty()) return given;
  if (cfg.bundle_path) return *cfg.bundle_path;
  throw Failure{kExitUsage, "no bundle directory given"};
}

std::optional<double> reported_cv(const SelectionReport& s) {
  for (std::size_t i = 0; i < s.candidate_sizes.size(); ++i) {
    if (s.candidate_sizes[i] == s.chosen_q && i < s.cv_accuracy.size()) return s.cv_accuracy[i];
  }
  return std::nullopt;
}

std::optional<double> cv_estimate(const SignatureDatabase& psd, const PipelineConfig& config,
                                  const SelectionReport& s) {
  if (auto v = reported_cv(s)) return v;
  try {
    return k_fold_cv(psd, config, config.folds, config.seed).mean_accuracy;
  } catch (const Error&) {
    return std::nullopt;
  }
}

json model_row(const std::string& name, const SvmModel& m, std::optional<double> cv) {
  return {{"name", name},
          {"kernel", to_string(m.kernel.type)},
          {"q", m.input_dim()},
          {"support_vectors", m.support_vectors.size()},
          {"cv_accuracy", cv ? json(*cv) : json(nullptr)},
          {"converged", m.training_meta.converged},
          {"iterations", m.training_meta.iterations_used}};
}

std::string format_train_table(const json& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-9s %4s %6s %9s %s\n", "model", "kernel", "q", "n_sv", "cv_acc",
                "converged");
  out << line;
  for (const auto& r : rows) {
    std::string cv = r["cv_accuracy"].is_null() ? "-" : std::to_string(r["cv_accuracy"].get<double>());
    std::snprintf(line, sizeof line, "%-18s %-9s %4zu %6zu %9.9s %s\n", r["name"].get<std::string>().c_str(),
                  r["kernel"].get<std::string>().c_str(), r["q"].get<std::size_t>(),
                  r["support_vectors"].get<std::size_t>(), cv.c_str(), r["converged"].get<bool>() ? "yes" : "no");
    out << line;
  }
  return out.str();
}

bool training_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::TooFewRows:
    case ErrorKind::TooFewSamples:
    case ErrorKind::MissingClass:
    case ErrorKind::InsufficientRows:
    case ErrorKind::SingleClassInput:
    case ErrorKind::NonFiniteInput:
      return true;
    default:
      return false;
  }
}

int cmd_train(const TrainArgs& a) {
  const CliConfig cfg = load_cli_config();
  const LabelKind kind = stage_kind(a.stage);
  const fs::path out_dir = bundle_dir(a.output, cfg);
  const SignatureDatabase db = read_database(a.db);
  if (db.label_kind() != kind) {
    throw Failure{kExitUsage, a.db + ": database carries " +
                                  std::string(db.label_kind() == LabelKind::Link ? "link" : "client") +
                                  " labels, not usable for --stage " + a.stage};
  }
  if (db.catalog_version != cfg.catalog_version) {
    throw Failure{kExitUsage, a.db + ": catalog '" + db.catalog_version + "' does not match the config"};
  }
  if (!a.only.empty() && kind != LabelKind::Client) throw Failure{kExitUsage, "--only applies to --stage cfd"};

  Bundle bundle;
  bundle.catalog_version = db.catalog_version;
  if (fs::exists(out_dir / "registry.json")) {
    bundle = read_bundle(out_dir);
    if (bundle.catalog_version != db.catalog_version) {
      throw Failure{kExitUsage, out_dir.string() + ": existing bundle uses another catalog"};
    }
  }

  json rows = json::array();
  json grid_json;
  try {
    if (kind == LabelKind::Link) {
      PipelineConfig stage = cfg.lpd_stage();
      if (cfg.lpd_grid) {
        const GridResult grid = select_model(db, *cfg.lpd_grid, stage, cfg.grid_folds, cfg.seed);
        stage = apply_grid_choice(stage, grid);
        grid_json = to_json(grid);
      }
      LpdClassifier lpd = train_lpd(db, stage, cfg.link_profile);
      rows.push_back(model_row("lpd/" + cfg.link_profile, lpd.model, cv_estimate(db, stage, lpd.selection)));
      bundle.lpd_profiles[cfg.link_profile] = std::move(lpd);
    } else {
      const auto stages = cfg.cfd_stages();
      auto stage_for = [&](const std::string& name) {
        auto it = stages.find(name);
        PipelineConfig c = it != stages.end() ? it->second : default_cf_config(name);
        c.seed = cfg.seed;
        return c;
      };
      if (!bundle.cfd.fault_registry.empty() && bundle.cfd.fault_registry != db.fault_registry) {
        throw Failure{kExitUsage, out_dir.string() + ": existing bundle has another fault registry"};
      }
      if (!a.only.empty()) {
        auto it = db.fault_registry.find(a.only);
        if (it == db.fault_registry.end()) throw Failure{kExitUsage, "unknown fault '" + a.only + "'"};
        bundle.cfd.fault_registry = db.fault_registry;
        add_module(bundle.cfd, train_cf_module(db, it->second, stage_for(a.only)));
      } else {
        bundle.cfd = train_cfd(db, stages);
      }
      for (const auto& m : bundle.cfd.modules) {
        if (!a.only.empty() && m.fault_name != a.only) continue;
        const PipelineConfig c = stage_for(m.fault_name);
        rows.push_back(model_row("cfd/" + m.fault_name, m.model,
                                 cv_estimate(cf_subset(db, m.fault_index), c, m.selection)));
      }
    }
  } catch (const Error& e) {
    throw Failure{training_error(e.kind()) ? kExitTraining : kExitUsage, e.what()};
  }
  for (const auto& r : rows) {
    if (!r["converged"].get<bool>()) {
      note("warning: " + r["name"].get<std::string>() + " stopped at the iteration limit");
    }
  }
  write_bundle(bundle, out_dir);
  json out = {{"bundle", out_dir.string()}, {"stage", a.stage}, {"models", rows}};
  if (!grid_json.is_null()) out["grid"] = grid_json;
  std::cout << out.dump(2) << '\n';
  if (!g.quiet) std::cerr << format_train_table(rows);
  return kExitOk;
}

// --- diagnose --------------------------------------------------------------

struct DiagnoseArgs {
  std::string bundle;
  std::vector<std::string> traces;
  std::string profile;
};

PairFiles pair_from_args(const std::vector<std::string>& traces) {
  if (traces.size() == 2) return {traces[0], traces[1]};
  if (traces.size() == 1) {
    PairFiles f{traces[0] + ".down.csv", traces[0] + ".up.csv"};
    for (const auto& p : {f.down, f.up}) {
      if (!fs::exists(p)) throw Failure{kExitUsage, "missing trace " + p.string()};
    }
    return f;
  }
  throw Failure{kExitUsage, "diagnose takes <prefix> or <down.csv> <up.csv>"};
}

const LpdClassifier& pick_profile(const Bundle& b, const std::string& wanted) {
  if (b.lpd_profiles.empty()) throw Failure{kExitUsage, "bundle has no LPD classifier"};
  if (wanted.empty()) return b.lpd_profiles.begin()->second;
  auto it = b.lpd_profiles.find(wanted);
  if (it == b.lpd_profiles.end()) throw Failure{kExitUsage, "bundle has no LPD profile '" + wanted + "'"};
  return it->second;
}

int cmd_diagnose(const DiagnoseArgs& a) {
  const CliConfig cfg = load_cli_config();
  const fs::path dir = bundle_dir(a.bundle, cfg);
  const PairFiles files = pair_from_args(a.traces);
  const Bundle bundle = read_bundle(dir);
  if (bundle.catalog_version != default_catalog().version) {
    throw Failure{kExitCatalog, dir.string() + ": bundle catalog '" + bundle.catalog_version +
                                    "' does not match extractor catalog '" + default_catalog().version + "'"};
  }
  const LpdClassifier& lpd = pick_profile(bundle, a.profile);
  const TracePair pair = load_pair(files);
  Verdict v;
  try {
    v = diagnose(lpd, bundle.cfd, pair);
  } catch (const Error& e) {
    throw Failure{e.kind() == ErrorKind::CatalogMismatch ? kExitCatalog : kExitUsage, e.what()};
  }
  std::cout << to_json(v).dump(2) << '\n';
  note(summary_line(v));
  if (v.link == LinkStatus::Faulty) return kExitLinkFaulty;
  return v.client_faults.empty() ? kExitOk : kExitClientFault;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string bundle;
  std::string scenarios;
  std::string output;
  std::string profile;
};

std::set<std::string> parse_faults(const std::string& cell) {
  std::set<std::string> out;
  if (cell.empty()) return out;
  for (auto& f : split(cell, '+')) {
    if (!f.empty()) out.insert(f);
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  const CliConfig cfg = load_cli_config();
  const fs::path dir = bundle_dir(a.bundle, cfg);
  const fs::path set_dir(a.scenarios);
  const fs::path truth = set_dir / "truth.csv";
  if (!fs::exists(truth)) throw Failure{kExitUsage, "missing " + truth.string()};
  const Bundle bundle = read_bundle(dir);
  if (bundle.catalog_version != default_catalog().version) {
    throw Failure{kExitUsage, dir.string() + ": bundle catalog does not match the extractor"};
  }
  const LpdClassifier& lpd = pick_profile(bundle, a.profile);

  std::vector<LabeledPair> items;
  for (const auto& r : read_csv(truth, "id", 3)) {
    LabeledPair p;
    p.id = r[0];
    if (r[1] != "faulty" && r[1] != "healthy") {
      throw Failure{kExitUsage, truth.string() + ": link must be faulty or healthy (id " + p.id + ")"};
    }
    p.link_faulty = r[1] == "faulty";
    p.client_faults = parse_faults(r[2]);
    p.pair = load_pair({set_dir / (p.id + ".down.csv"), set_dir / (p.id + ".up.csv")});
    items.push_back(std::move(p));
  }
  if (items.empty()) throw Failure{kExitUsage, truth.string() + ": empty scenario set"};
  const VerdictReport report = evaluate_verdicts(items, lpd, bundle.cfd);
  const json j = to_json(report);
  const std::string table = text_table(report);
  if (!a.output.empty()) {
    fs::create_directories(a.output);
    write_text(fs::path(a.output) / "report.json", j.dump(2) + "\n");
    write_text(fs::path(a.output) / "report.txt", table);
  }
  std::cout << j.dump(2) << '\n';
  if (!g.quiet) std::cerr << table;
  return kExitOk;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string source;
  std::string output;
  std::size_t per_class = 1;
  std::string profile = "cubiclike";
};

std::vector<Scenario> load_scenarios(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Failure{kExitUsage, "cannot open " + path.string()};
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Failure{kExitUsage, path.string() + ": " + e.what()};
  }
  if (!j.is_array()) j = json::array({j});
  std::vector<Scenario> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Scenario s = scenario_from_json(j[i]);
    if (s.id.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "s-%03zu", i);
      s.id = buf;
    }
    if (!ids.insert(s.id).second) throw Failure{kExitUsage, path.string() + ": duplicate id '" + s.id + "'"};
    out.push_back(std::move(s));
  }
  return out;
}

std::string join_faults(const std::set<std::string>& faults) {
  std::string out;
  for (const auto& f : faults) out += (out.empty() ? "" : "+") + f;
  return out;
}

int cmd_synth(const SynthArgs& a) {
  const CliConfig cfg = load_cli_config();
  std::vector<Scenario> scenarios;
  const auto presets = preset_names();
  if (std::find(presets.begin(), presets.end(), a.source) != presets.end()) {
    if (a.per_class == 0) throw Failure{kExitUsage, "--per-class must be positive"};
    scenarios = preset_scenarios(a.source, a.per_class, cfg.seed, parse_growth_profile(a.profile));
  } else if (fs::is_regular_file(a.source)) {
    scenarios = load_scenarios(a.source);
  } else {
    throw Failure{kExitUsage, "'" + a.source + "' is neither a preset nor a scenario file"};
  }
  const fs::path out(a.output);
  fs::create_directories(out);
  std::ostringstream truth, lpd_labels, cfd_labels;
  truth << "id,link,client_faults\n";
  lpd_labels << "id,tag\n";
  cfd_labels << "id,tag\n";
  json listing = json::array();
  for (const auto& s : scenarios) {
    s.link.validate();
    s.client.validate();
    const TracePair pair = simulate_flow(s.link, s.client, s.bytes, s.seed);
    write_trace(pair.download, out / (s.id + ".down.csv"));
    write_trace(pair.upload, out / (s.id + ".up.csv"));
    truth << s.id << ',' << (s.link_faulty ? "faulty" : "healthy") << ',' << join_faults(s.client_faults) << '\n';
    lpd_labels << s.id << ',' << (s.link_faulty ? "FAULTY" : "HEALTHY") << '\n';
    if (!s.link_faulty && s.client_faults.size() <= 1) {
      cfd_labels << s.id << ',' << (s.client_faults.empty() ? "HEALTHY" : *s.client_faults.begin()) << '\n';
    }
    listing.push_back(to_json(s));
  }
  write_text(out / "truth.csv", truth.str());
  write_text(out / "lpd_labels.csv", lpd_labels.str());
  write_text(out / "cfd_labels.csv", cfd_labels.str());
  write_text(out / "scenarios.json", listing.dump(2) + "\n");
  std::cout << json{{"output", out.string()}, {"pairs", scenarios.size()}}.dump(2) << '\n';
  note("synth: " + std::to_string(scenarios.size()) + " pairs -> " + out.string());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage TCP trace diagnosis: link problems, then client configuration faults"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", g.config_path, "JSON config file (fallback: $NETDIAG_CONFIG)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_flag("--quiet", g.quiet, "No summary on stderr");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Trace pairs to a signature database");
  extract->add_option("inputs", ex.inputs, "Trace files, directories or existing databases")->required();
  extract->add_option("--labels", ex.labels, "CSV with id,tag rows");
  extract->add_option("--stage", ex.stage, "lpd (FAULTY/HEALTHY) or cfd (HEALTHY/fault name)");
  extract->add_option("-o,--output", ex.output, "Database CSV")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train one stage into a bundle");
  train_cmd->add_option("db", tr.db, "Signature database CSV")->required();
  train_cmd->add_option("--stage", tr.stage, "lpd or cfd")->required();
  train_cmd->add_option("-o,--output", tr.output, "Bundle directory");
  train_cmd->add_option("--only", tr.only, "Retrain a single CF module");

  DiagnoseArgs dg;
  auto* diag = app.add_subcommand("diagnose", "Diagnose one trace pair");
  diag->add_option("bundle", dg.bundle, "Bundle directory")->required();
  diag->add_option("traces", dg.traces, "<prefix> or <down.csv> <up.csv>")->required();
  diag->add_option("--profile", dg.profile, "LPD link profile");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score a bundle on a labeled scenario set");
  eval->add_option("bundle", ev.bundle, "Bundle directory")->required();
  eval->add_option("scenarios", ev.scenarios, "Directory with traces and truth.csv")->required();
  eval->add_option("-o,--output", ev.output, "Report directory");
  eval->add_option("--profile", ev.profile, "LPD link profile");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Simulate trace pairs");
  synth->add_option("source", sy.source, "Preset name or scenario JSON file")->required();
  synth->add_option("-o,--output", sy.output, "Output directory")->required();
  synth->add_option("--per-class", sy.per_class, "Pairs per preset class");
  synth->add_option("--profile", sy.profile, "cubiclike, biclike or renolike");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(ex);
    if (*train_cmd) return cmd_train(tr);
    if (*diag) return cmd_diagnose(dg);
    if (*eval) return cmd_eval(ev);
    if (*synth) return cmd_synth(sy);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
