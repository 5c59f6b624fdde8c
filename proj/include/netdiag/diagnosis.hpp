#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "netdiag/features.hpp"
#include "netdiag/preprocess.hpp"
#include "netdiag/selection.hpp"
#include "netdiag/svm.hpp"
#include "netdiag/trace.hpp"

namespace netdiag {

/// Everything one binary classifier stage needs: SVM parameters and the
/// hybrid feature-selection settings.
struct PipelineConfig {
  SvmSettings svm;
  /// Empty: default grid. One entry: that many top-ranked features, no CV.
  std::vector<std::size_t> candidate_sizes;
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  SelectionObjective objective = SelectionObjective::Accuracy;
  double fp_penalty = 1.0;
  bool welch = false;

  WrapperConfig wrapper() const;
  bool operator==(const PipelineConfig&) const = default;
};

/// Quadratic kernel, C = 10, 1000 iterations, default candidate grid.
PipelineConfig default_lpd_config();

/// Per-fault defaults: sack_disabled linear/12, dsack_disabled rbf/32,
/// read_buffer cubic/24, write_buffer rbf/16; 2000 iterations; selection
/// objective penalizes false positives. Unknown faults get the RBF default
/// grid.
PipelineConfig default_cf_config(const std::string& fault_name);

struct BinaryPipelineResult {
  SvmModel model;
  SelectionReport selection;
  TTestRanking ranking;
};

/// scale -> rank -> select -> project -> train on a Preliminary database with
/// +1/-1 labels. The returned model carries its scaler and feature subset.
BinaryPipelineResult fit_binary_pipeline(const SignatureDatabase& psd, const PipelineConfig& config);

/// Rows labelled cf_j become +1, cf_0 rows become -1, everything else is
/// dropped. Result is a Preliminary, link-labelled database.
SignatureDatabase cf_subset(const SignatureDatabase& cfd_db, int fault_index);

struct LpdClassifier {
  SvmModel model;
  SelectionReport selection;
  std::string link_profile;

  bool operator==(const LpdClassifier&) const = default;
};

LpdClassifier train_lpd(const SignatureDatabase& psd, const PipelineConfig& config,
                        const std::string& link_profile = "wired-80Mbps-10ms");

struct CfModule {
  int fault_index = 0;
  std::string fault_name;
  SvmModel model;
  SelectionReport selection;

  bool operator==(const CfModule&) const = default;
};

CfModule train_cf_module(const SignatureDatabase& cfd_db, int fault_index,
                         const PipelineConfig& config);

struct CfdNetwork {
  /// Ordered by fault index.
  std::vector<CfModule> modules;
  FaultRegistry fault_registry;

  bool operator==(const CfdNetwork&) const = default;
};

/// Trains one module per registry entry. Faults missing from `configs` use
/// default_cf_config.
CfdNetwork train_cfd(const SignatureDatabase& cfd_db,
                     const std::map<std::string, PipelineConfig>& configs);

/// Inserts or replaces a module, keeping index order.
void add_module(CfdNetwork& network, CfModule module);

struct ModuleDecision {
  std::string stage;  // "lpd" or the fault name
  double decision = 0.0;
  int classification = -1;

  bool operator==(const ModuleDecision&) const = default;
};

/// Fault names of every module voting +1.
std::set<std::string> cfd_collective(std::span<const ModuleDecision> decisions);

enum class LinkStatus { Faulty, Healthy };
enum class PipelineNote { LinkFaultStop, FullDiagnosis };

struct Verdict {
  LinkStatus link = LinkStatus::Healthy;
  std::set<std::string> client_faults;
  std::vector<ModuleDecision> per_module_decisions;
  PipelineNote pipeline_note = PipelineNote::FullDiagnosis;

  bool operator==(const Verdict&) const = default;
};

nlohmann::json to_json(const Verdict& verdict);
std::string summary_line(const Verdict& verdict);

/// Runs every CF module on a raw signature, in `order` (indices into
/// network.modules) when given; results are reported in module order.
std::vector<ModuleDecision> run_cfd(const CfdNetwork& network, const Signature& signature,
                                    std::span<const std::size_t> order = {});

Verdict diagnose_signature(const LpdClassifier& lpd, const CfdNetwork& cfd,
                           const Signature& signature);

/// Extracts the signature once, then gates the CFD network on the LPD verdict.
Verdict diagnose(const LpdClassifier& lpd, const CfdNetwork& cfd, const TracePair& pair,
                 const FeatureCatalog& catalog = default_catalog());

/// On-disk classifier bundle:
///   registry.json
///   lpd/<profile>.model.json, lpd/<profile>.selection.json
///   cfd/<fault>.model.json,   cfd/<fault>.selection.json
struct Bundle {
  std::string catalog_version;
  std::map<std::string, LpdClassifier> lpd_profiles;
  CfdNetwork cfd;

  bool operator==(const Bundle&) const = default;
};

/// Writes into a sibling temporary directory and renames it over `dir`.
void write_bundle(const Bundle& bundle, const std::filesystem::path& dir);
Bundle read_bundle(const std::filesystem::path& dir);

}  // namespace netdiag
