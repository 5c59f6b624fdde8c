#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netdiag/matrix.hpp"
#include "netdiag/signature.hpp"

namespace netdiag {

enum class DbStage { Preliminary, Scaled, Optimum };

std::string_view to_string(DbStage stage);

/// Client fault name -> class index (1..p). Index 0 is always the healthy client.
using FaultRegistry = std::map<std::string, int>;

/// {sack_disabled:1, dsack_disabled:2, read_buffer:3, write_buffer:4}
const FaultRegistry& default_fault_registry();

struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
  std::size_t fitted_on = 0;

  std::size_t size() const noexcept { return min.size(); }
  bool operator==(const ScalerParams&) const = default;
};

struct SignatureDatabase {
  DbStage stage = DbStage::Preliminary;
  std::vector<std::string> feature_names;
  std::vector<Signature> rows;
  std::optional<ScalerParams> scaler;
  std::optional<std::vector<std::size_t>> selected_features;
  std::string catalog_version;
  /// Non-empty exactly when rows carry client labels.
  FaultRegistry fault_registry;

  std::size_t dim() const noexcept { return feature_names.size(); }
  std::size_t size() const noexcept { return rows.size(); }
  LabelKind label_kind() const noexcept {
    return fault_registry.empty() ? LabelKind::Link : LabelKind::Client;
  }

  Matrix matrix() const;
  std::vector<int> label_values() const;
  std::size_t count_label(int value) const;

  /// Throws DimensionMismatch / CatalogMismatch / UnknownLabel on a broken database.
  void validate() const;

  bool operator==(const SignatureDatabase&) const = default;
};

/// Column-wise extrema of a Preliminary database. Requires n >= 2.
ScalerParams fit_scaler(const SignatureDatabase& db);

/// (x - min) / (max - min) per feature, 0 for constant features, clamped to [0, 1].
std::vector<double> apply_scaler(std::span<const double> x, const ScalerParams& scaler);

/// Preliminary -> Scaled. Any other input stage is rejected with StageMismatch.
SignatureDatabase scale_database(const SignatureDatabase& db, const ScalerParams& scaler);

struct TaggedRow {
  std::vector<double> values;
  std::string tag;
};

/// Link context: FAULTY -> +1, HEALTHY -> -1. Client context: HEALTHY -> 0,
/// registered fault names -> their index.
Label encode_label(const std::string& tag, LabelKind context, const FaultRegistry& registry);
std::string decode_label(const Label& label, const FaultRegistry& registry);

SignatureDatabase encode_labels(std::span<const TaggedRow> rows, LabelKind context,
                                const FaultRegistry& registry,
                                std::vector<std::string> feature_names,
                                const std::string& catalog_version);

/// Sidecar metadata path for a database CSV (`x.csv` -> `x.meta.json`).
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

void write_database(const SignatureDatabase& db, const std::filesystem::path& csv);
SignatureDatabase read_database(const std::filesystem::path& csv);

}  // namespace netdiag
