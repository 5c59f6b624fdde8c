#include "netdiag/preprocess.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "netdiag/error.hpp"

namespace netdiag {

using nlohmann::json;

std::string_view to_string(DbStage stage) {
  switch (stage) {
    case DbStage::Preliminary: return "preliminary";
    case DbStage::Scaled: return "scaled";
    case DbStage::Optimum: return "optimum";
  }
  return "unknown";
}

namespace {

DbStage parse_stage(const std::string& s) {
  if (s == "preliminary") return DbStage::Preliminary;
  if (s == "scaled") return DbStage::Scaled;
  if (s == "optimum") return DbStage::Optimum;
  throw Error(ErrorKind::BadHeader, "unknown database stage '" + s + "'");
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

const FaultRegistry& default_fault_registry() {
  static const FaultRegistry registry{
      {"sack_disabled", 1}, {"dsack_disabled", 2}, {"read_buffer", 3}, {"write_buffer", 4}};
  return registry;
}

Matrix SignatureDatabase::matrix() const {
  Matrix m(rows.size(), dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].values.begin(), rows[i].values.end(), m.row(i).begin());
  }
  return m;
}

std::vector<int> SignatureDatabase::label_values() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r.label) throw Error(ErrorKind::UnknownLabel, "database row without a label");
    out.push_back(r.label->value);
  }
  return out;
}

std::size_t SignatureDatabase::count_label(int value) const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const Signature& s) {
    return s.label && s.label->value == value;
  }));
}

void SignatureDatabase::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.values.size() != dim()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "row " + std::to_string(i) + " has " + std::to_string(r.values.size()) +
                      " values, database has " + std::to_string(dim()) + " features");
    }
    if (r.catalog_version != catalog_version) {
      throw Error(ErrorKind::CatalogMismatch, "row " + std::to_string(i) + " has catalog '" +
                                                  r.catalog_version + "', database has '" +
                                                  catalog_version + "'");
    }
    if (r.label && r.label->kind != label_kind()) {
      throw Error(ErrorKind::UnknownLabel, "row " + std::to_string(i) + " label kind mismatch");
    }
  }
  if (stage == DbStage::Optimum &&
      (!selected_features || selected_features->size() != dim())) {
    throw Error(ErrorKind::DimensionMismatch, "optimum database must record its selected features");
  }
}

ScalerParams fit_scaler(const SignatureDatabase& db) {
  if (db.stage != DbStage::Preliminary) {
    throw Error(ErrorKind::StageMismatch,
                "scaler must be fitted on a preliminary database, got " +
                    std::string(to_string(db.stage)));
  }
  if (db.size() < 2) throw Error(ErrorKind::TooFewRows, "fit_scaler needs at least 2 rows");
  ScalerParams s;
  s.min = db.rows.front().values;
  s.max = db.rows.front().values;
  for (const auto& r : db.rows) {
    if (r.values.size() != s.min.size()) {
      throw Error(ErrorKind::DimensionMismatch, "ragged database rows");
    }
    for (std::size_t j = 0; j < r.values.size(); ++j) {
      s.min[j] = std::min(s.min[j], r.values[j]);
      s.max[j] = std::max(s.max[j], r.values[j]);
    }
  }
  s.fitted_on = db.size();
  return s;
}

std::vector<double> apply_scaler(std::span<const double> x, const ScalerParams& scaler) {
  if (x.size() != scaler.size()) {
    throw Error(ErrorKind::DimensionMismatch, "vector has " + std::to_string(x.size()) +
                                                  " features, scaler expects " +
                                                  std::to_string(scaler.size()));
  }
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double span = scaler.max[j] - scaler.min[j];
    if (span > 0.0) out[j] = std::clamp((x[j] - scaler.min[j]) / span, 0.0, 1.0);
  }
  return out;
}

SignatureDatabase scale_database(const SignatureDatabase& db, const ScalerParams& scaler) {
  if (db.stage != DbStage::Preliminary) {
    throw Error(ErrorKind::StageMismatch, "only a preliminary database can be scaled, got " +
                                              std::string(to_string(db.stage)));
  }
  SignatureDatabase out = db;
  out.stage = DbStage::Scaled;
  out.scaler = scaler;
  for (auto& r : out.rows) r.values = apply_scaler(r.values, scaler);
  return out;
}

Label encode_label(const std::string& tag, LabelKind context, const FaultRegistry& registry) {
  if (context == LabelKind::Link) {
    if (tag == "FAULTY") return Label::faulty_link();
    if (tag == "HEALTHY") return Label::healthy_link();
    throw Error(ErrorKind::UnknownLabel, "unknown link label '" + tag + "'");
  }
  if (tag == "HEALTHY") return Label::client(0);
  auto it = registry.find(tag);
  if (it == registry.end()) throw Error(ErrorKind::UnknownLabel, "unknown client label '" + tag + "'");
  return Label::client(it->second);
}

std::string decode_label(const Label& label, const FaultRegistry& registry) {
  if (label.kind == LabelKind::Link) return label.value > 0 ? "FAULTY" : "HEALTHY";
  if (label.value == 0) return "HEALTHY";
  for (const auto& [name, index] : registry) {
    if (index == label.value) return name;
  }
  throw Error(ErrorKind::UnknownLabel, "client label index " + std::to_string(label.value) +
                                           " not in registry");
}

SignatureDatabase encode_labels(std::span<const TaggedRow> rows, LabelKind context,
                                const FaultRegistry& registry,
                                std::vector<std::string> feature_names,
                                const std::string& catalog_version) {
  SignatureDatabase db;
  db.stage = DbStage::Preliminary;
  db.feature_names = std::move(feature_names);
  db.catalog_version = catalog_version;
  if (context == LabelKind::Client) {
    if (registry.empty()) throw Error(ErrorKind::ConfigError, "client labels need a fault registry");
    db.fault_registry = registry;
  }
  db.rows.reserve(rows.size());
  for (const auto& r : rows) {
    db.rows.push_back(Signature{r.values, encode_label(r.tag, context, registry), catalog_version});
  }
  db.validate();
  return db;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

void write_database(const SignatureDatabase& db, const std::filesystem::path& csv) {
  db.validate();
  std::ostringstream body;
  for (std::size_t j = 0; j < db.feature_names.size(); ++j) {
    body << "f_" << db.feature_names[j] << ',';
  }
  body << "label\n";
  for (const auto& r : db.rows) {
    for (double v : r.values) body << format_number(v) << ',';
    body << (r.label ? std::to_string(r.label->value) : std::string()) << '\n';
  }

  json meta;
  meta["stage"] = std::string(to_string(db.stage));
  meta["catalog_version"] = db.catalog_version;
  if (db.scaler) {
    meta["scaler"] = {{"min", db.scaler->min},
                      {"max", db.scaler->max},
                      {"fitted_on", db.scaler->fitted_on}};
  } else {
    meta["scaler"] = nullptr;
  }
  meta["selected_features"] =
      db.selected_features ? json(*db.selected_features) : json::array();
  meta["fault_registry"] = json(db.fault_registry);

  std::ofstream out(csv, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + csv.string());
  out << body.str();
  std::ofstream side(sidecar_path(csv), std::ios::binary | std::ios::trunc);
  if (!side) throw Error(ErrorKind::IoFailure, "cannot write " + sidecar_path(csv).string());
  side << meta.dump(2) << '\n';
  if (!out || !side) throw Error(ErrorKind::IoFailure, "write failed for " + csv.string());
}

SignatureDatabase read_database(const std::filesystem::path& csv) {
  std::ifstream side(sidecar_path(csv), std::ios::binary);
  if (!side) throw Error(ErrorKind::IoFailure, "missing sidecar " + sidecar_path(csv).string());
  json meta;
  try {
    meta = json::parse(side);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadHeader, sidecar_path(csv).string() + ": " + e.what());
  }

  SignatureDatabase db;
  try {
    db.stage = parse_stage(meta.at("stage").get<std::string>());
    db.catalog_version = meta.at("catalog_version").get<std::string>();
    if (!meta.at("scaler").is_null()) {
      const auto& s = meta.at("scaler");
      db.scaler = ScalerParams{s.at("min").get<std::vector<double>>(),
                               s.at("max").get<std::vector<double>>(),
                               s.value("fitted_on", std::size_t{0})};
    }
    auto selected = meta.at("selected_features").get<std::vector<std::size_t>>();
    if (db.stage == DbStage::Optimum) db.selected_features = std::move(selected);
    db.fault_registry = meta.at("fault_registry").get<FaultRegistry>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadHeader, sidecar_path(csv).string() + ": " + e.what());
  }

  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::BadHeader, csv.string() + ": empty file");
  auto header = split_csv(line);
  if (header.empty() || header.back() != "label") {
    throw Error(ErrorKind::BadHeader, csv.string() + ": header must end with 'label'");
  }
  for (std::size_t j = 0; j + 1 < header.size(); ++j) {
    if (header[j].rfind("f_", 0) != 0) {
      throw Error(ErrorKind::BadHeader, csv.string() + ": column '" + header[j] + "' lacks f_ prefix");
    }
    db.feature_names.push_back(header[j].substr(2));
  }
  const LabelKind kind = db.label_kind();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::MalformedRow, csv.string() + ": row " + std::to_string(row) +
                                               " has wrong column count", row);
    }
    Signature sig;
    sig.catalog_version = db.catalog_version;
    for (std::size_t j = 0; j + 1 < cells.size(); ++j) {
      double v = 0;
      const auto& c = cells[j];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::MalformedRow, csv.string() + ": row " + std::to_string(row) +
                                                 " bad value '" + c + "'", row);
      }
      sig.values.push_back(v);
    }
    if (!cells.back().empty()) {
      int value = 0;
      const auto& c = cells.back();
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), value);
      if (ec != std::errc{} || ptr != c.data() + c.size()) {
        throw Error(ErrorKind::MalformedRow, csv.string() + ": row " + std::to_string(row) +
                                                 " bad label '" + c + "'", row);
      }
      sig.label = Label{kind, value};
    }
    db.rows.push_back(std::move(sig));
    ++row;
  }
  db.validate();
  return db;
}

}  // namespace netdiag
