#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "netdiag/preprocess.hpp"
#include "netdiag/rng.hpp"
#include "netdiag/workbench.hpp"

namespace fixture {

inline std::vector<std::string> names(std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < m; ++j) out.push_back("f" + std::to_string(j));
  return out;
}

inline netdiag::SignatureDatabase empty_db(std::size_t m, const std::string& catalog = "synthetic") {
  netdiag::SignatureDatabase db;
  db.feature_names = names(m);
  db.catalog_version = catalog;
  return db;
}

/// Indices [first, first + count) pinned to `target` with small jitter,
/// everything else U[0, 1).
inline netdiag::ClassArtifactSpec block_spec(std::size_t m, std::size_t first, std::size_t count,
                                             double target, netdiag::Label label) {
  netdiag::ClassArtifactSpec spec;
  spec.m = m;
  spec.noise = {netdiag::NoiseKind::Uniform, 0.0, 1.0};
  spec.label = label;
  for (std::size_t j = first; j < first + count; ++j) spec.informative.push_back({j, target, 0.05});
  return spec;
}

inline netdiag::ClassArtifactSpec noise_spec(std::size_t m, netdiag::Label label) {
  return block_spec(m, 0, 0, 0.0, label);
}

/// Client-labelled database: cf_0 rows are pure noise, cf_j rows carry a
/// block of `block` features starting at (j - 1) * block.
inline netdiag::SignatureDatabase cfd_database(std::size_t per_class, std::uint64_t seed,
                                               std::size_t m = 74, std::size_t block = 10,
                                               const netdiag::FaultRegistry& registry =
                                                   netdiag::default_fault_registry()) {
  auto db = empty_db(m);
  db.fault_registry = registry;
  std::uint64_t s = seed * 1000003ULL;
  for (std::size_t i = 0; i < per_class; ++i) {
    db.rows.push_back(netdiag::generate_synthetic_signature(noise_spec(m, netdiag::Label::client(0)), ++s));
  }
  for (const auto& [name, idx] : registry) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto spec = block_spec(m, static_cast<std::size_t>(idx - 1) * block, block, 2.0,
                                   netdiag::Label::client(idx));
      db.rows.push_back(netdiag::generate_synthetic_signature(spec, ++s));
    }
  }
  return db;
}

/// Link-labelled database: faulty rows carry a block of `informative`
/// features at the front.
inline netdiag::SignatureDatabase lpd_database(std::size_t per_class, std::uint64_t seed,
                                               std::size_t m = 74, std::size_t informative = 20) {
  auto db = empty_db(m);
  std::uint64_t s = seed * 7919ULL + 17;
  for (std::size_t i = 0; i < per_class; ++i) {
    db.rows.push_back(netdiag::generate_synthetic_signature(
        block_spec(m, 0, informative, 2.0, netdiag::Label::faulty_link()), ++s));
    db.rows.push_back(
        netdiag::generate_synthetic_signature(noise_spec(m, netdiag::Label::healthy_link()), ++s));
  }
  return db;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("netdiag-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
