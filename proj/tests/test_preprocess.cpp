#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "netdiag/error.hpp"
#include "netdiag/preprocess.hpp"
#include "netdiag/rng.hpp"
#include "oracles.hpp"

using namespace netdiag;

namespace {

SignatureDatabase make_db(const Matrix& X, const std::vector<int>& y) {
  SignatureDatabase db;
  db.catalog_version = "test";
  for (std::size_t j = 0; j < X.cols(); ++j) db.feature_names.push_back("c" + std::to_string(j));
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto r = X.row(i);
    db.rows.push_back({{r.begin(), r.end()}, Label{LabelKind::Link, y[i]}, "test"});
  }
  return db;
}

SignatureDatabase column_db(std::vector<double> col) {
  Matrix X(col.size(), 1);
  for (std::size_t i = 0; i < col.size(); ++i) X(i, 0) = col[i];
  return make_db(X, std::vector<int>(col.size(), -1));
}

std::vector<std::size_t> stable_argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("fit_scaler extrema") {
  auto s = fit_scaler(column_db({2, 4, 10}));
  CHECK(s.min[0] == 2);
  CHECK(s.max[0] == 10);
  auto c = fit_scaler(column_db({5, 5, 5}));
  CHECK(c.min[0] == 5);
  CHECK(c.max[0] == 5);
  CHECK(apply_scaler(std::vector<double>{5}, c)[0] == 0.0);
  CHECK(s.fitted_on == 3);
}

TEST_CASE("fit_scaler matches a column scan") {
  SplitMix64 rng(3);
  const Matrix X = oracle::random_matrix(rng, 20, 6, -50, 50);
  const auto s = fit_scaler(make_db(X, std::vector<int>(20, 1)));
  std::vector<double> lo, hi;
  oracle::column_scan(X, lo, hi);
  CHECK(s.min == lo);
  CHECK(s.max == hi);
}

TEST_CASE("apply_scaler endpoints and clamping") {
  ScalerParams s{{0, 10}, {4, 20}, 2};
  CHECK(apply_scaler(std::vector<double>{0, 10}, s) == std::vector<double>{0, 0});
  CHECK(apply_scaler(std::vector<double>{4, 20}, s) == std::vector<double>{1, 1});
  CHECK(apply_scaler(std::vector<double>{9, 5}, s) == std::vector<double>{1, 0});
  CHECK(apply_scaler(std::vector<double>{1, 15}, s) == std::vector<double>{0.25, 0.5});
  CHECK_THROWS_AS(apply_scaler(std::vector<double>{1}, s), Error);
}

TEST_CASE("raw vector maps into the unit interval form") {
  const std::vector<double> raw = {1249256, 295, 0, 32, 39, 1, 1};
  ScalerParams s{{0, 0, 0, 0, 0, 0, 0}, {6246280, 360, 10, 91.5, 43.4, 1, 1}, 100};
  const auto x = apply_scaler(raw, s);
  const std::vector<double> expect = {0.20, 0.82, 0, 0.35, 0.90, 1, 1};
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == doctest::Approx(expect[i]).epsilon(0.01));
}

TEST_CASE("scaled training matrix invariants on random databases") {
  SplitMix64 rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.index(30), m = 1 + rng.index(8);
    Matrix X = oracle::random_matrix(rng, n, m, -1e3, 1e3);
    for (std::size_t i = 0; i < n; ++i) X(i, 0) = 7.0;
    const auto db = make_db(X, std::vector<int>(n, 1));
    const auto scaled = scale_database(db, fit_scaler(db));
    CHECK(scaled.stage == DbStage::Scaled);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> raw, out;
      for (std::size_t i = 0; i < n; ++i) {
        raw.push_back(X(i, j));
        out.push_back(scaled.rows[i].values[j]);
        CHECK(out.back() >= 0.0);
        CHECK(out.back() <= 1.0);
      }
      if (j > 0) {
        CHECK(*std::min_element(out.begin(), out.end()) == 0.0);
        CHECK(*std::max_element(out.begin(), out.end()) == 1.0);
      }
      CHECK(stable_argsort(raw) == stable_argsort(out));
    }
  }
}

TEST_CASE("scaling twice is rejected by stage") {
  auto db = column_db({1, 2, 3});
  auto scaled = scale_database(db, fit_scaler(db));
  CHECK_THROWS_AS(scale_database(scaled, fit_scaler(db)), Error);
  CHECK_THROWS_AS(fit_scaler(scaled), Error);
  CHECK_THROWS_AS(fit_scaler(column_db({1})), Error);
}

TEST_CASE("label encoding") {
  const auto& reg = default_fault_registry();
  CHECK(encode_label("FAULTY", LabelKind::Link, {}) == Label::faulty_link());
  CHECK(encode_label("HEALTHY", LabelKind::Link, {}) == Label::healthy_link());
  CHECK(encode_label("HEALTHY", LabelKind::Client, reg) == Label::client(0));
  CHECK(encode_label("sack_disabled", LabelKind::Client, reg) == Label::client(1));
  CHECK(encode_label("write_buffer", LabelKind::Client, reg) == Label::client(4));
  CHECK_THROWS_AS(encode_label("sideways", LabelKind::Client, reg), Error);
  CHECK_THROWS_AS(encode_label("sack_disabled", LabelKind::Link, reg), Error);
  CHECK(decode_label(Label::client(3), reg) == "read_buffer");
  CHECK(decode_label(Label::faulty_link(), reg) == "FAULTY");
}

TEST_CASE("labelled raw vector keeps its values") {
  std::vector<TaggedRow> rows = {{{1249256, 295, 0, 32, 39, 1, 1}, "FAULTY"}, {{1, 2, 3, 4, 5, 6, 7}, "HEALTHY"}};
  auto db = encode_labels(rows, LabelKind::Link, {}, {"a", "b", "c", "d", "e", "f", "g"}, "v1");
  CHECK(db.rows[0].values == rows[0].values);
  CHECK(db.rows[0].label == Label::faulty_link());
  CHECK(db.label_values() == std::vector<int>{1, -1});
  CHECK(db.stage == DbStage::Preliminary);
}

TEST_CASE("database file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "netdiag_pre_test";
  std::filesystem::create_directories(dir);
  SplitMix64 rng(12);
  std::vector<TaggedRow> rows;
  const char* tags[] = {"HEALTHY", "sack_disabled", "dsack_disabled", "read_buffer", "write_buffer"};
  for (int i = 0; i < 15; ++i) {
    std::vector<double> v;
    for (int j = 0; j < 5; ++j) v.push_back((rng.uniform() - 0.5) * std::pow(10.0, rng.index(12)));
    rows.push_back({v, tags[i % 5]});
  }
  auto db = encode_labels(rows, LabelKind::Client, default_fault_registry(), {"a", "b", "c", "d", "e"}, "v1");
  write_database(db, dir / "db.csv");
  CHECK(std::filesystem::exists(dir / "db.meta.json"));
  CHECK(read_database(dir / "db.csv") == db);

  auto link = encode_labels(std::vector<TaggedRow>{{{1, 2}, "FAULTY"}, {{3, 4}, "HEALTHY"}}, LabelKind::Link, {},
                            {"x", "y"}, "v1");
  auto scaled = scale_database(link, fit_scaler(link));
  write_database(scaled, dir / "s.csv");
  CHECK(read_database(dir / "s.csv") == scaled);
  std::filesystem::remove_all(dir);
}

TEST_CASE("validate catches broken databases") {
  auto db = column_db({1, 2});
  db.rows[1].values.push_back(3);
  CHECK_THROWS_AS(db.validate(), Error);
  auto other = column_db({1, 2});
  other.rows[0].catalog_version = "v0";
  CHECK_THROWS_AS(other.validate(), Error);
}

}  // TEST_SUITE
