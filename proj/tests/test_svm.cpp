#include <doctest.h>

#include <cmath>

#include "netdiag/error.hpp"
#include "netdiag/rng.hpp"
#include "netdiag/svm.hpp"
#include "oracles.hpp"

using namespace netdiag;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix X(r.size(), r.begin()->size());
  std::size_t i = 0;
  for (const auto& row : r) {
    std::size_t j = 0;
    for (double v : row) X(i, j++) = v;
    ++i;
  }
  return X;
}

KernelSpec kernel_for(int k, std::size_t q) {
  switch (k % 4) {
    case 0: return KernelSpec::linear();
    case 1: return KernelSpec::quadratic();
    case 2: return KernelSpec::cubic();
    default: return KernelSpec::rbf(std::sqrt(q / 2.0));
  }
}

SvmModel line_model() {
  const Matrix X = rows({{0.0}, {2.0}});
  const std::vector<int> y = {-1, 1};
  return train(X, y, {KernelSpec::linear(), 1e6, 100000, 1e-9});
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("kernel values") {
  const std::vector<double> a = {1, 2}, b = {3, 4}, e = {1, 0};
  CHECK(kernel_eval(KernelSpec::linear(), a, b) == 11);
  CHECK(kernel_eval(KernelSpec::quadratic(), e, e) == 4);
  CHECK(kernel_eval(KernelSpec::cubic(), e, e) == 8);
  CHECK(kernel_eval(KernelSpec::rbf(0.3), a, a) == 1);
  CHECK(kernel_eval(KernelSpec::rbf(1.0), a, b) == doctest::Approx(std::exp(-4.0)));
}

TEST_CASE("quadratic kernel equals the explicit feature map") {
  SplitMix64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const double x0 = rng.uniform(), x1 = rng.uniform(), z0 = rng.uniform(), z1 = rng.uniform();
    auto phi = [](double a, double b) {
      const double r2 = std::sqrt(2.0);
      return std::vector<double>{a * a, b * b, r2 * a * b, r2 * a, r2 * b, 1.0};
    };
    const auto p = phi(x0, x1), q = phi(z0, z1);
    double dot = 0.0;
    for (int i = 0; i < 6; ++i) dot += p[i] * q[i];
    CHECK(kernel_eval(KernelSpec::quadratic(), std::vector<double>{x0, x1}, std::vector<double>{z0, z1}) ==
          doctest::Approx(dot).epsilon(1e-12));
  }
}

TEST_CASE("gram matrix: ridge, symmetry, spectrum") {
  const Matrix one = rows({{0.0}});
  CHECK(gram_matrix(KernelSpec::linear(), one, 1.0)(0, 0) == 1.0);
  SplitMix64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix X = oracle::random_matrix(rng, 2 + rng.index(15), 1 + rng.index(5));
    const double C = rep % 2 ? 1.0 : 10.0;
    const Matrix G = gram_matrix(KernelSpec::rbf(0.5 + rng.uniform()), X, C);
    for (std::size_t i = 0; i < G.rows(); ++i) {
      for (std::size_t j = 0; j < G.cols(); ++j) CHECK(G(i, j) == G(j, i));
    }
    CHECK(oracle::min_eigenvalue(G) >= 1.0 / C - 1e-9);
  }
}

TEST_CASE("1-D pair recovers the max-margin separator") {
  const SvmModel m = line_model();
  CHECK(m.training_meta.converged);
  for (double x : {-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    CHECK(std::abs(decision_value(m, std::vector<double>{x}) - (x - 1.0)) <= 1e-3);
  }
  CHECK(std::abs(decision_value(m, std::vector<double>{1.0})) <= 1e-3);
  const double alpha = std::abs(m.dual_coef[0]);
  CHECK(std::abs(decision_value(m, std::vector<double>{2.0}) - (1.0 - alpha / m.C)) <= 1e-3);
  CHECK(decision_value(m, std::vector<double>{0.0}) < 0.0);
}

TEST_CASE("XOR with a quadratic kernel") {
  const Matrix X = rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  const std::vector<int> y = {-1, -1, 1, 1};
  const SvmModel m = train(X, y, {KernelSpec::quadratic(), 10.0, 1000, 1e-3});
  for (std::size_t i = 0; i < 4; ++i) CHECK(classify(m, X.row(i)) == y[i]);
}

TEST_CASE("single class and bad config are rejected") {
  const Matrix X = rows({{0}, {1}, {2}});
  try {
    train(X, std::vector<int>{1, 1, 1}, {KernelSpec::linear(), 1.0, 100, 1e-3});
    FAIL("expected SingleClassInput");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingleClassInput);
  }
  CHECK_THROWS_AS(train(X, std::vector<int>{1, -1, 1}, {KernelSpec::linear(), -1.0, 100, 1e-3}), Error);
  CHECK_THROWS_AS(train(X, std::vector<int>{1, -1, 1}, {KernelSpec::rbf(0.0), 1.0, 100, 1e-3}), Error);
  CHECK_THROWS_AS(train(X, std::vector<int>{1, -1, 2}, {KernelSpec::linear(), 1.0, 100, 1e-3}), Error);
}

TEST_CASE("classify tie rule") {
  CHECK(classify(0.7) == 1);
  CHECK(classify(-0.7) == -1);
  CHECK(classify(0.0) == 1);
}

TEST_CASE("random problems: KKT, monotone objective, oracle agreement, label swap") {
  SplitMix64 rng(2024);
  for (int p = 0; p < 24; ++p) {
    const std::size_t n = 4 + rng.index(5), q = 1 + rng.index(3);
    const Matrix X = oracle::random_matrix(rng, n, q);
    const std::vector<int> y = oracle::random_labels(rng, n);
    const SvmConfig cfg{kernel_for(p, q), p % 2 ? 1.0 : 10.0, 100000, 1e-6};
    const TrainResult r = train_detailed(X, y, cfg);
    REQUIRE(r.model.training_meta.converged);
    CHECK(kkt_residual(X, y, r.state.alpha, r.model.bias, cfg) <= 1e-3);
    for (std::size_t i = 1; i < r.state.objective_trace.size(); ++i) {
      CHECK(r.state.objective_trace[i] >= r.state.objective_trace[i - 1] - 1e-12);
    }
    const auto ref = oracle::solve_dual_pg(X, y, cfg.kernel, cfg.C);
    CHECK(std::abs(dual_objective(r.state.alpha, y, r.state.gram) - ref.objective) <= 1e-4);

    CHECK(r.model.support_vectors.size() == r.model.dual_coef.size());
    CHECK(r.model.support_vectors.size() >= 1);

    std::vector<int> flipped(y);
    for (auto& v : flipped) v = -v;
    const SvmModel neg = train(X, flipped, cfg);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> x(q);
      for (auto& v : x) v = rng.uniform();
      CHECK(std::abs(decision_value(neg, x) + decision_value(r.model, x)) <= 1e-9);
    }
  }
}

TEST_CASE("support vector signs follow labels") {
  SplitMix64 rng(31);
  const Matrix X = oracle::random_matrix(rng, 30, 3);
  const std::vector<int> y = oracle::random_labels(rng, 30, 3);
  const SvmConfig cfg{KernelSpec::rbf(1.0), 10.0, 1000, 1e-3};
  const TrainResult r = train_detailed(X, y, cfg);
  std::size_t k = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (r.state.alpha[i] <= cfg.tol) continue;
    REQUIRE(k < r.model.dual_coef.size());
    CHECK((r.model.dual_coef[k] > 0) == (y[i] > 0));
    ++k;
  }
  CHECK(k == r.model.dual_coef.size());
}

TEST_CASE("serialization round trip is exact and deterministic") {
  SplitMix64 rng(9);
  const Matrix X = oracle::random_matrix(rng, 25, 4);
  const std::vector<int> y = oracle::random_labels(rng, 25, 3);
  const SvmConfig cfg{KernelSpec::cubic(), 10.0, 1000, 1e-3};
  SvmModel m = train(X, y, cfg);
  m.catalog_version = "v1";
  m.feature_subset = {3, 0, 2, 7};
  m.scaler = ScalerParams{{0, 0.1, 0.2, 0.3, 0, 0, 0, -1}, {1, 1.1, 1.2, 1.3, 1, 1, 1, 1e9}, 25};
  const std::string text = serialize_model(m);
  const SvmModel back = model_from_json(nlohmann::json::parse(text));
  CHECK(back == m);
  CHECK(serialize_model(back) == text);
  CHECK(serialize_model(train(X, y, cfg)) == serialize_model(train(X, y, cfg)));
}

TEST_CASE("prepare_input applies scaler then subset") {
  SvmModel m;
  m.scaler = ScalerParams{{0, 0, 0}, {10, 20, 40}, 2};
  m.feature_subset = {2, 0};
  const auto x = prepare_input(m, std::vector<double>{5, 5, 50});
  CHECK(x == std::vector<double>{1.0, 0.5});
}

}  // TEST_SUITE
