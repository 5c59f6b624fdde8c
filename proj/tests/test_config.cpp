#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "netdiag/config.hpp"
#include "netdiag/error.hpp"

using namespace netdiag;
using nlohmann::json;

namespace {

ErrorKind kind_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::MalformedRow;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const CliConfig c;
  CHECK(c.catalog_version == "v1");
  CHECK(c.lpd == default_lpd_config());
  CHECK(c.cfd.size() == 4);
  CHECK(c.cfd.at("read_buffer") == default_cf_config("read_buffer"));
  CHECK_FALSE(c.lpd_grid.has_value());
  CHECK_NOTHROW(c.validate());
  CHECK(config_from_json(json::object()).lpd == c.lpd);
}

TEST_CASE("partial stages keep their defaults") {
  const json j = {{"seed", 42},
                  {"lpd", {{"C", 100.0}, {"kernel", "rbf"}}},
                  {"cfd", {{"sack_disabled", {{"candidate_sizes", {8}}}}}},
                  {"lpd_grid", {{"kernels", {"linear", "quadratic"}}, {"C", {1.0, 10.0}}}},
                  {"paths", {{"bundle", "out/bundle"}}}};
  const auto c = config_from_json(j);
  CHECK(c.seed == 42);
  CHECK(c.lpd.svm.C == 100.0);
  CHECK(c.lpd.svm.kernel.type == KernelType::Rbf);
  CHECK(c.lpd.svm.max_iter == default_lpd_config().svm.max_iter);
  CHECK(c.cfd.at("sack_disabled").candidate_sizes == std::vector<std::size_t>{8});
  CHECK(c.cfd.at("sack_disabled").svm.kernel.type == KernelType::Linear);
  REQUIRE(c.lpd_grid);
  CHECK(c.lpd_grid->kernels.size() == 2);
  CHECK(c.bundle_path->string() == "out/bundle");
  CHECK(c.lpd_stage().seed == 42);
  for (const auto& [name, s] : c.cfd_stages()) CHECK(s.seed == 42);
  CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
}

TEST_CASE("strictness") {
  CHECK(kind_of({{"sed", 1}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd", {{"c", 1.0}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd", {{"C", -1.0}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd", {{"C", "ten"}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd", {{"kernel", "sigmoid"}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd", {{"folds", 1}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd", {{"objective", "f1"}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"seed", -3}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"cfd", {{"ecn_disabled", json::object()}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"fault_registry", {{"a", 1}, {"b", 1}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"fault_registry", {{"a", 0}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"fault_registry", json::object()}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd_grid", {{"kernels", json::array()}, {"C", {1.0}}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"lpd_grid", {{"kernels", {"linear"}}, {"C", {0.0}}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of({{"paths", {{"bundel", "x"}}}}) == ErrorKind::ConfigError);
  CHECK(kind_of(json::array()) == ErrorKind::ConfigError);
}

TEST_CASE("custom registry") {
  const auto c = config_from_json({{"fault_registry", {{"ecn_disabled", 1}, {"sack_disabled", 2}}},
                                   {"cfd", {{"ecn_disabled", {{"C", 1.0}}}}}});
  CHECK(c.cfd.size() == 2);
  CHECK(c.cfd.at("ecn_disabled").svm.C == 1.0);
  CHECK(c.cfd.at("sack_disabled") == default_cf_config("sack_disabled"));
}

TEST_CASE("load from file") {
  const auto dir = fixture::scratch("config");
  {
    std::ofstream(dir / "ok.json") << R"({"seed": 9, "lpd": {"candidate_sizes": [5, 10]}})";
    std::ofstream(dir / "broken.json") << "{\"seed\": ";
  }
  const auto c = load_config(dir / "ok.json");
  CHECK(c.seed == 9);
  CHECK(c.lpd.candidate_sizes == std::vector<std::size_t>{5, 10});
  CHECK_THROWS_AS(load_config(dir / "broken.json"), Error);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), Error);
}

}  // TEST_SUITE
