#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "netdiag/diagnosis.hpp"
#include "netdiag/error.hpp"
#include "netdiag/features.hpp"
#include "netdiag/preprocess.hpp"
#include "netdiag/selection.hpp"
#include "netdiag/svm.hpp"
#include "netdiag/trace.hpp"
#include "netdiag/workbench.hpp"

namespace py = pybind11;
using namespace netdiag;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t q = rows.empty() ? 0 : rows.front().size();
  Matrix X(rows.size(), q);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != q) throw Error(ErrorKind::DimensionMismatch, "ragged input rows");
    for (std::size_t j = 0; j < q; ++j) X(i, j) = rows[i][j];
  }
  return X;
}

std::string trace_text(const TraceRecord& t) {
  std::ostringstream out;
  format_trace(t, out);
  return out.str();
}

std::string stats_json(const FlowStats& s) {
  nlohmann::json j = {{"segments_sent", s.segments_sent},
                      {"retransmissions", s.retransmissions},
                      {"fast_retransmits", s.fast_retransmits},
                      {"timeouts", s.timeouts},
                      {"random_drops", s.random_drops},
                      {"queue_drops", s.queue_drops},
                      {"delivered_bytes", s.delivered_bytes},
                      {"duplicate_segments", s.duplicate_segments},
                      {"dsack_blocks", s.dsack_blocks},
                      {"completion_time", s.completion_time}};
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_netdiag, m) {
  m.doc() = "TCP trace pair diagnosis: feature extraction, SVM stages and a flow simulator";

  py::register_exception<Error>(m, "NetdiagError", PyExc_ValueError);

  m.def("catalog_version", [] { return default_catalog().version; });
  m.def("feature_names", [] { return default_catalog().names(); });

  m.def(
      "extract_signature",
      [](const std::string& down, const std::string& up) {
        TracePair pair{read_trace(down), read_trace(up)};
        return extract_signature(pair, default_catalog()).values;
      },
      py::arg("down"), py::arg("up"));

  m.def(
      "t_statistic",
      [](const std::vector<double>& a, const std::vector<double>& b, bool welch) {
        return t_statistic(a, b, welch);
      },
      py::arg("a"), py::arg("b"), py::arg("welch") = false);

  m.def(
      "minmax_scale",
      [](const std::vector<std::vector<double>>& rows) {
        SignatureDatabase db;
        const std::size_t q = rows.empty() ? 0 : rows.front().size();
        for (std::size_t j = 0; j < q; ++j) db.feature_names.push_back("f" + std::to_string(j));
        for (const auto& r : rows) db.rows.push_back({r, Label::healthy_link(), ""});
        const ScalerParams s = fit_scaler(db);
        std::vector<std::vector<double>> out;
        for (const auto& r : rows) out.push_back(apply_scaler(r, s));
        return out;
      },
      py::arg("rows"));

  py::class_<SvmModel>(m, "SvmModel")
      .def("decision_value",
           [](const SvmModel& model, const std::vector<double>& x) { return decision_value(model, x); })
      .def("classify", [](const SvmModel& model, const std::vector<double>& x) { return classify(model, x); })
      .def_property_readonly("bias", [](const SvmModel& model) { return model.bias; })
      .def_property_readonly("n_support", [](const SvmModel& model) { return model.support_vectors.size(); })
      .def_property_readonly("converged", [](const SvmModel& model) { return model.training_meta.converged; })
      .def("to_json", [](const SvmModel& model) { return serialize_model(model); })
      .def_static("from_json",
                  [](const std::string& text) { return model_from_json(nlohmann::json::parse(text)); });

  m.def(
      "train_svm",
      [](const std::vector<std::vector<double>>& X, const std::vector<int>& y, const std::string& kernel,
         double C, double sigma, int max_iter, double tol) {
        SvmConfig cfg{{parse_kernel_type(kernel), sigma}, C, max_iter, tol};
        return train(to_matrix(X), y, cfg);
      },
      py::arg("X"), py::arg("y"), py::arg("kernel") = "linear", py::arg("C") = 10.0, py::arg("sigma") = 1.0,
      py::arg("max_iter") = 1000, py::arg("tol") = 1e-3);

  m.def(
      "simulate",
      [](const std::string& scenario_json) {
        const Scenario s = scenario_from_json(nlohmann::json::parse(scenario_json));
        const SimulationResult r = simulate_flow_detailed(s.link, s.client, s.bytes, s.seed);
        return py::make_tuple(trace_text(r.pair.download), trace_text(r.pair.upload),
                              stats_json(r.download), stats_json(r.upload));
      },
      py::arg("scenario_json"));

  m.def(
      "diagnose",
      [](const std::string& bundle_dir, const std::string& down, const std::string& up) {
        const Bundle bundle = read_bundle(bundle_dir);
        if (bundle.lpd_profiles.empty()) throw Error(ErrorKind::ConfigError, "bundle has no LPD classifier");
        TracePair pair{read_trace(down), read_trace(up)};
        return to_json(diagnose(bundle.lpd_profiles.begin()->second, bundle.cfd, pair)).dump();
      },
      py::arg("bundle_dir"), py::arg("down"), py::arg("up"));
}
