#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "casper/graph.hpp"
#include "casper/io.hpp"
#include "casper/learner.hpp"
#include "casper/metrics.hpp"
#include "casper/sem.hpp"

namespace py = pybind11;
using namespace casper;

namespace {

Dataset as_dataset(const Matrix& x) { return {x, default_names(static_cast<int>(x.cols()))}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "dag structure learning core";

  py::register_exception<TrainingError>(m, "TrainingError");

  py::enum_<FitMode>(m, "FitMode")
      .value("LINEAR", FitMode::Linear)
      .value("MLP", FitMode::Mlp);

  py::class_<AcyclicityForm>(m, "AcyclicityForm")
      .def_static("matrix_exponential", &AcyclicityForm::matrix_exponential)
      .def_static("polynomial", &AcyclicityForm::polynomial, py::arg("alpha"))
      .def_static("polynomial_default", &AcyclicityForm::polynomial_default, py::arg("d"));

  py::class_<CasperConfig>(m, "CasperConfig")
      .def(py::init<>())
      .def_readwrite("mode", &CasperConfig::mode)
      .def_readwrite("lambda1", &CasperConfig::lambda1)
      .def_readwrite("lambda2", &CasperConfig::lambda2)
      .def_readwrite("k_inner", &CasperConfig::k_inner)
      .def_readwrite("k_outer_max", &CasperConfig::k_outer_max)
      .def_readwrite("pretrain_epochs", &CasperConfig::pretrain_epochs)
      .def_readwrite("omega", &CasperConfig::omega)
      .def_readwrite("acyclicity_form", &CasperConfig::acyclicity_form)
      .def_readwrite("seed", &CasperConfig::seed)
      .def_readwrite("theta_lr", &CasperConfig::theta_lr)
      .def_readwrite("phi_lr", &CasperConfig::phi_lr)
      .def_readwrite("mlp_hidden", &CasperConfig::mlp_hidden)
      .def_readwrite("critic_hidden", &CasperConfig::critic_hidden)
      .def_readwrite("linear_init_scale", &CasperConfig::linear_init_scale)
      .def_readwrite("reset_critic_between_subproblems",
                     &CasperConfig::reset_critic_between_subproblems)
      .def_readwrite("rel_change_tol", &CasperConfig::rel_change_tol)
      .def_readwrite("max_divergence_recoveries", &CasperConfig::max_divergence_recoveries);

  m.def("default_linear_config", &default_linear_config, py::arg("seed") = 0);
  m.def("default_mlp_config", &default_mlp_config, py::arg("seed") = 0);

  py::class_<OuterRecord>(m, "OuterRecord")
      .def_readonly("epoch", &OuterRecord::epoch)
      .def_readonly("score", &OuterRecord::score)
      .def_readonly("h", &OuterRecord::h)
      .def_readonly("alpha", &OuterRecord::alpha)
      .def_readonly("mu", &OuterRecord::mu)
      .def_readonly("critic_distance", &OuterRecord::critic_distance)
      .def_readonly("clip_bound", &OuterRecord::clip_bound)
      .def_readonly("max_abs_critic_param", &OuterRecord::max_abs_critic_param);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("weighted", &TrainResult::weighted)
      .def_readonly("pruned", &TrainResult::pruned)
      .def_readonly("history", &TrainResult::history)
      .def_readonly("wall_time_seconds", &TrainResult::wall_time_seconds)
      .def_readonly("final_h", &TrainResult::final_h)
      .def_readonly("converged", &TrainResult::converged)
      .def_readonly("hit_mu_cap", &TrainResult::hit_mu_cap)
      .def_readonly("hit_subproblem_cap", &TrainResult::hit_subproblem_cap)
      .def_readonly("divergence_recoveries", &TrainResult::divergence_recoveries)
      .def("__repr__", [](const TrainResult& r) {
        return "<TrainResult edges=" + std::to_string(r.pruned.sum()) +
               " final_h=" + format_double(r.final_h) +
               " converged=" + (r.converged ? std::string("True") : std::string("False")) + ">";
      });

  py::class_<GroundTruthDag>(m, "GroundTruthDag")
      .def_readonly("adjacency", &GroundTruthDag::adjacency)
      .def_readonly("order", &GroundTruthDag::order)
      .def_property_readonly("d", &GroundTruthDag::d)
      .def_property_readonly("edge_count", &GroundTruthDag::edge_count);

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("tpr", &MetricsReport::tpr)
      .def_readonly("fdr", &MetricsReport::fdr)
      .def_readonly("shd", &MetricsReport::shd)
      .def_readonly("sid", &MetricsReport::sid)
      .def_readonly("n_predicted_edges", &MetricsReport::n_predicted_edges)
      .def_readonly("n_correct_edges", &MetricsReport::n_correct_edges)
      .def("__repr__", [](const MetricsReport& r) {
        return "<MetricsReport shd=" + std::to_string(r.shd) + " tpr=" + format_double(r.tpr) +
               " fdr=" + format_double(r.fdr) + ">";
      });

  m.def("generate_er", &generate_er, py::arg("d"), py::arg("degree"), py::arg("seed"));
  m.def("generate_sf", &generate_sf, py::arg("d"), py::arg("degree"), py::arg("seed"));
  m.def("is_acyclic", &is_acyclic, py::arg("adjacency"));
  m.def("h_value", &h_value, py::arg("w"),
        py::arg("form") = AcyclicityForm::matrix_exponential());
  m.def("prune", &prune, py::arg("w"), py::arg("omega"));

  m.def(
      "simulate_linear",
      [](const GroundTruthDag& dag, int n, uint64_t coef_seed, uint64_t data_seed,
         double noise_mean, double noise_std) {
        LinearSemSpec spec = sample_linear_weights(dag, coef_seed, noise_mean, noise_std);
        Dataset data = simulate_linear(spec, n, data_seed);
        return py::make_tuple(data.values, spec.coefficients);
      },
      py::arg("dag"), py::arg("n"), py::arg("coef_seed"), py::arg("data_seed"),
      py::arg("noise_mean") = 0.0, py::arg("noise_std") = 1.0,
      "returns (data, coefficients)");

  m.def(
      "simulate_gp",
      [](const GroundTruthDag& dag, int n, uint64_t data_seed, double noise_mean,
         double noise_std, double bandwidth) {
        NonlinearSemSpec spec;
        spec.dag = dag;
        spec.kernel_bandwidth = bandwidth;
        spec.noise_mean = noise_mean;
        spec.noise_std = noise_std;
        return simulate_nonlinear_gp(spec, n, data_seed).values;
      },
      py::arg("dag"), py::arg("n"), py::arg("data_seed"), py::arg("noise_mean") = 0.0,
      py::arg("noise_std") = 1.0, py::arg("bandwidth") = 1.0);

  m.def(
      "casper_fit", [](const Matrix& x, const CasperConfig& cfg) { return casper_fit(as_dataset(x), cfg); },
      py::arg("x"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "notears_fit",
      [](const Matrix& x, const CasperConfig& cfg) { return notears_fit(as_dataset(x), cfg); },
      py::arg("x"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "notears_mlp_fit",
      [](const Matrix& x, const CasperConfig& cfg) {
        return notears_mlp_fit(as_dataset(x), cfg);
      },
      py::arg("x"), py::arg("config"), py::call_guard<py::gil_scoped_release>());

  m.def("evaluate", &evaluate_graphs, py::arg("truth"), py::arg("estimate"));

  m.def(
      "ingest_csv",
      [](const std::string& path, bool standardize) {
        Dataset data = ingest_csv(path, standardize);
        return py::make_tuple(data.values, data.names);
      },
      py::arg("path"), py::arg("standardize") = true, "returns (data, column_names)");
}
