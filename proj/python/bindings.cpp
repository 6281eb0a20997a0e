// Python bindings for the fairrep library.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fairrep/certificates.hpp"
#include "fairrep/data.hpp"
#include "fairrep/decision.hpp"
#include "fairrep/experiment.hpp"
#include "fairrep/metrics.hpp"
#include "fairrep/oracle.hpp"
#include "fairrep/probability.hpp"
#include "fairrep/representation.hpp"

namespace py = pybind11;
using namespace fairrep;

namespace {

std::vector<double> group_rate_pair(const std::vector<double>& rule, const DiscreteJoint& joint) {
  const GroupRates r = group_rates(rule, joint);
  return {r.given_s1, r.given_s0};
}

RepresentationResult train_representation(const Matrix& features, const std::vector<std::uint8_t>& s,
                                          double lambda, int epochs, int batch_size, double learning_rate,
                                          std::uint64_t seed, int hidden_units) {
  nn::TrainConfig config;
  config.epochs = epochs;
  config.batch_size = batch_size;
  config.learning_rate = learning_rate;
  config.seed = seed;
  return train_fair_representation(features, s, lambda, config, hidden_units);
}

py::dict check_summary(const oracle::CheckSummary& s) {
  py::dict d;
  d["instances"] = s.instances;
  d["violations"] = s.violations;
  d["max_sp_gap"] = s.max_sp_gap;
  d["max_di_gap"] = s.max_di_gap;
  d["max_rys_gap"] = s.max_rys_gap;
  d["max_mistrust_excess"] = s.max_mistrust_excess;
  d["max_iu_excess"] = s.max_iu_excess;
  d["messages"] = s.messages;
  return d;
}

}  // namespace

PYBIND11_MODULE(_fairrep, m) {
  m.doc() = "Fair representation learning with provable group fairness certificates";

  // Later registrations are tried first, so the subclass goes second.
  const auto base = py::register_exception<Error>(m, "FairrepError", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base.ptr());

  py::class_<DiscreteJoint>(m, "DiscreteJoint")
      .def(py::init<std::vector<double>, std::vector<double>, std::optional<std::vector<double>>>(),
           py::arg("px"), py::arg("ps_given_x"), py::arg("py_given_x") = py::none())
      .def_static("from_rows",
                  [](const std::vector<std::uint8_t>& s, const std::vector<std::uint8_t>& y) {
                    return DiscreteJoint::from_rows(s, y);
                  },
                  py::arg("s"), py::arg("y") = std::vector<std::uint8_t>{})
      .def_property_readonly("px", &DiscreteJoint::px)
      .def_property_readonly("ps_given_x", &DiscreteJoint::ps_given_x)
      .def_property_readonly("py_given_x", &DiscreteJoint::py_given_x)
      .def_property_readonly("support_size", &DiscreteJoint::support_size);

  m.def("binary_entropy", &binary_entropy, py::arg("p"));
  m.def("inverse_binary_entropy", &inverse_binary_entropy, py::arg("h"));

  m.def("group_rates", &group_rate_pair, py::arg("rule"), py::arg("joint"),
        "[p(Yhat=1|S=1), p(Yhat=1|S=0)]");
  m.def("statistical_parity",
        [](const std::vector<double>& rule, const DiscreteJoint& j) { return statistical_parity(rule, j).value; },
        py::arg("rule"), py::arg("joint"));
  m.def("disparate_impact",
        [](const std::vector<double>& rule, const DiscreteJoint& j) { return disparate_impact(rule, j).value; },
        py::arg("rule"), py::arg("joint"));
  m.def("balanced_error_rate",
        [](const std::vector<double>& rule, const DiscreteJoint& j) { return balanced_error_rate(rule, j); },
        py::arg("rule"), py::arg("joint"));

  m.def("sp_certificate_ber",
        [](const std::vector<double>& ps, const std::vector<double>& w, double p_s1) {
          return sp_certificate_ber(ps, w, p_s1);
        },
        py::arg("ps_estimates"), py::arg("weights"), py::arg("p_s1"));
  m.def("sp_certificate_entropy",
        [](const std::vector<double>& ps, const std::vector<double>& w, double p_s1) {
          return sp_certificate_entropy(ps, w, p_s1);
        },
        py::arg("ps_estimates"), py::arg("weights"), py::arg("p_s1"));
  m.def("di_certificate", &di_certificate, py::arg("eta_f"), py::arg("p_s1"));
  m.def("estimate_eta_f",
        [](const std::vector<double>& ps, double slack) { return estimate_eta_f(ps, slack); },
        py::arg("ps_estimates"), py::arg("quantile_slack"));
  m.def("individual_fairness_bound",
        [](double epsilon, double delta) {
          const IndividualFairnessBound b = individual_fairness_bound(epsilon, delta);
          return py::make_tuple(b.distance_offset, b.unfairness_bound);
        },
        py::arg("epsilon"), py::arg("delta"));
  m.def("mistrust_bound",
        [](double l_y, double l_s, double lambda, double avg) { return mistrust_bound({l_y, l_s}, lambda, avg); },
        py::arg("l_y"), py::arg("l_s"), py::arg("lambda_"), py::arg("avg_recon_error"));

  m.def("decide",
        [](const std::vector<double>& py_, const std::vector<double>& ps, double c_y, double c_s, double lambda) {
          return decide_from_probabilities(py_, ps, {c_y, c_s, lambda});
        },
        py::arg("py"), py::arg("ps"), py::arg("c_y") = 0.5, py::arg("c_s") = 0.5, py::arg("lambda_") = 0.0);

  m.def("max_sp", [](const DiscreteJoint& j) { return oracle::max_sp(j).best_value; }, py::arg("joint"));
  m.def("max_di", [](const DiscreteJoint& j) { return oracle::max_di(j).best_value; }, py::arg("joint"));
  m.def("min_rys",
        [](const DiscreteJoint& j, double c_y, double c_s, double lambda) {
          return oracle::min_rys(j, {c_y, c_s, lambda}).best_value;
        },
        py::arg("joint"), py::arg("c_y"), py::arg("c_s"), py::arg("lambda_"));
  m.def("oracle_check", [](std::uint64_t seed, std::size_t instances, std::size_t max_support) {
          return check_summary(oracle::run_checks(seed, instances, max_support));
        },
        py::arg("seed") = 0, py::arg("instances") = 500, py::arg("max_support") = 10);

  py::class_<data::Dataset>(m, "Dataset")
      .def_readonly("features", &data::Dataset::features)
      .def_readonly("s", &data::Dataset::s)
      .def_readonly("y", &data::Dataset::y)
      .def_readonly("feature_names", &data::Dataset::feature_names)
      .def_property_readonly("rows", &data::Dataset::rows);
  m.def("make_synthetic",
        [](std::size_t rows, std::size_t noise_features, std::size_t sensitive_copies, double sensitive_noise,
           double p_s1, double target_dependence, std::uint64_t seed) {
          return data::make_synthetic(
              {rows, noise_features, sensitive_copies, sensitive_noise, p_s1, target_dependence, seed});
        },
        py::arg("rows") = 1000, py::arg("noise_features") = 4, py::arg("sensitive_copies") = 2,
        py::arg("sensitive_noise") = 0.1, py::arg("p_s1") = 0.5, py::arg("target_dependence") = 1.0,
        py::arg("seed") = 0);

  py::class_<RepresentationModel>(m, "RepresentationModel")
      .def_readonly("lambda_", &RepresentationModel::lambda)
      .def_readonly("train_seed", &RepresentationModel::train_seed)
      .def_property_readonly("dim", &RepresentationModel::dim)
      .def("apply", [](const RepresentationModel& model, const Matrix& x) { return apply_representation(model, x); },
           py::arg("features"))
      .def("adversary_probabilities",
           [](const RepresentationModel& model, const Matrix& cleaned) {
             return predict_probabilities(model.adversary, cleaned);
           },
           py::arg("cleaned"));
  py::class_<RepresentationTrace>(m, "RepresentationTrace")
      .def_readonly("reconstruction_loss", &RepresentationTrace::reconstruction_loss)
      .def_readonly("adversary_loss", &RepresentationTrace::adversary_loss)
      .def_readonly("adversary_steps", &RepresentationTrace::adversary_steps)
      .def_readonly("encoder_steps", &RepresentationTrace::encoder_steps);
  py::class_<RepresentationResult>(m, "RepresentationResult")
      .def_readonly("model", &RepresentationResult::model)
      .def_readonly("trace", &RepresentationResult::trace);
  m.def("train_representation", &train_representation, py::arg("features"), py::arg("s"), py::arg("lambda_"),
        py::arg("epochs") = nn::TrainConfig{}.epochs, py::arg("batch_size") = nn::TrainConfig{}.batch_size,
        py::arg("learning_rate") = nn::TrainConfig{}.learning_rate, py::arg("seed") = 0,
        py::arg("hidden_units") = kHiddenUnits);

  m.def("config_keys", &config_keys);
  m.def("sweep",
        [](const std::string& config_text, const std::string& out_dir) {
          const ExperimentConfig config = parse_config(config_text);
          config.validate();
          const SweepResult result = run_sweep(config);
          if (!out_dir.empty()) write_sweep_outputs(out_dir, config, result);
          return format_sweep_csv(result.rows);
        },
        py::arg("config_text"), py::arg("out_dir") = "",
        "Runs a lambda sweep from key=value config text and returns the sweep table as CSV.");
}
