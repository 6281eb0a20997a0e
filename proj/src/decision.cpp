#include "fairrep/decision.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fairrep/error.hpp"
#include "fairrep/random.hpp"

namespace fairrep {
namespace {

void check_not_degenerate(std::span<const std::uint8_t> labels, const char* name) {
  if (labels.empty()) throw Error("empty training data");
  const bool has_one = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_zero = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_one || !has_zero) throw Error(fmt::format("degenerate target: {} has a single class", name));
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(fmt::format("length mismatch: {} vs {}", a, b));
}

}  // namespace

const char* input_space_name(InputSpace space) {
  return space == InputSpace::kOriginal ? "original" : "cleaned";
}

DecisionModel train_decision_model(const Matrix& features, std::span<const std::uint8_t> y_labels,
                                   std::span<const std::uint8_t> s_labels, const CostParams& params,
                                   const nn::TrainConfig& config, InputSpace input_space,
                                   int hidden_units) {
  params.validate();
  check_lengths(y_labels.size(), s_labels.size());
  check_lengths(static_cast<std::size_t>(features.rows()), y_labels.size());
  check_not_degenerate(y_labels, "Y");
  check_not_degenerate(s_labels, "S");
  DecisionModel model;
  model.params = params;
  model.input_space = input_space;
  nn::TrainConfig y_config = config;
  y_config.seed = derive_seed(config.seed, 10);
  nn::TrainConfig s_config = config;
  s_config.seed = derive_seed(config.seed, 11);
  model.y_estimator = train_sensitive_estimator(features, y_labels, y_config, hidden_units);
  model.s_estimator = train_sensitive_estimator(features, s_labels, s_config, hidden_units);
  return model;
}

Decisions decide_from_probabilities(std::span<const double> py, std::span<const double> ps,
                                    const CostParams& params) {
  params.validate();
  check_lengths(py.size(), ps.size());
  Decisions out(py.size());
  for (std::size_t i = 0; i < py.size(); ++i) {
    out[i] = py[i] - params.c_y > params.lambda * (ps[i] - params.c_s) ? 1 : 0;
  }
  return out;
}

Decisions decide(const DecisionModel& model, const Matrix& features) {
  const std::vector<double> py = predict_probabilities(model.y_estimator, features);
  const std::vector<double> ps = predict_probabilities(model.s_estimator, features);
  return decide_from_probabilities(py, ps, model.params);
}

double empirical_cost_sensitive_risk(std::span<const std::uint8_t> decisions,
                                     std::span<const std::uint8_t> labels, double c) {
  check_lengths(decisions.size(), labels.size());
  if (decisions.empty()) throw Error("empty sample");
  if (!(c >= 0.0 && c <= 1.0)) throw Error("cost must lie in [0,1]");
  std::size_t false_positive = 0, false_negative = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i] == 1 && labels[i] == 0) ++false_positive;
    if (decisions[i] == 0 && labels[i] == 1) ++false_negative;
  }
  const auto n = static_cast<double>(decisions.size());
  return c * static_cast<double>(false_positive) / n +
         (1.0 - c) * static_cast<double>(false_negative) / n;
}

double empirical_combined_risk(std::span<const std::uint8_t> decisions,
                               std::span<const std::uint8_t> y_labels,
                               std::span<const std::uint8_t> s_labels, const CostParams& params) {
  params.validate();
  return empirical_cost_sensitive_risk(decisions, y_labels, params.c_y) -
         params.lambda * empirical_cost_sensitive_risk(decisions, s_labels, params.c_s);
}

double empirical_cost_of_mistrust(std::span<const std::uint8_t> decisions_cleaned,
                                  std::span<const std::uint8_t> decisions_original,
                                  std::span<const std::uint8_t> y_labels,
                                  std::span<const std::uint8_t> s_labels, const CostParams& params) {
  check_lengths(decisions_cleaned.size(), decisions_original.size());
  return empirical_combined_risk(decisions_cleaned, y_labels, s_labels, params) -
         empirical_combined_risk(decisions_original, y_labels, s_labels, params);
}

std::string export_decisions(std::span<const std::uint8_t> decisions) {
  std::string out = "row_id,decision\n";
  for (std::size_t i = 0; i < decisions.size(); ++i) out += fmt::format("{},{}\n", i, decisions[i]);
  return out;
}

}  // namespace fairrep
