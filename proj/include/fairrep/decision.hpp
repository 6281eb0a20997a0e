#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairrep/matrix.hpp"
#include "fairrep/metrics.hpp"
#include "fairrep/neural.hpp"
#include "fairrep/representation.hpp"

namespace fairrep {

enum class InputSpace { kOriginal, kCleaned };

const char* input_space_name(InputSpace space);

/// The data user's decision variable: estimators of p(Y=1|x) and p(S=1|x)
/// combined by the closed-form minimiser of R_YS.
struct DecisionModel {
  nn::Mlp y_estimator;
  nn::Mlp s_estimator;
  CostParams params;
  InputSpace input_space = InputSpace::kCleaned;
};

using Decisions = std::vector<std::uint8_t>;

/// Two independently seeded single-hidden-layer sigmoid networks trained on
/// cross-entropy against Y and S. Throws "degenerate target" when either
/// label vector has one class only.
DecisionModel train_decision_model(const Matrix& features, std::span<const std::uint8_t> y_labels,
                                   std::span<const std::uint8_t> s_labels, const CostParams& params,
                                   const nn::TrainConfig& config, InputSpace input_space,
                                   int hidden_units = kHiddenUnits);

/// 1(p_y - c_y > lambda (p_s - c_s)), strict, per entry.
Decisions decide_from_probabilities(std::span<const double> py, std::span<const double> ps,
                                    const CostParams& params);

Decisions decide(const DecisionModel& model, const Matrix& features);

/// Plug-in R_Y - lambda R_S from empirical frequencies of (decision, Y, S).
double empirical_combined_risk(std::span<const std::uint8_t> decisions,
                               std::span<const std::uint8_t> y_labels,
                               std::span<const std::uint8_t> s_labels, const CostParams& params);

/// Plug-in cost-sensitive risk of the decisions against one label vector.
double empirical_cost_sensitive_risk(std::span<const std::uint8_t> decisions,
                                     std::span<const std::uint8_t> labels, double c);

/// R_YS(cleaned) - R_YS(original) from empirical frequencies. Unclipped: it
/// can be negative on finite samples.
double empirical_cost_of_mistrust(std::span<const std::uint8_t> decisions_cleaned,
                                  std::span<const std::uint8_t> decisions_original,
                                  std::span<const std::uint8_t> y_labels,
                                  std::span<const std::uint8_t> s_labels, const CostParams& params);

/// "row_id,decision" table, one line per row.
std::string export_decisions(std::span<const std::uint8_t> decisions);

}  // namespace fairrep
