#include "fairrep/metrics.hpp"

#include <cmath>
#include <string>

#include "fairrep/error.hpp"
#include "fairrep/random.hpp"

namespace fairrep {
namespace {

void check_rule(std::span<const double> rule, const DiscreteJoint& joint) {
  if (rule.size() != joint.support_size()) {
    throw Error("decision rule length " + std::to_string(rule.size()) +
                " differs from support size " + std::to_string(joint.support_size()));
  }
  for (double r : rule) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error("decision rule entry outside [0,1]");
  }
}

void check_row_count(std::span<const double> decision_probs, const Matrix& points) {
  if (points.rows() == 0) throw Error("empty sample");
  if (decision_probs.size() != static_cast<std::size_t>(points.rows())) {
    throw Error("decision probabilities do not match sample count");
  }
}

}  // namespace

void CostParams::validate() const {
  if (!(c_y >= 0.0 && c_y <= 1.0)) throw Error("c_y outside [0,1]");
  if (!(c_s >= 0.0 && c_s <= 1.0)) throw Error("c_s outside [0,1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lambda must be non-negative");
}

GroupRates group_rates(std::span<const double> rule, const DiscreteJoint& joint) {
  check_rule(rule, joint);
  double joint1 = 0.0, mass1 = 0.0, joint0 = 0.0, mass0 = 0.0;
  const auto& px = joint.px();
  const auto& ps = joint.ps_given_x();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double w1 = px[i] * ps[i];
    const double w0 = px[i] * (1.0 - ps[i]);
    mass1 += w1;
    mass0 += w0;
    joint1 += w1 * rule[i];
    joint0 += w0 * rule[i];
  }
  if (mass1 <= 0.0 || mass0 <= 0.0) throw Error("sensitive group empty");
  return {joint1 / mass1, joint0 / mass0};
}

double signed_statistical_parity(std::span<const double> rule, const DiscreteJoint& joint) {
  const GroupRates rates = group_rates(rule, joint);
  return rates.given_s1 - rates.given_s0;
}

double signed_disparate_impact(std::span<const double> rule, const DiscreteJoint& joint) {
  const GroupRates rates = group_rates(rule, joint);
  if (rates.given_s1 <= 0.0) throw Error("DI undefined: p(Yhat=1|S=1) is zero");
  return 1.0 - rates.given_s0 / rates.given_s1;
}

OrientedValue statistical_parity(std::span<const double> rule, const DiscreteJoint& joint) {
  const double raw = signed_statistical_parity(rule, joint);
  if (raw < 0.0) return {-raw, {true}};
  return {raw, {false}};
}

OrientedValue disparate_impact(std::span<const double> rule, const DiscreteJoint& joint) {
  const GroupRates rates = group_rates(rule, joint);
  const bool swapped = rates.given_s0 > rates.given_s1;
  const double high = swapped ? rates.given_s0 : rates.given_s1;
  const double low = swapped ? rates.given_s1 : rates.given_s0;
  if (high <= 0.0) throw Error("DI undefined: no positive decisions in either group");
  return {1.0 - low / high, {swapped}};
}

double balanced_error_rate(std::span<const double> rule, const DiscreteJoint& joint) {
  const GroupRates rates = group_rates(rule, joint);
  return 0.5 * rates.given_s0 + 0.5 * (1.0 - rates.given_s1);
}

double absolute_difference(double a, double b) { return std::abs(a - b); }

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("point dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    total += diff * diff;
  }
  return std::sqrt(total);
}

double individual_unfairness(std::span<const double> decision_probs, const Matrix& points,
                             const ProbabilityDistance& prob_distance,
                             const PointDistance& point_distance, std::size_t pair_count,
                             std::uint64_t seed) {
  check_row_count(decision_probs, points);
  if (pair_count == 0) throw Error("pair_count must be at least 1");
  Rng rng(seed);
  const auto n = static_cast<std::uint64_t>(points.rows());
  std::size_t violations = 0;
  for (std::size_t k = 0; k < pair_count; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.index(n));
    const auto j = static_cast<Eigen::Index>(rng.index(n));
    if (prob_distance(decision_probs[i], decision_probs[j]) >
        point_distance(row_span(points, i), row_span(points, j))) {
      ++violations;
    }
  }
  return static_cast<double>(violations) / static_cast<double>(pair_count);
}

double individual_unfairness_exhaustive(std::span<const double> decision_probs,
                                        const Matrix& points,
                                        const ProbabilityDistance& prob_distance,
                                        const PointDistance& point_distance) {
  check_row_count(decision_probs, points);
  const Eigen::Index n = points.rows();
  std::size_t violations = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (prob_distance(decision_probs[i], decision_probs[j]) >
          point_distance(row_span(points, i), row_span(points, j))) {
        ++violations;
      }
    }
  }
  return static_cast<double>(violations) / (static_cast<double>(n) * static_cast<double>(n));
}

ReconstructionStats reconstruction_stats(const Matrix& points, const Matrix& mapped,
                                         const PointDistance& distance, double epsilon) {
  if (points.rows() == 0) throw Error("empty sample");
  if (points.rows() != mapped.rows() || points.cols() != mapped.cols()) {
    throw Error("mapped points do not match the input shape");
  }
  if (!(epsilon >= 0.0)) throw Error("epsilon must be non-negative");
  std::size_t large = 0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double d = distance(row_span(points, i), row_span(mapped, i));
    total += d;
    if (d > epsilon) ++large;
  }
  const auto n = static_cast<double>(points.rows());
  return {static_cast<double>(large) / n, total / n};
}

double cost_sensitive_risk(std::span<const double> rule, const DiscreteJoint& joint,
                           RiskTarget target, double c) {
  check_rule(rule, joint);
  if (!(c >= 0.0 && c <= 1.0)) throw Error("cost parameter outside [0,1]");
  const auto& pt = target == RiskTarget::kY ? joint.py_given_x() : joint.ps_given_x();
  const auto& px = joint.px();
  double false_positive = 0.0;  // p(T=0, Yhat=1)
  double false_negative = 0.0;  // p(T=1, Yhat=0)
  for (std::size_t i = 0; i < rule.size(); ++i) {
    false_positive += px[i] * (1.0 - pt[i]) * rule[i];
    false_negative += px[i] * pt[i] * (1.0 - rule[i]);
  }
  return c * false_positive + (1.0 - c) * false_negative;
}

double divergence_risk(std::span<const double> rule, const DiscreteJoint& joint,
                       const ProbabilityDistance& prob_distance) {
  check_rule(rule, joint);
  const auto& py = joint.py_given_x();
  double total = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    total += joint.px()[i] * prob_distance(rule[i], py[i]);
  }
  return total;
}

double combined_risk(std::span<const double> rule, const DiscreteJoint& joint,
                     const CostParams& params) {
  params.validate();
  return cost_sensitive_risk(rule, joint, RiskTarget::kY, params.c_y) -
         params.lambda * cost_sensitive_risk(rule, joint, RiskTarget::kS, params.c_s);
}

}  // namespace fairrep
