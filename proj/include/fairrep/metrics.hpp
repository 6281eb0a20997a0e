#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fairrep/matrix.hpp"
#include "fairrep/probability.hpp"

namespace fairrep {

/// p(Yhat=1|X=x) for every support point of a DiscreteJoint.
using DecisionRule = std::vector<double>;

/// Records whether S labels were exchanged so that
/// p(Yhat=1|S=1) >= p(Yhat=1|S=0) holds for the reported value.
struct Orientation {
  bool swapped = false;
};

struct OrientedValue {
  double value = 0.0;
  Orientation orientation;
};

struct CostParams {
  double c_y = 0.5;
  double c_s = 0.5;
  double lambda = 0.0;

  void validate() const;
};

enum class RiskTarget { kY, kS };

/// Positive-decision rates of the two sensitive groups.
struct GroupRates {
  double given_s1 = 0.0;  // p(Yhat=1|S=1)
  double given_s0 = 0.0;  // p(Yhat=1|S=0)
};

GroupRates group_rates(std::span<const double> rule, const DiscreteJoint& joint);

/// p(Yhat=1|S=1) - p(Yhat=1|S=0), without orientation; may be negative.
double signed_statistical_parity(std::span<const double> rule, const DiscreteJoint& joint);

/// 1 - p(Yhat=1|S=0) / p(Yhat=1|S=1), without orientation. This is the
/// quantity bounded by the disparate impact certificate, where S=1 is the
/// group whose conditional maximum defines eta_f.
double signed_disparate_impact(std::span<const double> rule, const DiscreteJoint& joint);

OrientedValue statistical_parity(std::span<const double> rule, const DiscreteJoint& joint);
OrientedValue disparate_impact(std::span<const double> rule, const DiscreteJoint& joint);

/// 1/2 p(Yhat=1|S=0) + 1/2 p(Yhat=0|S=1).
double balanced_error_rate(std::span<const double> rule, const DiscreteJoint& joint);

/// Comparison function on decision probabilities (D) and on inputs (d).
using ProbabilityDistance = std::function<double(double, double)>;
using PointDistance = std::function<double(std::span<const double>, std::span<const double>)>;

double absolute_difference(double a, double b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Monte-Carlo estimate of P[D(p(x), p(x')) > d(x, x')] for independent
/// draws x, x' from the rows of `points`. Reproducible for a fixed seed.
double individual_unfairness(std::span<const double> decision_probs, const Matrix& points,
                             const ProbabilityDistance& prob_distance,
                             const PointDistance& point_distance, std::size_t pair_count,
                             std::uint64_t seed);

/// The same probability computed exactly over all n^2 ordered row pairs.
double individual_unfairness_exhaustive(std::span<const double> decision_probs,
                                        const Matrix& points,
                                        const ProbabilityDistance& prob_distance,
                                        const PointDistance& point_distance);

struct ReconstructionStats {
  double large_rate = 0.0;     // fraction with d(x, f(x)) > epsilon
  double average_error = 0.0;  // mean d(x, f(x))
};

/// `mapped` row i is f applied to `points` row i.
ReconstructionStats reconstruction_stats(const Matrix& points, const Matrix& mapped,
                                         const PointDistance& distance, double epsilon);

/// c p(T=0) p(Yhat=1|T=0) + (1-c) p(T=1) p(Yhat=0|T=1) for T in {Y, S}.
double cost_sensitive_risk(std::span<const double> rule, const DiscreteJoint& joint,
                           RiskTarget target, double c);

/// E_x[D(p(Yhat=1|x), p(Y=1|x))], the generic target-variable risk.
double divergence_risk(std::span<const double> rule, const DiscreteJoint& joint,
                       const ProbabilityDistance& prob_distance);

/// R_Y(rule) - lambda R_S(rule). May be negative.
double combined_risk(std::span<const double> rule, const DiscreteJoint& joint,
                     const CostParams& params);

}  // namespace fairrep
