#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fairrep/certificates.hpp"
#include "fairrep/metrics.hpp"
#include "fairrep/probability.hpp"
#include "fairrep/random.hpp"

namespace fairrep::oracle {

// Brute-force ground truth over all deterministic decision rules of a small
// discrete joint. Rules are indexed by bitmask (bit i = decision at support
// point i); ties keep the lowest index.

inline constexpr std::size_t kMaxSupport = 20;

struct EnumerationResult {
  double best_value = 0.0;
  DecisionRule best_rule;
  std::uint64_t rules_evaluated = 0;
};

EnumerationResult max_sp(const DiscreteJoint& joint);

/// Maximum of the unoriented DI over rules with p(Yhat=1|S=1) > 0.
EnumerationResult max_di(const DiscreteJoint& joint);

EnumerationResult min_ber(const DiscreteJoint& joint);

EnumerationResult min_rys(const DiscreteJoint& joint, const CostParams& params);

/// The closed-form minimiser 1(p(Y=1|x) - c_Y > lambda (p(S=1|x) - c_S)).
DecisionRule analytic_rys_rule(const DiscreteJoint& joint, const CostParams& params);

/// E_x[(c_Y - p(Y=1|x) - lambda (c_S - p(S=1|x))) Y*(x)] + R_YS^max.
double analytic_rys_value(const DiscreteJoint& joint, const CostParams& params);

/// (1 - c_Y) p(Y=1) - lambda (1 - c_S) p(S=1): the risk of the all-zero rule.
double rys_max(const DiscreteJoint& joint, const CostParams& params);

/// R_YS(Y*_f) - R_YS(Y*) where f maps support index i to support index
/// f_map[i]. The optimum on X_f ranges over rules that are functions of f(x).
double exact_cost_of_mistrust(const DiscreteJoint& joint, std::span<const std::size_t> f_map,
                              const CostParams& params);

/// Exact Lipschitz constants max |dp| / d over support pairs with d > 0.
LipschitzConstants exact_lipschitz(const DiscreteJoint& joint,
                                   const std::function<double(std::size_t, std::size_t)>& distance);

/// E_x[d(x, f(x))] under the joint's marginal.
double expected_map_distance(const DiscreteJoint& joint, std::span<const std::size_t> f_map,
                             const std::function<double(std::size_t, std::size_t)>& distance);

/// Seeded random instance: Dirichlet(1) marginal, uniform conditionals.
DiscreteJoint random_joint(Rng& rng, std::size_t support_size, bool with_y);

// One simulated instance of the individual-fairness guarantee: a 1-Lipschitz
// decision g on random points, a noisy map f, and Yhat_f(x) = g(f(x)).
struct IndividualFairnessTrial {
  double epsilon = 0.0;
  double delta = 0.0;  // measured large reconstruction error rate
  double unfairness = 0.0;  // exhaustive-pair IU under d + 2 epsilon
  double bound = 0.0;       // 2 delta, capped at 1
};

IndividualFairnessTrial individual_fairness_trial(std::uint64_t seed, std::size_t rows = 200,
                                                  std::size_t dim = 3);

// Summary of the full verification battery run by `oracle-check`.
struct CheckSummary {
  std::size_t instances = 0;
  std::size_t violations = 0;
  double max_sp_gap = 0.0;        // |max SP - 1 + 2 BER(Y^BER)|
  double max_di_gap = 0.0;        // |max DI - DI certificate|
  double max_rys_gap = 0.0;       // |enumerated min R_YS - analytic value|
  double max_mistrust_excess = 0.0;  // max(cost - bound), <= 0 when sound
  double max_iu_excess = 0.0;        // max(IU - 2 delta), <= 0 when sound
  std::vector<std::string> messages;
};

CheckSummary run_checks(std::uint64_t seed, std::size_t instances, std::size_t max_support);

}  // namespace fairrep::oracle
