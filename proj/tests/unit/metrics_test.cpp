#include "fairrep/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "fairrep/error.hpp"
#include "fairrep/oracle.hpp"
#include "fairrep/random.hpp"

namespace fairrep {
namespace {

DiscreteJoint two_point() { return DiscreteJoint({0.5, 0.5}, {0.8, 0.2}); }

DiscreteJoint two_point_with_y() {
  return DiscreteJoint({0.5, 0.5}, {0.8, 0.2}, std::vector<double>{1.0, 0.0});
}

// Four support points (s, y) in {0,1}^2 whose masses reproduce the published
// group marginals, so that the target itself can be scored as a decision.
struct GroupTable {
  DiscreteJoint joint;
  DecisionRule target_rule;
};

GroupTable group_table(double p_s1, double py_s1, double py_s0) {
  std::vector<double> px{(1.0 - p_s1) * (1.0 - py_s0), (1.0 - p_s1) * py_s0, p_s1 * (1.0 - py_s1),
                         p_s1 * py_s1};
  return {DiscreteJoint(px, {0.0, 0.0, 1.0, 1.0}), {0.0, 1.0, 0.0, 1.0}};
}

DecisionRule random_rule(Rng& rng, std::size_t n) {
  DecisionRule rule(n);
  for (double& r : rule) r = rng.uniform();
  return rule;
}

// Sample-level recount of p(Yhat=1|S=s) for a deterministic rule on raw rows.
double rows_rate(const std::vector<std::uint8_t>& decisions, const std::vector<std::uint8_t>& s,
                 std::uint8_t group) {
  int hits = 0, total = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != group) continue;
    ++total;
    hits += decisions[i];
  }
  return static_cast<double>(hits) / total;
}

TEST(StatisticalParity, Examples) {
  const DecisionRule rule{1.0, 0.0};
  const OrientedValue sp = statistical_parity(rule, two_point());
  EXPECT_NEAR(sp.value, 0.6, 1e-15);
  EXPECT_FALSE(sp.orientation.swapped);
  const DecisionRule constant{0.7, 0.7};
  EXPECT_NEAR(statistical_parity(constant, two_point()).value, 0.0, 1e-15);
}

TEST(StatisticalParity, PublishedAdultGroupRates) {
  const GroupTable t = group_table(0.671, 0.308, 0.111);
  EXPECT_NEAR(statistical_parity(t.target_rule, t.joint).value, 0.197, 1e-12);
}

TEST(StatisticalParity, OrientationSwapsNegativeValues) {
  const DecisionRule rule{0.0, 1.0};
  const OrientedValue sp = statistical_parity(rule, two_point());
  EXPECT_NEAR(sp.value, 0.6, 1e-15);
  EXPECT_TRUE(sp.orientation.swapped);
  EXPECT_NEAR(signed_statistical_parity(rule, two_point()), -0.6, 1e-15);
}

TEST(StatisticalParity, DegenerateSensitiveMarginal) {
  const DiscreteJoint all_one({0.5, 0.5}, {1.0, 1.0});
  const DecisionRule rule{1.0, 0.0};
  try {
    statistical_parity(rule, all_one);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "sensitive group empty");
  }
  EXPECT_THROW(balanced_error_rate(rule, all_one), Error);
}

TEST(StatisticalParity, RuleValidation) {
  EXPECT_THROW(statistical_parity(DecisionRule{1.0}, two_point()), Error);
  EXPECT_THROW(statistical_parity(DecisionRule{1.5, 0.0}, two_point()), Error);
}

TEST(StatisticalParity, MatchesRecountOnRawRows) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.index(40);
    std::vector<std::uint8_t> s(n), decisions(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = i < 2 ? static_cast<std::uint8_t>(i) : rng.bernoulli(0.5);
      decisions[i] = rng.bernoulli(0.5);
    }
    const DiscreteJoint joint = DiscreteJoint::from_rows(s);
    const DecisionRule rule(decisions.begin(), decisions.end());
    EXPECT_NEAR(signed_statistical_parity(rule, joint),
                rows_rate(decisions, s, 1) - rows_rate(decisions, s, 0), 1e-12);
  }
}

TEST(StatisticalParity, AffineInRule) {
  Rng rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(10), false);
    const DecisionRule r1 = random_rule(rng, joint.support_size());
    const DecisionRule r2 = random_rule(rng, joint.support_size());
    const double alpha = rng.uniform();
    DecisionRule mix(r1.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * r1[i] + (1.0 - alpha) * r2[i];
    EXPECT_NEAR(signed_statistical_parity(mix, joint),
                alpha * signed_statistical_parity(r1, joint) +
                    (1.0 - alpha) * signed_statistical_parity(r2, joint),
                1e-12);
  }
}

TEST(StatisticalParity, EqualsOneMinusTwiceBer) {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(10), false);
    const DecisionRule rule = random_rule(rng, joint.support_size());
    EXPECT_NEAR(signed_statistical_parity(rule, joint), 1.0 - 2.0 * balanced_error_rate(rule, joint),
                1e-12);
  }
}

TEST(DisparateImpact, Examples) {
  const DecisionRule rule{1.0, 0.0};
  EXPECT_NEAR(disparate_impact(rule, two_point()).value, 0.75, 1e-15);
  const DiscreteJoint uninformative({0.3, 0.7}, {0.4, 0.4});
  EXPECT_NEAR(disparate_impact(DecisionRule{1.0, 0.0}, uninformative).value, 0.0, 1e-15);
}

TEST(DisparateImpact, PublishedGroupRates) {
  const GroupTable adult = group_table(0.671, 0.308, 0.111);
  EXPECT_NEAR(disparate_impact(adult.target_rule, adult.joint).value, 0.639, 1e-3);
  const GroupTable propublica = group_table(0.484, 0.587, 0.439);
  EXPECT_NEAR(disparate_impact(propublica.target_rule, propublica.joint).value, 0.252, 1e-3);
}

TEST(DisparateImpact, UndefinedWithoutPositiveDecisions) {
  const DecisionRule zero{0.0, 0.0};
  try {
    signed_disparate_impact(zero, two_point());
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("DI undefined", 0), 0u);
  }
  EXPECT_THROW(disparate_impact(zero, two_point()), Error);
}

TEST(DisparateImpact, ScaleInvariant) {
  Rng rng(24);
  for (int trial = 0; trial < 500; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(10), false);
    const DecisionRule rule = random_rule(rng, joint.support_size());
    const double gamma = 1.0 - rng.uniform();
    DecisionRule scaled(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) scaled[i] = gamma * rule[i];
    EXPECT_NEAR(disparate_impact(scaled, joint).value, disparate_impact(rule, joint).value, 1e-12);
  }
}

TEST(DisparateImpact, OrientedValueInUnitInterval) {
  Rng rng(25);
  for (int trial = 0; trial < 500; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(10), false);
    const DecisionRule rule = random_rule(rng, joint.support_size());
    const OrientedValue di = disparate_impact(rule, joint);
    EXPECT_GE(di.value, 0.0);
    EXPECT_LE(di.value, 1.0);
    const OrientedValue sp = statistical_parity(rule, joint);
    EXPECT_GE(sp.value, 0.0);
    EXPECT_LE(sp.value, 1.0);
  }
}

TEST(BalancedErrorRate, Examples) {
  EXPECT_NEAR(balanced_error_rate(DecisionRule{1.0, 0.0}, two_point()), 0.2, 1e-15);
  EXPECT_NEAR(balanced_error_rate(DecisionRule{0.3, 0.3}, two_point()), 0.5, 1e-15);
  EXPECT_NEAR(balanced_error_rate(DecisionRule{1.0, 1.0}, two_point()), 0.5, 1e-15);
  const DiscreteJoint determined({0.25, 0.75}, {1.0, 0.0});
  EXPECT_EQ(balanced_error_rate(DecisionRule{1.0, 0.0}, determined), 0.0);
}

TEST(IndividualUnfairness, ConstantDecisionIsFair) {
  Matrix points(5, 2);
  points << 0, 0, 1, 0, 0, 1, 3, 3, -1, 2;
  const std::vector<double> probs(5, 0.4);
  EXPECT_EQ(individual_unfairness(probs, points, absolute_difference, euclidean_distance, 1000, 3), 0.0);
  const auto zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  EXPECT_EQ(individual_unfairness(probs, points, absolute_difference, zero, 1000, 3), 0.0);
}

TEST(IndividualUnfairness, HugeDistanceIsFair) {
  Matrix points(4, 1);
  points << 0.0, 0.3, 0.6, 1.0;
  const std::vector<double> probs{0.0, 0.3, 0.6, 1.0};
  const auto huge = [](std::span<const double>, std::span<const double>) {
    return std::numeric_limits<double>::infinity();
  };
  EXPECT_EQ(individual_unfairness(probs, points, absolute_difference, huge, 1000, 4), 0.0);
}

TEST(IndividualUnfairness, HalfDistanceFlagsEveryDistinctPair) {
  // With p(x) = x and d = |x - x'| / 2 the condition fails exactly when x != x'.
  constexpr int kPoints = 100;
  Matrix points(kPoints, 1);
  std::vector<double> probs(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    points(i, 0) = i / 99.0;
    probs[i] = i / 99.0;
  }
  const auto half = [](std::span<const double> a, std::span<const double> b) {
    return 0.5 * std::abs(a[0] - b[0]);
  };
  const double distinct = (kPoints * kPoints - kPoints) / static_cast<double>(kPoints * kPoints);
  EXPECT_NEAR(individual_unfairness_exhaustive(probs, points, absolute_difference, half), distinct,
              1e-15);
  const double estimate = individual_unfairness(probs, points, absolute_difference, half, 20000, 5);
  // Binomial standard error is about 7e-4; allow six of them.
  EXPECT_NEAR(estimate, distinct, 4.2e-3);
}

TEST(IndividualUnfairness, ReproducibleForSeed) {
  Rng rng(26);
  Matrix points(50, 3);
  std::vector<double> probs(50);
  for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = rng.normal();
  for (double& p : probs) p = rng.uniform();
  const double a = individual_unfairness(probs, points, absolute_difference, euclidean_distance, 777, 9);
  const double b = individual_unfairness(probs, points, absolute_difference, euclidean_distance, 777, 9);
  EXPECT_EQ(a, b);
}

TEST(IndividualUnfairness, Errors) {
  const Matrix empty(0, 1);
  EXPECT_THROW(individual_unfairness({}, empty, absolute_difference, euclidean_distance, 10, 0), Error);
  Matrix one(1, 1);
  one << 0.0;
  const std::vector<double> probs{0.5};
  EXPECT_THROW(individual_unfairness(probs, one, absolute_difference, euclidean_distance, 0, 0), Error);
}

TEST(ReconstructionStats, Examples) {
  Matrix points(3, 2);
  points << 1, 2, 3, 4, 5, 6;
  const ReconstructionStats identity = reconstruction_stats(points, points, euclidean_distance, 0.0);
  EXPECT_EQ(identity.large_rate, 0.0);
  EXPECT_EQ(identity.average_error, 0.0);

  Matrix constant(2, 1);
  constant << 7.0, 7.0;
  const ReconstructionStats collapsed = reconstruction_stats(constant, constant, euclidean_distance, 0.1);
  EXPECT_EQ(collapsed.large_rate, 0.0);
  EXPECT_EQ(collapsed.average_error, 0.0);

  Matrix line(2, 1), mapped(2, 1);
  line << 0.0, 2.0;
  mapped << 1.0, 1.0;
  const auto abs_diff = [](std::span<const double> a, std::span<const double> b) {
    return std::abs(a[0] - b[0]);
  };
  const ReconstructionStats r = reconstruction_stats(line, mapped, abs_diff, 0.5);
  EXPECT_EQ(r.large_rate, 1.0);
  EXPECT_EQ(r.average_error, 1.0);
}

TEST(ReconstructionStats, Errors) {
  const Matrix empty(0, 2);
  EXPECT_THROW(reconstruction_stats(empty, empty, euclidean_distance, 0.1), Error);
  Matrix a(2, 2), b(2, 3);
  a.setZero();
  b.setZero();
  EXPECT_THROW(reconstruction_stats(a, b, euclidean_distance, 0.1), Error);
  EXPECT_THROW(reconstruction_stats(a, a, euclidean_distance, -1.0), Error);
}

TEST(CostSensitiveRisk, Examples) {
  const DiscreteJoint j = two_point_with_y();
  EXPECT_EQ(cost_sensitive_risk(DecisionRule{1.0, 0.0}, j, RiskTarget::kY, 0.5), 0.0);
  // Constant 1 pays c on every T=0 point.
  EXPECT_NEAR(cost_sensitive_risk(DecisionRule{1.0, 1.0}, j, RiskTarget::kS, 0.3), 0.3 * 0.5, 1e-15);
  EXPECT_NEAR(cost_sensitive_risk(DecisionRule{1.0, 1.0}, j, RiskTarget::kY, 0.3), 0.3 * 0.5, 1e-15);
  EXPECT_THROW(cost_sensitive_risk(DecisionRule{1.0, 0.0}, two_point(), RiskTarget::kY, 0.5), Error);
  EXPECT_THROW(cost_sensitive_risk(DecisionRule{1.0, 0.0}, j, RiskTarget::kY, 1.5), Error);
}

TEST(CombinedRisk, Examples) {
  Rng rng(27);
  for (int trial = 0; trial < 200; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(8), true);
    const DecisionRule rule = random_rule(rng, joint.support_size());
    const CostParams params{rng.uniform(), rng.uniform(), 0.0};
    EXPECT_EQ(combined_risk(rule, joint, params), cost_sensitive_risk(rule, joint, RiskTarget::kY, params.c_y));

    const CostParams weighted{rng.uniform(), rng.uniform(), 3.0 * rng.uniform()};
    const DecisionRule zero(joint.support_size(), 0.0);
    EXPECT_NEAR(combined_risk(zero, joint, weighted), oracle::rys_max(joint, weighted), 1e-12);
    EXPECT_NEAR(combined_risk(zero, joint, weighted),
                (1.0 - weighted.c_y) * marginal_y(joint) - weighted.lambda * (1.0 - weighted.c_s) * marginal_s(joint),
                1e-12);
  }
  const DiscreteJoint j = two_point_with_y();
  EXPECT_EQ(combined_risk(DecisionRule{1.0, 0.0}, j, CostParams{0.5, 0.5, 0.0}), 0.0);
}

TEST(CombinedRisk, DecompositionMatchesRawSums) {
  Rng rng(28);
  for (int trial = 0; trial < 500; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(10), true);
    const DecisionRule rule = random_rule(rng, joint.support_size());
    const CostParams params{rng.uniform(), rng.uniform(), 3.0 * rng.uniform()};
    // R_T = sum_x p(x) [c (1 - p_T(x)) r(x) + (1 - c) p_T(x) (1 - r(x))].
    double risk_y = 0.0, risk_s = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double px = joint.px()[i];
      const double py = joint.py_given_x()[i];
      const double ps = joint.ps_given_x()[i];
      risk_y += px * (params.c_y * (1.0 - py) * rule[i] + (1.0 - params.c_y) * py * (1.0 - rule[i]));
      risk_s += px * (params.c_s * (1.0 - ps) * rule[i] + (1.0 - params.c_s) * ps * (1.0 - rule[i]));
    }
    EXPECT_NEAR(combined_risk(rule, joint, params), risk_y - params.lambda * risk_s, 1e-12);
  }
}

TEST(DivergenceRisk, PerfectRuleIsZero) {
  const DiscreteJoint j = two_point_with_y();
  EXPECT_EQ(divergence_risk(DecisionRule{1.0, 0.0}, j, absolute_difference), 0.0);
  EXPECT_NEAR(divergence_risk(DecisionRule{0.5, 0.5}, j, absolute_difference), 0.5, 1e-15);
}

TEST(CostParams, Validation) {
  EXPECT_NO_THROW((CostParams{0.0, 1.0, 0.0}.validate()));
  EXPECT_THROW((CostParams{-0.1, 0.5, 0.0}.validate()), Error);
  EXPECT_THROW((CostParams{0.5, 1.1, 0.0}.validate()), Error);
  EXPECT_THROW((CostParams{0.5, 0.5, -1.0}.validate()), Error);
  EXPECT_THROW((CostParams{0.5, 0.5, std::numeric_limits<double>::infinity()}.validate()), Error);
}

}  // namespace
}  // namespace fairrep
