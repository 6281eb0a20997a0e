#include "fairrep/decision.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fairrep/error.hpp"
#include "fairrep/oracle.hpp"
#include "fairrep/probability.hpp"
#include "fairrep/random.hpp"

namespace fairrep {
namespace {

nn::TrainConfig quick_config(int epochs, std::uint64_t seed) {
  nn::TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 25;
  c.learning_rate = 1e-2;
  c.seed = seed;
  return c;
}

struct LabelledSet {
  Matrix x;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> s;
};

// Y is the sign of column 1; S is random.
LabelledSet separable(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  LabelledSet d;
  d.x.resize(static_cast<Eigen::Index>(rows), 3);
  d.y.resize(rows);
  d.s.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (int j = 0; j < 3; ++j) d.x(i, j) = rng.normal();
    d.y[i] = d.x(i, 1) > 0.0;
    d.s[i] = rng.bernoulli(0.4);
  }
  return d;
}

// Expands a joint with rational masses into rows with matching frequencies:
// `per_point` rows per support point, the first round(p * per_point) labelled 1.
void expand(const std::vector<double>& py, const std::vector<double>& ps, int per_point,
            std::vector<std::size_t>& point, std::vector<std::uint8_t>& y, std::vector<std::uint8_t>& s) {
  for (std::size_t k = 0; k < py.size(); ++k) {
    const int ones_y = static_cast<int>(std::lround(py[k] * per_point));
    const int ones_s = static_cast<int>(std::lround(ps[k] * per_point));
    for (int r = 0; r < per_point; ++r) {
      point.push_back(k);
      y.push_back(r < ones_y);
      s.push_back(r < ones_s);
    }
  }
}

TEST(TrainDecisionModel, SeparableTargetIsLearned) {
  const LabelledSet train = separable(500, 81);
  const LabelledSet test = separable(300, 82);
  const DecisionModel m = train_decision_model(train.x, train.y, train.s, {0.5, 0.5, 0.0},
                                               quick_config(20, 3), InputSpace::kOriginal, 16);
  EXPECT_EQ(m.input_space, InputSpace::kOriginal);
  const Decisions d = decide(m, test.x);
  int correct = 0;
  for (std::size_t i = 0; i < d.size(); ++i) correct += d[i] == test.y[i];
  EXPECT_GT(correct / static_cast<double>(d.size()), 0.95);
}

TEST(TrainDecisionModel, RandomTargetReachesEntropyFloor) {
  LabelledSet all = separable(1500, 83);
  Rng rng(84);
  for (auto& v : all.y) v = rng.bernoulli(0.35);
  const Matrix train = all.x.topRows(1000);
  const Matrix test = all.x.bottomRows(500);
  nn::TrainConfig c = quick_config(10, 4);
  c.batch_size = 100;
  c.learning_rate = 1e-3;
  const DecisionModel m = train_decision_model(train, std::span(all.y.data(), 1000), std::span(all.s.data(), 1000),
                                               {}, c, InputSpace::kCleaned, 16);
  const std::vector<double> p = predict_probabilities(m.y_estimator, test);
  double ce = 0.0, rate = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) rate += all.y[i];
  rate /= 1000.0;
  for (std::size_t i = 0; i < p.size(); ++i) ce -= std::log2(all.y[1000 + i] ? p[i] : 1.0 - p[i]);
  EXPECT_NEAR(ce / 500.0, binary_entropy(rate), 0.05);
}

TEST(TrainDecisionModel, ZeroEpochsAndDegenerateTargets) {
  const LabelledSet d = separable(60, 85);
  const DecisionModel m = train_decision_model(d.x, d.y, d.s, {}, quick_config(0, 1), InputSpace::kCleaned, 4);
  EXPECT_EQ(decide(m, d.x).size(), 60u);
  const std::vector<std::uint8_t> ones(60, 1);
  try {
    train_decision_model(d.x, ones, d.s, {}, quick_config(1, 1), InputSpace::kCleaned, 4);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("degenerate target", 0), 0u);
  }
  EXPECT_THROW(train_decision_model(d.x, d.y, ones, {}, quick_config(1, 1), InputSpace::kCleaned, 4), Error);
  EXPECT_THROW(decide(m, Matrix::Zero(2, 5)), Error);
}

TEST(Decide, BayesThresholdAtLambdaZero) {
  Rng rng(86);
  std::vector<double> py(200), ps(200);
  for (double& p : py) p = rng.uniform();
  for (double& p : ps) p = rng.uniform();
  py[0] = 0.5;
  const Decisions d = decide_from_probabilities(py, ps, {0.5, rng.uniform(), 0.0});
  for (std::size_t i = 0; i < py.size(); ++i) EXPECT_EQ(d[i], py[i] > 0.5 ? 1 : 0);
}

TEST(Decide, TieGoesToZero) {
  // 0.75 - 0.5 == 0.5 (1.0 - 0.5) exactly.
  const std::vector<double> py{0.75}, ps{1.0};
  EXPECT_EQ(decide_from_probabilities(py, ps, {0.5, 0.5, 0.5})[0], 0);
  const std::vector<double> above{0.75 + 1e-12};
  EXPECT_EQ(decide_from_probabilities(above, ps, {0.5, 0.5, 0.5})[0], 1);
}

TEST(Decide, DependsOnlyOnSignOfMargin) {
  Rng rng(87);
  for (int trial = 0; trial < 1000; ++trial) {
    const CostParams params{rng.uniform(), rng.uniform(), 3.0 * rng.uniform()};
    const std::vector<double> py{rng.uniform()}, ps{rng.uniform()};
    const double margin = (py[0] - params.c_y) - params.lambda * (ps[0] - params.c_s);
    EXPECT_EQ(decide_from_probabilities(py, ps, params)[0], margin > 0.0 ? 1 : 0);
  }
}

TEST(Decide, ExactProbabilitiesAchieveEnumeratedOptimum) {
  Rng rng(88);
  for (int trial = 0; trial < 500; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(10), true);
    const CostParams params{rng.uniform(), rng.uniform(), 3.0 * rng.uniform()};
    const Decisions d = decide_from_probabilities(joint.py_given_x(), joint.ps_given_x(), params);
    const DecisionRule rule(d.begin(), d.end());
    EXPECT_NEAR(combined_risk(rule, joint, params), oracle::min_rys(joint, params).best_value, 1e-12);
  }
}

TEST(EmpiricalRisk, Values) {
  const Decisions d{1, 1, 0, 0};
  const std::vector<std::uint8_t> labels{1, 0, 1, 0};
  EXPECT_NEAR(empirical_cost_sensitive_risk(d, labels, 0.3), 0.3 * 0.25 + 0.7 * 0.25, 1e-15);
  EXPECT_EQ(empirical_cost_sensitive_risk(labels, labels, 0.3), 0.0);
  EXPECT_THROW(empirical_cost_sensitive_risk(d, std::vector<std::uint8_t>{1}, 0.5), Error);
  EXPECT_THROW(empirical_cost_sensitive_risk({}, {}, 0.5), Error);
}

TEST(EmpiricalCostOfMistrust, IdenticalAndAntisymmetric) {
  Rng rng(89);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(50);
    Decisions a(n), b(n);
    std::vector<std::uint8_t> y(n), s(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.bernoulli(0.5);
      b[i] = rng.bernoulli(0.5);
      y[i] = rng.bernoulli(0.5);
      s[i] = rng.bernoulli(0.5);
    }
    const CostParams params{rng.uniform(), rng.uniform(), 3.0 * rng.uniform()};
    EXPECT_EQ(empirical_cost_of_mistrust(a, a, y, s, params), 0.0);
    EXPECT_EQ(empirical_cost_of_mistrust(a, b, y, s, params), -empirical_cost_of_mistrust(b, a, y, s, params));
  }
  const Decisions a{1}, b{1, 0};
  const std::vector<std::uint8_t> y{1}, s{0};
  EXPECT_THROW(empirical_cost_of_mistrust(a, b, y, s, {}), Error);
}

TEST(EmpiricalCostOfMistrust, MatchesExactCostOnExpandedInstance) {
  // Two points; merging them flips the optimum to the all-zero rule.
  const std::vector<double> px{0.5, 0.5}, py{0.7, 0.1}, ps{0.5, 0.5};
  const DiscreteJoint joint(px, ps, py);
  const CostParams params{0.5, 0.5, 0.0};
  std::vector<std::size_t> point;
  std::vector<std::uint8_t> y, s;
  expand(py, ps, 10, point, y, s);

  const Decisions star = decide_from_probabilities(py, ps, params);
  const std::vector<double> merged_py{0.4, 0.4}, merged_ps{0.5, 0.5};
  const Decisions star_f = decide_from_probabilities(merged_py, merged_ps, params);
  Decisions original, cleaned;
  for (std::size_t k : point) {
    original.push_back(star[k]);
    cleaned.push_back(star_f[k]);
  }
  const std::vector<std::size_t> collapse{0, 0};
  EXPECT_NEAR(empirical_cost_of_mistrust(cleaned, original, y, s, params),
              oracle::exact_cost_of_mistrust(joint, collapse, params), 1e-12);
  // The identity map costs nothing.
  EXPECT_EQ(empirical_cost_of_mistrust(original, original, y, s, params), 0.0);
}

TEST(ExportDecisions, TwoColumnTable) {
  const Decisions d{1, 0, 1};
  EXPECT_EQ(export_decisions(d), "row_id,decision\n0,1\n1,0\n2,1\n");
  EXPECT_STREQ(input_space_name(InputSpace::kOriginal), "original");
  EXPECT_STREQ(input_space_name(InputSpace::kCleaned), "cleaned");
}

}  // namespace
}  // namespace fairrep
