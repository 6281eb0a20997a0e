#include "fairrep/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>

#include <fmt/format.h>

#include "fairrep/error.hpp"

namespace fairrep::oracle {
namespace {

void check_cap(std::size_t n) {
  if (n > kMaxSupport) {
    throw Error(fmt::format("enumeration cap exceeded: support {} > {}", n, kMaxSupport));
  }
}

void fill_rule(std::uint64_t mask, DecisionRule& rule) {
  for (std::size_t i = 0; i < rule.size(); ++i) rule[i] = (mask >> i) & 1U ? 1.0 : 0.0;
}

// Visits every deterministic rule; `score` returns nullopt for rules that are
// not admissible. Keeps the first rule achieving the best score.
template <typename Score>
EnumerationResult enumerate(std::size_t n, bool maximise, Score&& score) {
  check_cap(n);
  EnumerationResult result;
  DecisionRule rule(n);
  bool found = false;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    fill_rule(mask, rule);
    const std::optional<double> value = score(rule);
    if (!value) continue;
    const bool better = !found || (maximise ? *value > result.best_value : *value < result.best_value);
    if (better) {
      found = true;
      result.best_value = *value;
      result.best_rule = rule;
    }
  }
  result.rules_evaluated = count;
  if (!found) throw Error("no admissible decision rule");
  return result;
}

double rys_coefficient(const DiscreteJoint& joint, const CostParams& params, std::size_t i) {
  return params.c_y - joint.py_given_x()[i] -
         params.lambda * (params.c_s - joint.ps_given_x()[i]);
}

}  // namespace

EnumerationResult max_sp(const DiscreteJoint& joint) {
  return enumerate(joint.support_size(), true, [&](const DecisionRule& rule) {
    return std::optional<double>(signed_statistical_parity(rule, joint));
  });
}

EnumerationResult max_di(const DiscreteJoint& joint) {
  return enumerate(joint.support_size(), true, [&](const DecisionRule& rule) -> std::optional<double> {
    const GroupRates rates = group_rates(rule, joint);
    if (rates.given_s1 <= 0.0) return std::nullopt;
    return 1.0 - rates.given_s0 / rates.given_s1;
  });
}

EnumerationResult min_ber(const DiscreteJoint& joint) {
  return enumerate(joint.support_size(), false, [&](const DecisionRule& rule) {
    return std::optional<double>(balanced_error_rate(rule, joint));
  });
}

EnumerationResult min_rys(const DiscreteJoint& joint, const CostParams& params) {
  params.validate();
  joint.py_given_x();
  return enumerate(joint.support_size(), false, [&](const DecisionRule& rule) {
    return std::optional<double>(combined_risk(rule, joint, params));
  });
}

DecisionRule analytic_rys_rule(const DiscreteJoint& joint, const CostParams& params) {
  params.validate();
  DecisionRule rule(joint.support_size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double y_margin = joint.py_given_x()[i] - params.c_y;
    const double s_margin = params.lambda * (joint.ps_given_x()[i] - params.c_s);
    rule[i] = y_margin > s_margin ? 1.0 : 0.0;
  }
  return rule;
}

double rys_max(const DiscreteJoint& joint, const CostParams& params) {
  return (1.0 - params.c_y) * marginal_y(joint) -
         params.lambda * (1.0 - params.c_s) * marginal_s(joint);
}

double analytic_rys_value(const DiscreteJoint& joint, const CostParams& params) {
  const DecisionRule rule = analytic_rys_rule(joint, params);
  double total = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    total += joint.px()[i] * rys_coefficient(joint, params, i) * rule[i];
  }
  return total + rys_max(joint, params);
}

double exact_cost_of_mistrust(const DiscreteJoint& joint, std::span<const std::size_t> f_map,
                              const CostParams& params) {
  const std::size_t n = joint.support_size();
  if (f_map.size() != n) throw Error("f_map length differs from support size");
  std::vector<std::size_t> image(f_map.begin(), f_map.end());
  for (std::size_t target : image) {
    if (target >= n) throw Error("f_map target outside the support");
  }
  std::sort(image.begin(), image.end());
  image.erase(std::unique(image.begin(), image.end()), image.end());
  std::map<std::size_t, std::size_t> position;
  for (std::size_t k = 0; k < image.size(); ++k) position[image[k]] = k;

  const double original = min_rys(joint, params).best_value;

  check_cap(image.size());
  DecisionRule rule(n);
  double collapsed = 0.0;
  bool first = true;
  const std::uint64_t count = std::uint64_t{1} << image.size();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t i = 0; i < n; ++i) {
      rule[i] = (mask >> position[f_map[i]]) & 1U ? 1.0 : 0.0;
    }
    const double value = combined_risk(rule, joint, params);
    if (first || value < collapsed) {
      collapsed = value;
      first = false;
    }
  }
  return collapsed - original;
}

LipschitzConstants exact_lipschitz(
    const DiscreteJoint& joint, const std::function<double(std::size_t, std::size_t)>& distance) {
  LipschitzConstants out;
  const auto& py = joint.py_given_x();
  const auto& ps = joint.ps_given_x();
  for (std::size_t i = 0; i < joint.support_size(); ++i) {
    for (std::size_t j = i + 1; j < joint.support_size(); ++j) {
      const double dy = std::abs(py[i] - py[j]);
      const double ds = std::abs(ps[i] - ps[j]);
      const double d = distance(i, j);
      if (d <= 0.0) {
        if (dy > 0.0 || ds > 0.0) throw Error("zero distance between points with different conditionals");
        continue;
      }
      out.l_y = std::max(out.l_y, dy / d);
      out.l_s = std::max(out.l_s, ds / d);
    }
  }
  return out;
}

double expected_map_distance(const DiscreteJoint& joint, std::span<const std::size_t> f_map,
                             const std::function<double(std::size_t, std::size_t)>& distance) {
  if (f_map.size() != joint.support_size()) throw Error("f_map length differs from support size");
  double total = 0.0;
  for (std::size_t i = 0; i < f_map.size(); ++i) total += joint.px()[i] * distance(i, f_map[i]);
  return total;
}

DiscreteJoint random_joint(Rng& rng, std::size_t support_size, bool with_y) {
  if (support_size == 0) throw Error("support size must be positive");
  std::vector<double> px(support_size), ps(support_size);
  double total = 0.0;
  for (double& p : px) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    p = -std::log(u);
    total += p;
  }
  for (double& p : px) p /= total;
  for (double& p : ps) p = rng.uniform();
  std::optional<std::vector<double>> py;
  if (with_y) {
    py.emplace(support_size);
    for (double& p : *py) p = rng.uniform();
  }
  return DiscreteJoint(std::move(px), std::move(ps), std::move(py));
}

IndividualFairnessTrial individual_fairness_trial(std::uint64_t seed, std::size_t rows,
                                                  std::size_t dim) {
  if (rows == 0 || dim == 0) throw Error("trial needs rows and columns");
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(rows);
  const auto k = static_cast<Eigen::Index>(dim);
  Matrix points(n, k);
  for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = rng.normal();

  // g(x) = clamp(1/2 + slope <a, x>) with |a| = 1 is slope-Lipschitz for slope <= 1.
  Eigen::RowVectorXd direction(k);
  for (Eigen::Index j = 0; j < k; ++j) direction(j) = rng.normal();
  direction /= direction.norm();
  const double slope = rng.uniform(0.1, 1.0);
  const auto decision = [&](const Eigen::RowVectorXd& x) {
    return std::clamp(0.5 + slope * direction.dot(x), 0.0, 1.0);
  };

  IndividualFairnessTrial trial;
  trial.epsilon = rng.uniform(0.05, 0.5);
  const double outlier_rate = rng.uniform(0.0, 0.3);
  Matrix mapped(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double scale = rng.bernoulli(outlier_rate) ? 1.5 : 0.5 * trial.epsilon / std::sqrt(double(k));
    for (Eigen::Index j = 0; j < k; ++j) mapped(i, j) = points(i, j) + scale * rng.normal();
  }
  trial.delta = reconstruction_stats(points, mapped, euclidean_distance, trial.epsilon).large_rate;

  std::vector<double> probs(rows);
  for (Eigen::Index i = 0; i < n; ++i) probs[static_cast<std::size_t>(i)] = decision(mapped.row(i));
  const IndividualFairnessBound bound = individual_fairness_bound(trial.epsilon, trial.delta);
  const double offset = bound.distance_offset;
  trial.unfairness = individual_unfairness_exhaustive(
      probs, points, absolute_difference,
      [offset](std::span<const double> a, std::span<const double> b) { return euclidean_distance(a, b) + offset; });
  trial.bound = bound.unfairness_bound;
  return trial;
}

CheckSummary run_checks(std::uint64_t seed, std::size_t instances, std::size_t max_support) {
  if (max_support < 2 || max_support > kMaxSupport) throw Error("max_support must lie in [2, 20]");
  Rng rng(seed);
  CheckSummary summary;
  summary.max_mistrust_excess = -INFINITY;
  summary.max_iu_excess = -INFINITY;
  const auto fail = [&summary](std::string message) {
    ++summary.violations;
    if (summary.messages.size() < 20) summary.messages.push_back(std::move(message));
  };

  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t n = 2 + rng.index(max_support - 1);
    const DiscreteJoint joint = random_joint(rng, n, true);
    const double p_s1 = marginal_s(joint);
    ++summary.instances;

    const EnumerationResult sp = max_sp(joint);
    const double ber_bound = sp_certificate_ber(joint.ps_given_x(), joint.px(), p_s1);
    const double sp_gap = std::abs(sp.best_value - ber_bound);
    summary.max_sp_gap = std::max(summary.max_sp_gap, sp_gap);
    if (sp_gap > 1e-9) fail(fmt::format("instance {}: SP tightness gap {}", k, sp_gap));
    const double ber_gap = std::abs(sp.best_value - (1.0 - 2.0 * min_ber(joint).best_value));
    if (ber_gap > 1e-12) fail(fmt::format("instance {}: SP/BER identity gap {}", k, ber_gap));
    const double entropy_bound = sp_certificate_entropy(joint.ps_given_x(), joint.px(), p_s1);
    if (entropy_bound < ber_bound - 1e-9) {
      fail(fmt::format("instance {}: entropy bound {} below BER bound {}", k, entropy_bound, ber_bound));
    }

    const double eta = *std::max_element(joint.ps_given_x().begin(), joint.ps_given_x().end());
    if (eta < 1.0 - 1e-6) {
      const double di_gap = std::abs(max_di(joint).best_value - di_certificate(eta, p_s1));
      summary.max_di_gap = std::max(summary.max_di_gap, di_gap);
      if (di_gap > 1e-9) fail(fmt::format("instance {}: DI tightness gap {}", k, di_gap));
    }

    const CostParams params{rng.uniform(), rng.uniform(), rng.uniform(0.0, 3.0)};
    const double rys_gap = std::abs(min_rys(joint, params).best_value - analytic_rys_value(joint, params));
    summary.max_rys_gap = std::max(summary.max_rys_gap, rys_gap);
    if (rys_gap > 1e-12) fail(fmt::format("instance {}: R_YS analytic gap {}", k, rys_gap));

    std::vector<std::array<double, 2>> coords(n);
    for (auto& c : coords) c = {rng.normal(), rng.normal()};
    const auto distance = [&coords](std::size_t i, std::size_t j) {
      return std::hypot(coords[i][0] - coords[j][0], coords[i][1] - coords[j][1]);
    };
    std::vector<std::size_t> f_map(n);
    for (auto& target : f_map) target = rng.index(n);
    const double cost = exact_cost_of_mistrust(joint, f_map, params);
    const double bound = mistrust_bound(exact_lipschitz(joint, distance), params.lambda,
                                        expected_map_distance(joint, f_map, distance));
    summary.max_mistrust_excess = std::max(summary.max_mistrust_excess, cost - bound);
    if (cost < -1e-12) fail(fmt::format("instance {}: negative cost of mistrust {}", k, cost));
    if (cost > bound + 1e-9) fail(fmt::format("instance {}: cost of mistrust {} above bound {}", k, cost, bound));

    const IndividualFairnessTrial iu = individual_fairness_trial(derive_seed(seed, k), 60, 2);
    summary.max_iu_excess = std::max(summary.max_iu_excess, iu.unfairness - iu.bound);
    if (iu.unfairness > iu.bound) {
      fail(fmt::format("instance {}: individual unfairness {} above {}", k, iu.unfairness, iu.bound));
    }
  }
  return summary;
}

}  // namespace fairrep::oracle
