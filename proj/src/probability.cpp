#include "fairrep/probability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "fairrep/error.hpp"

namespace fairrep {
namespace {

// Neumaier compensated sum; px of many equal small weights must validate.
double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

void check_unit_interval(std::span<const double> values, const char* name) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(std::string(name) + " entry outside [0,1]");
    }
  }
}

}  // namespace

Probability::Probability(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error("probability outside [0,1]: " + std::to_string(value));
  }
}

DiscreteJoint::DiscreteJoint(std::vector<double> px, std::vector<double> ps_given_x,
                             std::optional<std::vector<double>> py_given_x)
    : px_(std::move(px)), ps_(std::move(ps_given_x)), py_(std::move(py_given_x)) {
  if (px_.empty()) throw Error("joint support must be non-empty");
  if (ps_.size() != px_.size()) throw Error("ps_given_x length differs from support size");
  if (py_ && py_->size() != px_.size()) {
    throw Error("py_given_x length differs from support size");
  }
  for (double p : px_) {
    if (!(p >= 0.0)) throw Error("px entries must be non-negative");
  }
  const double total = compensated_sum(px_);
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error("px must sum to 1 (got " + std::to_string(total) + ")");
  }
  check_unit_interval(ps_, "ps_given_x");
  if (py_) check_unit_interval(*py_, "py_given_x");
}

DiscreteJoint DiscreteJoint::from_rows(std::span<const std::uint8_t> s_labels,
                                       std::span<const std::uint8_t> y_labels) {
  const std::size_t n = s_labels.size();
  if (n == 0) throw Error("empty sample");
  if (!y_labels.empty() && y_labels.size() != n) throw Error("label length mismatch");
  std::vector<double> px(n, 1.0 / static_cast<double>(n));
  std::vector<double> ps(s_labels.begin(), s_labels.end());
  std::optional<std::vector<double>> py;
  if (!y_labels.empty()) py.emplace(y_labels.begin(), y_labels.end());
  return DiscreteJoint(std::move(px), std::move(ps), std::move(py));
}

const std::vector<double>& DiscreteJoint::py_given_x() const {
  if (!py_) throw Error("joint has no target conditionals");
  return *py_;
}

DiscreteJoint empirical_joint(std::span<const std::int64_t> x_indices,
                              std::span<const std::uint8_t> s_labels,
                              std::span<const std::uint8_t> y_labels) {
  if (x_indices.empty() || s_labels.empty()) throw Error("empty sample");
  if (x_indices.size() != s_labels.size() ||
      (!y_labels.empty() && y_labels.size() != x_indices.size())) {
    throw Error("sample length mismatch");
  }
  struct Counts {
    std::int64_t n = 0, s1 = 0, y1 = 0;
  };
  std::map<std::int64_t, Counts> counts;
  for (std::size_t i = 0; i < x_indices.size(); ++i) {
    Counts& c = counts[x_indices[i]];
    ++c.n;
    c.s1 += s_labels[i] != 0;
    if (!y_labels.empty()) c.y1 += y_labels[i] != 0;
  }
  const double total = static_cast<double>(x_indices.size());
  std::vector<double> px, ps, py;
  for (const auto& [x, c] : counts) {
    px.push_back(static_cast<double>(c.n) / total);
    ps.push_back(static_cast<double>(c.s1) / static_cast<double>(c.n));
    py.push_back(static_cast<double>(c.y1) / static_cast<double>(c.n));
  }
  std::optional<std::vector<double>> py_opt;
  if (!y_labels.empty()) py_opt = std::move(py);
  return DiscreteJoint(std::move(px), std::move(ps), std::move(py_opt));
}

Probability marginal_s(const DiscreteJoint& joint) {
  double total = 0.0;
  for (std::size_t i = 0; i < joint.support_size(); ++i) {
    total += joint.px()[i] * joint.ps_given_x()[i];
  }
  return Probability(std::clamp(total, 0.0, 1.0));
}

Probability marginal_y(const DiscreteJoint& joint) {
  const auto& py = joint.py_given_x();
  double total = 0.0;
  for (std::size_t i = 0; i < joint.support_size(); ++i) total += joint.px()[i] * py[i];
  return Probability(std::clamp(total, 0.0, 1.0));
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error("binary_entropy argument outside [0,1]: " + std::to_string(p));
  }
  const auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
  return term(p) + term(1.0 - p);
}

double inverse_binary_entropy(double h) {
  if (!(h >= 0.0 && h <= 1.0)) {
    throw Error("inverse_binary_entropy argument outside [0,1]: " + std::to_string(h));
  }
  if (h == 0.0) return 0.0;
  if (h == 1.0) return 0.5;
  double lo = 0.0;
  double hi = 0.5;
  // H_b is increasing on [0, 1/2]; 1e-12 needs ~39 halvings, run to 1e-14.
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    if (binary_entropy(mid) < h) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double conditional_entropy(const DiscreteJoint& joint) {
  double total = 0.0;
  for (std::size_t i = 0; i < joint.support_size(); ++i) {
    total += joint.px()[i] * binary_entropy(joint.ps_given_x()[i]);
  }
  return total;
}

}  // namespace fairrep
