#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fairrep {

/// A value checked to lie in [0, 1].
class Probability {
 public:
  explicit Probability(double value);
  double value() const { return value_; }
  operator double() const { return value_; }

 private:
  double value_;
};

/// Exact finite joint distribution of (X, S) and optionally Y.
///
/// X ranges over support indices 0..n-1 with marginal px; the sensitive and
/// target variables are described by their conditionals p(S=1|X=x) and
/// p(Y=1|X=x). Immutable once constructed.
class DiscreteJoint {
 public:
  /// Validates: n >= 1, equal lengths, px >= 0 summing to 1 within 1e-12,
  /// conditionals in [0, 1].
  DiscreteJoint(std::vector<double> px, std::vector<double> ps_given_x,
                std::optional<std::vector<double>> py_given_x = std::nullopt);

  /// Joint where every row is its own support point with weight 1/n and
  /// degenerate conditionals given by the observed labels.
  static DiscreteJoint from_rows(std::span<const std::uint8_t> s_labels,
                                 std::span<const std::uint8_t> y_labels = {});

  std::size_t support_size() const { return px_.size(); }
  const std::vector<double>& px() const { return px_; }
  const std::vector<double>& ps_given_x() const { return ps_; }
  bool has_y() const { return py_.has_value(); }
  /// Throws if Y conditionals are absent.
  const std::vector<double>& py_given_x() const;

 private:
  std::vector<double> px_;
  std::vector<double> ps_;
  std::optional<std::vector<double>> py_;
};

/// Empirical joint from paired samples. Support points are the distinct
/// observed x values in increasing order; unobserved values are excluded.
DiscreteJoint empirical_joint(std::span<const std::int64_t> x_indices,
                              std::span<const std::uint8_t> s_labels,
                              std::span<const std::uint8_t> y_labels = {});

Probability marginal_s(const DiscreteJoint& joint);
Probability marginal_y(const DiscreteJoint& joint);

/// -p log2 p - (1-p) log2 (1-p) in bits, with 0 log 0 = 0.
double binary_entropy(double p);

/// The unique p in [0, 1/2] with binary_entropy(p) == h, by bisection to an
/// absolute tolerance of 1e-12 in p.
double inverse_binary_entropy(double h);

/// H(S|X) = sum_x p(x) H_b(p(S=1|x)), in bits.
double conditional_entropy(const DiscreteJoint& joint);

}  // namespace fairrep
