#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairrep/metrics.hpp"

namespace fairrep {

struct LipschitzConstants {
  double l_y = 0.0;
  double l_s = 0.0;
};

/// Upper bound on the statistical parity of any decision made from X_f:
/// 1 - 2 BER of the rule 1(p(S=1|x) >= p(S=1)), clipped to [0, 1].
double sp_certificate_ber(std::span<const double> ps_estimates, std::span<const double> weights,
                          double p_s1);

/// Looser bound 1 - H_b^{-1}(H(S|X_f)) / max(p(S=1), p(S=0)), clipped to [0, 1].
double sp_certificate_entropy(std::span<const double> ps_estimates,
                              std::span<const double> weights, double p_s1);

/// Tight disparate impact bound 1 - p(S=1)(1-eta_f) / (p(S=0) eta_f).
/// Throws "DI certificate vacuous" when eta_f == 1 (the bound is 1).
double di_certificate(double eta_f, double p_s1);

/// (1 - quantile_slack) empirical quantile (inverted CDF) of the estimates;
/// slack 0 is the maximum.
double estimate_eta_f(std::span<const double> ps_estimates, double quantile_slack);

struct IndividualFairnessBound {
  double distance_offset = 0.0;  // d_eps = d + distance_offset
  double unfairness_bound = 0.0;
};

IndividualFairnessBound individual_fairness_bound(double epsilon, double delta);

double utility_bound(double base_risk, double avg_recon_error);

double mistrust_bound(const LipschitzConstants& lipschitz, double lambda,
                      double avg_recon_error);

/// Identifies the representation and evaluation split a value was computed on.
struct Provenance {
  std::string dataset;
  std::string split;
  std::uint64_t seed = 0;
  double lambda = 0.0;

  bool operator==(const Provenance&) const = default;
};

struct CertificateReport {
  double sp_bound_ber = 0.0;
  double sp_bound_entropy = 0.0;
  double di_bound = 0.0;
  double eta_f = 0.0;
  double large_recon_rate = 0.0;
  double avg_recon_error = 0.0;
  double epsilon = 0.0;
  double utility_bound_offset = 0.0;
  std::optional<double> mistrust_bound;
  Provenance provenance;
};

/// Per-point estimates of p(S=1|X_f=x) on the evaluation split.
struct SensitiveEvidence {
  Provenance provenance;
  std::vector<double> ps_estimates;
  std::vector<double> weights;  // empty means uniform
  double eta_slack = 0.01;
};

struct ReconstructionEvidence {
  Provenance provenance;
  ReconstructionStats stats;
  double epsilon = 0.0;
};

struct MistrustEvidence {
  Provenance provenance;
  LipschitzConstants lipschitz;
};

/// Combines evidence computed for one representation on one split. The
/// marginal p(S=1) used by the group-fairness bounds is the one implied by the
/// estimates themselves, so the bounds describe a single joint distribution.
/// Throws "inconsistent provenance" if the evidence disagrees on provenance.
CertificateReport assemble_report(const SensitiveEvidence& sensitive,
                                  const ReconstructionEvidence& reconstruction,
                                  const std::optional<MistrustEvidence>& mistrust = std::nullopt);

/// One `key=value` per line in a fixed field order; mistrust_bound is omitted
/// when absent.
std::string to_key_value(const CertificateReport& report);
CertificateReport report_from_key_value(const std::string& text);
std::string to_json(const CertificateReport& report);

}  // namespace fairrep
