#include "fairrep/certificates.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fairrep/error.hpp"
#include "fairrep/kv.hpp"

namespace fairrep {
namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_marginal(double p_s1) {
  if (!(p_s1 > 0.0 && p_s1 < 1.0)) throw Error("sensitive group empty: p(S=1) must lie in (0,1)");
}

DiscreteJoint estimate_joint(std::span<const double> ps_estimates,
                             std::span<const double> weights) {
  if (ps_estimates.empty()) throw Error("empty sample");
  if (weights.size() != ps_estimates.size()) throw Error("weights do not match estimates");
  return DiscreteJoint(std::vector<double>(weights.begin(), weights.end()),
                       std::vector<double>(ps_estimates.begin(), ps_estimates.end()));
}

}  // namespace

double sp_certificate_ber(std::span<const double> ps_estimates, std::span<const double> weights,
                          double p_s1) {
  check_marginal(p_s1);
  const DiscreteJoint joint = estimate_joint(ps_estimates, weights);
  DecisionRule rule(ps_estimates.size());
  for (std::size_t i = 0; i < rule.size(); ++i) rule[i] = ps_estimates[i] >= p_s1 ? 1.0 : 0.0;
  return clip01(1.0 - 2.0 * balanced_error_rate(rule, joint));
}

double sp_certificate_entropy(std::span<const double> ps_estimates,
                              std::span<const double> weights, double p_s1) {
  check_marginal(p_s1);
  const DiscreteJoint joint = estimate_joint(ps_estimates, weights);
  const double h = std::min(conditional_entropy(joint), 1.0);
  return clip01(1.0 - inverse_binary_entropy(h) / std::max(p_s1, 1.0 - p_s1));
}

double di_certificate(double eta_f, double p_s1) {
  check_marginal(p_s1);
  if (eta_f == 1.0) {
    throw Error("DI certificate vacuous: eta_f = 1, so the bound is 1");
  }
  if (!(eta_f > 0.0 && eta_f < 1.0)) throw Error("eta_f must lie in (0,1)");
  if (eta_f < p_s1 - 1e-12) throw Error("eta_f below p(S=1): the maximum conditional cannot be below the marginal");
  return clip01(1.0 - p_s1 * (1.0 - eta_f) / ((1.0 - p_s1) * eta_f));
}

double estimate_eta_f(std::span<const double> ps_estimates, double quantile_slack) {
  if (ps_estimates.empty()) throw Error("empty sample");
  if (!(quantile_slack >= 0.0 && quantile_slack < 1.0)) {
    throw Error("quantile slack must lie in [0,1)");
  }
  std::vector<double> sorted(ps_estimates.begin(), ps_estimates.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::ceil((1.0 - quantile_slack) * n));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

IndividualFairnessBound individual_fairness_bound(double epsilon, double delta) {
  if (!(epsilon >= 0.0)) throw Error("epsilon must be non-negative");
  if (!(delta >= 0.0 && delta <= 1.0)) throw Error("delta must lie in [0,1]");
  return {2.0 * epsilon, std::min(2.0 * delta, 1.0)};
}

double utility_bound(double base_risk, double avg_recon_error) {
  if (!(base_risk >= 0.0 && avg_recon_error >= 0.0)) {
    throw Error("utility bound inputs must be non-negative");
  }
  return base_risk + avg_recon_error;
}

double mistrust_bound(const LipschitzConstants& lipschitz, double lambda,
                      double avg_recon_error) {
  if (!(lipschitz.l_y >= 0.0 && lipschitz.l_s >= 0.0 && lambda >= 0.0 &&
        avg_recon_error >= 0.0)) {
    throw Error("mistrust bound inputs must be non-negative");
  }
  return (lipschitz.l_y + lambda * lipschitz.l_s) * avg_recon_error;
}

CertificateReport assemble_report(const SensitiveEvidence& sensitive,
                                  const ReconstructionEvidence& reconstruction,
                                  const std::optional<MistrustEvidence>& mistrust) {
  if (!(sensitive.provenance == reconstruction.provenance) ||
      (mistrust && !(mistrust->provenance == sensitive.provenance))) {
    throw Error("inconsistent provenance");
  }
  const auto& estimates = sensitive.ps_estimates;
  if (estimates.empty()) throw Error("empty sample");
  std::vector<double> weights = sensitive.weights;
  if (weights.empty()) weights.assign(estimates.size(), 1.0 / static_cast<double>(estimates.size()));

  double p_s1 = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) p_s1 += weights[i] * estimates[i];

  CertificateReport report;
  report.provenance = sensitive.provenance;
  report.sp_bound_ber = sp_certificate_ber(estimates, weights, p_s1);
  report.sp_bound_entropy = sp_certificate_entropy(estimates, weights, p_s1);
  // A maximum over the support is never below the weighted mean.
  report.eta_f = std::max(estimate_eta_f(estimates, sensitive.eta_slack), p_s1);
  report.di_bound = report.eta_f >= 1.0 ? 1.0 : di_certificate(report.eta_f, p_s1);
  report.large_recon_rate = reconstruction.stats.large_rate;
  report.avg_recon_error = reconstruction.stats.average_error;
  report.epsilon = reconstruction.epsilon;
  report.utility_bound_offset = utility_bound(0.0, reconstruction.stats.average_error);
  if (mistrust) {
    report.mistrust_bound = mistrust_bound(mistrust->lipschitz, sensitive.provenance.lambda,
                                           reconstruction.stats.average_error);
  }
  return report;
}

std::string to_key_value(const CertificateReport& r) {
  std::string out;
  const auto put = [&out](const char* key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  put("sp_bound_ber", format_double(r.sp_bound_ber));
  put("sp_bound_entropy", format_double(r.sp_bound_entropy));
  put("di_bound", format_double(r.di_bound));
  put("eta_f", format_double(r.eta_f));
  put("large_recon_rate", format_double(r.large_recon_rate));
  put("avg_recon_error", format_double(r.avg_recon_error));
  put("epsilon", format_double(r.epsilon));
  put("utility_bound_offset", format_double(r.utility_bound_offset));
  if (r.mistrust_bound) put("mistrust_bound", format_double(*r.mistrust_bound));
  put("seed", std::to_string(r.provenance.seed));
  put("lambda", format_double(r.provenance.lambda));
  put("dataset", r.provenance.dataset);
  put("split", r.provenance.split);
  return out;
}

CertificateReport report_from_key_value(const std::string& text) {
  auto fields = parse_key_value(text);
  const auto take = [&fields](const std::string& key) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw Error("report field missing: " + key);
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  CertificateReport r;
  r.sp_bound_ber = parse_double(take("sp_bound_ber"), "sp_bound_ber");
  r.sp_bound_entropy = parse_double(take("sp_bound_entropy"), "sp_bound_entropy");
  r.di_bound = parse_double(take("di_bound"), "di_bound");
  r.eta_f = parse_double(take("eta_f"), "eta_f");
  r.large_recon_rate = parse_double(take("large_recon_rate"), "large_recon_rate");
  r.avg_recon_error = parse_double(take("avg_recon_error"), "avg_recon_error");
  r.epsilon = parse_double(take("epsilon"), "epsilon");
  r.utility_bound_offset = parse_double(take("utility_bound_offset"), "utility_bound_offset");
  if (fields.count("mistrust_bound")) {
    r.mistrust_bound = parse_double(take("mistrust_bound"), "mistrust_bound");
  }
  r.provenance.seed = parse_uint(take("seed"), "seed");
  r.provenance.lambda = parse_double(take("lambda"), "lambda");
  r.provenance.dataset = take("dataset");
  r.provenance.split = take("split");
  if (!fields.empty()) throw Error("unknown report field: " + fields.begin()->first);
  return r;
}

std::string to_json(const CertificateReport& r) {
  nlohmann::ordered_json j;
  j["sp_bound_ber"] = r.sp_bound_ber;
  j["sp_bound_entropy"] = r.sp_bound_entropy;
  j["di_bound"] = r.di_bound;
  j["eta_f"] = r.eta_f;
  j["large_recon_rate"] = r.large_recon_rate;
  j["avg_recon_error"] = r.avg_recon_error;
  j["epsilon"] = r.epsilon;
  j["utility_bound_offset"] = r.utility_bound_offset;
  j["mistrust_bound"] = r.mistrust_bound ? nlohmann::ordered_json(*r.mistrust_bound) : nlohmann::ordered_json();
  j["seed"] = r.provenance.seed;
  j["lambda"] = r.provenance.lambda;
  j["dataset"] = r.provenance.dataset;
  j["split"] = r.provenance.split;
  return j.dump(2) + "\n";
}

}  // namespace fairrep
