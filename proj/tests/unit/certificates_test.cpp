#include "fairrep/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fairrep/error.hpp"
#include "fairrep/oracle.hpp"
#include "fairrep/probability.hpp"
#include "fairrep/random.hpp"

namespace fairrep {
namespace {

const std::vector<double> kT2Estimates{0.8, 0.2};
const std::vector<double> kT2Weights{0.5, 0.5};

TEST(SpCertificateBer, Examples) {
  EXPECT_NEAR(sp_certificate_ber(kT2Estimates, kT2Weights, 0.5), 0.6, 1e-15);
  const std::vector<double> flat{0.3, 0.3, 0.3};
  const std::vector<double> w{0.2, 0.5, 0.3};
  EXPECT_EQ(sp_certificate_ber(flat, w, 0.3), 0.0);
  const std::vector<double> separated{1.0, 0.0, 1.0};
  EXPECT_EQ(sp_certificate_ber(separated, w, 0.5), 1.0);
}

TEST(SpCertificateBer, Errors) {
  EXPECT_THROW(sp_certificate_ber(kT2Estimates, kT2Weights, 0.0), Error);
  EXPECT_THROW(sp_certificate_ber(kT2Estimates, kT2Weights, 1.0), Error);
  EXPECT_THROW(sp_certificate_ber({}, {}, 0.5), Error);
  const std::vector<double> bad_weights{0.7, 0.7};
  EXPECT_THROW(sp_certificate_ber(kT2Estimates, bad_weights, 0.5), Error);
}

TEST(SpCertificateEntropy, Examples) {
  EXPECT_NEAR(sp_certificate_entropy(kT2Estimates, kT2Weights, 0.5), 0.6, 1e-11);
  const std::vector<double> half{0.5, 0.5};
  EXPECT_EQ(sp_certificate_entropy(half, kT2Weights, 0.5), 0.0);
  const std::vector<double> determined{1.0, 0.0};
  EXPECT_EQ(sp_certificate_entropy(determined, kT2Weights, 0.5), 1.0);
}

TEST(DiCertificate, Examples) {
  EXPECT_NEAR(di_certificate(0.8, 0.5), 0.75, 1e-15);
  EXPECT_NEAR(di_certificate(0.3, 0.3), 0.0, 1e-15);
  EXPECT_NEAR(di_certificate(0.9, 0.9), 0.0, 1e-15);
}

TEST(DiCertificate, Errors) {
  try {
    di_certificate(1.0, 0.5);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("DI certificate vacuous", 0), 0u);
  }
  EXPECT_THROW(di_certificate(0.0, 0.5), Error);
  EXPECT_THROW(di_certificate(0.4, 0.5), Error);
  EXPECT_THROW(di_certificate(0.8, 1.0), Error);
}

TEST(EstimateEtaF, Examples) {
  const std::vector<double> three{0.1, 0.5, 0.9};
  EXPECT_EQ(estimate_eta_f(three, 0.0), 0.9);
  const std::vector<double> constant(17, 0.42);
  for (double slack : {0.0, 0.01, 0.3, 0.9}) EXPECT_EQ(estimate_eta_f(constant, slack), 0.42);
  EXPECT_THROW(estimate_eta_f({}, 0.0), Error);
  EXPECT_THROW(estimate_eta_f(three, 1.0), Error);
}

TEST(EstimateEtaF, MatchesOrderStatistic) {
  Rng rng(31);
  std::vector<double> draws(1000);
  for (double& d : draws) d = rng.uniform();
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  // Inverted-CDF quantile at 0.99 of 1000 points is the 990th smallest value.
  const double eta = estimate_eta_f(draws, 0.01);
  EXPECT_EQ(eta, sorted[989]);
  EXPECT_NEAR(eta, 0.99, 0.01);
  EXPECT_EQ(estimate_eta_f(draws, 0.0), sorted.back());
}

TEST(IndividualFairnessBound, Examples) {
  const IndividualFairnessBound zero = individual_fairness_bound(0.0, 0.0);
  EXPECT_EQ(zero.distance_offset, 0.0);
  EXPECT_EQ(zero.unfairness_bound, 0.0);
  const IndividualFairnessBound mid = individual_fairness_bound(0.1, 0.05);
  EXPECT_NEAR(mid.distance_offset, 0.2, 1e-15);
  EXPECT_NEAR(mid.unfairness_bound, 0.1, 1e-15);
  const IndividualFairnessBound capped = individual_fairness_bound(0.3, 0.7);
  EXPECT_NEAR(capped.distance_offset, 0.6, 1e-15);
  EXPECT_EQ(capped.unfairness_bound, 1.0);
  EXPECT_THROW(individual_fairness_bound(-0.1, 0.1), Error);
  EXPECT_THROW(individual_fairness_bound(0.1, 1.5), Error);
}

TEST(UtilityBound, Examples) {
  EXPECT_EQ(utility_bound(0.2, 0.0), 0.2);
  EXPECT_EQ(utility_bound(0.0, 0.3), 0.3);
  EXPECT_NEAR(utility_bound(0.15, 0.05), 0.2, 1e-15);
  EXPECT_THROW(utility_bound(-0.1, 0.0), Error);
}

TEST(MistrustBound, Examples) {
  EXPECT_EQ(mistrust_bound({0.7, 0.4}, 2.0, 0.0), 0.0);
  EXPECT_NEAR(mistrust_bound({0.5, 0.5}, 1.0, 0.1), 0.1, 1e-15);
  EXPECT_NEAR(mistrust_bound({1.0, 0.0}, 5.0, 0.2), 0.2, 1e-15);
  EXPECT_THROW(mistrust_bound({-1.0, 0.0}, 1.0, 0.1), Error);
}

TEST(Certificates, SoundAndTightAgainstEnumeration) {
  Rng rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    const DiscreteJoint joint = oracle::random_joint(rng, 1 + rng.index(12), false);
    const double p_s1 = marginal_s(joint);
    if (p_s1 <= 0.0 || p_s1 >= 1.0) continue;
    const double ber_bound = sp_certificate_ber(joint.ps_given_x(), joint.px(), p_s1);
    const double entropy_bound = sp_certificate_entropy(joint.ps_given_x(), joint.px(), p_s1);
    const oracle::EnumerationResult best = oracle::max_sp(joint);
    EXPECT_NEAR(best.best_value, ber_bound, 1e-9);
    EXPECT_LE(ber_bound, entropy_bound + 1e-9);

    const double eta = *std::max_element(joint.ps_given_x().begin(), joint.ps_given_x().end());
    if (eta < 1.0 - 1e-6) {
      EXPECT_NEAR(oracle::max_di(joint).best_value, di_certificate(eta, p_s1), 1e-9);
    }
  }
}

TEST(Certificates, UtilityBoundHoldsForLipschitzDecisions) {
  // A decision probability that is 1-Lipschitz in x with D = |.|, and a target
  // that equals it on X: R_Y(Yhat_f) <= R_Y(Yhat) + E[d(x, f(x))].
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(30);
    std::vector<double> x(n), fx(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform();
      fx[i] = std::clamp(x[i] + 0.2 * (rng.uniform() - 0.5), 0.0, 1.0);
    }
    double risk_original = 0.0, risk_cleaned = 0.0, recon = 0.0;
    const double slope = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      const double target = 0.5 + slope * (x[i] - 0.5);
      risk_original += std::abs(target - (0.5 + slope * (x[i] - 0.5))) / n;
      risk_cleaned += std::abs(target - (0.5 + slope * (fx[i] - 0.5))) / n;
      recon += std::abs(x[i] - fx[i]) / n;
    }
    EXPECT_LE(risk_cleaned, utility_bound(risk_original, recon) + 1e-9);
  }
}

SensitiveEvidence t2_evidence(const Provenance& provenance) {
  SensitiveEvidence e;
  e.provenance = provenance;
  e.ps_estimates = {0.8, 0.2};
  e.eta_slack = 0.0;
  return e;
}

TEST(AssembleReport, FieldsMatchIndividualComputations) {
  const Provenance provenance{"synthetic", "test:fraction=0.7:seed=1", 4, 1.5};
  const ReconstructionEvidence recon{provenance, {0.25, 0.125}, 0.05};
  const MistrustEvidence mistrust{provenance, {0.5, 0.25}};
  const CertificateReport r = assemble_report(t2_evidence(provenance), recon, mistrust);
  EXPECT_NEAR(r.sp_bound_ber, 0.6, 1e-15);
  EXPECT_NEAR(r.sp_bound_entropy, 0.6, 1e-11);
  EXPECT_EQ(r.eta_f, 0.8);
  EXPECT_NEAR(r.di_bound, di_certificate(0.8, 0.5), 1e-15);
  EXPECT_EQ(r.large_recon_rate, 0.25);
  EXPECT_EQ(r.avg_recon_error, 0.125);
  EXPECT_EQ(r.epsilon, 0.05);
  EXPECT_EQ(r.utility_bound_offset, 0.125);
  ASSERT_TRUE(r.mistrust_bound.has_value());
  EXPECT_NEAR(*r.mistrust_bound, (0.5 + 1.5 * 0.25) * 0.125, 1e-15);
  EXPECT_EQ(r.provenance, provenance);
}

TEST(AssembleReport, IdentityRepresentation) {
  const Provenance provenance{"synthetic", "all", 0, 0.0};
  const ReconstructionEvidence recon{provenance, {0.0, 0.0}, 0.1};
  const CertificateReport r = assemble_report(t2_evidence(provenance), recon, MistrustEvidence{provenance, {1.0, 1.0}});
  EXPECT_EQ(r.large_recon_rate, 0.0);
  EXPECT_EQ(r.avg_recon_error, 0.0);
  EXPECT_EQ(r.mistrust_bound.value(), 0.0);
}

TEST(AssembleReport, MistrustOptionalAndProvenanceChecked) {
  const Provenance a{"adult", "test:fraction=0.7:seed=0", 1, 0.0};
  Provenance b = a;
  b.split = "test:fraction=0.7:seed=9";
  const ReconstructionEvidence recon{a, {0.0, 0.0}, 0.1};
  EXPECT_FALSE(assemble_report(t2_evidence(a), recon).mistrust_bound.has_value());
  try {
    assemble_report(t2_evidence(b), recon);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "inconsistent provenance");
  }
  EXPECT_THROW(assemble_report(t2_evidence(a), recon, MistrustEvidence{b, {}}), Error);
}

TEST(AssembleReport, BoundOrderingOnRandomEstimates) {
  Rng rng(34);
  const Provenance provenance{"synthetic", "all", 0, 0.0};
  for (int trial = 0; trial < 200; ++trial) {
    SensitiveEvidence e;
    e.provenance = provenance;
    e.ps_estimates.resize(2 + rng.index(50));
    for (double& p : e.ps_estimates) p = rng.uniform();
    const CertificateReport r = assemble_report(e, {provenance, {0.0, 0.0}, 0.0});
    EXPECT_LE(r.sp_bound_ber, r.sp_bound_entropy + 1e-9);
    for (double v : {r.sp_bound_ber, r.sp_bound_entropy, r.di_bound, r.eta_f}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(ReportSerialization, KeyValueRoundTrip) {
  const Provenance provenance{"adult", "test:fraction=0.7:seed=0", 12, 0.1};
  const CertificateReport r = assemble_report(t2_evidence(provenance), {provenance, {1.0 / 3.0, 0.1}, 0.07},
                                              MistrustEvidence{provenance, {0.3, 0.9}});
  const std::string text = to_key_value(r);
  const CertificateReport back = report_from_key_value(text);
  EXPECT_EQ(back.sp_bound_ber, r.sp_bound_ber);
  EXPECT_EQ(back.sp_bound_entropy, r.sp_bound_entropy);
  EXPECT_EQ(back.di_bound, r.di_bound);
  EXPECT_EQ(back.eta_f, r.eta_f);
  EXPECT_EQ(back.large_recon_rate, r.large_recon_rate);
  EXPECT_EQ(back.avg_recon_error, r.avg_recon_error);
  EXPECT_EQ(back.epsilon, r.epsilon);
  EXPECT_EQ(back.utility_bound_offset, r.utility_bound_offset);
  EXPECT_EQ(back.mistrust_bound, r.mistrust_bound);
  EXPECT_EQ(back.provenance, r.provenance);
  EXPECT_EQ(to_key_value(back), text);
}

TEST(ReportSerialization, FieldNamesAndAbsentMistrust) {
  const Provenance provenance{"adult", "s", 0, 0.0};
  const CertificateReport r = assemble_report(t2_evidence(provenance), {provenance, {0.0, 0.0}, 0.0});
  const std::string text = to_key_value(r);
  for (const char* key : {"sp_bound_ber=", "sp_bound_entropy=", "di_bound=", "eta_f=", "large_recon_rate=",
                          "avg_recon_error=", "epsilon=", "utility_bound_offset=", "seed=", "lambda=",
                          "dataset=", "split="}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  EXPECT_EQ(text.find("mistrust_bound="), std::string::npos);
  EXPECT_FALSE(report_from_key_value(text).mistrust_bound.has_value());
  EXPECT_THROW(report_from_key_value(text + "bogus=1\n"), Error);
  EXPECT_THROW(report_from_key_value("sp_bound_ber=0.5\n"), Error);
}

TEST(ReportSerialization, JsonDocument) {
  const Provenance provenance{"adult", "s", 3, 2.0};
  const CertificateReport r = assemble_report(t2_evidence(provenance), {provenance, {0.5, 0.25}, 0.1},
                                              MistrustEvidence{provenance, {1.0, 0.5}});
  const nlohmann::json doc = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(doc.at("sp_bound_ber").get<double>(), r.sp_bound_ber);
  EXPECT_EQ(doc.at("mistrust_bound").get<double>(), *r.mistrust_bound);
  EXPECT_EQ(doc.at("seed").get<std::uint64_t>(), 3u);
  EXPECT_EQ(doc.at("dataset").get<std::string>(), "adult");
}

}  // namespace
}  // namespace fairrep
