#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairrep/certificates.hpp"
#include "fairrep/data.hpp"
#include "fairrep/decision.hpp"
#include "fairrep/error.hpp"
#include "fairrep/neural.hpp"
#include "fairrep/representation.hpp"

namespace fairrep {

/// How the target risk column is computed.
enum class RiskForm { kCostSensitive, kDivergence };

/// Mirrors the flat key=value config file; see `config_keys()`.
struct ExperimentConfig {
  std::string dataset = "adult";  // adult | propublica | path to a synthetic manifest
  std::string data_path;          // CSV for adult / propublica
  std::vector<double> lambda_grid = {0.0};
  std::uint64_t seed = 0;
  data::SplitSpec split;
  nn::TrainConfig train;
  int hidden_units = kHiddenUnits;
  double epsilon_fraction = 0.1;
  double c_y = 0.5;
  double c_s = 0.5;
  double eta_slack = 0.01;
  RiskForm risk_form = RiskForm::kCostSensitive;
  std::string out = "out";
  std::size_t subsample = 0;  // 0 keeps every row
  std::uint64_t subsample_seed = 0;
  unsigned threads = 1;
  bool record_runtime = false;
  std::optional<double> l_y;  // Lipschitz constants for the mistrust bound
  std::optional<double> l_s;

  void validate() const;
};

/// Thrown for malformed or unknown configuration; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string>& config_keys();

/// Applies `key=value` fields on top of `base`. Unknown keys are a UsageError.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
void apply_config_field(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string format_config(const ExperimentConfig& config);

struct PreparedData {
  data::RawTable raw;       // empty rows for synthetic data
  data::Dataset encoded;    // unscaled, after subsampling
  data::Split split;
  double epsilon = 0.0;     // epsilon_fraction * mean training ||x||_2
};

PreparedData prepare_data(const ExperimentConfig& config);

/// Provenance string identifying the evaluation split.
std::string split_id(const ExperimentConfig& config);

struct SweepRow {
  double lambda = 0.0;
  double sp_via_ber_rule = 0.0;
  double di_via_di_rule = 0.0;
  double large_recon_rate = 0.0;
  double avg_recon_error = 0.0;
  double risk_y = 0.0;
  double cost_of_mistrust = 0.0;
  double sp_bound_ber = 0.0;
  double sp_bound_entropy = 0.0;
  double di_bound = 0.0;
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or "failed: <reason>"
};

const std::vector<std::string>& sweep_header();
std::string format_sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

/// Original-data estimators shared by every lambda of a sweep.
struct Baseline {
  nn::Mlp y_estimator;
  nn::Mlp s_estimator;
  std::vector<double> py_test;
  std::vector<double> ps_test;
};

Baseline train_baseline(const ExperimentConfig& config, const PreparedData& data);

struct LambdaOutcome {
  SweepRow row;
  std::optional<CertificateReport> report;
  RepresentationTrace trace;
};

/// Everything measured on the test split for one representation.
LambdaOutcome evaluate_representation(const ExperimentConfig& config, const PreparedData& data,
                                      const Baseline& baseline, const RepresentationModel& model,
                                      std::uint64_t run_seed);

/// Trains and evaluates one grid point; stage errors become a failed row.
LambdaOutcome run_lambda(const ExperimentConfig& config, const PreparedData& data,
                         const Baseline& baseline, std::size_t index);

std::uint64_t lambda_seed(const ExperimentConfig& config, std::size_t index);

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::optional<CertificateReport>> reports;
  std::vector<double> wall_seconds;
};

SweepResult run_sweep(const ExperimentConfig& config);

std::string report_basename(std::size_t index, double lambda);

/// sweep.csv, reports/, plot/ and, when recorded, timing.csv under `dir`.
void write_sweep_outputs(const std::string& dir, const ExperimentConfig& config,
                         const SweepResult& result);

/// Measures emitted as plot tables, in file order.
const std::vector<std::string>& plot_measures();

/// One "lambda<TAB>value" table per measure, rows sorted by lambda.
std::map<std::string, std::string> emit_plot_data(const std::vector<SweepRow>& rows);

/// Cross-file check: every report's seed, lambda and split agree with its row
/// and the config. Returns a list of problems, empty when consistent.
std::vector<std::string> check_consistency(const std::string& dir, const ExperimentConfig& config);

}  // namespace fairrep
