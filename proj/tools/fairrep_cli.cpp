// fairrep: fair representation training, certificates and verification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fairrep/certificates.hpp"
#include "fairrep/data.hpp"
#include "fairrep/experiment.hpp"
#include "fairrep/kv.hpp"
#include "fairrep/neural.hpp"
#include "fairrep/oracle.hpp"
#include "fairrep/random.hpp"
#include "fairrep/representation.hpp"

namespace {

using fairrep::ExperimentConfig;

constexpr int kUsageExit = 2;
constexpr int kRuntimeExit = 1;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_lambda) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--seed", flags.seed, "overrides seed and split_seed");
  if (with_lambda) cmd->add_option("--lambda", flags.lambda, "overrides lambda_grid with one value");
  cmd->add_option("--out", flags.out, "output directory");
}

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig config;
  if (!flags.config_path.empty()) {
    std::string text;
    try {
      text = fairrep::read_file(flags.config_path);
    } catch (const fairrep::Error& e) {
      throw fairrep::UsageError(e.what());
    }
    config = fairrep::parse_config(text);
  }
  if (flags.seed) {
    config.seed = *flags.seed;
    config.split.seed = *flags.seed;
  }
  if (flags.lambda) config.lambda_grid = {*flags.lambda};
  if (!flags.out.empty()) config.out = flags.out;
  config.validate();
  return config;
}

std::string path_in(const ExperimentConfig& config, const std::string& name) {
  return (std::filesystem::path(config.out) / name).string();
}

int run_ingest(const CommonFlags& flags) {
  const ExperimentConfig config = load_config(flags);
  const fairrep::PreparedData prepared = fairrep::prepare_data(config);
  const fairrep::data::Summary summary = fairrep::data::summarize(prepared.split.train);
  std::ostringstream cache;
  fairrep::data::save_dataset(cache, prepared.encoded);
  fairrep::write_file_atomic(path_in(config, "dataset.bin"), cache.str());
  fairrep::write_file_atomic(path_in(config, "manifest.txt"),
                             fairrep::data::manifest(prepared.raw, prepared.encoded));
  fairrep::write_file_atomic(path_in(config, "rejects.txt"), fairrep::data::reject_report(prepared.raw));
  const std::string text = fmt::format(
      "dataset={}\nsplit={}\nrows_total={}\nrows_train={}\nrows_test={}\nfeatures={}\n{}",
      prepared.encoded.dataset, fairrep::split_id(config), prepared.encoded.rows(),
      prepared.split.train.rows(), prepared.split.test.rows(), prepared.encoded.features.cols(),
      fairrep::data::format_summary(summary));
  fairrep::write_file_atomic(path_in(config, "summary.txt"), text);
  std::cout << text;
  return 0;
}

int run_train(const CommonFlags& flags) {
  const ExperimentConfig config = load_config(flags);
  const fairrep::PreparedData prepared = fairrep::prepare_data(config);
  fairrep::nn::TrainConfig train = config.train;
  train.seed = config.seed;
  const double lambda = config.lambda_grid.front();
  fairrep::RepresentationResult result = fairrep::train_fair_representation(
      prepared.split.train.features, prepared.split.train.s, lambda, train, config.hidden_units);
  result.model.scaler = prepared.split.train.scaler;
  result.model.schema_hash = prepared.split.train.schema_hash;
  std::ostringstream model;
  fairrep::save_representation(model, result.model);
  fairrep::write_file_atomic(path_in(config, "representation.txt"), model.str());
  std::string trace = "epoch,reconstruction_loss,adversary_loss\n";
  for (std::size_t e = 0; e < result.trace.reconstruction_loss.size(); ++e) {
    trace += fmt::format("{},{},{}\n", e, fairrep::format_double(result.trace.reconstruction_loss[e]),
                         fairrep::format_double(result.trace.adversary_loss[e]));
  }
  fairrep::write_file_atomic(path_in(config, "trace.csv"), trace);
  std::cout << fmt::format("lambda={}\nseed={}\nadversary_steps={}\nencoder_steps={}\nmodel={}\n",
                           fairrep::format_double(lambda), config.seed, result.trace.adversary_steps,
                           result.trace.encoder_steps, path_in(config, "representation.txt"));
  return 0;
}

int run_certify(const CommonFlags& flags, const std::string& model_path) {
  const ExperimentConfig config = load_config(flags);
  std::ifstream in(model_path);
  if (!in) throw fairrep::Error("cannot open '" + model_path + "'");
  const fairrep::RepresentationModel model = fairrep::load_representation(in);
  const fairrep::PreparedData prepared = fairrep::prepare_data(config);
  if (model.schema_hash != 0 && model.schema_hash != prepared.split.train.schema_hash) {
    throw fairrep::Error("model schema hash does not match the dataset");
  }
  if (model.dim() != prepared.split.train.features.cols()) {
    throw fairrep::Error("model dimension does not match the dataset");
  }
  const fairrep::Baseline baseline = fairrep::train_baseline(config, prepared);
  const fairrep::LambdaOutcome outcome =
      fairrep::evaluate_representation(config, prepared, baseline, model, model.train_seed);
  fairrep::write_file_atomic(path_in(config, "report.txt"), fairrep::to_key_value(*outcome.report));
  fairrep::write_file_atomic(path_in(config, "report.json"), fairrep::to_json(*outcome.report));
  std::cout << fairrep::to_key_value(*outcome.report);
  std::cout << fmt::format("sp_via_ber_rule={}\ndi_via_di_rule={}\nrisk_y={}\ncost_of_mistrust={}\n",
                           fairrep::format_double(outcome.row.sp_via_ber_rule),
                           fairrep::format_double(outcome.row.di_via_di_rule),
                           fairrep::format_double(outcome.row.risk_y),
                           fairrep::format_double(outcome.row.cost_of_mistrust));
  return 0;
}

int run_sweep(const CommonFlags& flags) {
  const ExperimentConfig config = load_config(flags);
  const fairrep::SweepResult result = fairrep::run_sweep(config);
  fairrep::write_sweep_outputs(config.out, config, result);
  std::cout << fairrep::format_sweep_csv(result.rows);
  const auto problems = fairrep::check_consistency(config.out, config);
  for (const std::string& p : problems) std::cerr << "consistency: " << p << '\n';
  return problems.empty() ? 0 : kRuntimeExit;
}

int run_oracle_check(std::uint64_t seed, std::size_t instances, std::size_t max_support) {
  const fairrep::oracle::CheckSummary s = fairrep::oracle::run_checks(seed, instances, max_support);
  std::cout << fmt::format(
      "instances={}\nviolations={}\nmax_sp_gap={}\nmax_di_gap={}\nmax_rys_gap={}\nmax_mistrust_excess={}\nmax_iu_excess={}\n",
      s.instances, s.violations, s.max_sp_gap, s.max_di_gap, s.max_rys_gap, s.max_mistrust_excess,
      s.max_iu_excess);
  for (const std::string& m : s.messages) std::cout << "violation: " << m << '\n';
  return s.violations == 0 ? 0 : kRuntimeExit;
}

int run_gradcheck(std::uint64_t seed, std::size_t architectures) {
  fairrep::Rng rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < architectures; ++k) {
    const int depth = 1 + static_cast<int>(rng.index(3));
    std::vector<int> dims{1 + static_cast<int>(rng.index(6))};
    std::vector<fairrep::nn::Activation> acts;
    for (int l = 0; l < depth; ++l) {
      dims.push_back(1 + static_cast<int>(rng.index(8)));
      acts.push_back(fairrep::nn::Activation::kSoftplus);
    }
    const bool cross_entropy = rng.bernoulli(0.5);
    if (cross_entropy) dims.back() = 1;
    acts.back() = cross_entropy ? fairrep::nn::Activation::kSigmoid : fairrep::nn::Activation::kLinear;
    const fairrep::nn::Mlp model = fairrep::nn::init_mlp(dims, acts, rng.next());
    const int rows = 1 + static_cast<int>(rng.index(8));
    fairrep::Matrix batch(rows, dims.front());
    fairrep::Matrix targets(rows, dims.back());
    for (Eigen::Index i = 0; i < batch.size(); ++i) batch.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      targets.data()[i] = cross_entropy ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.normal();
    }
    const auto loss = cross_entropy ? fairrep::nn::Loss::kCrossEntropy : fairrep::nn::Loss::kSquaredError;
    const fairrep::nn::GradientCheck check = fairrep::nn::gradient_check(model, batch, targets, loss);
    worst = std::max(worst, check.max_relative_error);
    std::cout << fmt::format("architecture={} dims={} loss={} parameters={} max_relative_error={:.3e}\n", k,
                             fmt::join(dims, "-"), cross_entropy ? "cross_entropy" : "squared_error",
                             check.parameters_checked, check.max_relative_error);
  }
  std::cout << fmt::format("worst_relative_error={:.3e}\n", worst);
  return worst < 1e-5 ? 0 : kRuntimeExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair representation learning and fairness certificates", "fairrep"};
  app.require_subcommand(1);

  CommonFlags ingest_flags, train_flags, certify_flags, sweep_flags;
  CLI::App* ingest = app.add_subcommand("ingest", "build dataset cache, manifest and train-split summary");
  add_common(ingest, ingest_flags, false);
  CLI::App* train = app.add_subcommand("train", "train one representation");
  add_common(train, train_flags, true);
  CLI::App* certify = app.add_subcommand("certify", "certificate report for a saved representation");
  add_common(certify, certify_flags, false);
  std::string model_path;
  certify->add_option("--model", model_path, "representation file written by train")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "full lambda sweep with reports and plot tables");
  add_common(sweep, sweep_flags, true);

  std::uint64_t oracle_seed = 0;
  std::size_t instances = 500, max_support = 10;
  CLI::App* oracle = app.add_subcommand("oracle-check", "brute-force verification of the bounds");
  oracle->add_option("--seed", oracle_seed);
  oracle->add_option("--instances", instances);
  oracle->add_option("--max-support", max_support);

  std::uint64_t grad_seed = 0;
  std::size_t architectures = 20;
  CLI::App* grad = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  grad->add_option("--seed", grad_seed);
  grad->add_option("--architectures", architectures);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "ingest") return run_ingest(ingest_flags);
    if (command == "train") return run_train(train_flags);
    if (command == "certify") return run_certify(certify_flags, model_path);
    if (command == "sweep") return run_sweep(sweep_flags);
    if (command == "oracle-check") return run_oracle_check(oracle_seed, instances, max_support);
    if (command == "gradcheck") return run_gradcheck(grad_seed, architectures);
  } catch (const fairrep::UsageError& e) {
    std::cerr << fmt::format("fairrep: usage error: {}\n", e.what());
    return kUsageExit;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("fairrep: error: command={} message=\"{}\"\n", command, e.what());
    return kRuntimeExit;
  }
  return kUsageExit;
}
