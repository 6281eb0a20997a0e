#include "fairrep/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "fairrep/kv.hpp"
#include "fairrep/metrics.hpp"
#include "fairrep/random.hpp"

namespace fairrep {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string dataset_name(const ExperimentConfig& config) {
  if (config.dataset == "adult" || config.dataset == "propublica") return config.dataset;
  return "synthetic";
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

std::vector<double> probabilities_to_rule(std::span<const double> probs, double threshold) {
  std::vector<double> rule(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) rule[i] = probs[i] >= threshold ? 1.0 : 0.0;
  return rule;
}

nn::TrainConfig seeded(const nn::TrainConfig& base, std::uint64_t seed) {
  nn::TrainConfig config = base;
  config.seed = seed;
  return config;
}

std::string sanitize_reason(std::string reason) {
  for (char& c : reason) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return reason;
}

SweepRow failed_row(double lambda, std::uint64_t seed, const std::string& reason) {
  SweepRow row;
  row.lambda = lambda;
  row.seed = seed;
  row.sp_via_ber_rule = row.di_via_di_rule = row.large_recon_rate = row.avg_recon_error = kNaN;
  row.risk_y = row.cost_of_mistrust = row.sp_bound_ber = row.sp_bound_entropy = row.di_bound = kNaN;
  row.status = "failed: " + sanitize_reason(reason);
  return row;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (lambda_grid.empty()) throw UsageError("lambda_grid must not be empty");
  for (double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw UsageError("lambda_grid entries must be non-negative");
  }
  if (dataset.empty()) throw UsageError("dataset must be set");
  if ((dataset == "adult" || dataset == "propublica") && data_path.empty()) {
    throw UsageError("data_path is required for dataset " + dataset);
  }
  if (!(epsilon_fraction >= 0.0)) throw UsageError("epsilon_fraction must be non-negative");
  if (!(eta_slack >= 0.0 && eta_slack < 1.0)) throw UsageError("eta_slack must lie in [0,1)");
  if (hidden_units <= 0) throw UsageError("hidden_units must be positive");
  if (threads == 0) throw UsageError("threads must be positive");
  if (l_y.has_value() != l_s.has_value()) throw UsageError("l_y and l_s must be given together");
  try {
    split.validate();
    train.validate();
    CostParams{c_y, c_s, 0.0}.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dataset", "data_path", "lambda_grid", "seed", "train_fraction", "split_seed",
      "epochs", "batch_size", "learning_rate", "max_steps", "shuffle", "hidden_units",
      "epsilon_fraction", "c_y", "c_s", "eta_slack", "risk_form", "out", "subsample",
      "subsample_seed", "threads", "record_runtime", "l_y", "l_s"};
  return keys;
}

void apply_config_field(ExperimentConfig& c, const std::string& key, const std::string& value) {
  try {
    if (key == "dataset") {
      c.dataset = value;
    } else if (key == "data_path") {
      c.data_path = value;
    } else if (key == "lambda_grid") {
      c.lambda_grid.clear();
      for (const std::string& part : split(value, ',')) c.lambda_grid.push_back(parse_double(part, key));
    } else if (key == "seed") {
      c.seed = parse_uint(value, key);
    } else if (key == "train_fraction") {
      c.split.train_fraction = parse_double(value, key);
    } else if (key == "split_seed") {
      c.split.seed = parse_uint(value, key);
    } else if (key == "epochs") {
      c.train.epochs = static_cast<int>(parse_int(value, key));
    } else if (key == "batch_size") {
      c.train.batch_size = static_cast<int>(parse_int(value, key));
    } else if (key == "learning_rate") {
      c.train.learning_rate = parse_double(value, key);
    } else if (key == "max_steps") {
      c.train.max_steps = parse_uint(value, key);
    } else if (key == "shuffle") {
      c.train.shuffle = parse_bool(value, key);
    } else if (key == "hidden_units") {
      c.hidden_units = static_cast<int>(parse_int(value, key));
    } else if (key == "epsilon_fraction") {
      c.epsilon_fraction = parse_double(value, key);
    } else if (key == "c_y") {
      c.c_y = parse_double(value, key);
    } else if (key == "c_s") {
      c.c_s = parse_double(value, key);
    } else if (key == "eta_slack") {
      c.eta_slack = parse_double(value, key);
    } else if (key == "risk_form") {
      if (value == "cost_sensitive") {
        c.risk_form = RiskForm::kCostSensitive;
      } else if (value == "divergence") {
        c.risk_form = RiskForm::kDivergence;
      } else {
        throw UsageError("risk_form must be cost_sensitive or divergence");
      }
    } else if (key == "out") {
      c.out = value;
    } else if (key == "subsample") {
      c.subsample = parse_uint(value, key);
    } else if (key == "subsample_seed") {
      c.subsample_seed = parse_uint(value, key);
    } else if (key == "threads") {
      c.threads = static_cast<unsigned>(parse_uint(value, key));
    } else if (key == "record_runtime") {
      c.record_runtime = parse_bool(value, key);
    } else if (key == "l_y") {
      c.l_y = parse_double(value, key);
    } else if (key == "l_s") {
      c.l_s = parse_double(value, key);
    } else {
      throw UsageError("unknown config field: " + key);
    }
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::map<std::string, std::string> fields;
  try {
    fields = parse_key_value(text);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  for (const auto& [key, value] : fields) apply_config_field(base, key, value);
  return base;
}

std::string format_config(const ExperimentConfig& c) {
  std::string out;
  const auto put = [&out](const char* key, const std::string& value) {
    out += fmt::format("{}={}\n", key, value);
  };
  put("dataset", c.dataset);
  put("data_path", c.data_path);
  put("lambda_grid", join_doubles(c.lambda_grid));
  put("seed", std::to_string(c.seed));
  put("train_fraction", format_double(c.split.train_fraction));
  put("split_seed", std::to_string(c.split.seed));
  put("epochs", std::to_string(c.train.epochs));
  put("batch_size", std::to_string(c.train.batch_size));
  put("learning_rate", format_double(c.train.learning_rate));
  put("max_steps", std::to_string(c.train.max_steps));
  put("shuffle", c.train.shuffle ? "true" : "false");
  put("hidden_units", std::to_string(c.hidden_units));
  put("epsilon_fraction", format_double(c.epsilon_fraction));
  put("c_y", format_double(c.c_y));
  put("c_s", format_double(c.c_s));
  put("eta_slack", format_double(c.eta_slack));
  put("risk_form", c.risk_form == RiskForm::kCostSensitive ? "cost_sensitive" : "divergence");
  put("out", c.out);
  put("subsample", std::to_string(c.subsample));
  put("subsample_seed", std::to_string(c.subsample_seed));
  put("threads", std::to_string(c.threads));
  put("record_runtime", c.record_runtime ? "true" : "false");
  if (c.l_y) put("l_y", format_double(*c.l_y));
  if (c.l_s) put("l_s", format_double(*c.l_s));
  return out;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  config.validate();
  PreparedData prepared;
  if (config.dataset == "adult") {
    prepared.raw = data::load_adult(config.data_path);
    prepared.encoded = data::encode(prepared.raw);
  } else if (config.dataset == "propublica") {
    prepared.raw = data::load_propublica(config.data_path);
    prepared.encoded = data::encode(prepared.raw);
  } else {
    prepared.encoded = data::make_synthetic(data::parse_synthetic_manifest(read_file(config.dataset)));
    prepared.raw.schema.dataset = "synthetic";
  }
  if (config.subsample != 0) {
    prepared.encoded = data::subsample(prepared.encoded, config.subsample, config.subsample_seed);
  }
  prepared.split = data::split(prepared.encoded, config.split);
  const Matrix& train = prepared.split.train.features;
  const double mean_norm = train.rowwise().norm().mean();
  prepared.epsilon = config.epsilon_fraction * mean_norm;
  return prepared;
}

std::string split_id(const ExperimentConfig& config) {
  std::string id = fmt::format("test:fraction={}:seed={}", format_double(config.split.train_fraction),
                               config.split.seed);
  if (config.subsample != 0) {
    id += fmt::format(":subsample={}:subsample_seed={}", config.subsample, config.subsample_seed);
  }
  return id;
}

const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> header = {
      "lambda", "sp_via_ber_rule", "di_via_di_rule", "large_recon_rate", "avg_recon_error",
      "risk_y", "cost_of_mistrust", "sp_bound_ber", "sp_bound_entropy", "di_bound",
      "runtime_seconds", "seed", "status"};
  return header;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out;
  const auto& header = sweep_header();
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const SweepRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", format_double(r.lambda),
                       format_double(r.sp_via_ber_rule), format_double(r.di_via_di_rule),
                       format_double(r.large_recon_rate), format_double(r.avg_recon_error),
                       format_double(r.risk_y), format_double(r.cost_of_mistrust),
                       format_double(r.sp_bound_ber), format_double(r.sp_bound_entropy),
                       format_double(r.di_bound), format_double(r.runtime_seconds), r.seed,
                       sanitize_reason(r.status));
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  const data::CsvTable table = data::parse_csv(text, true);
  if (table.header != sweep_header()) throw Error("sweep table header mismatch");
  if (!table.rejects.empty()) throw Error("malformed sweep table");
  std::vector<SweepRow> rows;
  for (const auto& f : table.rows) {
    SweepRow r;
    std::size_t k = 0;
    for (double* field : {&r.lambda, &r.sp_via_ber_rule, &r.di_via_di_rule, &r.large_recon_rate,
                          &r.avg_recon_error, &r.risk_y, &r.cost_of_mistrust, &r.sp_bound_ber,
                          &r.sp_bound_entropy, &r.di_bound, &r.runtime_seconds}) {
      *field = parse_double(f[k], sweep_header()[k]);
      ++k;
    }
    r.seed = parse_uint(f[k], "seed");
    r.status = f[k + 1];
    rows.push_back(std::move(r));
  }
  return rows;
}

Baseline train_baseline(const ExperimentConfig& config, const PreparedData& data) {
  const data::Dataset& train = data.split.train;
  if (!train.y) throw Error("dataset has no target labels");
  const DecisionModel model = train_decision_model(
      train.features, *train.y, train.s, CostParams{config.c_y, config.c_s, 0.0},
      seeded(config.train, derive_seed(config.seed, 40)), InputSpace::kOriginal, config.hidden_units);
  Baseline baseline;
  baseline.py_test = predict_probabilities(model.y_estimator, data.split.test.features);
  baseline.ps_test = predict_probabilities(model.s_estimator, data.split.test.features);
  baseline.y_estimator = model.y_estimator;
  baseline.s_estimator = model.s_estimator;
  return baseline;
}

std::uint64_t lambda_seed(const ExperimentConfig& config, std::size_t index) {
  return config.seed + index;
}

LambdaOutcome evaluate_representation(const ExperimentConfig& config, const PreparedData& data,
                                      const Baseline& baseline, const RepresentationModel& model,
                                      std::uint64_t run_seed) {
  const data::Dataset& train = data.split.train;
  const data::Dataset& test = data.split.test;
  if (!train.y || !test.y) throw Error("dataset has no target labels");
  const double lambda = model.lambda;
  const Matrix cleaned_train = apply_representation(model, train.features);
  const Matrix cleaned_test = apply_representation(model, test.features);

  // Certificate-time auditor: a fresh estimator of p(S=1 | X_f).
  const nn::Mlp auditor = train_sensitive_estimator(
      cleaned_train, train.s, seeded(config.train, derive_seed(run_seed, 20)), config.hidden_units);
  const std::vector<double> ps_hat = predict_probabilities(auditor, cleaned_test);

  const Provenance provenance{dataset_name(config), split_id(config), run_seed, lambda};
  SensitiveEvidence sensitive{provenance, ps_hat, {}, config.eta_slack};
  const ReconstructionStats stats =
      reconstruction_stats(test.features, cleaned_test, euclidean_distance, data.epsilon);
  std::optional<MistrustEvidence> mistrust;
  if (config.l_y) mistrust = MistrustEvidence{provenance, {*config.l_y, *config.l_s}};
  const CertificateReport report =
      assemble_report(sensitive, ReconstructionEvidence{provenance, stats, data.epsilon}, mistrust);

  const double p_s1 = std::accumulate(ps_hat.begin(), ps_hat.end(), 0.0) / static_cast<double>(ps_hat.size());
  const DiscreteJoint test_joint = DiscreteJoint::from_rows(test.s, *test.y);
  const std::vector<double> ber_rule = probabilities_to_rule(ps_hat, p_s1);
  const std::vector<double> di_rule = probabilities_to_rule(ps_hat, report.eta_f);

  LambdaOutcome outcome;
  SweepRow& row = outcome.row;
  row.lambda = lambda;
  row.seed = run_seed;
  row.sp_via_ber_rule = statistical_parity(ber_rule, test_joint).value;
  row.di_via_di_rule = disparate_impact(di_rule, test_joint).value;
  row.large_recon_rate = stats.large_rate;
  row.avg_recon_error = stats.average_error;
  row.sp_bound_ber = report.sp_bound_ber;
  row.sp_bound_entropy = report.sp_bound_entropy;
  row.di_bound = report.di_bound;

  // The data user's estimators on cleaned data, same settings as the baseline.
  const DecisionModel user = train_decision_model(
      cleaned_train, *train.y, train.s, CostParams{config.c_y, config.c_s, lambda},
      seeded(config.train, derive_seed(run_seed, 30)), InputSpace::kCleaned, config.hidden_units);
  const std::vector<double> py_f = predict_probabilities(user.y_estimator, cleaned_test);
  const std::vector<double> ps_f = predict_probabilities(user.s_estimator, cleaned_test);

  const Decisions target_decisions = decide_from_probabilities(py_f, ps_f, {config.c_y, config.c_s, 0.0});
  if (config.risk_form == RiskForm::kCostSensitive) {
    row.risk_y = empirical_cost_sensitive_risk(target_decisions, *test.y, config.c_y);
  } else {
    const std::vector<double> rule(target_decisions.begin(), target_decisions.end());
    row.risk_y = divergence_risk(rule, test_joint, absolute_difference);
  }

  const CostParams combined{config.c_y, config.c_s, lambda};
  const Decisions cleaned_decisions = decide_from_probabilities(py_f, ps_f, combined);
  const Decisions original_decisions =
      decide_from_probabilities(baseline.py_test, baseline.ps_test, combined);
  row.cost_of_mistrust =
      empirical_cost_of_mistrust(cleaned_decisions, original_decisions, *test.y, test.s, combined);
  outcome.report = report;
  return outcome;
}

LambdaOutcome run_lambda(const ExperimentConfig& config, const PreparedData& data,
                         const Baseline& baseline, std::size_t index) {
  const double lambda = config.lambda_grid.at(index);
  const std::uint64_t seed = lambda_seed(config, index);
  const auto start = std::chrono::steady_clock::now();
  LambdaOutcome outcome;
  try {
    RepresentationResult trained = train_fair_representation(
        data.split.train.features, data.split.train.s, lambda, seeded(config.train, seed),
        config.hidden_units);
    trained.model.scaler = data.split.train.scaler;
    trained.model.schema_hash = data.split.train.schema_hash;
    outcome = evaluate_representation(config, data, baseline, trained.model, seed);
    outcome.trace = std::move(trained.trace);
  } catch (const std::exception& e) {
    outcome = LambdaOutcome{};
    outcome.row = failed_row(lambda, seed, e.what());
  }
  if (config.record_runtime) {
    outcome.row.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return outcome;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  const PreparedData data = prepare_data(config);
  const Baseline baseline = train_baseline(config, data);
  const std::size_t n = config.lambda_grid.size();
  std::vector<LambdaOutcome> outcomes(n);
  std::vector<double> wall(n, 0.0);

  const auto work = [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    outcomes[i] = run_lambda(config, data, baseline, i);
    wall[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const unsigned workers = std::min<unsigned>(config.threads, static_cast<unsigned>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    // Each job owns its output slot; the table is assembled after join.
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) work(i);
      });
    }
  }

  SweepResult result;
  for (std::size_t i = 0; i < n; ++i) {
    result.rows.push_back(outcomes[i].row);
    result.reports.push_back(outcomes[i].report);
  }
  result.wall_seconds = std::move(wall);
  return result;
}

std::string report_basename(std::size_t index, double lambda) {
  return fmt::format("lambda_{:02}_{}", index, format_double(lambda));
}

const std::vector<std::string>& plot_measures() {
  static const std::vector<std::string> measures = {
      "sp_via_ber_rule", "di_via_di_rule", "large_recon_rate", "avg_recon_error",
      "risk_y", "cost_of_mistrust", "sp_bound_ber"};
  return measures;
}

std::map<std::string, std::string> emit_plot_data(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw Error("empty sweep table");
  std::vector<const SweepRow*> sorted;
  for (const SweepRow& r : rows) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SweepRow* a, const SweepRow* b) { return a->lambda < b->lambda; });
  const auto value = [](const SweepRow& r, const std::string& measure) {
    if (measure == "sp_via_ber_rule") return r.sp_via_ber_rule;
    if (measure == "di_via_di_rule") return r.di_via_di_rule;
    if (measure == "large_recon_rate") return r.large_recon_rate;
    if (measure == "avg_recon_error") return r.avg_recon_error;
    if (measure == "risk_y") return r.risk_y;
    if (measure == "cost_of_mistrust") return r.cost_of_mistrust;
    return r.sp_bound_ber;
  };
  std::map<std::string, std::string> files;
  for (const std::string& measure : plot_measures()) {
    std::string text = "lambda\t" + measure + "\n";
    for (const SweepRow* r : sorted) {
      text += format_double(r->lambda) + "\t" + format_double(value(*r, measure)) + "\n";
    }
    files[measure + ".tsv"] = std::move(text);
  }
  return files;
}

void write_sweep_outputs(const std::string& dir, const ExperimentConfig& config,
                         const SweepResult& result) {
  const std::filesystem::path root(dir);
  write_file_atomic((root / "config.cfg").string(), format_config(config));
  write_file_atomic((root / "sweep.csv").string(), format_sweep_csv(result.rows));
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const std::string base = report_basename(i, result.rows[i].lambda);
    const std::filesystem::path reports = root / "reports";
    if (result.reports[i]) {
      write_file_atomic((reports / (base + ".txt")).string(), to_key_value(*result.reports[i]));
      write_file_atomic((reports / (base + ".json")).string(), to_json(*result.reports[i]));
    } else {
      write_file_atomic((reports / (base + ".failed")).string(), result.rows[i].status + "\n");
    }
  }
  for (const auto& [name, text] : emit_plot_data(result.rows)) {
    write_file_atomic((root / "plot" / name).string(), text);
  }
  if (config.record_runtime) {
    std::string timing = "lambda,wall_seconds\n";
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      timing += fmt::format("{},{}\n", format_double(result.rows[i].lambda),
                            format_double(result.wall_seconds[i]));
    }
    write_file_atomic((root / "timing.csv").string(), timing);
  }
}

std::vector<std::string> check_consistency(const std::string& dir, const ExperimentConfig& config) {
  std::vector<std::string> problems;
  const std::filesystem::path root(dir);
  const std::vector<SweepRow> rows = parse_sweep_csv(read_file((root / "sweep.csv").string()));
  if (rows.size() != config.lambda_grid.size()) {
    problems.push_back(fmt::format("sweep has {} rows, grid has {}", rows.size(), config.lambda_grid.size()));
    return problems;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& row = rows[i];
    if (row.lambda != config.lambda_grid[i]) problems.push_back(fmt::format("row {}: lambda mismatch", i));
    if (row.seed != lambda_seed(config, i)) problems.push_back(fmt::format("row {}: seed mismatch", i));
    if (row.status != "ok") continue;
    const auto path = root / "reports" / (report_basename(i, row.lambda) + ".txt");
    if (!std::filesystem::exists(path)) {
      problems.push_back(fmt::format("row {}: report missing", i));
      continue;
    }
    const CertificateReport report = report_from_key_value(read_file(path.string()));
    const Provenance& p = report.provenance;
    if (p.seed != row.seed || p.lambda != row.lambda || p.split != split_id(config) ||
        p.dataset != dataset_name(config)) {
      problems.push_back(fmt::format("row {}: report provenance differs from config", i));
    }
    if (report.sp_bound_ber != row.sp_bound_ber || report.sp_bound_entropy != row.sp_bound_entropy ||
        report.di_bound != row.di_bound) {
      problems.push_back(fmt::format("row {}: report bounds differ from sweep row", i));
    }
    if (report.sp_bound_ber > report.sp_bound_entropy + 1e-9) {
      problems.push_back(fmt::format("row {}: BER bound exceeds entropy bound", i));
    }
  }
  return problems;
}

}  // namespace fairrep
