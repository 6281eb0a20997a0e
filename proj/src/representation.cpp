#include "fairrep/representation.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "fairrep/error.hpp"
#include "fairrep/kv.hpp"
#include "fairrep/random.hpp"

namespace fairrep {
namespace {

void check_labels(const Matrix& features, std::span<const std::uint8_t> labels) {
  if (features.rows() == 0) throw Error("empty training data");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error("label count differs from row count");
  }
  for (std::uint8_t v : labels) {
    if (v > 1) throw Error("labels must be bits");
  }
}

std::string next_token(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw Error(fmt::format("representation file truncated reading {}", what));
  return token;
}

void expect_token(std::istream& in, const char* expected) {
  const std::string token = next_token(in, expected);
  if (token != expected) {
    throw Error(fmt::format("representation file: expected '{}', found '{}'", expected, token));
  }
}

void write_vector(std::ostream& out, const char* key, const std::vector<double>& values) {
  out << key;
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

std::vector<double> read_vector(std::istream& in, const char* key, std::size_t n) {
  expect_token(in, key);
  std::vector<double> values(n);
  for (double& v : values) v = parse_double(next_token(in, key), key);
  return values;
}

}  // namespace

Matrix label_column(std::span<const std::uint8_t> labels) {
  Matrix out(static_cast<Eigen::Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) out(static_cast<Eigen::Index>(i), 0) = labels[i];
  return out;
}

RepresentationResult train_fair_representation(const Matrix& features,
                                               std::span<const std::uint8_t> s_labels,
                                               double lambda, const nn::TrainConfig& config,
                                               int hidden_units) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lambda must be non-negative");
  config.validate();
  check_labels(features, s_labels);
  const int dim = static_cast<int>(features.cols());

  RepresentationResult result;
  RepresentationModel& model = result.model;
  RepresentationTrace& trace = result.trace;
  model.lambda = lambda;
  model.train_seed = config.seed;
  model.encoder = nn::single_hidden_layer(dim, hidden_units, dim, nn::Activation::kLinear,
                                          derive_seed(config.seed, 0));
  model.adversary = nn::single_hidden_layer(dim, hidden_units, 1, nn::Activation::kSigmoid,
                                            derive_seed(config.seed, 1));

  nn::TrainConfig schedule_config = config;
  schedule_config.seed = derive_seed(config.seed, 2);
  nn::BatchSchedule schedule(static_cast<std::size_t>(features.rows()), schedule_config);
  trace.full_batch_fallback = schedule.full_batch_fallback();
  nn::AdamState encoder_adam = nn::AdamState::for_model(model.encoder, config.learning_rate);
  nn::AdamState adversary_adam = nn::AdamState::for_model(model.adversary, config.learning_rate);
  const Matrix targets = label_column(s_labels);
  const std::size_t batch = schedule.batch_size();
  std::uint64_t steps = 0;

  const auto diverged = [&trace](const char* which, double value) {
    std::string tail;
    const std::size_t n = trace.reconstruction_loss.size();
    for (std::size_t i = n > 5 ? n - 5 : 0; i < n; ++i) {
      tail += fmt::format(" {}/{}", format_double(trace.reconstruction_loss[i]),
                          format_double(trace.adversary_loss[i]));
    }
    return Error(fmt::format("training diverged: {} loss {} (recent epoch reconstruction/adversary:{})",
                             which, value, tail.empty() ? " none" : tail));
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.max_steps != 0 && steps >= config.max_steps) break;
    const auto& order = schedule.next_epoch();
    double recon_total = 0.0;
    double adversary_total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      if (config.max_steps != 0 && steps >= config.max_steps) break;
      const std::size_t count = std::min(batch, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      const Matrix x = nn::gather_rows(features, idx);
      const Matrix t = nn::gather_rows(targets, idx);

      // Adversary step, encoder frozen.
      const Matrix cleaned = nn::forward(model.encoder, x);
      const nn::LossAndGradients adversary =
          nn::loss_and_gradients(model.adversary, cleaned, t, nn::Loss::kCrossEntropy);
      if (!std::isfinite(adversary.loss)) throw diverged("adversary", adversary.loss);
      nn::adam_step(adversary_adam, model.adversary, adversary.gradients);
      trace.step_order.push_back(StepKind::kAdversary);
      ++trace.adversary_steps;

      // Encoder step, adversary frozen: minimise reconstruction - lambda CE.
      nn::ForwardCache cache;
      const Matrix& encoded = nn::forward(model.encoder, x, cache);
      const nn::LossValue recon = nn::evaluate_loss(encoded, x, nn::Loss::kSquaredError, 1.0);
      const nn::LossAndGradients adversarial =
          nn::loss_and_gradients(model.adversary, encoded, t, nn::Loss::kCrossEntropy, -lambda);
      if (!std::isfinite(recon.loss) || !std::isfinite(adversarial.loss)) {
        throw diverged("encoder", recon.loss + adversarial.loss);
      }
      trace.max_adversary_grad_sq_norm =
          std::max(trace.max_adversary_grad_sq_norm, adversarial.input_grad.squaredNorm());
      const Matrix output_grad = recon.output_grad + adversarial.input_grad;
      nn::adam_step(encoder_adam, model.encoder, nn::backward(model.encoder, cache, output_grad));
      trace.step_order.push_back(StepKind::kEncoder);
      ++trace.encoder_steps;

      ++steps;
      recon_total += recon.loss * static_cast<double>(count);
      adversary_total += adversary.loss * static_cast<double>(count);
      seen += count;
    }
    trace.reconstruction_loss.push_back(recon_total / static_cast<double>(seen));
    trace.adversary_loss.push_back(adversary_total / static_cast<double>(seen));
  }
  return result;
}

Matrix apply_representation(const RepresentationModel& model, const Matrix& features) {
  return nn::forward(model.encoder, features);
}

nn::Mlp train_sensitive_estimator(const Matrix& cleaned, std::span<const std::uint8_t> s_labels,
                                  const nn::TrainConfig& config, int hidden_units) {
  check_labels(cleaned, s_labels);
  nn::Mlp model = nn::single_hidden_layer(static_cast<int>(cleaned.cols()), hidden_units, 1,
                                          nn::Activation::kSigmoid, derive_seed(config.seed, 0));
  nn::TrainConfig train_config = config;
  train_config.seed = derive_seed(config.seed, 1);
  nn::train(model, cleaned, label_column(s_labels), nn::Loss::kCrossEntropy, train_config);
  return model;
}

std::vector<double> predict_probabilities(const nn::Mlp& model, const Matrix& features) {
  if (model.output_dim() != 1) throw Error("probability estimator must have one output");
  const Matrix out = nn::forward(model, features);
  return std::vector<double>(out.data(), out.data() + out.rows());
}

void save_representation(std::ostream& out, const RepresentationModel& model) {
  out << "fairrep-representation 1\n";
  out << "lambda " << format_double(model.lambda) << '\n';
  out << "train_seed " << model.train_seed << '\n';
  out << "schema_hash " << model.schema_hash << '\n';
  out << "scaler_columns " << model.scaler.mean.size() << '\n';
  if (!model.scaler.empty()) {
    write_vector(out, "median", model.scaler.median);
    write_vector(out, "mean", model.scaler.mean);
    write_vector(out, "stddev", model.scaler.stddev);
  }
  out << "encoder\n";
  nn::save_mlp(out, model.encoder);
  out << "adversary\n";
  nn::save_mlp(out, model.adversary);
  if (!out) throw Error("failed writing representation");
}

RepresentationModel load_representation(std::istream& in) {
  expect_token(in, "fairrep-representation");
  const std::string version = next_token(in, "version");
  if (version != "1") throw Error("unsupported representation format version " + version);
  RepresentationModel model;
  expect_token(in, "lambda");
  model.lambda = parse_double(next_token(in, "lambda"), "lambda");
  expect_token(in, "train_seed");
  model.train_seed = parse_uint(next_token(in, "train_seed"), "train_seed");
  expect_token(in, "schema_hash");
  model.schema_hash = parse_uint(next_token(in, "schema_hash"), "schema_hash");
  expect_token(in, "scaler_columns");
  const std::uint64_t columns = parse_uint(next_token(in, "scaler_columns"), "scaler_columns");
  if (columns > 0) {
    model.scaler.median = read_vector(in, "median", columns);
    model.scaler.mean = read_vector(in, "mean", columns);
    model.scaler.stddev = read_vector(in, "stddev", columns);
  }
  expect_token(in, "encoder");
  model.encoder = nn::load_mlp(in);
  expect_token(in, "adversary");
  model.adversary = nn::load_mlp(in);
  if (model.encoder.input_dim() != model.encoder.output_dim() ||
      model.adversary.input_dim() != model.encoder.output_dim() ||
      model.adversary.output_dim() != 1) {
    throw Error("representation file: inconsistent encoder/adversary dims");
  }
  return model;
}

}  // namespace fairrep
