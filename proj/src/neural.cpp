#include "fairrep/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "fairrep/error.hpp"
#include "fairrep/kv.hpp"

namespace fairrep::nn {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

Matrix apply_activation(const Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::kSoftplus:
      // max(z, 0) + log1p(exp(-|z|)) is overflow-free.
      return (z.array().max(0.0) + (-z.array().abs()).exp().log1p()).matrix();
    case Activation::kSigmoid:
      return (1.0 / (1.0 + (-z.array()).exp()))
          .max(kProbabilityClamp)
          .min(1.0 - kProbabilityClamp)
          .matrix();
    case Activation::kLinear:
      return z;
  }
  return z;
}

// dL/dz given dL/da and the pre-activation z.
Matrix activation_backward(const Matrix& z, const Matrix& grad, Activation activation) {
  switch (activation) {
    case Activation::kSoftplus:
      return (grad.array() / (1.0 + (-z.array()).exp())).matrix();
    case Activation::kSigmoid: {
      const auto s = 1.0 / (1.0 + (-z.array()).exp());
      const auto inside = (s > kProbabilityClamp && s < 1.0 - kProbabilityClamp).cast<double>();
      return (grad.array() * s * (1.0 - s) * inside).matrix();
    }
    case Activation::kLinear:
      return grad;
  }
  return grad;
}

void check_shapes(const Mlp& model, const Matrix& batch) {
  if (model.layers.empty()) throw Error("model has no layers");
  if (batch.cols() != model.input_dim()) {
    throw Error(fmt::format("dimension mismatch: batch has {} columns, model expects {}",
                            batch.cols(), model.input_dim()));
  }
}

std::string next_token(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw Error(fmt::format("model file truncated reading {}", what));
  return token;
}

void expect_token(std::istream& in, const std::string& expected) {
  const std::string token = next_token(in, expected.c_str());
  if (token != expected) {
    throw Error(fmt::format("model file: expected '{}', found '{}'", expected, token));
  }
}

}  // namespace

const char* activation_name(Activation activation) {
  switch (activation) {
    case Activation::kSoftplus:
      return "softplus";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kLinear:
      return "linear";
  }
  return "linear";
}

Activation parse_activation(const std::string& name) {
  if (name == "softplus") return Activation::kSoftplus;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "linear") return Activation::kLinear;
  throw Error("unknown activation '" + name + "'");
}

std::vector<int> Mlp::dims() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(static_cast<int>(layers.front().weights.rows()));
  for (const Layer& layer : layers) out.push_back(static_cast<int>(layer.weights.cols()));
  return out;
}

int Mlp::input_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weights.rows());
}

int Mlp::output_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weights.cols());
}

std::size_t Mlp::parameter_count() const {
  std::size_t total = 0;
  for (const Layer& layer : layers) {
    total += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return total;
}

Mlp init_mlp(std::span<const int> layer_dims, std::span<const Activation> activations,
             std::uint64_t seed) {
  if (layer_dims.size() < 2) throw Error("an MLP needs at least input and output dims");
  if (activations.size() != layer_dims.size() - 1) {
    throw Error("need exactly one activation per layer");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw Error("layer dims must be positive");
  }
  Mlp model;
  model.seed = seed;
  Rng rng(seed);
  for (std::size_t k = 0; k + 1 < layer_dims.size(); ++k) {
    const int fan_in = layer_dims[k];
    const int fan_out = layer_dims[k + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer;
    layer.weights.resize(fan_in, fan_out);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = rng.uniform(-limit, limit);
    }
    layer.bias = RowVector::Zero(fan_out);
    layer.activation = activations[k];
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Mlp single_hidden_layer(int input_dim, int hidden, int output_dim, Activation output,
                        std::uint64_t seed) {
  const int dims[] = {input_dim, hidden, output_dim};
  const Activation acts[] = {Activation::kSoftplus, output};
  return init_mlp(dims, acts, seed);
}

Matrix forward(const Mlp& model, const Matrix& batch) {
  check_shapes(model, batch);
  Matrix current = batch;
  for (const Layer& layer : model.layers) {
    Matrix z = current * layer.weights;
    z.rowwise() += layer.bias;
    current = apply_activation(z, layer.activation);
  }
  return current;
}

const Matrix& forward(const Mlp& model, const Matrix& batch, ForwardCache& cache) {
  check_shapes(model, batch);
  cache.inputs.resize(model.layers.size());
  cache.activations.resize(model.layers.size());
  const Matrix* current = &batch;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const Layer& layer = model.layers[k];
    cache.inputs[k] = *current;
    cache.activations[k].noalias() = cache.inputs[k] * layer.weights;
    cache.activations[k].rowwise() += layer.bias;
    if (k + 1 < model.layers.size()) {
      cache.output = apply_activation(cache.activations[k], layer.activation);
      current = &cache.output;
    }
  }
  cache.output = apply_activation(cache.activations.back(), model.layers.back().activation);
  return cache.output;
}

Gradients Gradients::zeros_like(const Mlp& model) {
  Gradients g;
  for (const Layer& layer : model.layers) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.bias.push_back(RowVector::Zero(layer.bias.size()));
  }
  return g;
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (const Matrix& w : weights) total += w.squaredNorm();
  for (const RowVector& b : bias) total += b.squaredNorm();
  return total;
}

Gradients backward(const Mlp& model, const ForwardCache& cache, const Matrix& output_grad,
                   Matrix* input_grad) {
  if (cache.inputs.size() != model.layers.size()) throw Error("forward cache does not match model");
  Gradients g = Gradients::zeros_like(model);
  Matrix grad = output_grad;
  for (std::size_t k = model.layers.size(); k-- > 0;) {
    const Layer& layer = model.layers[k];
    const Matrix dz = activation_backward(cache.activations[k], grad, layer.activation);
    g.weights[k].noalias() = cache.inputs[k].transpose() * dz;
    g.bias[k] = dz.colwise().sum();
    if (k > 0 || input_grad != nullptr) grad.noalias() = dz * layer.weights.transpose();
  }
  if (input_grad != nullptr) *input_grad = std::move(grad);
  return g;
}

LossValue evaluate_loss(const Matrix& output, const Matrix& targets, Loss loss, double scale) {
  if (output.rows() != targets.rows() || output.cols() != targets.cols()) {
    throw Error("targets do not match the output shape");
  }
  if (output.rows() == 0) throw Error("empty batch");
  const auto rows = static_cast<double>(output.rows());
  LossValue out;
  if (loss == Loss::kSquaredError) {
    const Matrix residual = output - targets;
    out.loss = scale * residual.squaredNorm() / rows;
    out.output_grad = (2.0 * scale / rows) * residual;
    return out;
  }
  if ((output.array() <= 0.0).any() || (output.array() >= 1.0).any()) {
    throw Error("cross-entropy requires outputs strictly inside (0,1)");
  }
  const auto p = output.array();
  const auto t = targets.array();
  out.loss = -scale * (t * p.log() + (1.0 - t) * (1.0 - p).log()).sum() / (rows * kLn2);
  out.output_grad = (-scale / (rows * kLn2) * (t / p - (1.0 - t) / (1.0 - p))).matrix();
  return out;
}

LossAndGradients loss_and_gradients(const Mlp& model, const Matrix& batch, const Matrix& targets,
                                    Loss loss, double scale) {
  if (loss == Loss::kCrossEntropy &&
      (model.layers.empty() || model.layers.back().activation != Activation::kSigmoid)) {
    throw Error("cross-entropy requires a sigmoid output layer");
  }
  ForwardCache cache;
  const Matrix& output = forward(model, batch, cache);
  LossValue value = evaluate_loss(output, targets, loss, scale);
  LossAndGradients out;
  out.loss = value.loss;
  out.gradients = backward(model, cache, value.output_grad, &out.input_grad);
  return out;
}

AdamState AdamState::for_model(const Mlp& model, double learning_rate) {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  AdamState state;
  state.first_moment = Gradients::zeros_like(model);
  state.second_moment = Gradients::zeros_like(model);
  state.learning_rate = learning_rate;
  return state;
}

void adam_step(AdamState& state, Mlp& model, const Gradients& gradients) {
  const std::size_t layers = model.layers.size();
  if (gradients.weights.size() != layers || gradients.bias.size() != layers ||
      state.first_moment.weights.size() != layers) {
    throw Error("gradient shape mismatch");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2;
  const auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (g.rows() != param.rows() || g.cols() != param.cols()) throw Error("gradient shape mismatch");
    m = b1 * m + (1.0 - b1) * g;
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    // An overflowed second moment would silently freeze the parameter.
    if (!m.allFinite() || !v.allFinite()) throw Error("training diverged: non-finite optimizer moment");
    param.array() -= state.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + state.eps_hat);
  };
  for (std::size_t k = 0; k < layers; ++k) {
    update(model.layers[k].weights, state.first_moment.weights[k], state.second_moment.weights[k],
           gradients.weights[k]);
    update(model.layers[k].bias, state.first_moment.bias[k], state.second_moment.bias[k],
           gradients.bias[k]);
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (batch_size <= 0) throw Error("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
}

BatchSchedule::BatchSchedule(std::size_t rows, const TrainConfig& config)
    : rows_(rows),
      batch_(static_cast<std::size_t>(config.batch_size)),
      shuffle_(config.shuffle),
      order_(rows),
      rng_(config.seed) {
  if (rows == 0) throw Error("empty training data");
  if (batch_ > rows_) {
    batch_ = rows_;
    full_batch_ = true;
  }
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::size_t BatchSchedule::batches_per_epoch() const { return (rows_ + batch_ - 1) / batch_; }

const std::vector<std::size_t>& BatchSchedule::next_epoch() {
  if (shuffle_) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(std::span<std::size_t>(order_));
  }
  return order_;
}

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

TrainResult train(Mlp& model, const Matrix& data, const Matrix& targets, Loss loss,
                  const TrainConfig& config) {
  config.validate();
  if (data.rows() == 0) throw Error("empty training data");
  if (targets.rows() != data.rows()) throw Error("targets do not match data rows");
  BatchSchedule schedule(static_cast<std::size_t>(data.rows()), config);
  AdamState adam = AdamState::for_model(model, config.learning_rate);
  TrainResult result;
  result.full_batch_fallback = schedule.full_batch_fallback();
  const std::size_t batch = schedule.batch_size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.max_steps != 0 && result.steps >= config.max_steps) break;
    const auto& order = schedule.next_epoch();
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      if (config.max_steps != 0 && result.steps >= config.max_steps) break;
      const std::size_t count = std::min(batch, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      const Matrix x = gather_rows(data, idx);
      const Matrix t = gather_rows(targets, idx);
      LossAndGradients lg = loss_and_gradients(model, x, t, loss);
      if (!std::isfinite(lg.loss)) {
        throw Error(fmt::format("training diverged at step {}", result.steps));
      }
      adam_step(adam, model, lg.gradients);
      ++result.steps;
      total += lg.loss * static_cast<double>(count);
      seen += count;
    }
    result.loss_trace.push_back(total / static_cast<double>(seen));
  }
  return result;
}

GradientCheck gradient_check(const Mlp& model, const Matrix& batch, const Matrix& targets,
                             Loss loss, double h, double floor) {
  const LossAndGradients analytic = loss_and_gradients(model, batch, targets, loss);
  Mlp probe = model;
  GradientCheck result;
  const auto loss_at = [&]() { return evaluate_loss(forward(probe, batch), targets, loss, 1.0).loss; };
  const auto check = [&](double& param, double analytic_value) {
    const double saved = param;
    param = saved + h;
    const double plus = loss_at();
    param = saved - h;
    const double minus = loss_at();
    param = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double denom = std::max({std::abs(analytic_value), std::abs(numeric), floor});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(analytic_value - numeric) / denom);
    ++result.parameters_checked;
  };
  for (std::size_t k = 0; k < probe.layers.size(); ++k) {
    Layer& layer = probe.layers[k];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      check(layer.weights.data()[i], analytic.gradients.weights[k].data()[i]);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      check(layer.bias.data()[i], analytic.gradients.bias[k].data()[i]);
    }
  }
  return result;
}

void save_mlp(std::ostream& out, const Mlp& model) {
  out << "fairrep-mlp 1\n";
  out << "seed " << model.seed << "\n";
  out << "layers " << model.layers.size() << "\n";
  for (const Layer& layer : model.layers) {
    out << "layer " << layer.weights.rows() << ' ' << layer.weights.cols() << ' '
        << activation_name(layer.activation) << "\n";
    out << "w";
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      out << ' ' << format_double(layer.weights.data()[i]);
    }
    out << "\nb";
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) out << ' ' << format_double(layer.bias[i]);
    out << "\n";
  }
}

Mlp load_mlp(std::istream& in) {
  expect_token(in, "fairrep-mlp");
  const std::string version = next_token(in, "version");
  if (version != "1") throw Error("unsupported model format version " + version);
  Mlp model;
  expect_token(in, "seed");
  model.seed = parse_uint(next_token(in, "seed"), "seed");
  expect_token(in, "layers");
  const std::int64_t count = parse_int(next_token(in, "layer count"), "layers");
  if (count <= 0) throw Error("model file: layer count must be positive");
  for (std::int64_t k = 0; k < count; ++k) {
    expect_token(in, "layer");
    const std::int64_t rows = parse_int(next_token(in, "fan_in"), "fan_in");
    const std::int64_t cols = parse_int(next_token(in, "fan_out"), "fan_out");
    if (rows <= 0 || cols <= 0) throw Error("model file: layer dims must be positive");
    Layer layer;
    layer.activation = parse_activation(next_token(in, "activation"));
    if (!model.layers.empty() && model.layers.back().weights.cols() != rows) {
      throw Error("model file: inconsistent layer dims");
    }
    layer.weights.resize(rows, cols);
    layer.bias.resize(cols);
    expect_token(in, "w");
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = parse_double(next_token(in, "weight"), "weight");
    }
    expect_token(in, "b");
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      layer.bias[i] = parse_double(next_token(in, "bias"), "bias");
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

}  // namespace fairrep::nn
