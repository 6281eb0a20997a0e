#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fairrep/matrix.hpp"
#include "fairrep/random.hpp"

namespace fairrep::nn {

enum class Activation { kSoftplus, kSigmoid, kLinear };

const char* activation_name(Activation activation);
Activation parse_activation(const std::string& name);

/// Sigmoid outputs are clamped to [kProbabilityClamp, 1 - kProbabilityClamp].
inline constexpr double kProbabilityClamp = 1e-12;

struct Layer {
  Matrix weights;  // fan_in x fan_out
  RowVector bias;  // fan_out
  Activation activation = Activation::kLinear;
};

/// Fully-connected network. Layer k maps dims[k] -> dims[k+1].
struct Mlp {
  std::vector<Layer> layers;
  std::uint64_t seed = 0;

  std::vector<int> dims() const;
  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;
};

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// `activations` has one entry per layer (dims.size() - 1).
Mlp init_mlp(std::span<const int> layer_dims, std::span<const Activation> activations,
             std::uint64_t seed);

/// in -> hidden softplus -> out with the given output activation.
Mlp single_hidden_layer(int input_dim, int hidden, int output_dim, Activation output,
                        std::uint64_t seed);

struct ForwardCache {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> activations;  // pre-activation of each layer
  Matrix output;
};

Matrix forward(const Mlp& model, const Matrix& batch);
const Matrix& forward(const Mlp& model, const Matrix& batch, ForwardCache& cache);

/// Per-layer gradients shaped like the model parameters.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<RowVector> bias;

  static Gradients zeros_like(const Mlp& model);
  double squared_norm() const;
};

/// Reverse-mode pass given dL/d(output). Writes dL/d(input) when requested.
Gradients backward(const Mlp& model, const ForwardCache& cache, const Matrix& output_grad,
                   Matrix* input_grad = nullptr);

enum class Loss { kSquaredError, kCrossEntropy };

struct LossValue {
  double loss = 0.0;
  Matrix output_grad;  // dL/d(output)
};

/// squared_error: mean over rows of the squared Euclidean norm of the
/// residual. cross_entropy: mean binary cross-entropy in bits. Both are
/// multiplied by `scale`.
LossValue evaluate_loss(const Matrix& output, const Matrix& targets, Loss loss, double scale);

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
  Matrix input_grad;
};

/// Throws for cross_entropy unless the output layer is sigmoid.
LossAndGradients loss_and_gradients(const Mlp& model, const Matrix& batch, const Matrix& targets,
                                    Loss loss, double scale = 1.0);

struct AdamState {
  std::uint64_t step_count = 0;
  Gradients first_moment;
  Gradients second_moment;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  static AdamState for_model(const Mlp& model, double learning_rate);
};

/// One bias-corrected Adam update of `model` in place.
void adam_step(AdamState& state, Mlp& model, const Gradients& gradients);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 100;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Caps the total number of minibatch steps; 0 means no cap. Lets callers
  /// read "N iterations" as N steps instead of N epochs.
  std::uint64_t max_steps = 0;

  void validate() const;
};

/// Visits minibatches in the order `train` uses: one seeded permutation per
/// epoch, ceil(n / batch) batches, the last possibly short.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t rows, const TrainConfig& config);
  bool full_batch_fallback() const { return full_batch_; }
  std::size_t batch_size() const { return batch_; }
  std::size_t batches_per_epoch() const;
  /// Row indices for the next epoch.
  const std::vector<std::size_t>& next_epoch();

 private:
  std::size_t rows_;
  std::size_t batch_;
  bool shuffle_;
  bool full_batch_ = false;
  std::vector<std::size_t> order_;
  Rng rng_;
};

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows);

struct TrainResult {
  std::vector<double> loss_trace;  // mean loss per epoch
  std::uint64_t steps = 0;
  bool full_batch_fallback = false;  // batch_size exceeded the row count
};

/// Minibatch Adam training; throws "training diverged" on a non-finite loss.
TrainResult train(Mlp& model, const Matrix& data, const Matrix& targets, Loss loss,
                  const TrainConfig& config);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

/// Compares analytic gradients with central differences of step `h` for
/// every parameter. Relative error is |a - n| / max(|a|, |n|, floor).
GradientCheck gradient_check(const Mlp& model, const Matrix& batch, const Matrix& targets,
                             Loss loss, double h = 1e-5, double floor = 1e-6);

/// Versioned text format; doubles are written in shortest round-trip form.
void save_mlp(std::ostream& out, const Mlp& model);
Mlp load_mlp(std::istream& in);

}  // namespace fairrep::nn
