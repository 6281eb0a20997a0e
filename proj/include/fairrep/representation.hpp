#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fairrep/data.hpp"
#include "fairrep/matrix.hpp"
#include "fairrep/neural.hpp"

namespace fairrep {

inline constexpr int kHiddenUnits = 100;

/// Encoder f (input -> hidden softplus -> input, linear) and the adversary
/// it was trained against (input -> hidden softplus -> 1, sigmoid).
struct RepresentationModel {
  nn::Mlp encoder;
  nn::Mlp adversary;
  double lambda = 0.0;
  std::uint64_t train_seed = 0;
  data::Scaler scaler;
  std::uint64_t schema_hash = 0;

  int dim() const { return encoder.input_dim(); }
};

enum class StepKind : std::uint8_t { kAdversary = 0, kEncoder = 1 };

struct RepresentationTrace {
  std::vector<double> reconstruction_loss;  // per-epoch mean squared norm
  std::vector<double> adversary_loss;       // per-epoch mean cross-entropy, bits
  std::uint64_t adversary_steps = 0;
  std::uint64_t encoder_steps = 0;
  /// Kinds of every update in execution order.
  std::vector<StepKind> step_order;
  /// Largest squared norm of the adversarial gradient fed into the encoder.
  double max_adversary_grad_sq_norm = 0.0;
  bool full_batch_fallback = false;
};

struct RepresentationResult {
  RepresentationModel model;
  RepresentationTrace trace;
};

/// Alternating minibatch training of J(f) = E||x - f(x)||^2 - lambda J'(S_f, S):
/// per batch one adversary Adam step on cross-entropy with the encoder
/// frozen, then one encoder Adam step with the adversary frozen.
RepresentationResult train_fair_representation(const Matrix& features,
                                               std::span<const std::uint8_t> s_labels,
                                               double lambda, const nn::TrainConfig& config,
                                               int hidden_units = kHiddenUnits);

/// X_f = f(x), row by row.
Matrix apply_representation(const RepresentationModel& model, const Matrix& features);

/// Fresh estimator of p(S=1 | X_f = x), trained on cross-entropy.
nn::Mlp train_sensitive_estimator(const Matrix& cleaned, std::span<const std::uint8_t> s_labels,
                                  const nn::TrainConfig& config,
                                  int hidden_units = kHiddenUnits);

/// Column of sigmoid outputs as a vector.
std::vector<double> predict_probabilities(const nn::Mlp& model, const Matrix& features);

/// Labels as an n x 1 target matrix.
Matrix label_column(std::span<const std::uint8_t> labels);

void save_representation(std::ostream& out, const RepresentationModel& model);
RepresentationModel load_representation(std::istream& in);

}  // namespace fairrep
