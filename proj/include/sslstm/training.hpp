#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sslstm/example.hpp"
#include "sslstm/neural.hpp"

namespace sslstm {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // mean over examples, measured before each batch update
  double train_accuracy = 0;
  double validation_macro_f1 = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 when nothing was trained

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainConfig {
  double learning_rate = 0.005;
  std::size_t token_budget = 4000;
  std::size_t max_epochs = 100;
  /// Epochs tolerated without a validation macro-F1 improvement; the next
  /// one stops training.
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  Channels channels = Channels::both;
  /// Loss weight per class; unset means unweighted.
  std::optional<std::array<double, kNumClasses>> class_weights;
  /// Worker threads computing per-example gradients of a batch. Chunks are
  /// reduced in batch order, so a given value is reproducible; it matches
  /// serial training only up to floating-point reassociation.
  std::size_t parallel = 1;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// -log p[target].
double cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& probabilities, Label target);

/// Seeded shuffle, then greedy filling up to `token_budget` tokens per batch.
/// An item longer than the budget sits alone. Returns indices into `lengths`.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> lengths,
                                                   std::size_t token_budget, std::uint64_t seed);
/// Batches over examples, counting tokens after truncation to `max_length`.
std::vector<std::vector<std::size_t>> make_batches(std::span<const Example> examples,
                                                   std::size_t token_budget, std::uint64_t seed,
                                                   std::size_t max_length);

/// w -= learning_rate * g for every trained tensor.
void sgd_step(Model& model, const Gradients<double>& gradients, double learning_rate);

struct Split {
  std::vector<Example> train;
  std::vector<Example> validation;
};

/// Stratified split: per label floor(ratio * n) examples go to train. Both
/// parts keep the original relative order.
Split split_dataset(std::span<const Example> dataset, double ratio, std::uint64_t seed);
/// Index form of split_dataset: (train indices, validation indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::span<const Label> labels, double ratio, std::uint64_t seed);

/// Mean gradient over `batch` (indices into `examples`) and the summed
/// loss / correct count of the forward passes.
struct BatchGradient {
  Gradients<double> gradients;
  double loss_sum = 0;
  std::size_t correct = 0;
};
BatchGradient batch_gradient(const Model& model, std::span<const Example> examples,
                             std::span<const std::size_t> batch, const TrainConfig& config);

/// SGD with token-budget batches and early stopping on validation macro-F1.
/// `model` ends holding the parameters of the best validation epoch.
TrainHistory train(Model& model, std::span<const Example> train_set,
                   std::span<const Example> validation_set, const TrainConfig& config);

std::vector<Label> predict_all(const Model& model, std::span<const Example> examples);

struct GradientCheckResult {
  double max_relative_error = 0;
  std::size_t checked = 0;
  std::string worst_tensor;
};

/// Compares ss_backward with central finite differences of the loss. Above
/// 10,000 parameters a seeded random subsample of that size is checked.
/// Relative error uses max(|a|, |b|, 1e-8) as denominator.
GradientCheckResult gradient_check(const Model& model, const Example& example, double epsilon,
                                   std::uint64_t seed = 0);

}  // namespace sslstm
