#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace trajcurate::nn {

/// Dense layer. weights is (in x out) row-major, so y = x^T W + b.
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double w(std::size_t i, std::size_t j) const { return weights[i * out + j]; }

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// ReLU multilayer perceptron with a softmax head.
struct MlpClassifier {
  std::vector<std::size_t> layer_sizes;
  std::vector<Layer> layers;
  std::uint64_t seed = 0;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_parameters() const;

  friend bool operator==(const MlpClassifier&, const MlpClassifier&) = default;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double l2 = 0.0;
};

/// Row-major design matrix plus integer class labels.
struct LabeledSet {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  void push(std::span<const double> features, int label);
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<Layer> grads;  // same shapes as the model's layers
};

struct TrainResult {
  MlpClassifier model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

MlpClassifier init(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

std::vector<double> logits(const MlpClassifier& model, std::span<const double> x);

/// Class probabilities; sums to one.
std::vector<double> forward(const MlpClassifier& model, std::span<const double> x);

/// Mean cross-entropy over `rows` of `data` plus 0.5 * l2 * ||W||^2 (biases
/// are not penalized), with analytic gradients.
LossAndGrad loss_and_grad(const MlpClassifier& model, const LabeledSet& data,
                          std::span<const std::size_t> rows, double l2 = 0.0);
LossAndGrad loss_and_grad(const MlpClassifier& model, const LabeledSet& data,
                          double l2 = 0.0);

/// Minibatch SGD. Single threaded and seed-deterministic.
TrainResult train(const MlpClassifier& model, const LabeledSet& data,
                  const TrainConfig& cfg);

std::size_t argmax(std::span<const double> v);

/// Rounds every parameter to float precision, i.e. what a checkpoint stores.
void quantize_to_f32(MlpClassifier& model);

/// Flat parameter access in checkpoint order (per layer: weights then bias).
std::vector<double> flatten(const MlpClassifier& model);
void unflatten(MlpClassifier& model, std::span<const double> params);

void save_checkpoint(const MlpClassifier& model, const std::filesystem::path& path);
MlpClassifier load_checkpoint(const std::filesystem::path& path);

}  // namespace trajcurate::nn
