#ifndef SYNGUIDE_MODEL_HPP
#define SYNGUIDE_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synguide/dataset.hpp"
#include "synguide/matrix.hpp"

namespace synguide {

enum class Activation { kTanh, kRelu };

std::string to_string(Activation a);
Activation parse_activation(const std::string& text);

// Flattened parameter gradient. Layout follows MlpModel::flatten(): for each
// layer, the weight matrix row-major, then the bias.
struct GradientVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

double dot(const GradientVector& a, const GradientVector& b);
double norm(const GradientVector& g);

// Fully connected network. layer_dims = {input, hidden..., feature, classes}.
// Hidden layers apply the activation; the last layer is a linear head. The
// feature representation is the input to the head, i.e. the activation output
// of the penultimate layer (or the raw input when there is no hidden layer).
class MlpModel {
 public:
  MlpModel() = default;
  // Zero-initialized parameters.
  MlpModel(std::vector<std::size_t> layer_dims, Activation activation);

  const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
  Activation activation() const { return activation_; }
  std::size_t layer_count() const { return weights_.size(); }
  std::size_t input_dim() const { return layer_dims_.front(); }
  std::size_t feature_dim() const { return layer_dims_[layer_dims_.size() - 2]; }
  std::size_t num_classes() const { return layer_dims_.back(); }
  std::size_t parameter_count() const;

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  // Weights of layer l are (in x out); forward computes x * W + b.
  const Matrix& weights(std::size_t l) const { return weights_.at(l); }
  const Matrix& bias(std::size_t l) const { return biases_.at(l); }
  // Throw std::logic_error on a frozen model.
  Matrix& mutable_weights(std::size_t l);
  Matrix& mutable_bias(std::size_t l);

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> params);

 private:
  void require_unfrozen() const;

  std::vector<std::size_t> layer_dims_;
  Activation activation_ = Activation::kTanh;
  std::vector<Matrix> weights_;
  std::vector<Matrix> biases_;  // 1 x out
  bool frozen_ = false;
};

enum class InitScheme {
  kUniformFanIn,  // weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  kZerosBias,     // weights as above, biases exactly zero
};

MlpModel init_model(std::vector<std::size_t> layer_dims, Activation activation,
                    std::uint64_t seed, InitScheme scheme = InitScheme::kZerosBias);

struct ForwardResult {
  Matrix features;  // N x F
  Matrix logits;    // N x C
};

ForwardResult forward(const MlpModel& model, const Matrix& batch);

struct BackwardResult {
  double loss = 0.0;  // cross-entropy term only
  GradientVector grad;
};

// Exact gradient of mean cross-entropy plus the chain contribution of an
// upstream gradient w.r.t. the features (N x F), when given.
BackwardResult backward(const MlpModel& model, const Matrix& batch, std::span<const int> labels,
                        const std::optional<Matrix>& extra_feature_grad = std::nullopt);

// theta <- theta - lr * grad. Throws std::logic_error on a frozen model.
void sgd_step(MlpModel& model, const GradientVector& grad, double lr);

// Argmax of each logits row, ties to the lowest class index.
std::vector<int> predict(const MlpModel& model, const Matrix& batch);
int argmax_row(std::span<const double> row);

double evaluate(const MlpModel& model, const LabeledDataset& ds);

struct PretrainConfig {
  std::vector<std::size_t> layer_dims;
  Activation activation = Activation::kTanh;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 0.05;
  std::uint64_t seed = 0;
};

// Plain mini-batch cross-entropy training from a fresh init, then frozen.
MlpModel pretrain(const LabeledDataset& prior, const PretrainConfig& config);

// Checkpoint: header `layer_dims=a,b,c activation=<tanh|relu> frozen=<0|1>`,
// then one parameter per line in flatten() order.
std::string serialize_model(const MlpModel& model);
MlpModel parse_model(const std::string& text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace synguide

#endif  // SYNGUIDE_MODEL_HPP
