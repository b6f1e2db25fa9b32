#include "synguide/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "synguide/util.hpp"

namespace synguide {

std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& text) {
  if (text == "tanh") return Activation::kTanh;
  if (text == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + text + "' (expected tanh or relu)");
}

double dot(const GradientVector& a, const GradientVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("gradient length mismatch: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values[i] * b.values[i];
  return s;
}

double norm(const GradientVector& g) { return std::sqrt(dot(g, g)); }

MlpModel::MlpModel(std::vector<std::size_t> layer_dims, Activation activation)
    : layer_dims_(std::move(layer_dims)), activation_(activation) {
  if (layer_dims_.size() < 2) {
    throw std::invalid_argument("MlpModel needs at least input and output dims, got " +
                                std::to_string(layer_dims_.size()));
  }
  for (std::size_t d : layer_dims_) {
    if (d == 0) throw std::invalid_argument("MlpModel layer dims must be >= 1");
  }
  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    weights_.emplace_back(layer_dims_[l], layer_dims_[l + 1]);
    biases_.emplace_back(1, layer_dims_[l + 1]);
  }
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

void MlpModel::require_unfrozen() const {
  if (frozen_) throw std::logic_error("model is frozen; parameter updates are rejected");
}

Matrix& MlpModel::mutable_weights(std::size_t l) {
  require_unfrozen();
  return weights_.at(l);
}

Matrix& MlpModel::mutable_bias(std::size_t l) {
  require_unfrozen();
  return biases_.at(l);
}

std::vector<double> MlpModel::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.insert(out.end(), weights_[l].values().begin(), weights_[l].values().end());
    out.insert(out.end(), biases_[l].values().begin(), biases_[l].values().end());
  }
  return out;
}

void MlpModel::unflatten(std::span<const double> params) {
  require_unfrozen();
  if (params.size() != parameter_count()) {
    throw std::invalid_argument("unflatten: expected " + std::to_string(parameter_count()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (double& w : weights_[l].values()) w = params[k++];
    for (double& b : biases_[l].values()) b = params[k++];
  }
}

MlpModel init_model(std::vector<std::size_t> layer_dims, Activation activation,
                    std::uint64_t seed, InitScheme scheme) {
  if (layer_dims.empty()) throw std::invalid_argument("init_model: empty layer dims");
  MlpModel model(std::move(layer_dims), activation);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(model.layer_dims()[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : model.mutable_weights(l).values()) w = dist(rng);
    for (double& b : model.mutable_bias(l).values()) {
      b = scheme == InitScheme::kUniformFanIn ? dist(rng) : 0.0;
    }
  }
  return model;
}

namespace {

// A[0] is the input; A[l + 1] is the activation output of layer l for every
// hidden layer. The last entry is therefore the feature matrix.
struct Trace {
  std::vector<Matrix> activations;
  Matrix logits;
};

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix z = matmul(x, w);
  const auto bias = b.row(0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
  return z;
}

void activate(Matrix& z, Activation act) {
  for (double& v : z.values()) v = act == Activation::kTanh ? std::tanh(v) : std::max(0.0, v);
}

Trace run_forward(const MlpModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim()) {
    throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols()) +
                                " columns, model expects " + std::to_string(model.input_dim()));
  }
  Trace t;
  t.activations.push_back(batch);
  const std::size_t last = model.layer_count() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Matrix z = affine(t.activations.back(), model.weights(l), model.bias(l));
    activate(z, model.activation());
    t.activations.push_back(std::move(z));
  }
  t.logits = affine(t.activations.back(), model.weights(last), model.bias(last));
  return t;
}

}  // namespace

ForwardResult forward(const MlpModel& model, const Matrix& batch) {
  Trace t = run_forward(model, batch);
  return {std::move(t.activations.back()), std::move(t.logits)};
}

BackwardResult backward(const MlpModel& model, const Matrix& batch, std::span<const int> labels,
                        const std::optional<Matrix>& extra_feature_grad) {
  const Trace t = run_forward(model, batch);
  const std::size_t n = batch.rows();
  if (extra_feature_grad &&
      (extra_feature_grad->rows() != n || extra_feature_grad->cols() != model.feature_dim())) {
    throw std::invalid_argument("backward: extra_feature_grad is " +
                                extra_feature_grad->shape_string() + ", features are " +
                                std::to_string(n) + "x" + std::to_string(model.feature_dim()));
  }
  const CrossEntropy ce = cross_entropy(t.logits, labels);

  // dL/dlogits for the mean cross-entropy.
  Matrix delta = ce.probs;
  const double inv_n = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    delta(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    for (double& v : delta.row(i)) v *= inv_n;
  }

  const std::size_t layers = model.layer_count();
  std::vector<std::size_t> offset(layers + 1, 0);
  for (std::size_t l = 0; l < layers; ++l) {
    offset[l + 1] = offset[l] + model.weights(l).size() + model.bias(l).size();
  }
  BackwardResult out;
  out.loss = ce.loss;
  out.grad.values.assign(offset[layers], 0.0);

  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& input = t.activations[l];
    const Matrix& w = model.weights(l);
    double* gw = out.grad.values.data() + offset[l];
    double* gb = gw + w.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto in_row = input.row(i);
      const auto d_row = delta.row(i);
      for (std::size_t a = 0; a < w.rows(); ++a) {
        const double x = in_row[a];
        if (x == 0.0) continue;
        double* gw_row = gw + a * w.cols();
        for (std::size_t b = 0; b < w.cols(); ++b) gw_row[b] += x * d_row[b];
      }
      for (std::size_t b = 0; b < w.cols(); ++b) gb[b] += d_row[b];
    }
    if (l == 0) break;

    // Propagate to the activation output feeding layer l.
    Matrix upstream(n, w.rows());
    for (std::size_t i = 0; i < n; ++i) {
      const auto d_row = delta.row(i);
      auto u_row = upstream.row(i);
      for (std::size_t a = 0; a < w.rows(); ++a) {
        const auto w_row = w.row(a);
        double s = 0.0;
        for (std::size_t b = 0; b < w.cols(); ++b) s += w_row[b] * d_row[b];
        u_row[a] = s;
      }
    }
    if (l == layers - 1 && extra_feature_grad) {
      for (std::size_t k = 0; k < upstream.size(); ++k) {
        upstream.values()[k] += extra_feature_grad->values()[k];
      }
    }
    const Matrix& act = t.activations[l];
    for (std::size_t k = 0; k < upstream.size(); ++k) {
      const double a = act.values()[k];
      upstream.values()[k] *= model.activation() == Activation::kTanh ? 1.0 - a * a
                                                                      : (a > 0.0 ? 1.0 : 0.0);
    }
    delta = std::move(upstream);
  }
  return out;
}

void sgd_step(MlpModel& model, const GradientVector& grad, double lr) {
  if (model.frozen()) throw std::logic_error("sgd_step: model is frozen");
  if (grad.size() != model.parameter_count()) {
    throw std::invalid_argument("sgd_step: gradient has " + std::to_string(grad.size()) +
                                " entries, model has " +
                                std::to_string(model.parameter_count()) + " parameters");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    for (double& w : model.mutable_weights(l).values()) w -= lr * grad.values[k++];
    for (double& b : model.mutable_bias(l).values()) b -= lr * grad.values[k++];
  }
}

int argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return static_cast<int>(best);
}

std::vector<int> predict(const MlpModel& model, const Matrix& batch) {
  const Matrix logits = forward(model, batch).logits;
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) out[i] = argmax_row(logits.row(i));
  return out;
}

double evaluate(const MlpModel& model, const LabeledDataset& ds) {
  if (ds.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (static_cast<std::size_t>(ds.num_classes) > model.num_classes()) {
    throw std::invalid_argument("evaluate: dataset has " + std::to_string(ds.num_classes) +
                                " classes, model outputs " +
                                std::to_string(model.num_classes()));
  }
  const auto pred = predict(model, ds.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

MlpModel pretrain(const LabeledDataset& prior, const PretrainConfig& config) {
  if (prior.empty()) throw std::invalid_argument("pretrain: prior dataset is empty");
  if (config.epochs == 0 || config.batch_size == 0 || !(config.lr > 0.0)) {
    throw std::invalid_argument("pretrain: epochs, batch_size and lr must be positive");
  }
  MlpModel model = init_model(config.layer_dims, config.activation, derive_seed(config.seed, 0));
  std::mt19937_64 rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(prior.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const auto batch =
          prior.subset(std::span<const std::size_t>(order.data() + start, stop - start));
      const auto step = backward(model, batch.features, batch.labels);
      sgd_step(model, step.grad, config.lr);
    }
  }
  model.freeze();
  return model;
}

std::string serialize_model(const MlpModel& model) {
  std::string out = "layer_dims=";
  for (std::size_t i = 0; i < model.layer_dims().size(); ++i) {
    if (i) out += ',';
    out += std::to_string(model.layer_dims()[i]);
  }
  out += " activation=" + to_string(model.activation());
  out += model.frozen() ? " frozen=1\n" : " frozen=0\n";
  for (double v : model.flatten()) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

MlpModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint line 1: empty file");
  std::istringstream head(line);
  std::string dims_tok, act_tok, frozen_tok;
  head >> dims_tok >> act_tok >> frozen_tok;
  if (dims_tok.rfind("layer_dims=", 0) != 0 || act_tok.rfind("activation=", 0) != 0 ||
      (frozen_tok != "frozen=0" && frozen_tok != "frozen=1")) {
    throw std::runtime_error("checkpoint line 1: malformed header");
  }
  std::vector<std::size_t> dims;
  std::stringstream dims_in(dims_tok.substr(11));
  std::string part;
  while (std::getline(dims_in, part, ',')) {
    const auto v = parse_int(part, "layer dim");
    if (v < 1) throw std::runtime_error("checkpoint line 1: layer dims must be >= 1");
    dims.push_back(static_cast<std::size_t>(v));
  }
  MlpModel model(std::move(dims), parse_activation(act_tok.substr(11)));
  std::vector<double> params;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      params.push_back(parse_double(line, "parameter"));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (params.size() != model.parameter_count()) {
    throw std::runtime_error("checkpoint has " + std::to_string(params.size()) +
                             " parameters, header implies " +
                             std::to_string(model.parameter_count()));
  }
  model.unflatten(params);
  if (frozen_tok == "frozen=1") model.freeze();
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace synguide
