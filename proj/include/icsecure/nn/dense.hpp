// Copyright 2026 The icsecure Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal fully-connected network: forward pass, exact gradients for BCE and
// MSE, Adam and plain gradient descent, and a flat little-endian parameter
// format. Batches are column-major: one sample per column.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <json.hpp>

#include "icsecure/core/binary.hpp"
#include "icsecure/core/error.hpp"
#include "icsecure/core/random.hpp"

namespace icsecure::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kProbClamp = 1e-12;

enum class Activation { kRelu, kSigmoid, kIdentity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "identity") return Activation::kIdentity;
  throw Error("invalid_manifest", "unknown activation " + s);
}

struct DenseNetworkSpec {
  std::vector<int> layer_dims;  // input, hidden..., output
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kSigmoid;

  std::size_t num_layers() const { return layer_dims.size() - 1; }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  Activation activation(std::size_t layer) const {
    return layer + 1 == num_layers() ? output_activation : hidden_activation;
  }

  void validate() const {
    if (layer_dims.size() < 2) throw Error("invalid_spec", "network needs at least two dims");
    for (int d : layer_dims) {
      if (d < 1) throw Error("invalid_spec", "layer dims must be >= 1");
    }
  }

  friend bool operator==(const DenseNetworkSpec&, const DenseNetworkSpec&) = default;
};

/// Weights are (out x in); biases have length out. Also used for gradients
/// and optimizer moments.
struct ParameterSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static ParameterSet zeros(const DenseNetworkSpec& spec) {
    spec.validate();
    ParameterSet p;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      p.weights.push_back(Matrix::Zero(spec.layer_dims[l + 1], spec.layer_dims[l]));
      p.biases.push_back(Vector::Zero(spec.layer_dims[l + 1]));
    }
    return p;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  ParameterSet& scale(double factor) {
    for (auto& w : weights) w *= factor;
    for (auto& b : biases) b *= factor;
    return *this;
  }

  double squared_norm() const {
    double s = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) s += weights[l].squaredNorm() + biases[l].squaredNorm();
    return s;
  }
};

inline bool same_shape(const ParameterSet& a, const ParameterSet& b) {
  if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size()) return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l].rows() != b.weights[l].rows() || a.weights[l].cols() != b.weights[l].cols() ||
        a.biases[l].size() != b.biases[l].size()) {
      return false;
    }
  }
  return true;
}

inline void check_params(const DenseNetworkSpec& spec, const ParameterSet& p) {
  if (!same_shape(p, ParameterSet::zeros(spec))) throw Error("shape_mismatch", "parameters do not match spec");
}

/// Glorot-uniform weights, zero biases.
inline ParameterSet init_parameters(const DenseNetworkSpec& spec, Rng& rng) {
  ParameterSet p = ParameterSet::zeros(spec);
  for (auto& w : p.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform_real(rng, -limit, limit);
    }
  }
  return p;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::kRelu: z = z.cwiseMax(0.0); break;
    case Activation::kSigmoid: z = z.unaryExpr([](double v) { return sigmoid(v); }); break;
    case Activation::kIdentity: break;
  }
}

/// layers[0] is the input batch; layers[l] the post-activation of layer l.
struct Activations {
  std::vector<Matrix> layers;
  const Matrix& output() const { return layers.back(); }
};

/// Forward pass over a batch. `Input` may be dense or sparse (one-hot
/// batches); only the first layer touches it.
template <typename Input>
Activations forward_batch(const DenseNetworkSpec& spec, const ParameterSet& params, const Input& inputs,
                          std::size_t stop_after = static_cast<std::size_t>(-1)) {
  if (inputs.rows() != spec.input_dim()) throw Error("shape_mismatch", "input length does not match network");
  Activations acts;
  acts.layers.reserve(spec.num_layers() + 1);
  acts.layers.emplace_back(Matrix(inputs));
  const std::size_t last = std::min(spec.num_layers(), stop_after);
  for (std::size_t l = 0; l < last; ++l) {
    Matrix z = l == 0 ? Matrix(params.weights[0] * inputs) : Matrix(params.weights[l] * acts.layers[l]);
    z.colwise() += params.biases[l];
    apply_activation(spec.activation(l), z);
    acts.layers.push_back(std::move(z));
  }
  return acts;
}

/// Per-layer activations for a single input vector.
inline std::vector<Vector> forward(const DenseNetworkSpec& spec, const ParameterSet& params, const Vector& input) {
  Activations acts = forward_batch(spec, params, Matrix(input));
  std::vector<Vector> out;
  for (auto& m : acts.layers) out.emplace_back(m.col(0));
  return out;
}

inline Vector predict(const DenseNetworkSpec& spec, const ParameterSet& params, const Vector& input) {
  return forward_batch(spec, params, Matrix(input)).output().col(0);
}

// ---------------------------------------------------------------------------
// Losses. Both are means over every element of the batch.

enum class Loss { kBce, kMse };

inline double bce_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw Error("shape_mismatch", "bce_loss: length mismatch");
  if (predictions.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], kProbClamp, 1.0 - kProbClamp);
    const double t = targets[i];
    s -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return s / static_cast<double>(predictions.size());
}

inline double bce_loss(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw Error("shape_mismatch", "bce_loss: shape mismatch");
  }
  return bce_loss(std::span<const double>(predictions.data(), static_cast<std::size_t>(predictions.size())),
                  std::span<const double>(targets.data(), static_cast<std::size_t>(targets.size())));
}

inline double mse_loss(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw Error("shape_mismatch", "mse_loss: shape mismatch");
  }
  if (predictions.size() == 0) return 0.0;
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

inline double loss_value(Loss loss, const Matrix& predictions, const Matrix& targets) {
  return loss == Loss::kBce ? bce_loss(predictions, targets) : mse_loss(predictions, targets);
}

// ---------------------------------------------------------------------------
// Backpropagation

/// Exact gradients of the mean loss w.r.t. every parameter, given the
/// activations of a prior forward_batch on the same inputs.
template <typename Input>
ParameterSet backward_batch(const DenseNetworkSpec& spec, const ParameterSet& params, const Activations& acts,
                            const Input& inputs, const Matrix& targets, Loss loss) {
  const std::size_t L = spec.num_layers();
  if (acts.layers.size() != L + 1) throw Error("shape_mismatch", "backward: incomplete forward pass");
  const Matrix& out = acts.output();
  if (targets.rows() != out.rows() || targets.cols() != out.cols()) {
    throw Error("shape_mismatch", "backward: target shape mismatch");
  }
  const double n = static_cast<double>(out.size());

  Matrix delta;
  switch (loss) {
    case Loss::kBce:
      // Sigmoid and cross-entropy fold into (p - t).
      if (spec.output_activation != Activation::kSigmoid) {
        throw Error("invalid_spec", "BCE loss requires a sigmoid output layer");
      }
      delta = (out - targets) / n;
      break;
    case Loss::kMse:
      delta = 2.0 * (out - targets) / n;
      if (spec.output_activation == Activation::kSigmoid) {
        delta = delta.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
      } else if (spec.output_activation == Activation::kRelu) {
        delta = delta.cwiseProduct(out.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; }));
      }
      break;
  }

  ParameterSet grads = ParameterSet::zeros(spec);
  for (std::size_t l = L; l-- > 0;) {
    if (l == 0) {
      grads.weights[0] = delta * inputs.transpose();
    } else {
      grads.weights[l].noalias() = delta * acts.layers[l].transpose();
    }
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Matrix up = params.weights[l].transpose() * delta;
    const Matrix& a = acts.layers[l];
    switch (spec.activation(l - 1)) {
      case Activation::kRelu: delta = up.cwiseProduct(a.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; })); break;
      case Activation::kSigmoid: delta = up.cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix())); break;
      case Activation::kIdentity: delta = std::move(up); break;
    }
  }
  return grads;
}

inline ParameterSet backward(const DenseNetworkSpec& spec, const ParameterSet& params, const Vector& input,
                             const Vector& target, Loss loss) {
  check_params(spec, params);
  Matrix x(input);
  Activations acts = forward_batch(spec, params, x);
  return backward_batch(spec, params, acts, x, Matrix(target), loss);
}

// ---------------------------------------------------------------------------
// Optimizers

struct AdamState {
  ParameterSet m;
  ParameterSet v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const ParameterSet& p) {
    AdamState s;
    for (const auto& w : p.weights) {
      s.m.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
      s.v.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : p.biases) {
      s.m.biases.push_back(Vector::Zero(b.size()));
      s.v.biases.push_back(Vector::Zero(b.size()));
    }
    return s;
  }
};

namespace detail {
template <typename T>
void adam_update(T& p, const T& g, T& m, T& v, double lr, double b1, double b2, double eps, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}
}  // namespace detail

/// Bias-corrected Adam, in place.
inline void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state, double learning_rate) {
  if (!same_shape(params, grads) || !same_shape(params, state.m)) {
    throw Error("shape_mismatch", "adam_step: shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    detail::adam_update(params.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l], learning_rate,
                        state.beta1, state.beta2, state.epsilon, c1, c2);
    detail::adam_update(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l], learning_rate,
                        state.beta1, state.beta2, state.epsilon, c1, c2);
  }
}

/// Rescales `grads` so its global L2 norm is at most `max_norm` (no-op when
/// max_norm <= 0). Returns the norm before clipping.
inline double clip_by_global_norm(ParameterSet& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

inline void sgd_step(ParameterSet& params, const ParameterSet& grads, double learning_rate) {
  if (!same_shape(params, grads)) throw Error("shape_mismatch", "sgd_step: shape mismatch");
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    params.weights[l] -= learning_rate * grads.weights[l];
    params.biases[l] -= learning_rate * grads.biases[l];
  }
}

// ---------------------------------------------------------------------------
// Serialization: tensors appended to a flat little-endian f64 blob (weights
// row-major), described by a JSON manifest holding byte offsets.

inline nlohmann::json append_network(Blob& blob, const DenseNetworkSpec& spec, const ParameterSet& params) {
  check_params(spec, params);
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const Matrix& w = params.weights[l];
    tensors.push_back({{"name", "W" + std::to_string(l)}, {"shape", {w.rows(), w.cols()}}, {"offset", blob.size()}});
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) append_f64_le(blob, w(r, c));
    }
    const Vector& b = params.biases[l];
    tensors.push_back({{"name", "b" + std::to_string(l)}, {"shape", {b.size()}}, {"offset", blob.size()}});
    for (Eigen::Index i = 0; i < b.size(); ++i) append_f64_le(blob, b(i));
  }
  return {{"layer_dims", spec.layer_dims},
          {"hidden_activation", to_string(spec.hidden_activation)},
          {"output_activation", to_string(spec.output_activation)},
          {"layout", "row-major"},
          {"tensors", tensors}};
}

inline DenseNetworkSpec network_spec_from_manifest(const nlohmann::json& j) {
  DenseNetworkSpec spec;
  spec.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  spec.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  spec.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
  spec.validate();
  return spec;
}

inline ParameterSet read_network(const nlohmann::json& manifest, std::span<const std::byte> blob) {
  DenseNetworkSpec spec = network_spec_from_manifest(manifest);
  ParameterSet p = ParameterSet::zeros(spec);
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != 2 * p.weights.size()) throw Error("invalid_manifest", "tensor count mismatch");
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    std::size_t off = tensors[2 * l].at("offset").get<std::size_t>();
    Matrix& w = p.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c, off += 8) w(r, c) = read_f64_le(blob, off);
    }
    off = tensors[2 * l + 1].at("offset").get<std::size_t>();
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i, off += 8) p.biases[l](i) = read_f64_le(blob, off);
  }
  return p;
}

}  // namespace icsecure::nn
