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

// One-hot alert fingerprints and the autoencoder that compresses them into
// dense alert embeddings.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "icsecure/core/error.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"
#include "icsecure/nn/dense.hpp"

namespace icsecure {

struct AlertOneHot {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t popcount() const { return static_cast<std::size_t>(std::accumulate(bits.begin(), bits.end(), 0)); }
  nn::Vector to_vector() const {
    nn::Vector v(static_cast<Eigen::Index>(bits.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) v(static_cast<Eigen::Index>(i)) = bits[i];
    return v;
  }
  friend bool operator==(const AlertOneHot&, const AlertOneHot&) = default;
};

/// Strict encoding: every key must be in the registry.
inline AlertOneHot one_hot_encode(const AlertRule& alert, const SchemaKeyRegistry& registry) {
  AlertOneHot out{std::vector<std::uint8_t>(registry.size(), 0)};
  for (const auto& k : alert.present_keys) {
    auto idx = registry.index_of(k);
    if (!idx) throw Error("unknown_key", "alert " + alert.id + " uses key '" + k + "' missing from the schema");
    out.bits[*idx] = 1;
  }
  return out;
}

/// Lenient encoding for live requests: unknown keys are skipped and
/// reported through `ignored`.
template <typename Keys>
AlertOneHot one_hot_encode_lenient(const Keys& keys, const SchemaKeyRegistry& registry,
                                   std::vector<std::string>& ignored) {
  AlertOneHot out{std::vector<std::uint8_t>(registry.size(), 0)};
  for (const auto& k : keys) {
    if (auto idx = registry.index_of(k)) {
      out.bits[*idx] = 1;
    } else {
      ignored.push_back(k);
    }
  }
  return out;
}

struct AutoencoderConfig {
  int hidden_dim = 256;
  int code_dim = 16;
  double learning_rate = 0.1;
  int epochs = 2000;
  double gradient_clip = 5.0;
  std::uint64_t seed = 1;
};

/// Symmetric stack N -> hidden -> code -> hidden -> N trained as one
/// network; the embedding is the code layer's (ReLU) activation.
struct AlertAutoencoder {
  nn::DenseNetworkSpec spec;
  nn::ParameterSet params;
  std::uint64_t registry_fingerprint = 0;
  std::vector<double> loss_history;  // full-batch BCE before each epoch's update, then final

  static constexpr std::size_t kCodeLayer = 2;

  int input_dim() const { return spec.input_dim(); }
  int code_dim() const { return spec.layer_dims[kCodeLayer]; }

  nn::Vector embed(const AlertOneHot& one_hot) const {
    if (static_cast<int>(one_hot.size()) != input_dim()) {
      throw Error("shape_mismatch", "one-hot length " + std::to_string(one_hot.size()) +
                                        " does not match autoencoder input " + std::to_string(input_dim()));
    }
    auto acts = nn::forward_batch(spec, params, nn::Matrix(one_hot.to_vector()), kCodeLayer);
    return acts.layers[kCodeLayer].col(0);
  }

  nn::Vector reconstruct(const AlertOneHot& one_hot) const { return nn::predict(spec, params, one_hot.to_vector()); }
};

inline nn::Vector embed_alert(const AlertAutoencoder& ae, const AlertOneHot& one_hot) { return ae.embed(one_hot); }

inline nn::SparseMatrix one_hot_batch(const std::vector<AlertOneHot>& vectors) {
  const auto rows = static_cast<Eigen::Index>(vectors.front().size());
  nn::SparseMatrix m(rows, static_cast<Eigen::Index>(vectors.size()));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t c = 0; c < vectors.size(); ++c) {
    if (static_cast<Eigen::Index>(vectors[c].size()) != rows) throw Error("shape_mismatch", "one-hot lengths differ");
    for (std::size_t r = 0; r < vectors[c].size(); ++r) {
      if (vectors[c].bits[r]) trip.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), 1.0);
    }
  }
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

/// Full-batch gradient descent. The objective is the per-alert BCE summed
/// over keys and averaged over alerts (mean-over-elements gradients are
/// N times smaller and stall at the all-zeros reconstruction for sparse
/// one-hots); steps are clipped to a global gradient norm. `loss_history`
/// records the mean-over-elements BCE.
inline AlertAutoencoder train_autoencoder(const std::vector<AlertOneHot>& training, std::uint64_t registry_fingerprint,
                                          const AutoencoderConfig& config) {
  if (training.empty()) throw Error("empty_input", "train_autoencoder: no training vectors");
  const int n = static_cast<int>(training.front().size());
  AlertAutoencoder ae;
  ae.spec = {{n, config.hidden_dim, config.code_dim, config.hidden_dim, n},
             nn::Activation::kRelu,
             nn::Activation::kSigmoid};
  ae.registry_fingerprint = registry_fingerprint;
  Rng rng(mix_seed(config.seed, 0xae));
  ae.params = nn::init_parameters(ae.spec, rng);

  const nn::SparseMatrix x = one_hot_batch(training);
  const nn::Matrix target(x);
  ae.loss_history.reserve(static_cast<std::size_t>(config.epochs) + 1);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto acts = nn::forward_batch(ae.spec, ae.params, x);
    ae.loss_history.push_back(nn::bce_loss(acts.output(), target));
    auto grads = nn::backward_batch(ae.spec, ae.params, acts, x, target, nn::Loss::kBce);
    grads.scale(static_cast<double>(n));
    nn::clip_by_global_norm(grads, config.gradient_clip);
    nn::sgd_step(ae.params, grads, config.learning_rate);
  }
  ae.loss_history.push_back(nn::bce_loss(nn::forward_batch(ae.spec, ae.params, x).output(), target));
  return ae;
}

/// Fraction of bits reproduced when reconstructions are thresholded at 0.5.
inline double reconstruction_bit_accuracy(const AlertAutoencoder& ae, const std::vector<AlertOneHot>& vectors) {
  if (vectors.empty()) return 1.0;
  const nn::SparseMatrix x = one_hot_batch(vectors);
  const nn::Matrix out = nn::forward_batch(ae.spec, ae.params, x).output();
  const nn::Matrix dense(x);
  std::size_t correct = 0;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) correct += ((out(r, c) >= 0.5) == (dense(r, c) >= 0.5));
  }
  return static_cast<double>(correct) / static_cast<double>(out.size());
}

}  // namespace icsecure
