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

// The scorer: alert, current-module and partial-graph embeddings are
// concatenated and fed to an MLP with one sigmoid output per candidate
// module (EOP last). Also holds the end-to-end training pipeline and the
// ranking helpers.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "icsecure/config.hpp"
#include "icsecure/core/error.hpp"
#include "icsecure/core/hash.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"
#include "icsecure/embedding/alert.hpp"
#include "icsecure/embedding/graph2vec.hpp"
#include "icsecure/embedding/node2vec.hpp"
#include "icsecure/nn/dense.hpp"
#include "icsecure/samples.hpp"

namespace icsecure {

inline constexpr int kEmbeddingDim = 16;

/// Concatenation in the fixed order (alert, module, graph).
inline nn::Vector assemble_input(const nn::Vector& alert_emb, const nn::Vector& module_emb,
                                 const nn::Vector& graph_emb) {
  if (alert_emb.size() != kEmbeddingDim || module_emb.size() != kEmbeddingDim || graph_emb.size() != kEmbeddingDim) {
    throw Error("shape_mismatch", "assemble_input: every embedding must have length 16");
  }
  nn::Vector x(3 * kEmbeddingDim);
  x << alert_emb, module_emb, graph_emb;
  return x;
}

/// Hash of a sorted id list; ties models to the alert set they were trained on.
inline std::uint64_t training_fingerprint(std::vector<std::string> alert_ids) {
  std::sort(alert_ids.begin(), alert_ids.end());
  Fnv1a64 h;
  for (const auto& a : alert_ids) h.update(a + "\n");
  return h.digest();
}

/// Alert encoder and module table; shared by both graph variants of a fold.
struct SharedEmbeddings {
  AlertAutoencoder autoencoder;
  ModuleEmbeddingTable module_table;
  std::uint64_t alert_fingerprint = 0;
  std::uint64_t module_fingerprint = 0;
};

/// Per-feature affine map applied to scorer inputs; empty means identity.
struct InputScaler {
  nn::Vector shift;
  nn::Vector scale;

  bool identity() const { return shift.size() == 0; }
  nn::Vector apply(const nn::Vector& x) const {
    if (identity()) return x;
    return (x - shift).cwiseQuotient(scale);
  }

  /// Standardizes each column-feature of `x` (features x samples); constant
  /// features keep unit scale.
  static InputScaler fit(const nn::Matrix& x) {
    InputScaler s;
    s.shift = x.rowwise().mean();
    s.scale = ((x.colwise() - s.shift).array().square().rowwise().mean()).sqrt().matrix();
    for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
      if (!(s.scale(i) > 1e-8)) s.scale(i) = 1.0;
    }
    return s;
  }
};

/// Everything needed to score a request.
struct ModelBundle {
  SchemaKeyRegistry schema;
  ModuleRegistry modules;
  AlertAutoencoder autoencoder;
  ModuleEmbeddingTable module_table;
  Graph2VecModel graph_model;
  nn::DenseNetworkSpec ncf_spec;
  nn::ParameterSet ncf_params;
  InputScaler ncf_input;
  GraphVariant variant = GraphVariant::kWithAttributes;
  std::uint64_t graph_infer_seed = 0;
  std::uint64_t training_fingerprint = 0;
  PipelineConfig config;
  std::vector<double> ncf_loss_history;
};

// ---------------------------------------------------------------------------
// Featurization

/// Builds 48-dim scorer inputs. Memoizes alert and graph embeddings; both are
/// pure functions of their keys, so caching never changes a result. Not
/// thread-safe; give each thread its own instance.
class FeatureBuilder {
 public:
  FeatureBuilder(const SchemaKeyRegistry& schema, const AlertAutoencoder& ae, const ModuleEmbeddingTable& table,
                 const Graph2VecModel& graph_model, std::uint64_t infer_seed)
      : schema_(schema), ae_(ae), table_(table), graph_model_(graph_model), infer_seed_(infer_seed) {}

  explicit FeatureBuilder(const ModelBundle& b)
      : FeatureBuilder(b.schema, b.autoencoder, b.module_table, b.graph_model, b.graph_infer_seed) {}

  const nn::Vector& alert_embedding(const AlertRule& alert) {
    auto it = alert_cache_.find(alert.id);
    if (it != alert_cache_.end()) return it->second;
    return alert_cache_.emplace(alert.id, ae_.embed(one_hot_encode(alert, schema_))).first->second;
  }

  nn::Vector module_embedding(const Playbook& partial, const std::string& current_node) const {
    return table_.get(partial.module_of(current_node));
  }

  const GraphEmbedding& graph_embedding(const Playbook& partial) {
    const WlDocument doc = wl_document(partial, graph_model_.config.wl_iterations, graph_model_.config.variant);
    std::vector<int> labels = known_labels(graph_model_, doc);
    std::string key;
    key.reserve(labels.size() * 4);
    for (int l : labels) key += std::to_string(l) + ",";
    auto it = graph_cache_.find(key);
    if (it != graph_cache_.end()) return it->second;
    return graph_cache_.emplace(std::move(key), infer_from_labels(graph_model_, labels, infer_seed_)).first->second;
  }

  nn::Vector features(const AlertRule& alert, const Playbook& partial, const std::string& current_node) {
    return assemble_input(alert_embedding(alert), module_embedding(partial, current_node),
                          graph_embedding(partial).vector);
  }

  std::size_t graph_cache_size() const { return graph_cache_.size(); }

 private:
  const SchemaKeyRegistry& schema_;
  const AlertAutoencoder& ae_;
  const ModuleEmbeddingTable& table_;
  const Graph2VecModel& graph_model_;
  std::uint64_t infer_seed_;
  std::map<std::string, nn::Vector> alert_cache_;
  std::unordered_map<std::string, GraphEmbedding> graph_cache_;
};

// ---------------------------------------------------------------------------
// Training

/// Unified graph over the training playbooks, plus every registry module as
/// an isolated node so each candidate has an embedding row.
inline UnifiedGraph training_unified_graph(const Corpus& corpus, const std::vector<std::string>& train_alerts,
                                           const ModuleRegistry& modules) {
  UnifiedGraph g = build_unified_graph(corpus.playbooks_for(train_alerts));
  for (const auto& m : modules.modules()) {
    if (m != kEopModule) g.nodes.insert(m);
  }
  return g;
}

inline SharedEmbeddings train_shared_embeddings(const Corpus& corpus, const std::vector<std::string>& train_alerts,
                                                const PipelineConfig& config) {
  if (train_alerts.empty()) throw Error("empty_input", "no training alerts");
  SharedEmbeddings s;
  std::vector<AlertOneHot> vectors;
  for (const auto& id : train_alerts) vectors.push_back(one_hot_encode(corpus.alert(id), corpus.registry));
  s.autoencoder = train_autoencoder(vectors, corpus.registry.fingerprint(), config.autoencoder);
  s.alert_fingerprint = training_fingerprint(train_alerts);
  s.module_table =
      train_node2vec(training_unified_graph(corpus, train_alerts, corpus.module_registry()), config.node2vec);
  s.module_fingerprint = training_fingerprint(train_alerts);
  return s;
}

struct NcfTrainingResult {
  nn::DenseNetworkSpec spec;
  nn::ParameterSet params;
  InputScaler input;
  std::vector<double> loss_history;  // mean BCE per epoch
};

inline nn::DenseNetworkSpec ncf_spec(const NcfConfig& config, std::size_t candidates) {
  nn::DenseNetworkSpec spec;
  spec.layer_dims.push_back(3 * kEmbeddingDim);
  spec.layer_dims.insert(spec.layer_dims.end(), config.hidden.begin(), config.hidden.end());
  spec.layer_dims.push_back(static_cast<int>(candidates));
  spec.hidden_activation = nn::Activation::kRelu;
  spec.output_activation = nn::Activation::kSigmoid;
  return spec;
}

/// Each epoch draws a fresh sample set (new prunings), shuffles it into
/// mini-batches and takes one Adam step per batch on mean BCE.
inline NcfTrainingResult train_ncf(const Corpus& corpus, const std::vector<std::string>& train_alerts,
                                   const ModuleRegistry& modules, FeatureBuilder& features, const NcfConfig& config,
                                   double prune_probability = kPruneProbability) {
  if (config.batch_size < 1 || config.epochs < 0) throw Error("invalid_config", "ncf: bad batch size or epochs");
  NcfTrainingResult r;
  r.spec = ncf_spec(config, modules.num_candidates());
  Rng init_rng(mix_seed(config.seed, 0x9cf));
  r.params = nn::init_parameters(r.spec, init_rng);
  nn::AdamState adam = nn::AdamState::for_params(r.params);
  Rng sample_rng(mix_seed(config.seed, 0x5a3));
  Rng shuffle_rng(mix_seed(config.seed, 0x5f1));
  const auto n_out = static_cast<Eigen::Index>(modules.num_candidates());
  if (config.standardize_inputs) {
    // Statistics from one separately drawn epoch, so the training stream
    // itself is unchanged by this step.
    Rng stats_rng(mix_seed(config.seed, 0x5ca1));
    const auto probe = generate_epoch(corpus, train_alerts, modules, stats_rng, prune_probability);
    nn::Matrix x(3 * kEmbeddingDim, static_cast<Eigen::Index>(probe.size()));
    for (std::size_t i = 0; i < probe.size(); ++i) {
      x.col(static_cast<Eigen::Index>(i)) =
          features.features(corpus.alert(probe[i].alert_id), probe[i].partial, probe[i].current_node);
    }
    if (x.cols() > 0) r.input = InputScaler::fit(x);
  }
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto samples = generate_epoch(corpus, train_alerts, modules, sample_rng, prune_probability);
    if (samples.empty()) throw Error("empty_input", "ncf: training alerts produce no samples");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(config.batch_size));
      const auto cols = static_cast<Eigen::Index>(end - b);
      nn::Matrix x(3 * kEmbeddingDim, cols), y(n_out, cols);
      for (std::size_t i = b; i < end; ++i) {
        const auto& s = samples[order[i]];
        const auto c = static_cast<Eigen::Index>(i - b);
        x.col(c) = r.input.apply(features.features(corpus.alert(s.alert_id), s.partial, s.current_node));
        for (Eigen::Index k = 0; k < n_out; ++k) y(k, c) = s.labels[static_cast<std::size_t>(k)];
      }
      auto acts = nn::forward_batch(r.spec, r.params, x);
      epoch_loss += nn::bce_loss(acts.output(), y) * static_cast<double>(cols);
      auto grads = nn::backward_batch(r.spec, r.params, acts, x, y, nn::Loss::kBce);
      nn::adam_step(r.params, grads, adam, config.learning_rate);
    }
    r.loss_history.push_back(epoch_loss / static_cast<double>(samples.size()));
  }
  return r;
}

/// Trains graph2vec and the scorer on top of already-trained shared
/// embeddings. Every component must come from the same training alerts.
inline ModelBundle train_bundle(const Corpus& corpus, const std::vector<std::string>& train_alerts,
                                const PipelineConfig& config, GraphVariant variant, const SharedEmbeddings& shared) {
  const std::uint64_t fp = training_fingerprint(train_alerts);
  if (shared.alert_fingerprint != fp || shared.module_fingerprint != fp) {
    throw Error("fingerprint_mismatch", "embedding models were trained on a different alert set");
  }
  if (shared.autoencoder.registry_fingerprint != corpus.registry.fingerprint()) {
    throw Error("fingerprint_mismatch", "alert encoder was trained on a different schema");
  }
  ModelBundle b;
  b.schema = corpus.registry;
  b.modules = corpus.module_registry();
  b.autoencoder = shared.autoencoder;
  b.module_table = shared.module_table;
  b.variant = variant;
  b.config = config;
  b.graph_infer_seed = config.graph_infer_seed;
  b.training_fingerprint = fp;
  Graph2VecConfig gcfg = config.graph2vec;
  gcfg.variant = variant;
  b.graph_model = train_graph2vec(corpus.playbooks_for(train_alerts), gcfg);
  FeatureBuilder features(b);
  auto ncf = train_ncf(corpus, train_alerts, b.modules, features, config.ncf, config.prune_probability);
  b.ncf_spec = std::move(ncf.spec);
  b.ncf_params = std::move(ncf.params);
  b.ncf_input = std::move(ncf.input);
  b.ncf_loss_history = std::move(ncf.loss_history);
  return b;
}

inline ModelBundle train_bundle(const Corpus& corpus, const std::vector<std::string>& train_alerts,
                                const PipelineConfig& config, GraphVariant variant) {
  return train_bundle(corpus, train_alerts, config, variant, train_shared_embeddings(corpus, train_alerts, config));
}

// ---------------------------------------------------------------------------
// Scoring and ranking

/// Scorer output for an assembled 48-dim input.
inline std::vector<double> ncf_scores(const ModelBundle& bundle, const nn::Vector& x) {
  const nn::Vector out = nn::predict(bundle.ncf_spec, bundle.ncf_params, bundle.ncf_input.apply(x));
  return {out.data(), out.data() + out.size()};
}

/// Scores for every candidate (EOP last), each in (0, 1).
inline std::vector<double> score_all(const ModelBundle& bundle, const AlertOneHot& alert, const Playbook& partial,
                                     const std::string& current_node) {
  if (!partial.has_node(current_node)) {
    throw Error("unknown_current_node", "current node '" + current_node + "' is not in the playbook");
  }
  if (alert.size() != bundle.schema.size() || bundle.autoencoder.registry_fingerprint != bundle.schema.fingerprint()) {
    throw Error("incompatible_bundle", "alert encoder does not match the bundle schema");
  }
  const std::string& module = partial.module_of(current_node);
  if (!bundle.module_table.contains(module) || module == kEopModule) {
    throw Error("unknown_module", "module '" + module + "' is not known to the model");
  }
  const nn::Vector x =
      assemble_input(bundle.autoencoder.embed(alert), bundle.module_table.get(module),
                     infer_graph_embedding(bundle.graph_model, partial, bundle.graph_infer_seed).vector);
  return ncf_scores(bundle, x);
}

inline std::vector<double> score_all(const ModelBundle& bundle, const AlertRule& alert, const Playbook& partial,
                                     const std::string& current_node) {
  return score_all(bundle, one_hot_encode(alert, bundle.schema), partial, current_node);
}

/// Candidate indices ordered by score (descending), ties by candidate id.
inline std::vector<std::size_t> rank_candidates(const std::vector<double>& scores, const ModuleRegistry& modules) {
  if (scores.size() != modules.num_candidates()) throw Error("shape_mismatch", "score vector length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return modules.candidate(a) < modules.candidate(b);
  });
  return order;
}

struct RankedCandidate {
  std::string candidate;
  double score = 0.0;
  int rank = 0;
};

struct Recommendation {
  std::vector<RankedCandidate> entries;
};

inline Recommendation recommend_top_k(const std::vector<double>& scores, const ModuleRegistry& modules, int k) {
  if (k < 1) throw Error("invalid_k", "k must be >= 1");
  const auto order = rank_candidates(scores, modules);
  Recommendation r;
  const std::size_t n = std::min(order.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    r.entries.push_back({modules.candidate(order[i]), scores[order[i]], static_cast<int>(i + 1)});
  }
  return r;
}

inline Recommendation recommend_top_k(const ModelBundle& bundle, const AlertRule& alert, const Playbook& partial,
                                      const std::string& current_node, int k) {
  if (k < 1) throw Error("invalid_k", "k must be >= 1");
  return recommend_top_k(score_all(bundle, alert, partial, current_node), bundle.modules, k);
}

}  // namespace icsecure
