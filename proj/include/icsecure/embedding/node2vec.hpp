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

// Module embeddings: second-order biased random walks over the unified
// module graph, then skip-gram with negative sampling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "icsecure/core/error.hpp"
#include "icsecure/core/hash.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"
#include "icsecure/nn/dense.hpp"

namespace icsecure {

struct Node2VecConfig {
  int embedding_dim = 16;
  int walk_length = 4;
  int context_size = 4;
  int walks_per_node = 3;
  double p = 5.0;
  double q = 0.25;
  int epochs = 10000;
  int negatives_per_positive = 1;
  double learning_rate = 0.01;
  int walk_refresh_interval = 50;  // epochs between walk regenerations
  bool tied_init = false;          // every input row starts from the same vector
  std::uint64_t seed = 1;

  void validate() const {
    if (embedding_dim < 1) throw Error("invalid_config", "node2vec: embedding_dim must be >= 1");
    if (context_size < 2 || walk_length < context_size) {
      throw Error("invalid_config", "node2vec: need walk_length >= context_size >= 2");
    }
    if (!(p > 0) || !(q > 0)) throw Error("invalid_config", "node2vec: p and q must be positive");
    if (walks_per_node < 1 || epochs < 0 || negatives_per_positive < 0 || walk_refresh_interval < 1) {
      throw Error("invalid_config", "node2vec: invalid counts");
    }
  }
};

using Walk = std::vector<std::string>;

/// Undirected adjacency over the unified graph; node i is the i-th module id
/// in sorted order.
class UndirectedView {
 public:
  explicit UndirectedView(const UnifiedGraph& g) : ids_(g.nodes.begin(), g.nodes.end()) {
    adj_.resize(ids_.size());
    for (const auto& [a, b] : g.edges) {
      int ia = index_of(a), ib = index_of(b);
      if (ia < 0 || ib < 0) throw Error("invalid_graph", "unified edge endpoint is not a node");
      if (ia == ib) continue;
      adj_[ia].push_back(ib);
      adj_[ib].push_back(ia);
    }
    for (auto& n : adj_) {
      std::sort(n.begin(), n.end());
      n.erase(std::unique(n.begin(), n.end()), n.end());
    }
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<int>& neighbors(int i) const { return adj_[i]; }
  bool adjacent(int a, int b) const { return std::binary_search(adj_[a].begin(), adj_[a].end(), b); }
  int index_of(const std::string& id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    return it != ids_.end() && *it == id ? static_cast<int>(it - ids_.begin()) : -1;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<std::vector<int>> adj_;
};

/// Unnormalized second-order transition weight for stepping to `next` when
/// the walk arrived at the current node from `prev`.
inline double node2vec_bias(const UndirectedView& g, int prev, int next, double p, double q) {
  if (next == prev) return 1.0 / p;
  if (g.adjacent(prev, next)) return 1.0;
  return 1.0 / q;
}

namespace detail {

inline std::vector<std::vector<int>> generate_index_walks(const UndirectedView& g, const Node2VecConfig& config,
                                                          std::uint64_t seed) {
  std::vector<std::vector<int>> walks;
  walks.reserve(g.size() * static_cast<std::size_t>(config.walks_per_node));
  std::vector<double> weights;
  for (std::size_t start = 0; start < g.size(); ++start) {
    for (int w = 0; w < config.walks_per_node; ++w) {
      // Per-walk seeds keep each walk independent of generation order.
      Rng rng(mix_seed(mix_seed(seed, start), static_cast<std::uint64_t>(w)));
      std::vector<int> walk{static_cast<int>(start)};
      while (static_cast<int>(walk.size()) < config.walk_length) {
        const int cur = walk.back();
        const auto& nbrs = g.neighbors(cur);
        if (nbrs.empty()) break;
        if (walk.size() == 1) {
          walk.push_back(nbrs[uniform_index(rng, nbrs.size())]);
          continue;
        }
        const int prev = walk[walk.size() - 2];
        weights.clear();
        double total = 0.0;
        for (int n : nbrs) {
          weights.push_back(node2vec_bias(g, prev, n, config.p, config.q));
          total += weights.back();
        }
        double r = uniform01(rng) * total;
        std::size_t pick = nbrs.size() - 1;
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
          if (r < weights[k]) {
            pick = k;
            break;
          }
          r -= weights[k];
        }
        walk.push_back(nbrs[pick]);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

}  // namespace detail

inline std::vector<Walk> generate_walks(const UnifiedGraph& graph, const Node2VecConfig& config, std::uint64_t seed) {
  config.validate();
  if (graph.nodes.empty()) throw Error("empty_input", "generate_walks: empty graph");
  UndirectedView g(graph);
  std::vector<Walk> out;
  for (const auto& iw : detail::generate_index_walks(g, config, seed)) {
    Walk w;
    for (int i : iw) w.push_back(g.ids()[i]);
    out.push_back(std::move(w));
  }
  return out;
}

/// Skip-gram input vectors per unified-graph module, plus a dedicated EOP row.
struct ModuleEmbeddingTable {
  std::vector<std::string> ids;  // sorted
  nn::Matrix vectors;            // one row per id
  nn::Matrix context;            // output-side vectors, kept for inspection
  nn::Vector eop;
  std::vector<double> loss_history;

  int dim() const { return static_cast<int>(vectors.cols()); }
  bool contains(const std::string& id) const {
    return id == kEopModule || std::binary_search(ids.begin(), ids.end(), id);
  }
  nn::Vector get(const std::string& id) const {
    if (id == kEopModule) return eop;
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) throw Error("unknown_module", "no embedding for module " + id);
    return vectors.row(it - ids.begin()).transpose();
  }
};

inline nn::Vector get_module_embedding(const ModuleEmbeddingTable& table, const std::string& module_id) {
  return table.get(module_id);
}

namespace detail {

/// Negative-sampling objective over all (anchor, context) pairs of the walk
/// corpus: for a window [a, c1, ..., c_{w-1}] the first node is the anchor.
/// Returns the mean loss and accumulates mean gradients.
inline double skipgram_gradient(const std::vector<std::vector<int>>& walks, int context_size, int negatives,
                                const AliasTable& noise, Rng& rng, const nn::Matrix& in, const nn::Matrix& ctx,
                                nn::Matrix& g_in, nn::Matrix& g_ctx) {
  g_in.setZero();
  g_ctx.setZero();
  double loss = 0.0;
  std::size_t pairs = 0;
  auto term = [&](int u, int v, double label) {
    const double s = in.row(u).dot(ctx.row(v));
    const double p = nn::sigmoid(s);
    loss -= label > 0 ? std::log(std::max(p, nn::kProbClamp)) : std::log(std::max(1.0 - p, nn::kProbClamp));
    const double g = p - label;
    g_in.row(u) += g * ctx.row(v);
    g_ctx.row(v) += g * in.row(u);
  };
  for (const auto& walk : walks) {
    if (walk.size() < 2) continue;
    const std::size_t win = std::min<std::size_t>(static_cast<std::size_t>(context_size), walk.size());
    for (std::size_t s = 0; s + win <= walk.size(); ++s) {
      const int anchor = walk[s];
      for (std::size_t k = 1; k < win; ++k) {
        term(anchor, walk[s + k], 1.0);
        for (int n = 0; n < negatives; ++n) term(anchor, static_cast<int>(noise.sample(rng)), 0.0);
        ++pairs;
      }
    }
  }
  if (pairs == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(pairs);
  g_in *= inv;
  g_ctx *= inv;
  return loss * inv;
}

inline AliasTable unigram_noise(const std::vector<std::vector<int>>& walks, std::size_t n) {
  std::vector<double> counts(n, 0.0);
  for (const auto& w : walks) {
    for (int i : w) counts[i] += 1.0;
  }
  for (auto& c : counts) c = std::pow(c, 0.75);
  bool any = false;
  for (double c : counts) any = any || c > 0;
  if (!any) counts.assign(n, 1.0);
  return AliasTable(counts);
}

/// Full-batch Adam over the skip-gram tables. `walks_for_round(r)` supplies
/// the walk corpus for refresh round r.
inline ModuleEmbeddingTable train_skipgram(const std::vector<std::string>& ids, const Node2VecConfig& config,
                                           const std::function<std::vector<std::vector<int>>(int)>& walks_for_round) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  const int dim = config.embedding_dim;
  Rng init_rng(mix_seed(config.seed, 0x2e2e));
  const double limit = std::sqrt(6.0 / static_cast<double>(n + dim));
  nn::ParameterSet tables;
  tables.weights.push_back(nn::Matrix(n, dim));
  tables.weights.push_back(nn::Matrix::Zero(n, dim));
  tables.biases.assign(2, nn::Vector());
  nn::Vector shared(dim);
  for (int c = 0; c < dim; ++c) shared(c) = uniform_real(init_rng, -limit, limit);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int c = 0; c < dim; ++c) {
      tables.weights[0](r, c) = config.tied_init ? shared(c) : uniform_real(init_rng, -limit, limit);
    }
  }
  ModuleEmbeddingTable table;
  table.ids = ids;
  table.eop = nn::Vector(dim);
  for (int c = 0; c < dim; ++c) table.eop(c) = uniform_real(init_rng, -limit, limit);

  nn::AdamState adam = nn::AdamState::for_params(tables);
  nn::ParameterSet grads = tables;
  std::vector<std::vector<int>> walks;
  AliasTable noise;
  table.loss_history.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch % config.walk_refresh_interval == 0) {
      walks = walks_for_round(epoch / config.walk_refresh_interval);
      noise = unigram_noise(walks, ids.size());
    }
    Rng rng(mix_seed(config.seed, 0x100000ULL + static_cast<std::uint64_t>(epoch)));
    table.loss_history.push_back(skipgram_gradient(walks, config.context_size, config.negatives_per_positive, noise,
                                                   rng, tables.weights[0], tables.weights[1], grads.weights[0],
                                                   grads.weights[1]));
    nn::adam_step(tables, grads, adam, config.learning_rate);
  }
  table.vectors = std::move(tables.weights[0]);
  table.context = std::move(tables.weights[1]);
  return table;
}

}  // namespace detail

/// Trains on a fixed walk corpus (no regeneration). Walk entries must be ids
/// from `node_ids`.
inline ModuleEmbeddingTable train_node2vec(const std::vector<Walk>& walks, std::vector<std::string> node_ids,
                                           const Node2VecConfig& config) {
  config.validate();
  if (walks.empty()) throw Error("empty_input", "train_node2vec: empty walk corpus");
  std::sort(node_ids.begin(), node_ids.end());
  node_ids.erase(std::unique(node_ids.begin(), node_ids.end()), node_ids.end());
  std::vector<std::vector<int>> idx;
  for (const auto& w : walks) {
    std::vector<int> iw;
    for (const auto& id : w) {
      auto it = std::lower_bound(node_ids.begin(), node_ids.end(), id);
      if (it == node_ids.end() || *it != id) throw Error("unknown_module", "walk visits unknown node " + id);
      iw.push_back(static_cast<int>(it - node_ids.begin()));
    }
    idx.push_back(std::move(iw));
  }
  return detail::train_skipgram(node_ids, config, [&](int) { return idx; });
}

/// Full node2vec: walks are regenerated every `walk_refresh_interval` epochs
/// (one epoch = one pass over the current walk corpus).
inline ModuleEmbeddingTable train_node2vec(const UnifiedGraph& graph, const Node2VecConfig& config) {
  config.validate();
  if (graph.nodes.empty()) throw Error("empty_input", "train_node2vec: empty graph");
  UndirectedView g(graph);
  return detail::train_skipgram(g.ids(), config, [&](int round) {
    return detail::generate_index_walks(g, config, mix_seed(config.seed, 0x3a1c + static_cast<std::uint64_t>(round)));
  });
}

}  // namespace icsecure
