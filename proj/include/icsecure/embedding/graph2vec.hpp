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

// Whole-graph embeddings of (partial) playbooks: Weisfeiler-Lehman subtree
// documents, PV-DBOW doc vectors trained with negative sampling, and
// frozen-vocabulary inference for unseen graphs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "icsecure/core/error.hpp"
#include "icsecure/core/hash.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"
#include "icsecure/nn/dense.hpp"

namespace icsecure {

enum class GraphVariant { kWithAttributes, kWithoutAttributes };

inline std::string to_string(GraphVariant v) {
  return v == GraphVariant::kWithAttributes ? "with-attributes" : "without-attributes";
}

inline GraphVariant graph_variant_from_string(std::string_view s) {
  if (s == "with-attributes" || s == "with_attributes") return GraphVariant::kWithAttributes;
  if (s == "without-attributes" || s == "without_attributes") return GraphVariant::kWithoutAttributes;
  throw Error("invalid_config", "unknown graph variant '" + std::string(s) + "'");
}

/// Subtree labels of every node at WL iterations 0..h, iteration-major.
struct WlDocument {
  std::vector<std::string> labels;

  std::vector<std::string> sorted() const {
    auto s = labels;
    std::sort(s.begin(), s.end());
    return s;
  }
};

/// Canonical relabeling step: own label plus the sorted multisets of
/// in-neighbor and out-neighbor labels, hashed with FNV-1a.
inline std::string wl_relabel(const std::string& own, std::vector<std::string> in, std::vector<std::string> out) {
  std::sort(in.begin(), in.end());
  std::sort(out.begin(), out.end());
  std::string canon = own;
  canon += "|in:";
  for (const auto& l : in) canon += l + ",";
  canon += "|out:";
  for (const auto& l : out) canon += l + ",";
  return to_hex(fnv1a64(canon));
}

inline WlDocument wl_document(const Playbook& graph, int iterations, GraphVariant variant) {
  if (graph.nodes.empty()) throw Error("empty_input", "wl_document: empty graph");
  if (iterations < 0) throw Error("invalid_config", "wl_document: negative iteration count");
  IndexedGraph g(graph);
  const std::size_t n = g.size();
  std::vector<std::string> cur(n);
  for (std::size_t i = 0; i < n; ++i) {
    cur[i] = variant == GraphVariant::kWithAttributes ? g.modules[i]
                                                      : std::to_string(g.in[i].size() + g.out[i].size());
  }
  WlDocument doc;
  doc.labels.reserve(n * static_cast<std::size_t>(iterations + 1));
  doc.labels.insert(doc.labels.end(), cur.begin(), cur.end());
  for (int t = 0; t < iterations; ++t) {
    std::vector<std::string> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> in, out;
      for (int j : g.in[i]) in.push_back(cur[j]);
      for (int j : g.out[i]) out.push_back(cur[j]);
      next[i] = wl_relabel(cur[i], std::move(in), std::move(out));
    }
    cur = std::move(next);
    doc.labels.insert(doc.labels.end(), cur.begin(), cur.end());
  }
  return doc;
}

struct Graph2VecConfig {
  int wl_iterations = 2;
  int dim = 16;
  int epochs = 500;
  int negatives = 5;
  double learning_rate = 0.025;
  int infer_steps = 100;
  double infer_learning_rate = 0.025;
  bool tied_init = false;
  std::uint64_t seed = 1;
  GraphVariant variant = GraphVariant::kWithAttributes;
};

struct Graph2VecModel {
  Graph2VecConfig config;
  std::vector<std::string> vocab;   // sorted subtree labels
  std::vector<double> label_counts; // training frequency per vocab entry
  nn::Matrix label_vectors;         // vocab x dim
  std::vector<std::string> doc_ids;
  nn::Matrix doc_vectors;           // training docs x dim
  std::vector<double> loss_history;

  int dim() const { return config.dim; }
  int label_index(const std::string& label) const {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), label);
    return it != vocab.end() && *it == label ? static_cast<int>(it - vocab.begin()) : -1;
  }
  AliasTable noise() const {
    std::vector<double> w;
    w.reserve(label_counts.size());
    for (double c : label_counts) w.push_back(std::pow(c, 0.75));
    return AliasTable(w);
  }
};

namespace detail {

inline std::uint64_t document_hash(const std::vector<int>& labels) {
  Fnv1a64 h;
  for (int l : labels) h.update(std::to_string(l) + ",");
  return h.digest();
}

/// Negative-sampling loss and gradient for one doc vector against its label
/// occurrences. Negatives come from `rng`. Gradients are summed, not averaged.
inline double pvdbow_terms(const nn::Vector& doc, const std::vector<int>& labels, int negatives,
                           const AliasTable& noise, Rng& rng, const nn::Matrix& label_vectors, nn::Vector& g_doc,
                           nn::Matrix* g_labels) {
  double loss = 0.0;
  auto term = [&](int l, double target) {
    const double p = nn::sigmoid(doc.dot(label_vectors.row(l)));
    loss -= target > 0 ? std::log(std::max(p, nn::kProbClamp)) : std::log(std::max(1.0 - p, nn::kProbClamp));
    const double g = p - target;
    g_doc += g * label_vectors.row(l).transpose();
    if (g_labels) g_labels->row(l) += g * doc.transpose();
  };
  for (int l : labels) {
    term(l, 1.0);
    for (int k = 0; k < negatives; ++k) {
      const int neg = static_cast<int>(noise.sample(rng));
      if (neg != l) term(neg, 0.0);
    }
  }
  return loss;
}

}  // namespace detail

/// PV-DBOW over WL documents of complete training playbooks. Each epoch is
/// one full-batch Adam step; negatives are keyed by document content so
/// identical documents see identical draws.
template <typename PlaybookPtrs>
Graph2VecModel train_graph2vec(const PlaybookPtrs& playbooks, const Graph2VecConfig& config) {
  std::vector<WlDocument> docs;
  Graph2VecModel model;
  model.config = config;
  for (const Playbook* pb : playbooks) {
    docs.push_back(wl_document(*pb, config.wl_iterations, config.variant));
    model.doc_ids.push_back(pb->id);
  }
  if (docs.empty()) throw Error("empty_input", "train_graph2vec: empty corpus");

  std::map<std::string, double> counts;
  for (const auto& d : docs) {
    for (const auto& l : d.labels) counts[l] += 1.0;
  }
  for (const auto& [l, c] : counts) {
    model.vocab.push_back(l);
    model.label_counts.push_back(c);
  }
  std::vector<std::vector<int>> doc_labels;
  std::vector<std::uint64_t> doc_hashes;
  for (const auto& d : docs) {
    std::vector<int> idx;
    for (const auto& l : d.sorted()) idx.push_back(model.label_index(l));
    doc_hashes.push_back(detail::document_hash(idx));
    doc_labels.push_back(std::move(idx));
  }

  const auto n_docs = static_cast<Eigen::Index>(docs.size());
  const auto n_labels = static_cast<Eigen::Index>(model.vocab.size());
  const int dim = config.dim;
  Rng init_rng(mix_seed(config.seed, 0x96));
  nn::ParameterSet p;
  p.weights.push_back(nn::Matrix(n_docs, dim));
  p.weights.push_back(nn::Matrix::Zero(n_labels, dim));
  p.biases.assign(2, nn::Vector());
  nn::Vector shared(dim);
  for (int c = 0; c < dim; ++c) shared(c) = (uniform01(init_rng) - 0.5) / dim;
  for (Eigen::Index r = 0; r < n_docs; ++r) {
    for (int c = 0; c < dim; ++c) p.weights[0](r, c) = config.tied_init ? shared(c) : (uniform01(init_rng) - 0.5) / dim;
  }

  const AliasTable noise = model.noise();
  nn::AdamState adam = nn::AdamState::for_params(p);
  nn::ParameterSet g = p;
  double total_terms = 0;
  for (const auto& d : doc_labels) total_terms += static_cast<double>(d.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    g.weights[0].setZero();
    g.weights[1].setZero();
    double loss = 0.0;
    for (Eigen::Index d = 0; d < n_docs; ++d) {
      Rng rng(mix_seed(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)), doc_hashes[d]));
      nn::Vector doc = p.weights[0].row(d).transpose();
      nn::Vector g_doc = nn::Vector::Zero(dim);
      loss += detail::pvdbow_terms(doc, doc_labels[d], config.negatives, noise, rng, p.weights[1], g_doc,
                                   &g.weights[1]);
      g.weights[0].row(d) = g_doc.transpose();
    }
    model.loss_history.push_back(loss / total_terms);
    g.weights[0] /= total_terms;
    g.weights[1] /= total_terms;
    nn::adam_step(p, g, adam, config.learning_rate);
  }
  model.doc_vectors = std::move(p.weights[0]);
  model.label_vectors = std::move(p.weights[1]);
  return model;
}

inline Graph2VecModel train_graph2vec(const std::vector<Playbook>& playbooks, const Graph2VecConfig& config) {
  std::vector<const Playbook*> ptrs;
  for (const auto& pb : playbooks) ptrs.push_back(&pb);
  return train_graph2vec(ptrs, config);
}

struct GraphEmbedding {
  nn::Vector vector;
  bool no_known_labels = false;  // zero vector returned; nothing in the vocabulary
};

/// Known vocabulary indices of a document, sorted. This is all inference
/// depends on, so it doubles as a cache key.
inline std::vector<int> known_labels(const Graph2VecModel& model, const WlDocument& doc) {
  std::vector<int> idx;
  for (const auto& l : doc.labels) {
    if (int i = model.label_index(l); i >= 0) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Optimizes a fresh doc vector against the frozen label vectors. A pure
/// function of (model, known labels, seed).
inline GraphEmbedding infer_from_labels(const Graph2VecModel& model, const std::vector<int>& labels,
                                        std::uint64_t seed) {
  const int dim = model.dim();
  GraphEmbedding out{nn::Vector::Zero(dim), labels.empty()};
  if (labels.empty()) return out;
  Rng rng(mix_seed(seed, 0x1f));
  nn::ParameterSet p;
  p.weights.push_back(nn::Matrix(1, dim));
  p.biases.push_back(nn::Vector());
  for (int c = 0; c < dim; ++c) p.weights[0](0, c) = (uniform01(rng) - 0.5) / dim;
  nn::ParameterSet g = p;
  nn::AdamState adam = nn::AdamState::for_params(p);
  const AliasTable noise = model.noise();
  const double n_terms = static_cast<double>(labels.size());
  for (int step = 0; step < model.config.infer_steps; ++step) {
    nn::Vector doc = p.weights[0].row(0).transpose();
    nn::Vector g_doc = nn::Vector::Zero(dim);
    detail::pvdbow_terms(doc, labels, model.config.negatives, noise, rng, model.label_vectors, g_doc, nullptr);
    g.weights[0].row(0) = (g_doc / n_terms).transpose();
    nn::adam_step(p, g, adam, model.config.infer_learning_rate);
  }
  out.vector = p.weights[0].row(0).transpose();
  return out;
}

inline GraphEmbedding infer_graph_embedding(const Graph2VecModel& model, const Playbook& graph, std::uint64_t seed) {
  const WlDocument doc = wl_document(graph, model.config.wl_iterations, model.config.variant);
  return infer_from_labels(model, known_labels(model, doc), seed);
}

inline double cosine_similarity(const nn::Vector& a, const nn::Vector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace icsecure
