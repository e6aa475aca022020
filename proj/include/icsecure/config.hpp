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

// Every training hyperparameter in one place, with JSON overlay so an
// experiment is reproducible from a single config file.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsecure/core/error.hpp"
#include "icsecure/embedding/alert.hpp"
#include "icsecure/embedding/graph2vec.hpp"
#include "icsecure/embedding/node2vec.hpp"

namespace icsecure {

struct NcfConfig {
  std::vector<int> hidden = {64, 64};
  double learning_rate = 0.001;
  int epochs = 1000;
  int batch_size = 64;
  bool standardize_inputs = true;
  std::uint64_t seed = 1;
};

struct BaselineConfig {
  int frequency_epochs = 100;
  int nmf_rank = 16;
  int nmf_iterations = 200;
  int nmf_projection_iterations = 100;
};

struct PipelineConfig {
  AutoencoderConfig autoencoder;
  Node2VecConfig node2vec;
  Graph2VecConfig graph2vec;
  NcfConfig ncf;
  BaselineConfig baselines;
  double prune_probability = 0.5;
  std::uint64_t graph_infer_seed = 0x5eed;

  /// Propagates one global seed into every component.
  void set_seed(std::uint64_t seed) {
    autoencoder.seed = mix_seed(seed, 1);
    node2vec.seed = mix_seed(seed, 2);
    graph2vec.seed = mix_seed(seed, 3);
    ncf.seed = mix_seed(seed, 4);
    graph_infer_seed = mix_seed(seed, 5);
  }
};

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  using nlohmann::json;
  return json{
      {"autoencoder",
       {{"hidden_dim", c.autoencoder.hidden_dim},
        {"code_dim", c.autoencoder.code_dim},
        {"learning_rate", c.autoencoder.learning_rate},
        {"epochs", c.autoencoder.epochs},
        {"gradient_clip", c.autoencoder.gradient_clip},
        {"seed", c.autoencoder.seed}}},
      {"node2vec",
       {{"embedding_dim", c.node2vec.embedding_dim},
        {"walk_length", c.node2vec.walk_length},
        {"context_size", c.node2vec.context_size},
        {"walks_per_node", c.node2vec.walks_per_node},
        {"p", c.node2vec.p},
        {"q", c.node2vec.q},
        {"epochs", c.node2vec.epochs},
        {"negatives_per_positive", c.node2vec.negatives_per_positive},
        {"learning_rate", c.node2vec.learning_rate},
        {"walk_refresh_interval", c.node2vec.walk_refresh_interval},
        {"tied_init", c.node2vec.tied_init},
        {"seed", c.node2vec.seed}}},
      {"graph2vec",
       {{"wl_iterations", c.graph2vec.wl_iterations},
        {"dim", c.graph2vec.dim},
        {"epochs", c.graph2vec.epochs},
        {"negatives", c.graph2vec.negatives},
        {"learning_rate", c.graph2vec.learning_rate},
        {"infer_steps", c.graph2vec.infer_steps},
        {"infer_learning_rate", c.graph2vec.infer_learning_rate},
        {"tied_init", c.graph2vec.tied_init},
        {"seed", c.graph2vec.seed}}},
      {"ncf",
       {{"hidden", c.ncf.hidden},
        {"learning_rate", c.ncf.learning_rate},
        {"epochs", c.ncf.epochs},
        {"batch_size", c.ncf.batch_size},
        {"standardize_inputs", c.ncf.standardize_inputs},
        {"seed", c.ncf.seed}}},
      {"baselines",
       {{"frequency_epochs", c.baselines.frequency_epochs},
        {"nmf_rank", c.baselines.nmf_rank},
        {"nmf_iterations", c.baselines.nmf_iterations},
        {"nmf_projection_iterations", c.baselines.nmf_projection_iterations}}},
      {"prune_probability", c.prune_probability},
      {"graph_infer_seed", c.graph_infer_seed},
  };
}

namespace detail {
template <typename T>
void overlay(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}
}  // namespace detail

/// Applies the fields present in `j` on top of `base`. Unknown sections are
/// rejected so typos do not silently fall back to defaults.
inline PipelineConfig config_overlay(PipelineConfig c, const nlohmann::json& j) {
  using detail::overlay;
  static const std::vector<std::string> kSections = {"autoencoder", "node2vec",          "graph2vec",       "ncf",
                                                     "baselines",   "prune_probability", "graph_infer_seed", "seed"};
  try {
    for (const auto& [k, v] : j.items()) {
      if (std::find(kSections.begin(), kSections.end(), k) == kSections.end()) {
        throw Error("invalid_config", "unknown config section '" + k + "'");
      }
    }
    if (j.contains("seed")) c.set_seed(j.at("seed").get<std::uint64_t>());
    if (j.contains("autoencoder")) {
      const auto& a = j.at("autoencoder");
      overlay(a, "hidden_dim", c.autoencoder.hidden_dim);
      overlay(a, "code_dim", c.autoencoder.code_dim);
      overlay(a, "learning_rate", c.autoencoder.learning_rate);
      overlay(a, "epochs", c.autoencoder.epochs);
      overlay(a, "gradient_clip", c.autoencoder.gradient_clip);
      overlay(a, "seed", c.autoencoder.seed);
    }
    if (j.contains("node2vec")) {
      const auto& a = j.at("node2vec");
      overlay(a, "embedding_dim", c.node2vec.embedding_dim);
      overlay(a, "walk_length", c.node2vec.walk_length);
      overlay(a, "context_size", c.node2vec.context_size);
      overlay(a, "walks_per_node", c.node2vec.walks_per_node);
      overlay(a, "p", c.node2vec.p);
      overlay(a, "q", c.node2vec.q);
      overlay(a, "epochs", c.node2vec.epochs);
      overlay(a, "negatives_per_positive", c.node2vec.negatives_per_positive);
      overlay(a, "learning_rate", c.node2vec.learning_rate);
      overlay(a, "walk_refresh_interval", c.node2vec.walk_refresh_interval);
      overlay(a, "tied_init", c.node2vec.tied_init);
      overlay(a, "seed", c.node2vec.seed);
    }
    if (j.contains("graph2vec")) {
      const auto& a = j.at("graph2vec");
      overlay(a, "wl_iterations", c.graph2vec.wl_iterations);
      overlay(a, "dim", c.graph2vec.dim);
      overlay(a, "epochs", c.graph2vec.epochs);
      overlay(a, "negatives", c.graph2vec.negatives);
      overlay(a, "learning_rate", c.graph2vec.learning_rate);
      overlay(a, "infer_steps", c.graph2vec.infer_steps);
      overlay(a, "infer_learning_rate", c.graph2vec.infer_learning_rate);
      overlay(a, "tied_init", c.graph2vec.tied_init);
      overlay(a, "seed", c.graph2vec.seed);
    }
    if (j.contains("ncf")) {
      const auto& a = j.at("ncf");
      overlay(a, "hidden", c.ncf.hidden);
      overlay(a, "learning_rate", c.ncf.learning_rate);
      overlay(a, "epochs", c.ncf.epochs);
      overlay(a, "batch_size", c.ncf.batch_size);
      overlay(a, "standardize_inputs", c.ncf.standardize_inputs);
      overlay(a, "seed", c.ncf.seed);
    }
    if (j.contains("baselines")) {
      const auto& a = j.at("baselines");
      overlay(a, "frequency_epochs", c.baselines.frequency_epochs);
      overlay(a, "nmf_rank", c.baselines.nmf_rank);
      overlay(a, "nmf_iterations", c.baselines.nmf_iterations);
      overlay(a, "nmf_projection_iterations", c.baselines.nmf_projection_iterations);
    }
    overlay(j, "prune_probability", c.prune_probability);
    overlay(j, "graph_infer_seed", c.graph_infer_seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_config", std::string("bad config value: ") + e.what());
  }
  return c;
}

}  // namespace icsecure
