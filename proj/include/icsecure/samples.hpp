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

// Recommendation samples: (alert, partial playbook, current node, label
// vector) tuples drawn by protecting one start->current path and pruning the
// remaining edges at random; plus the alert-level fold plan.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "icsecure/core/error.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"

namespace icsecure {

inline constexpr double kPruneProbability = 0.5;

struct RecommendationSample {
  std::string alert_id;
  std::string playbook_id;
  Playbook partial;
  std::string current_node;
  std::vector<std::uint8_t> labels;  // one per candidate, EOP last

  std::vector<std::size_t> positive_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i]) out.push_back(i);
    }
    return out;
  }
};

/// Picks one shortest start -> target path uniformly at random and returns
/// its edges as (from, to) index pairs. Empty when target == start.
inline std::vector<std::pair<int, int>> random_shortest_path(const IndexedGraph& g, int target, Rng& rng) {
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> dist(g.size(), kInf);
  std::vector<double> paths(g.size(), 0.0);
  std::deque<int> queue{g.start};
  dist[g.start] = 0;
  paths[g.start] = 1.0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : g.out[u]) {
      if (dist[v] == kInf) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
      if (dist[v] == dist[u] + 1) paths[v] += paths[u];
    }
  }
  if (dist[target] == kInf) throw Error("unreachable_node", "node " + g.node_ids[target] + " unreachable from start");
  std::vector<std::pair<int, int>> edges;
  int node = target;
  while (node != g.start) {
    // Predecessor p is chosen with probability paths[p] / paths[node], which
    // makes every shortest path equally likely.
    std::vector<int> preds;
    std::vector<double> weights;
    double total = 0.0;
    for (int p : g.in[node]) {
      if (dist[p] != kInf && dist[p] + 1 == dist[node]) {
        preds.push_back(p);
        weights.push_back(paths[p]);
        total += paths[p];
      }
    }
    double r = uniform01(rng) * total;
    int pick = preds.back();
    for (std::size_t k = 0; k < preds.size(); ++k) {
      if (r < weights[k]) {
        pick = preds[k];
        break;
      }
      r -= weights[k];
    }
    edges.emplace_back(pick, node);
    node = pick;
  }
  std::reverse(edges.begin(), edges.end());
  return edges;
}

/// Label vector for `current` given the original and partial playbooks:
/// module m is positive iff an original edge leads from current to a node of
/// module m and no partial edge does. EOP is positive iff nothing else is.
inline std::vector<std::uint8_t> label_vector(const Playbook& original, const Playbook& partial,
                                              const std::string& current, const ModuleRegistry& modules) {
  std::set<std::string> orig, kept;
  for (const auto& n : original.successors(current)) orig.insert(original.module_of(n));
  if (partial.has_node(current)) {
    for (const auto& n : partial.successors(current)) kept.insert(partial.module_of(n));
  }
  std::vector<std::uint8_t> labels(modules.num_candidates(), 0);
  bool any = false;
  for (const auto& m : orig) {
    if (m == kStartModule || kept.contains(m)) continue;
    auto idx = modules.candidate_index(m);
    if (!idx) throw Error("unknown_module", "module " + m + " missing from the module registry");
    labels[*idx] = 1;
    any = true;
  }
  if (!any) labels[modules.eop_index()] = 1;
  return labels;
}

inline RecommendationSample make_sample(const std::string& alert_id, const Playbook& playbook,
                                        const std::string& current_node, const ModuleRegistry& modules, Rng& rng,
                                        double prune_probability = kPruneProbability) {
  IndexedGraph g(playbook);
  if (g.start < 0) throw Error("invalid_playbook", "playbook " + playbook.id + " has no start node");
  const int cur = g.index_of(current_node);
  if (cur < 0) throw Error("unknown_current_node", "node " + current_node + " not in playbook " + playbook.id);

  std::set<Edge> protected_edges;
  for (auto [a, b] : random_shortest_path(g, cur, rng)) protected_edges.emplace(g.node_ids[a], g.node_ids[b]);

  RecommendationSample s;
  s.alert_id = alert_id;
  s.playbook_id = playbook.id;
  s.current_node = current_node;
  s.partial.id = playbook.id;
  s.partial.start = playbook.start;
  for (const auto& e : playbook.edges) {
    if (protected_edges.contains(e) || !bernoulli(rng, prune_probability)) s.partial.edges.insert(e);
  }
  std::set<std::string> touched{playbook.start};
  for (const auto& [a, b] : s.partial.edges) {
    touched.insert(a);
    touched.insert(b);
  }
  for (const auto& n : touched) s.partial.nodes.emplace(n, playbook.module_of(n));
  s.labels = label_vector(playbook, s.partial, current_node, modules);
  return s;
}

/// One pass over every (alert, triggered playbook, reachable node) triple,
/// in alert-id / playbook-list / node-id order.
inline std::vector<RecommendationSample> generate_epoch(const Corpus& corpus, const std::vector<std::string>& alert_ids,
                                                        const ModuleRegistry& modules, Rng& rng,
                                                        double prune_probability = kPruneProbability) {
  std::vector<RecommendationSample> out;
  for (const auto& alert : alert_ids) {
    auto it = corpus.mapping.find(alert);
    if (it == corpus.mapping.end()) continue;
    for (const auto& pb_id : it->second) {
      const Playbook& pb = corpus.playbook(pb_id);
      for (const auto& node : pb.reachable_from(pb.start)) out.push_back(make_sample(alert, pb, node, modules, rng, prune_probability));
    }
  }
  return out;
}

inline nlohmann::json sample_to_json(const RecommendationSample& s) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [n, m] : s.partial.nodes) nodes.push_back({{"id", n}, {"module", m}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : s.partial.edges) edges.push_back({a, b});
  return {{"alert", s.alert_id},       {"playbook", s.playbook_id}, {"start", s.partial.start},
          {"nodes", nodes},            {"edges", edges},            {"current_node", s.current_node},
          {"labels", s.positive_indices()}};
}

// ---------------------------------------------------------------------------
// Fold plan

inline constexpr int kUniqueModuleThreshold = 4;
inline constexpr int kDefaultFolds = 5;

struct FoldPlan {
  std::vector<std::vector<std::string>> folds;
  std::vector<std::string> unique_alerts;
  std::set<std::string> unique_modules;
  std::map<std::string, int> module_counts;

  std::vector<std::string> test_alerts(std::size_t fold) const { return folds.at(fold); }

  /// Complement of the test fold plus every unique alert, sorted.
  std::vector<std::string> train_alerts(std::size_t fold) const {
    std::vector<std::string> out(unique_alerts);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      if (f != fold) out.insert(out.end(), folds[f].begin(), folds[f].end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Module occurrence counts summed over each alert's triggered playbooks.
inline std::map<std::string, int> module_occurrence_counts(const Corpus& corpus) {
  std::map<std::string, int> counts;
  for (const auto& [alert, pbs] : corpus.mapping) {
    if (!corpus.alerts.contains(alert)) continue;
    for (const auto& pb_id : pbs) {
      for (const auto& [n, m] : corpus.playbook(pb_id).nodes) {
        if (m != kStartModule) ++counts[m];
      }
    }
  }
  return counts;
}

inline FoldPlan split_folds(const Corpus& corpus, std::uint64_t seed, int n_folds = kDefaultFolds,
                            int unique_threshold = kUniqueModuleThreshold) {
  FoldPlan plan;
  plan.module_counts = module_occurrence_counts(corpus);
  for (const auto& [m, c] : plan.module_counts) {
    if (c < unique_threshold) plan.unique_modules.insert(m);
  }
  std::vector<std::string> regular;
  for (const auto& [id, alert] : corpus.alerts) {
    bool unique = false;
    if (auto it = corpus.mapping.find(id); it != corpus.mapping.end()) {
      for (const auto& pb_id : it->second) {
        for (const auto& [n, m] : corpus.playbook(pb_id).nodes) unique = unique || plan.unique_modules.contains(m);
      }
    }
    (unique ? plan.unique_alerts : regular).push_back(id);
  }
  if (static_cast<int>(regular.size()) < n_folds) {
    throw Error("too_few_alerts", "need at least " + std::to_string(n_folds) + " non-unique alerts, have " +
                                      std::to_string(regular.size()));
  }
  Rng rng(mix_seed(seed, 0xf01d));
  shuffle(regular, rng);
  plan.folds.assign(static_cast<std::size_t>(n_folds), {});
  for (std::size_t i = 0; i < regular.size(); ++i) plan.folds[i % plan.folds.size()].push_back(regular[i]);
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

}  // namespace icsecure
