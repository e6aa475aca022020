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

// Independent reference implementations used as test oracles. Nothing here
// calls into the code under test except for plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "icsecure/core/model.hpp"
#include "icsecure/nn/dense.hpp"

namespace icsecure::oracle {

// --- dense networks -----------------------------------------------------------

inline double act(nn::Activation a, double z) {
  switch (a) {
    case nn::Activation::kRelu: return z > 0 ? z : 0.0;
    case nn::Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
    case nn::Activation::kIdentity: return z;
  }
  return z;
}

/// Plain nested loops, one sample at a time. Also reports the smallest
/// |pre-activation| seen at hidden ReLU units, so callers can avoid kinks.
inline std::vector<double> forward(const nn::DenseNetworkSpec& spec, const nn::ParameterSet& p,
                                   const std::vector<double>& x, double* min_relu_margin = nullptr) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const auto& W = p.weights[l];
    std::vector<double> next(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double z = p.biases[l](r);
      for (Eigen::Index c = 0; c < W.cols(); ++c) z += W(r, c) * a[static_cast<std::size_t>(c)];
      if (min_relu_margin && spec.activation(l) == nn::Activation::kRelu) {
        *min_relu_margin = std::min(*min_relu_margin, std::abs(z));
      }
      next[static_cast<std::size_t>(r)] = act(spec.activation(l), z);
    }
    a = std::move(next);
  }
  return a;
}

/// Mean loss over every output element of a batch given as columns.
inline double batch_loss(const nn::DenseNetworkSpec& spec, const nn::ParameterSet& p, const nn::Matrix& X,
                         const nn::Matrix& T, nn::Loss loss) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    std::vector<double> x(X.col(j).data(), X.col(j).data() + X.rows());
    const auto y = forward(spec, p, x);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double t = T(static_cast<Eigen::Index>(i), j);
      if (loss == nn::Loss::kBce) {
        s -= t * std::log(y[i]) + (1 - t) * std::log(1 - y[i]);
      } else {
        s += (y[i] - t) * (y[i] - t);
      }
    }
  }
  return s / static_cast<double>(T.size());
}

/// Relative error with an absolute floor: both sides below `floor` in
/// magnitude count as equal when they differ by less than floor * tol.
inline double relative_error(double a, double b, double floor = 1e-7) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

/// Worst relative error between the analytic gradient and central
/// differences with step h, over every parameter.
inline double gradient_check(const nn::DenseNetworkSpec& spec, nn::ParameterSet p, const nn::ParameterSet& analytic,
                             const nn::Matrix& X, const nn::Matrix& T, nn::Loss loss, double h = 1e-5) {
  double worst = 0.0;
  auto probe = [&](double& slot, double g) {
    const double orig = slot;
    slot = orig + h;
    const double up = batch_loss(spec, p, X, T, loss);
    slot = orig - h;
    const double down = batch_loss(spec, p, X, T, loss);
    slot = orig;
    worst = std::max(worst, relative_error(g, (up - down) / (2 * h)));
  };
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < p.weights[l].size(); ++i) probe(p.weights[l].data()[i], analytic.weights[l].data()[i]);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) probe(p.biases[l].data()[i], analytic.biases[l].data()[i]);
  }
  return worst;
}

// --- ranking metrics ------------------------------------------------------------

struct MetricTriple {
  long hits = 0;
  double precision = 0, recall = 0, ap = 0;
};

/// Brute-force recomputation straight from the definitions.
inline MetricTriple metrics(const std::vector<std::size_t>& ranking, const std::set<std::size_t>& rel, int k) {
  MetricTriple m;
  std::vector<bool> hit;
  for (int i = 0; i < k && i < static_cast<int>(ranking.size()); ++i) {
    hit.push_back(rel.count(ranking[static_cast<std::size_t>(i)]) == 1);
  }
  for (bool b : hit) m.hits += b;
  if (rel.empty()) {
    m.precision = 0;
    m.recall = 1;
    m.ap = 1;
    return m;
  }
  m.precision = static_cast<double>(m.hits) / k;
  m.recall = static_cast<double>(m.hits) / static_cast<double>(rel.size());
  double sum = 0;
  for (std::size_t i = 0; i < hit.size(); ++i) {
    if (!hit[i]) continue;
    long upto = 0;
    for (std::size_t j = 0; j <= i; ++j) upto += hit[j];
    sum += static_cast<double>(upto) / static_cast<double>(i + 1);
  }
  m.ap = sum / static_cast<double>(std::min<std::size_t>(static_cast<std::size_t>(k), rel.size()));
  return m;
}

// --- samples --------------------------------------------------------------------

/// Hop distances from `from` by repeated edge relaxation over the edge list.
inline std::map<std::string, int> hop_distances(const Playbook& pb, const std::string& from) {
  std::map<std::string, int> d{{from, 0}};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [a, b] : pb.edges) {
      auto ia = d.find(a);
      if (ia == d.end()) continue;
      auto ib = d.find(b);
      if (ib == d.end() || ib->second > ia->second + 1) {
        d[b] = ia->second + 1;
        changed = true;
      }
    }
  }
  return d;
}

/// Every invariant a generated sample must satisfy; returns a description of
/// the first one that fails, or an empty string.
inline std::string sample_violation(const Playbook& original, const Playbook& partial, const std::string& current,
                                    const std::vector<std::uint8_t>& labels, const ModuleRegistry& modules) {
  for (const auto& e : partial.edges) {
    if (!original.edges.count(e)) return "edge not in original: " + e.first + "->" + e.second;
  }
  if (partial.start != original.start || !partial.nodes.count(partial.start)) return "start node missing";
  for (const auto& [n, m] : partial.nodes) {
    auto it = original.nodes.find(n);
    if (it == original.nodes.end() || it->second != m) return "node not in original: " + n;
    if (n == partial.start) continue;
    bool touched = false;
    for (const auto& [a, b] : partial.edges) touched = touched || a == n || b == n;
    if (!touched) return "isolated node: " + n;
  }
  for (const auto& [a, b] : original.edges) {
    if (partial.edges.count({a, b}) && (!partial.nodes.count(a) || !partial.nodes.count(b))) return "edge endpoint dropped";
  }
  const auto d_orig = hop_distances(original, original.start);
  const auto d_part = hop_distances(partial, partial.start);
  auto it = d_part.find(current);
  if (it == d_part.end()) return "current node not reachable in partial";
  if (it->second != d_orig.at(current)) return "protected path is not a shortest path";

  std::set<std::string> orig_mods, kept_mods;
  for (const auto& [a, b] : original.edges) {
    if (a == current) orig_mods.insert(original.nodes.at(b));
  }
  for (const auto& [a, b] : partial.edges) {
    if (a == current) kept_mods.insert(partial.nodes.at(b));
  }
  const auto cands = modules.candidates();
  if (labels.size() != cands.size()) return "label length";
  bool any_module = false;
  for (std::size_t i = 0; i + 1 < cands.size(); ++i) {
    const bool want = orig_mods.count(cands[i]) && !kept_mods.count(cands[i]);
    if (static_cast<bool>(labels[i]) != want) return "label mismatch at " + cands[i];
    any_module = any_module || want;
  }
  if (cands.back() != kEopModule) return "EOP is not the last candidate";
  if (static_cast<bool>(labels.back()) == any_module) return "EOP label not exclusive";
  return "";
}


// --- random gradient-check cases ------------------------------------------------

struct GradCase {
  nn::DenseNetworkSpec spec;
  nn::ParameterSet params;
  nn::Matrix inputs, targets;
  nn::Loss loss = nn::Loss::kBce;
};

/// Small random network, batch and loss. Inputs are redrawn until every
/// hidden ReLU pre-activation is at least 1e-3 away from its kink, so the
/// finite differences never straddle it.
template <typename Rng>
GradCase random_grad_case(Rng& rng) {
  std::uniform_int_distribution<int> dim(1, 6), depth(1, 3), batch(1, 4), coin(0, 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GradCase c;
  c.spec.layer_dims.push_back(dim(rng));
  const int hidden = depth(rng);
  for (int i = 0; i < hidden; ++i) c.spec.layer_dims.push_back(dim(rng) + 1);
  c.spec.layer_dims.push_back(dim(rng));
  const nn::Activation acts[] = {nn::Activation::kRelu, nn::Activation::kSigmoid, nn::Activation::kIdentity};
  c.spec.hidden_activation = acts[coin(rng)];
  c.loss = coin(rng) == 0 ? nn::Loss::kMse : nn::Loss::kBce;
  c.spec.output_activation = c.loss == nn::Loss::kBce ? nn::Activation::kSigmoid : acts[coin(rng)];
  c.params = nn::ParameterSet::zeros(c.spec);
  for (auto& w : c.params.weights) w = w.unaryExpr([&](double) { return u(rng); });
  for (auto& b : c.params.biases) b = b.unaryExpr([&](double) { return 0.5 * u(rng); });
  const int n = batch(rng);
  c.inputs.resize(c.spec.input_dim(), n);
  c.targets.resize(c.spec.output_dim(), n);
  for (int j = 0; j < n; ++j) {
    for (int attempt = 0;; ++attempt) {
      std::vector<double> x(static_cast<std::size_t>(c.spec.input_dim()));
      for (auto& v : x) v = u(rng);
      double margin = std::numeric_limits<double>::infinity();
      forward(c.spec, c.params, x, &margin);
      if (margin >= 1e-3 || attempt > 1000) {
        for (std::size_t i = 0; i < x.size(); ++i) c.inputs(static_cast<Eigen::Index>(i), j) = x[i];
        break;
      }
    }
    for (int i = 0; i < c.spec.output_dim(); ++i) {
      c.targets(i, j) = c.loss == nn::Loss::kBce ? static_cast<double>(coin(rng) == 0) : u(rng);
    }
  }
  return c;
}

}  // namespace icsecure::oracle
