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

// Reference recommenders: a context-free popularity count and a latent-factor
// model fit by multiplicative-update NMF. Both consume the same sample
// generator as the neural scorer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "icsecure/core/error.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"
#include "icsecure/samples.hpp"

namespace icsecure {

// ---------------------------------------------------------------------------
// Frequency

struct FrequencyModel {
  std::vector<std::int64_t> counts;  // per candidate, EOP last
};

inline FrequencyModel train_frequency(const Corpus& corpus, const std::vector<std::string>& train_alerts,
                                      const ModuleRegistry& modules, Rng& rng, int epochs = 100,
                                      double prune_probability = kPruneProbability) {
  FrequencyModel m;
  m.counts.assign(modules.num_candidates(), 0);
  for (int e = 0; e < epochs; ++e) {
    for (const auto& s : generate_epoch(corpus, train_alerts, modules, rng, prune_probability)) {
      for (std::size_t i = 0; i < s.labels.size(); ++i) m.counts[i] += s.labels[i];
    }
  }
  return m;
}

/// Counts divided by the largest count; all zeros stay zero.
inline std::vector<double> frequency_scores(const FrequencyModel& m) {
  const std::int64_t top = m.counts.empty() ? 0 : *std::max_element(m.counts.begin(), m.counts.end());
  std::vector<double> s(m.counts.size(), 0.0);
  if (top == 0) return s;
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(m.counts[i]) / static_cast<double>(top);
  return s;
}

// ---------------------------------------------------------------------------
// NMF

inline constexpr double kNmfEpsilon = 1e-9;

struct NmfModel {
  Eigen::MatrixXd W;  // samples x rank
  Eigen::MatrixXd H;  // rank x items
  std::vector<double> objective_history;  // squared Frobenius error, one entry per iteration plus the initial value
  int iterations = 0;

  int rank() const { return static_cast<int>(H.rows()); }
};

inline double nmf_objective(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H) {
  return (V - W * H).squaredNorm();
}

/// Lee-Seung updates for min ||V - WH||_F^2 with W, H >= 0.
inline NmfModel nmf_fit(const Eigen::MatrixXd& V, int rank, int iterations, std::uint64_t seed) {
  if (rank < 1 || iterations < 0) throw Error("invalid_config", "nmf: rank must be >= 1 and iterations >= 0");
  if (V.size() == 0) throw Error("empty_input", "nmf: empty matrix");
  if ((V.array() < 0.0).any() || !V.allFinite()) throw Error("negative_entries", "nmf: matrix must be non-negative");
  Rng rng(seed);
  const double scale = std::sqrt(std::max(V.mean(), 1e-12) / rank);
  NmfModel m;
  m.W.resize(V.rows(), rank);
  m.H.resize(rank, V.cols());
  for (Eigen::Index i = 0; i < m.W.size(); ++i) m.W.data()[i] = scale * (0.01 + uniform01(rng));
  for (Eigen::Index i = 0; i < m.H.size(); ++i) m.H.data()[i] = scale * (0.01 + uniform01(rng));
  m.objective_history.push_back(nmf_objective(V, m.W, m.H));
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd WtW = m.W.transpose() * m.W;
    m.H.array() *= (m.W.transpose() * V).array() / ((WtW * m.H).array() + kNmfEpsilon);
    const Eigen::MatrixXd HHt = m.H * m.H.transpose();
    m.W.array() *= (V * m.H.transpose()).array() / ((m.W * HHt).array() + kNmfEpsilon);
    m.objective_history.push_back(nmf_objective(V, m.W, m.H));
  }
  m.iterations = iterations;
  return m;
}

/// Candidate-space presence row: modules present in the partial playbook
/// (START excluded), optionally OR-ed with the label vector.
inline Eigen::RowVectorXd nmf_row(const RecommendationSample& s, const ModuleRegistry& modules, bool include_labels) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(modules.num_candidates()));
  for (const auto& [n, m] : s.partial.nodes) {
    if (m == kStartModule) continue;
    if (auto idx = modules.candidate_index(m)) row(static_cast<Eigen::Index>(*idx)) = 1.0;
  }
  if (include_labels) {
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
      if (s.labels[i]) row(static_cast<Eigen::Index>(i)) = 1.0;
    }
  }
  return row;
}

inline Eigen::MatrixXd nmf_training_matrix(const std::vector<RecommendationSample>& samples,
                                           const ModuleRegistry& modules) {
  Eigen::MatrixXd V(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(modules.num_candidates()));
  for (std::size_t i = 0; i < samples.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = nmf_row(samples[i], modules, true);
  return V;
}

/// Fits on exactly one generated epoch of training samples.
inline NmfModel train_nmf(const Corpus& corpus, const std::vector<std::string>& train_alerts,
                          const ModuleRegistry& modules, Rng& rng, int rank = 16, int iterations = 200,
                          double prune_probability = kPruneProbability) {
  const auto samples = generate_epoch(corpus, train_alerts, modules, rng, prune_probability);
  if (samples.empty()) throw Error("empty_input", "nmf: training alerts produce no samples");
  return nmf_fit(nmf_training_matrix(samples, modules), rank, iterations, rng());
}

/// Projects a query row onto the frozen H (non-negative, multiplicative
/// updates on the weight row) and returns the reconstruction.
inline std::vector<double> nmf_project(const NmfModel& m, const Eigen::RowVectorXd& query, int iterations = 100) {
  if (query.size() != m.H.cols()) throw Error("shape_mismatch", "nmf: query width does not match H");
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Constant(m.H.rows(), 1.0 / m.H.rows());
  const Eigen::MatrixXd HHt = m.H * m.H.transpose();
  const Eigen::RowVectorXd qHt = query * m.H.transpose();
  for (int it = 0; it < iterations; ++it) w.array() *= qHt.array() / ((w * HHt).array() + kNmfEpsilon);
  const Eigen::RowVectorXd r = w * m.H;
  return {r.data(), r.data() + r.size()};
}

inline std::vector<double> nmf_scores(const NmfModel& m, const RecommendationSample& query,
                                      const ModuleRegistry& modules, int iterations = 100) {
  return nmf_project(m, nmf_row(query, modules, false), iterations);
}

inline nlohmann::json baseline_summary(const FrequencyModel& f, const NmfModel& n, const ModuleRegistry& modules) {
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t i = 0; i < f.counts.size(); ++i) counts[modules.candidate(i)] = f.counts[i];
  return {{"frequency_counts", counts},
          {"nmf",
           {{"W_shape", {n.W.rows(), n.W.cols()}},
            {"H_shape", {n.H.rows(), n.H.cols()}},
            {"iterations", n.iterations},
            {"final_objective", n.objective_history.empty() ? 0.0 : n.objective_history.back()}}}};
}

}  // namespace icsecure
