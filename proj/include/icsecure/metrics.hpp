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

// Top-k ranking metrics. A ranking is a list of candidate indices, best
// first; the relevant set is the indices whose label is 1.

#include <algorithm>
#include <cstddef>
#include <set>
#include <vector>

#include "icsecure/core/error.hpp"

namespace icsecure {

using Ranking = std::vector<std::size_t>;
using RelevantSet = std::set<std::size_t>;

namespace detail {
inline void check_k(int k) {
  if (k < 1) throw Error("invalid_k", "k must be >= 1");
}
}  // namespace detail

/// Relevant items among the first k (or fewer, if the ranking is shorter).
inline std::size_t hit_count(const Ranking& ranking, const RelevantSet& relevant, int k) {
  detail::check_k(k);
  const std::size_t n = std::min(ranking.size(), static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += relevant.contains(ranking[i]) ? 1 : 0;
  return hits;
}

inline double precision_at_k(const Ranking& ranking, const RelevantSet& relevant, int k) {
  detail::check_k(k);
  if (relevant.empty()) return 0.0;
  return static_cast<double>(hit_count(ranking, relevant, k)) / k;
}

/// An empty relevant set scores 1; the sample generator never produces one.
inline double recall_at_k(const Ranking& ranking, const RelevantSet& relevant, int k) {
  detail::check_k(k);
  if (relevant.empty()) return 1.0;
  return static_cast<double>(hit_count(ranking, relevant, k)) / static_cast<double>(relevant.size());
}

/// Sum of precision@i over relevant positions i <= k, divided by
/// min(k, |relevant|).
inline double average_precision_at_k(const Ranking& ranking, const RelevantSet& relevant, int k) {
  detail::check_k(k);
  if (relevant.empty()) return 1.0;
  const std::size_t n = std::min(ranking.size(), static_cast<std::size_t>(k));
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (relevant.contains(ranking[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(static_cast<std::size_t>(k), relevant.size()));
}

}  // namespace icsecure
