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


#include <gtest/gtest.h>

#include <random>

#include "icsecure/metrics.hpp"
#include "oracles.hpp"

namespace icsecure {
namespace {

TEST(Metrics, HandExamples) {
  const Ranking r = {4, 1, 7, 2, 0};
  const RelevantSet rel = {1, 2, 9};
  EXPECT_EQ(hit_count(r, rel, 1), 0u);
  EXPECT_EQ(hit_count(r, rel, 4), 2u);
  EXPECT_DOUBLE_EQ(precision_at_k(r, rel, 4), 0.5);
  EXPECT_DOUBLE_EQ(recall_at_k(r, rel, 4), 2.0 / 3.0);
  // hits at ranks 2 and 4: (1/2 + 2/4) / min(4, 3)
  EXPECT_DOUBLE_EQ(average_precision_at_k(r, rel, 4), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(average_precision_at_k(r, rel, 2), 0.5 / 2.0);
  // single relevant item at rank 1
  EXPECT_DOUBLE_EQ(average_precision_at_k({3, 1}, {3}, 5), 1.0);
  // MAP@1 equals precision@1
  EXPECT_DOUBLE_EQ(average_precision_at_k(r, {4}, 1), precision_at_k(r, {4}, 1));
}

TEST(Metrics, KBeyondRankingLength) {
  const Ranking r = {0, 1};
  EXPECT_DOUBLE_EQ(precision_at_k(r, {0, 1}, 5), 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(recall_at_k(r, {0, 1}, 5), 1.0);
}

TEST(Metrics, EmptyRelevantSet) {
  EXPECT_DOUBLE_EQ(precision_at_k({0, 1}, {}, 2), 0.0);
  EXPECT_DOUBLE_EQ(recall_at_k({0, 1}, {}, 2), 1.0);
  EXPECT_DOUBLE_EQ(average_precision_at_k({0, 1}, {}, 2), 1.0);
}

TEST(Metrics, InvalidK) {
  EXPECT_THROW(precision_at_k({0}, {0}, 0), Error);
  EXPECT_THROW(recall_at_k({0}, {0}, -1), Error);
  EXPECT_THROW(average_precision_at_k({0}, {0}, 0), Error);
}

TEST(Metrics, MatchBruteForceOracle) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    Ranking r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = i;
    std::shuffle(r.begin(), r.end(), rng);
    RelevantSet rel;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 3 == 0) rel.insert(i);
    }
    for (int k = 1; k <= static_cast<int>(n) + 2; ++k) {
      const auto want = oracle::metrics(r, rel, k);
      EXPECT_EQ(static_cast<long>(hit_count(r, rel, k)), want.hits);
      EXPECT_NEAR(precision_at_k(r, rel, k), want.precision, 1e-12);
      EXPECT_NEAR(recall_at_k(r, rel, k), want.recall, 1e-12);
      EXPECT_NEAR(average_precision_at_k(r, rel, k), want.ap, 1e-12);
    }
    // structural: recall monotone, full at k = n
    double prev = 0;
    for (int k = 1; k <= static_cast<int>(n); ++k) {
      const double rc = recall_at_k(r, rel, k);
      EXPECT_GE(rc, prev);
      prev = rc;
    }
    EXPECT_EQ(recall_at_k(r, rel, static_cast<int>(n)), 1.0);
  }
}

}  // namespace
}  // namespace icsecure
