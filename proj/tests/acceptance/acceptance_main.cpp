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


// Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
// if any fails. Pass criterion names (A1 ... A10) to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "golden.hpp"
#include "icsecure/baselines.hpp"
#include "icsecure/bundle.hpp"
#include "icsecure/core/platform.hpp"
#include "icsecure/datagen.hpp"
#include "icsecure/evaluation.hpp"
#include "icsecure/metrics.hpp"
#include "icsecure/recommender.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace icsecure::acceptance {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- A1 ------------------------------------------------------------------------

Verdict gradient_check() {
  std::mt19937_64 gen(0xa1);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto c = oracle::random_grad_case(gen);
    const auto acts = nn::forward_batch(c.spec, c.params, c.inputs);
    const auto g = nn::backward_batch(c.spec, c.params, acts, c.inputs, c.targets, c.loss);
    worst = std::max(worst, oracle::gradient_check(c.spec, c.params, g, c.inputs, c.targets, c.loss, 1e-5));
  }
  return {worst < 1e-4, fmt("50 networks, worst relative error %.3g (limit 1e-4)", worst)};
}

// --- A2 ------------------------------------------------------------------------

Verdict metric_oracle() {
  Rng rng(0xa2);
  long hit_mismatch = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 30);
    Ranking ranking(n);
    std::iota(ranking.begin(), ranking.end(), 0);
    shuffle(ranking, rng);
    RelevantSet rel;
    for (std::size_t i = 0; i < n; ++i) {
      if (bernoulli(rng, 0.3)) rel.insert(i);
    }
    if (rel.empty() && trial % 10 != 0) rel.insert(uniform_index(rng, n));
    for (int k = 1; k <= static_cast<int>(n) + 2; ++k) {
      const auto want = oracle::metrics(ranking, rel, k);
      if (static_cast<long>(hit_count(ranking, rel, k)) != want.hits) ++hit_mismatch;
      worst = std::max({worst, std::abs(precision_at_k(ranking, rel, k) - want.precision),
                        std::abs(recall_at_k(ranking, rel, k) - want.recall),
                        std::abs(average_precision_at_k(ranking, rel, k) - want.ap)});
    }
  }
  return {hit_mismatch == 0 && worst <= 1e-12,
          fmt("1000 rankings, %ld hit-count mismatches, worst ratio error %.3g", hit_mismatch, worst)};
}

// --- A3 ------------------------------------------------------------------------

Verdict sample_invariants() {
  std::mt19937_64 gen(0xa3);
  long samples = 0, bad = 0;
  std::string first;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_pb = 1 + static_cast<int>(gen() % 4);
    const int n_mod = 2 + static_cast<int>(gen() % 8);
    const Corpus c = testing::random_corpus(gen, n_pb, n_mod, 7, 1 + static_cast<int>(gen() % 6));
    const auto reg = c.module_registry();
    Rng rng(mix_seed(0xa3, static_cast<std::uint64_t>(trial)));
    for (const auto& s : generate_epoch(c, c.alert_ids(), reg, rng)) {
      ++samples;
      const auto msg = oracle::sample_violation(c.playbook(s.playbook_id), s.partial, s.current_node, s.labels, reg);
      if (!msg.empty()) {
        if (bad++ == 0) first = fmt("corpus %d: %s", trial, msg.c_str());
      }
    }
  }
  return {bad == 0 && samples > 0,
          fmt("1000 corpora, %ld samples, %ld violations%s%s", samples, bad, bad ? "; first: " : "", first.c_str())};
}

// --- A4 / A9 -------------------------------------------------------------------

struct Memorization {
  Corpus corpus;
  PipelineConfig config;
  ModelBundle bundle;
};

Memorization& memorization() {
  static std::optional<Memorization> m;
  if (!m) {
    Memorization x;
    x.corpus = generate_memorization_corpus(20, 4, 15, 7);
    x.config.set_seed(7);
    x.bundle = train_bundle(x.corpus, x.corpus.alert_ids(), x.config, GraphVariant::kWithAttributes);
    m = std::move(x);
  }
  return *m;
}

Verdict memorization_check() {
  auto& m = memorization();
  const auto reg = m.bundle.modules;
  Rng rng(mix_seed(7, 0xa4));
  std::vector<RecommendationSample> samples;
  for (int e = 0; e < 5; ++e) {
    auto epoch = generate_epoch(m.corpus, m.corpus.alert_ids(), reg, rng);
    samples.insert(samples.end(), epoch.begin(), epoch.end());
  }
  const auto rows = evaluate_samples(bundle_adapter(m.corpus, m.bundle), samples, reg, {1, 3});
  int eop_first = 0, terminals = 0;
  for (const auto& id : m.corpus.alert_ids()) {
    for (const auto& pb_id : m.corpus.mapping.at(id)) {
      const auto& pb = m.corpus.playbook(pb_id);
      for (const auto& [node, module] : pb.nodes) {
        if (!pb.successors(node).empty() || node == pb.start) continue;
        ++terminals;
        const auto order = rank_candidates(score_all(m.bundle, m.corpus.alert(id), pb, node), reg);
        eop_first += order.front() == reg.eop_index();
      }
    }
  }
  const double p1 = rows[0].precision, r3 = rows[1].recall;
  const double eop_rate = static_cast<double>(eop_first) / terminals;
  const double final_bce = m.bundle.ncf_loss_history.back();
  return {p1 >= 0.9 && r3 >= 0.95 && eop_rate >= 0.9,
          fmt("%zu training samples: precision@1 %.4f (>= 0.9), recall@3 %.4f (>= 0.95); EOP first at %d/%d terminals "
              "(%.3f >= 0.9); final scorer BCE %.4f",
              samples.size(), p1, r3, eop_first, terminals, eop_rate, final_bce)};
}

Verdict reproducibility() {
  auto& m = memorization();
  std::vector<std::string> problems;
  const auto a = serialize_bundle(m.bundle);
  const auto again = train_bundle(m.corpus, m.corpus.alert_ids(), m.config, GraphVariant::kWithAttributes);
  const auto b = serialize_bundle(again);
  if (a.manifest.at("blob_hashes") != b.manifest.at("blob_hashes")) problems.push_back("blob hashes differ");

  const auto dir = testing::scratch_dir("acceptance_a9");
  save_bundle(dir, m.bundle);
  const auto loaded = load_bundle(dir);
  std::filesystem::remove_all(dir);
  Rng rng(mix_seed(7, 0xa9));
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& s : generate_epoch(m.corpus, m.corpus.alert_ids(), m.bundle.modules, rng)) {
    const auto& alert = m.corpus.alert(s.alert_id);
    const auto x = score_all(m.bundle, alert, s.partial, s.current_node);
    const auto y = score_all(loaded, alert, s.partial, s.current_node);
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
    ++n;
  }
  if (worst > 1e-12) problems.push_back("round trip drift");

  const auto replay = golden::replay();
  for (const auto& f : replay.failures) problems.push_back("golden " + f);
  if (replay.cases == 0) problems.push_back("no golden cases");

  std::string detail = fmt("blob hashes %s; round trip over %zu samples, max score drift %.3g (<= 1e-12); "
                           "%zu golden cases replayed at 1e-9, %zu failed",
                           problems.empty() || problems.front() != "blob hashes differ" ? "identical" : "DIFFER",
                           n, worst, replay.cases, replay.failures.size());
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

// --- A5 / A6 / A10 -------------------------------------------------------------

struct D1Run {
  Corpus corpus;
  CrossValidationReport report;
  std::size_t candidates = 0;
};

D1Run& d1_run() {
  static std::optional<D1Run> run;
  if (!run) {
    D1Run r;
    r.corpus = generate_corpus(d1_spec(7));
    r.candidates = r.corpus.module_registry().num_candidates();
    PipelineConfig config;
    config.set_seed(7);
    CrossValidationOptions opt;
    opt.dataset = "d1";
    opt.seed = 7;
    opt.ks.clear();
    for (int k = 1; k <= static_cast<int>(r.candidates); ++k) opt.ks.push_back(k);
    opt.log = [](const std::string& msg) { std::fprintf(stderr, "  [cv] %s\n", msg.c_str()); };
    r.report = run_cross_validation(r.corpus, split_folds(r.corpus, 7), config, opt);
    run = std::move(r);
  }
  return *run;
}

const MetricRow* find_row(const std::vector<MetricRow>& rows, const std::string& model, int k) {
  for (const auto& r : rows) {
    if (r.model == model && r.k == k) return &r;
  }
  return nullptr;
}

Verdict baselines_ordering() {
  auto& run = d1_run();
  int good = 0, both_variants = 0;
  std::string table;
  for (const auto& f : run.report.folds) {
    const auto* w = find_row(f.rows, kModelWithAttributes, 3);
    const auto* wo = find_row(f.rows, kModelWithoutAttributes, 3);
    const auto* fr = find_row(f.rows, kModelFrequency, 3);
    const auto* nmf = find_row(f.rows, kModelNmf, 3);
    if (!w || !wo || !fr || !nmf) return {false, "missing rows in fold " + std::to_string(f.fold)};
    auto beats = [](const MetricRow& a, const MetricRow& b) { return a.recall > b.recall && a.map > b.map; };
    const bool freq_over_nmf = beats(*fr, *nmf);
    if ((beats(*w, *fr) || beats(*wo, *fr)) && freq_over_nmf) ++good;
    if (beats(*w, *fr) && beats(*wo, *fr) && freq_over_nmf) ++both_variants;
    table += fmt(" | fold %d R@3/MAP@3 with %.3f/%.3f without %.3f/%.3f freq %.3f/%.3f nmf %.3f/%.3f", f.fold, w->recall,
                 w->map, wo->recall, wo->map, fr->recall, fr->map, nmf->recall, nmf->map);
  }
  return {good >= 4, fmt("ordering holds on %d/5 folds (both variants: %d/5)", good, both_variants) + table};
}

Verdict recall_monotone() {
  auto& run = d1_run();
  const int kmax = static_cast<int>(run.candidates);
  int series = 0, violations = 0;
  std::string first;
  for (const auto& f : run.report.folds) {
    for (const auto& model : all_model_names()) {
      ++series;
      double prev = -1.0;
      for (int k = 1; k <= kmax; ++k) {
        const auto* r = find_row(f.rows, model, k);
        if (!r || r->recall < prev || (k == kmax && std::abs(r->recall - 1.0) > 1e-12)) {
          if (violations++ == 0) first = fmt("; first: %s fold %d k %d", model.c_str(), f.fold, k);
          break;
        }
        prev = r->recall;
      }
    }
  }
  return {violations == 0 && series == 20,
          fmt("%d model/fold series over k = 1..%d, %d violations", series, kmax, violations) + first};
}

Verdict variants_agree() {
  auto& run = d1_run();
  const auto* w = find_row(run.report.means, kModelWithAttributes, 3);
  const auto* wo = find_row(run.report.means, kModelWithoutAttributes, 3);
  if (!w || !wo) return {false, "a variant did not complete"};
  for (const auto& f : run.report.folds) {
    if (!find_row(f.rows, kModelWithAttributes, 3) || !find_row(f.rows, kModelWithoutAttributes, 3)) {
      return {false, "a variant is missing fold " + std::to_string(f.fold)};
    }
  }
  const double dp = std::abs(w->precision - wo->precision), dr = std::abs(w->recall - wo->recall),
               dm = std::abs(w->map - wo->map);
  return {std::max({dp, dr, dm}) <= 0.15,
          fmt("mean@3 with P %.4f R %.4f MAP %.4f, without P %.4f R %.4f MAP %.4f; |diff| P %.4f R %.4f MAP %.4f "
              "(<= 0.15)",
              w->precision, w->recall, w->map, wo->precision, wo->recall, wo->map, dp, dr, dm)};
}

// --- A7 ------------------------------------------------------------------------

Verdict nmf_behaviour() {
  int monotone_fail = 0;
  double worst_rise = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(mix_seed(0xa7, static_cast<std::uint64_t>(seed)));
    Eigen::MatrixXd V(20, 10);
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = uniform01(rng);
    const int rank = 1 + static_cast<int>(uniform_index(rng, 8));
    const auto m = nmf_fit(V, rank, 200, static_cast<std::uint64_t>(seed));
    const auto& h = m.objective_history;
    bool ok = (m.W.array() >= 0).all() && (m.H.array() >= 0).all();
    for (std::size_t t = 1; t < h.size(); ++t) {
      const double rise = (h[t] - h[t - 1]) / std::max(h[t - 1], 1e-300);
      worst_rise = std::max(worst_rise, rise);
      if (h[t] > h[t - 1] * (1.0 + 1e-8)) ok = false;
    }
    monotone_fail += ok ? 0 : 1;
  }
  double worst_recovery = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(mix_seed(0xa71, static_cast<std::uint64_t>(seed)));
    Eigen::VectorXd u(20), v(10);
    for (auto& x : u) x = 0.1 + uniform01(rng);
    for (auto& x : v) x = 0.1 + uniform01(rng);
    const Eigen::MatrixXd V = u * v.transpose();
    const auto m = nmf_fit(V, 1, 500, static_cast<std::uint64_t>(seed));
    worst_recovery = std::max(worst_recovery, (V - m.W * m.H).norm());
  }
  return {monotone_fail == 0 && worst_recovery <= 1e-6,
          fmt("100 fits: %d with a rising objective or negative factor (max relative rise %.3g, tol 1e-8); "
              "rank-1 recovery worst Frobenius error %.3g (<= 1e-6)",
              monotone_fail, worst_rise, worst_recovery)};
}

// --- A8 ------------------------------------------------------------------------

Verdict autoencoder_memorizes() {
  // 64 distinct alerts over a 64-key registry.
  std::vector<std::string> keys;
  for (int i = 0; i < 64; ++i) keys.push_back("key_" + std::to_string(i));
  const SchemaKeyRegistry small(keys);
  Rng rng(0xa8);
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<AlertOneHot> vs;
  while (vs.size() < 64) {
    AlertOneHot v{std::vector<std::uint8_t>(64, 0)};
    for (auto& b : v.bits) b = bernoulli(rng, 0.15) ? 1 : 0;
    if (v.popcount() > 0 && seen.insert(v.bits).second) vs.push_back(std::move(v));
  }
  AutoencoderConfig cfg;
  cfg.seed = mix_seed(0xa8, 1);
  const double acc_small = reconstruction_bit_accuracy(train_autoencoder(vs, small.fingerprint(), cfg), vs);

  // The 55 D1 alerts over the full 2661-key registry.
  const Corpus d1 = generate_corpus(d1_spec(7));
  std::vector<AlertOneHot> ds;
  for (const auto& [id, a] : d1.alerts) ds.push_back(one_hot_encode(a, d1.registry));
  const double acc_d1 = reconstruction_bit_accuracy(train_autoencoder(ds, d1.registry.fingerprint(), cfg), ds);
  return {acc_small >= 0.99 && acc_d1 >= 0.99 && cfg.epochs == 2000,
          fmt("%d epochs: 64 alerts x 64 keys %.5f, 55 alerts x %zu keys %.5f (>= 0.99)", cfg.epochs, acc_small,
              d1.registry.size(), acc_d1)};
}

struct Criterion {
  std::string name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Verdict()> run;
};

}  // namespace
}  // namespace icsecure::acceptance

int main(int argc, char** argv) {
  using namespace icsecure::acceptance;
  icsecure::tune_allocator();
  const std::vector<Criterion> all = {
      {"A1", 30, gradient_check},      {"A2", 10, metric_oracle},          {"A3", 60, sample_invariants},
      {"A7", 0, nmf_behaviour},        {"A8", 0, autoencoder_memorizes},   {"A4", 600, memorization_check},
      {"A9", 0, reproducibility},      {"A5", 7200, baselines_ordering},   {"A6", 0, recall_monotone},
      {"A10", 0, variants_agree},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = v.pass;
    std::string timing = fmt("%.1f s", secs);
    if (c.limit_seconds > 0) {
      timing += fmt(" of %.0f s", c.limit_seconds);
      if (secs > c.limit_seconds) pass = false;
    }
    std::printf("%s %s %s [%s]\n", c.name.c_str(), pass ? "PASS" : "FAIL", v.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failed += pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
