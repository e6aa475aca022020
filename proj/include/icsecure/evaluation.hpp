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

// Offline evaluation: per-sample metrics averaged per (model, k), and the
// alert-level k-fold cross-validation runner with JSON/CSV reports.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsecure/baselines.hpp"
#include "icsecure/config.hpp"
#include "icsecure/core/error.hpp"
#include "icsecure/core/hash.hpp"
#include "icsecure/core/io.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"
#include "icsecure/metrics.hpp"
#include "icsecure/recommender.hpp"
#include "icsecure/samples.hpp"

namespace icsecure {

inline const std::vector<int> kDefaultKs = {1, 3, 5, 10};

inline const std::string kModelWithAttributes = "icsecure-with";
inline const std::string kModelWithoutAttributes = "icsecure-without";
inline const std::string kModelFrequency = "frequency";
inline const std::string kModelNmf = "nmf";

inline const std::vector<std::string>& all_model_names() {
  static const std::vector<std::string> names = {kModelWithAttributes, kModelWithoutAttributes, kModelFrequency,
                                                 kModelNmf};
  return names;
}

struct MetricRow {
  std::string dataset;
  std::string model;
  std::string fold;  // fold index, or "mean"
  int k = 0;
  double precision = 0.0;
  double recall = 0.0;
  double map = 0.0;
};

/// Scores every candidate for one sample.
using ModelAdapter = std::function<std::vector<double>(const RecommendationSample&)>;

inline RelevantSet relevant_set(const RecommendationSample& s) {
  const auto idx = s.positive_indices();
  return {idx.begin(), idx.end()};
}

/// Averages each metric over samples, one row per k.
inline std::vector<MetricRow> evaluate_samples(const ModelAdapter& model, const std::vector<RecommendationSample>& samples,
                                               const ModuleRegistry& modules, const std::vector<int>& ks,
                                               std::vector<Ranking>* rankings_out = nullptr) {
  if (samples.empty()) throw Error("empty_input", "evaluation: no test samples");
  if (ks.empty()) throw Error("invalid_k", "evaluation: no k values");
  for (int k : ks) detail::check_k(k);
  std::vector<MetricRow> rows(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) rows[i].k = ks[i];
  for (const auto& s : samples) {
    const Ranking ranking = rank_candidates(model(s), modules);
    const RelevantSet rel = relevant_set(s);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      rows[i].precision += precision_at_k(ranking, rel, ks[i]);
      rows[i].recall += recall_at_k(ranking, rel, ks[i]);
      rows[i].map += average_precision_at_k(ranking, rel, ks[i]);
    }
    if (rankings_out) rankings_out->push_back(ranking);
  }
  const auto n = static_cast<double>(samples.size());
  for (auto& r : rows) {
    r.precision /= n;
    r.recall /= n;
    r.map /= n;
  }
  return rows;
}

/// Generates one evaluation epoch over the test alerts and scores it.
inline std::vector<MetricRow> evaluate_model(const ModelAdapter& model, const std::vector<std::string>& test_alerts,
                                             const Corpus& corpus, const ModuleRegistry& modules,
                                             const std::vector<int>& ks, Rng& rng,
                                             double prune_probability = kPruneProbability) {
  if (test_alerts.empty()) throw Error("empty_input", "evaluation: empty test set");
  return evaluate_samples(model, generate_epoch(corpus, test_alerts, modules, rng, prune_probability), modules, ks);
}

/// Adapter over a trained bundle. Holds its own feature caches.
inline ModelAdapter bundle_adapter(const Corpus& corpus, const ModelBundle& bundle) {
  auto features = std::make_shared<FeatureBuilder>(bundle);
  return [&corpus, &bundle, features](const RecommendationSample& s) {
    return ncf_scores(bundle, features->features(corpus.alert(s.alert_id), s.partial, s.current_node));
  };
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CrossValidationOptions {
  std::string dataset = "corpus";
  std::vector<std::string> models = all_model_names();
  std::vector<int> ks = kDefaultKs;
  std::uint64_t seed = 1;
  int n_folds = kDefaultFolds;
  std::ostream* sample_dump = nullptr;  // JSON lines, when set
  std::function<void(const std::string&)> log;
};

struct FoldReport {
  int fold = 0;
  std::vector<std::string> train_alerts;
  std::vector<std::string> test_alerts;
  std::size_t test_samples = 0;
  std::vector<MetricRow> rows;
  nlohmann::json baselines;
  double seconds = 0.0;
};

struct CrossValidationReport {
  std::string dataset;
  std::uint64_t seed = 0;
  std::vector<std::string> unique_alerts;
  std::vector<FoldReport> folds;
  std::vector<MetricRow> means;

  /// Looks up a row; fold < 0 selects the mean rows.
  const MetricRow* find(const std::string& model, int k, int fold) const {
    const auto& rows = fold < 0 ? means : folds.at(static_cast<std::size_t>(fold)).rows;
    for (const auto& r : rows) {
      if (r.model == model && r.k == k) return &r;
    }
    return nullptr;
  }
};

inline std::vector<MetricRow> mean_rows(const std::vector<FoldReport>& folds) {
  std::map<std::pair<std::string, int>, MetricRow> acc;
  std::vector<std::pair<std::string, int>> order;
  for (const auto& f : folds) {
    for (const auto& r : f.rows) {
      auto key = std::make_pair(r.model, r.k);
      auto [it, inserted] = acc.emplace(key, MetricRow{r.dataset, r.model, "mean", r.k, 0, 0, 0});
      if (inserted) order.push_back(key);
      it->second.precision += r.precision / static_cast<double>(folds.size());
      it->second.recall += r.recall / static_cast<double>(folds.size());
      it->second.map += r.map / static_cast<double>(folds.size());
    }
  }
  std::vector<MetricRow> out;
  for (const auto& key : order) out.push_back(acc.at(key));
  return out;
}

inline CrossValidationReport run_cross_validation(const Corpus& corpus, const FoldPlan& plan,
                                                  const PipelineConfig& config, const CrossValidationOptions& opt) {
  for (const auto& m : opt.models) {
    const auto& names = all_model_names();
    if (std::find(names.begin(), names.end(), m) == names.end()) {
      throw Error("invalid_model", "unknown model '" + m + "'");
    }
  }
  auto wants = [&](const std::string& m) { return std::find(opt.models.begin(), opt.models.end(), m) != opt.models.end(); };
  auto log = [&](const std::string& msg) {
    if (opt.log) opt.log(msg);
  };
  const ModuleRegistry modules = corpus.module_registry();
  CrossValidationReport report;
  report.dataset = opt.dataset;
  report.seed = opt.seed;
  report.unique_alerts = plan.unique_alerts;

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto started = std::chrono::steady_clock::now();
    FoldReport fr;
    fr.fold = static_cast<int>(f);
    fr.train_alerts = plan.train_alerts(f);
    fr.test_alerts = plan.test_alerts(f);
    Rng test_rng(mix_seed(opt.seed, 0x7e57 + f));
    const auto samples = generate_epoch(corpus, fr.test_alerts, modules, test_rng, config.prune_probability);
    fr.test_samples = samples.size();
    log("fold " + std::to_string(f) + ": " + std::to_string(fr.train_alerts.size()) + " train alerts, " +
        std::to_string(fr.test_alerts.size()) + " test alerts, " + std::to_string(samples.size()) + " test samples");

    std::map<std::string, std::vector<Ranking>> rankings;
    auto run = [&](const std::string& name, const ModelAdapter& adapter) {
      auto rows = evaluate_samples(adapter, samples, modules, opt.ks, opt.sample_dump ? &rankings[name] : nullptr);
      for (auto& r : rows) {
        r.dataset = opt.dataset;
        r.model = name;
        r.fold = std::to_string(f);
        fr.rows.push_back(r);
      }
    };

    if (wants(kModelWithAttributes) || wants(kModelWithoutAttributes)) {
      // Both variants train the alert encoder and module table with the same
      // seeds on the same alerts, so one copy serves both.
      log("fold " + std::to_string(f) + ": training shared embeddings");
      const SharedEmbeddings shared = train_shared_embeddings(corpus, fr.train_alerts, config);
      for (auto [name, variant] : {std::pair{kModelWithAttributes, GraphVariant::kWithAttributes},
                                   std::pair{kModelWithoutAttributes, GraphVariant::kWithoutAttributes}}) {
        if (!wants(name)) continue;
        log("fold " + std::to_string(f) + ": training " + name);
        const ModelBundle bundle = train_bundle(corpus, fr.train_alerts, config, variant, shared);
        run(name, bundle_adapter(corpus, bundle));
      }
    }
    FrequencyModel freq;
    NmfModel nmf;
    if (wants(kModelFrequency)) {
      Rng rng(mix_seed(opt.seed, 0xfe9 + f));
      freq = train_frequency(corpus, fr.train_alerts, modules, rng, config.baselines.frequency_epochs,
                             config.prune_probability);
      const auto scores = frequency_scores(freq);
      run(kModelFrequency, [&scores](const RecommendationSample&) { return scores; });
    }
    if (wants(kModelNmf)) {
      Rng rng(mix_seed(opt.seed, 0x4d7 + f));
      nmf = train_nmf(corpus, fr.train_alerts, modules, rng, config.baselines.nmf_rank,
                      config.baselines.nmf_iterations, config.prune_probability);
      const int proj = config.baselines.nmf_projection_iterations;
      run(kModelNmf, [&](const RecommendationSample& s) { return nmf_scores(nmf, s, modules, proj); });
    }
    fr.baselines = baseline_summary(freq, nmf, modules);

    if (opt.sample_dump) {
      for (std::size_t i = 0; i < samples.size(); ++i) {
        nlohmann::json line = sample_to_json(samples[i]);
        line["fold"] = f;
        nlohmann::json ranked = nlohmann::json::object();
        for (const auto& [name, rs] : rankings) {
          nlohmann::json ids = nlohmann::json::array();
          for (std::size_t c : rs[i]) ids.push_back(modules.candidate(c));
          ranked[name] = ids;
        }
        line["rankings"] = ranked;
        *opt.sample_dump << line.dump() << '\n';
      }
    }
    fr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log("fold " + std::to_string(f) + ": done in " + std::to_string(fr.seconds) + " s");
    report.folds.push_back(std::move(fr));
  }
  report.means = mean_rows(report.folds);
  return report;
}

// ---------------------------------------------------------------------------
// Report files

inline nlohmann::json metric_row_to_json(const MetricRow& r) {
  return {{"dataset", r.dataset},
          {"model", r.model},
          {"fold", r.fold},
          {"k", r.k},
          {"precision", round_sig9(r.precision)},
          {"recall", round_sig9(r.recall)},
          {"map", round_sig9(r.map)}};
}

inline nlohmann::json report_to_json(const CrossValidationReport& rep) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : rep.folds) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : f.rows) rows.push_back(metric_row_to_json(r));
    folds.push_back({{"fold", f.fold},
                     {"train_alerts", f.train_alerts.size()},
                     {"test_alerts", f.test_alerts},
                     {"test_samples", f.test_samples},
                     {"seconds", round_sig9(f.seconds)},
                     {"baselines", f.baselines},
                     {"rows", rows}});
  }
  nlohmann::json means = nlohmann::json::array();
  for (const auto& r : rep.means) means.push_back(metric_row_to_json(r));
  return {{"dataset", rep.dataset},
          {"seed", rep.seed},
          {"unique_alerts", rep.unique_alerts},
          {"folds", folds},
          {"means", means}};
}

inline std::string report_to_csv(const CrossValidationReport& rep) {
  std::ostringstream out;
  out << "dataset,model,fold,k,precision,recall,map\n";
  auto emit = [&](const MetricRow& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, ",%d,%.9g,%.9g,%.9g\n", r.k, r.precision, r.recall, r.map);
    out << r.dataset << ',' << r.model << ',' << r.fold << buf;
  };
  for (const auto& f : rep.folds) {
    for (const auto& r : f.rows) emit(r);
  }
  for (const auto& r : rep.means) emit(r);
  return out.str();
}

}  // namespace icsecure
