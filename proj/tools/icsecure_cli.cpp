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

// icsecure: gen-data, train, eval, recommend and serve subcommands.
// Exit codes: 0 ok, 1 runtime or data error, 2 usage error.

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "icsecure/bundle.hpp"
#include "icsecure/config.hpp"
#include "icsecure/core/io.hpp"
#include "icsecure/core/platform.hpp"
#include "icsecure/datagen.hpp"
#include "icsecure/evaluation.hpp"
#include "icsecure/recommender.hpp"
#include "icsecure/samples.hpp"
#include "icsecure/service.hpp"

namespace fs = std::filesystem;
using icsecure::Error;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr std::uint64_t kDefaultSeed = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("IC_SECURE_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || env[0] == '-') throw UsageError("IC_SECURE_SEED is not an unsigned integer");
    return v;
  }
  return kDefaultSeed;
}

icsecure::PipelineConfig load_config(const std::string& path, std::uint64_t seed) {
  icsecure::PipelineConfig c;
  c.set_seed(seed);
  if (!path.empty()) c = icsecure::config_overlay(c, icsecure::read_json_file(path));
  return c;
}

void log_line(const std::string& msg) { std::cerr << "[icsecure] " << msg << std::endl; }

// --- gen-data ----------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  std::string scale = "d1";
  bool memorize = false;
  int alerts = 20;
  int chain = 4;
  int modules = 15;
  std::optional<std::uint64_t> seed;
};

int cmd_gen_data(const GenDataArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  icsecure::Corpus corpus;
  json generator;
  if (a.memorize) {
    corpus = icsecure::generate_memorization_corpus(a.alerts, a.chain, a.modules, seed);
    generator = {{"kind", "memorization"}, {"alerts", a.alerts}, {"chain_length", a.chain},
                 {"modules", a.modules}, {"seed", seed}};
  } else {
    if (a.scale != "d1") throw UsageError("unknown --scale '" + a.scale + "' (supported: d1)");
    const auto spec = icsecure::d1_spec(seed);
    corpus = icsecure::generate_corpus(spec);
    generator = {{"kind", "layered-dag"}, {"scale", a.scale}, {"spec", icsecure::corpus_spec_to_json(spec)}};
  }
  if (auto v = icsecure::validate_corpus(corpus); !v.empty()) throw Error("invalid_corpus", v.front().describe());
  icsecure::write_corpus(a.out, corpus, generator);
  std::cout << json{{"out", a.out},
                    {"alerts", corpus.alerts.size()},
                    {"playbooks", corpus.playbooks.size()},
                    {"keys", corpus.registry.size()}}
                   .dump()
            << "\n";
  return 0;
}

icsecure::Corpus load_valid_corpus(const std::string& dir) {
  auto corpus = icsecure::load_corpus(dir);
  if (auto v = icsecure::validate_corpus(corpus); !v.empty()) {
    throw Error("invalid_corpus", v.front().describe() + " (" + std::to_string(v.size()) + " violations)");
  }
  return corpus;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string variant = "with-attributes";
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  const auto variant = icsecure::graph_variant_from_string(a.variant);
  const auto config = load_config(a.config, resolve_seed(a.seed));
  const auto corpus = load_valid_corpus(a.data);
  const auto alerts = corpus.alert_ids();
  log_line("training on " + std::to_string(alerts.size()) + " alerts (" + a.variant + ")");
  log_line("alert autoencoder and node2vec");
  const auto shared = icsecure::train_shared_embeddings(corpus, alerts, config);
  log_line("graph2vec and scorer");
  const auto bundle = icsecure::train_bundle(corpus, alerts, config, variant, shared);
  icsecure::save_bundle(a.out, bundle);
  icsecure::write_json_file(fs::path(a.out) / "training_log.json", icsecure::training_log(bundle));
  const auto manifest = icsecure::read_json_file(fs::path(a.out) / "manifest.json");
  std::cout << json{{"out", a.out}, {"fingerprint", manifest.at("fingerprint")}, {"blob_hashes", manifest.at("blob_hashes")}}
                   .dump()
            << "\n";
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string out;
  std::string models;
  std::string ks;
  std::string config;
  std::string dataset;
  int folds = icsecure::kDefaultFolds;
  bool dump_samples = false;
  std::optional<std::uint64_t> seed;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  icsecure::CrossValidationOptions opt;
  opt.seed = seed;
  opt.n_folds = a.folds;
  opt.dataset = a.dataset.empty() ? fs::path(a.data).lexically_normal().filename().string() : a.dataset;
  if (opt.dataset.empty()) opt.dataset = "corpus";
  if (!a.models.empty()) opt.models = split_csv(a.models);
  for (const auto& m : opt.models) {
    const auto& names = icsecure::all_model_names();
    if (std::find(names.begin(), names.end(), m) == names.end()) throw UsageError("unknown model '" + m + "'");
  }
  if (!a.ks.empty()) {
    opt.ks.clear();
    for (const auto& k : split_csv(a.ks)) {
      try {
        opt.ks.push_back(std::stoi(k));
      } catch (const std::exception&) {
        throw UsageError("--ks expects comma-separated integers");
      }
      if (opt.ks.back() < 1) throw UsageError("--ks values must be >= 1");
    }
  }
  opt.log = log_line;
  const auto config = load_config(a.config, seed);
  const auto corpus = load_valid_corpus(a.data);
  const auto plan = icsecure::split_folds(corpus, seed, a.folds);
  fs::create_directories(a.out);
  std::ofstream dump;
  if (a.dump_samples) {
    dump.open(fs::path(a.out) / "samples.jsonl");
    if (!dump) throw Error("io_error", "cannot write samples.jsonl");
    opt.sample_dump = &dump;
  }
  const auto report = icsecure::run_cross_validation(corpus, plan, config, opt);
  icsecure::write_json_file(fs::path(a.out) / "report.json", icsecure::report_to_json(report));
  icsecure::write_text_file(fs::path(a.out) / "report.csv", icsecure::report_to_csv(report));
  json means = json::array();
  for (const auto& r : report.means) means.push_back(icsecure::metric_row_to_json(r));
  std::cout << json{{"out", a.out}, {"means", means}}.dump() << "\n";
  return 0;
}

// --- recommend ---------------------------------------------------------------

struct RecommendArgs {
  std::string model;
  std::string alert;
  std::string playbook;
  std::string current;
  int k = icsecure::kDefaultRecommendK;
};

/// Accepts {"keys": [...]}, {"alert_keys": [...]} or a bare key array.
std::vector<std::string> read_alert_keys(const std::string& path) {
  const json j = icsecure::read_json_file(path);
  try {
    if (j.is_array()) return j.get<std::vector<std::string>>();
    if (j.contains("keys")) return j.at("keys").get<std::vector<std::string>>();
    if (j.contains("alert_keys")) return j.at("alert_keys").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error("invalid_alert", path + ": " + e.what());
  }
  throw Error("invalid_alert", path + ": expected a key list or an object with \"keys\"");
}

int cmd_recommend(const RecommendArgs& a) {
  if (a.k < 1) throw UsageError("--k must be >= 1");
  const auto serialized = icsecure::read_serialized_bundle(a.model);
  icsecure::ServiceState state(icsecure::deserialize_bundle(serialized),
                               serialized.manifest.at("fingerprint").get<std::string>());
  const json request = {{"alert_keys", read_alert_keys(a.alert)},
                        {"playbook", icsecure::read_json_file(a.playbook)},
                        {"current_node", a.current},
                        {"k", a.k}};
  const auto result = icsecure::handle_recommend(state, request.dump());
  if (result.status != 200) {
    const auto& err = result.body.at("error");
    throw Error(err.at("code").get<std::string>(), err.at("message").get<std::string>());
  }
  std::cout << result.body.dump(2) << "\n";
  return 0;
}

// --- serve -------------------------------------------------------------------

struct ServeArgs {
  std::string model;
  icsecure::ServerOptions server;
};

int cmd_serve(const ServeArgs& a) {
  const auto serialized = icsecure::read_serialized_bundle(a.model);
  icsecure::ServiceState state(icsecure::deserialize_bundle(serialized),
                               serialized.manifest.at("fingerprint").get<std::string>());
  return icsecure::serve_until_signal(state, a.server, [&](int port) {
    log_line("listening on " + a.server.host + ":" + std::to_string(port));
  });
}

}  // namespace

int main(int argc, char** argv) {
  icsecure::tune_allocator();
  CLI::App app{"Alert-conditioned playbook module recommender"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--scale", gen.scale, "Corpus scale preset")->capture_default_str();
  gen_cmd->add_flag("--memorize", gen.memorize, "Generate a memorization corpus of linear chains");
  gen_cmd->add_option("--alerts", gen.alerts, "Alerts in the memorization corpus")->capture_default_str();
  gen_cmd->add_option("--chain", gen.chain, "Chain length of the memorization corpus")->capture_default_str();
  gen_cmd->add_option("--modules", gen.modules, "Module pool of the memorization corpus")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Seed (falls back to IC_SECURE_SEED)");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model bundle on every alert of a corpus");
  train_cmd->add_option("--data", train.data, "Corpus directory")->required();
  train_cmd->add_option("--out", train.out, "Bundle directory")->required();
  train_cmd->add_option("--graph-variant", train.variant, "with-attributes | without-attributes")
      ->check(CLI::IsMember({"with-attributes", "without-attributes"}))
      ->capture_default_str();
  train_cmd->add_option("--config", train.config, "JSON hyperparameter overlay");
  train_cmd->add_option("--seed", train.seed, "Seed (falls back to IC_SECURE_SEED)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Cross-validate models and baselines");
  eval_cmd->add_option("--data", eval.data, "Corpus directory")->required();
  eval_cmd->add_option("--out", eval.out, "Report directory")->required();
  eval_cmd->add_option("--models", eval.models, "Comma-separated subset of icsecure-with,icsecure-without,frequency,nmf");
  eval_cmd->add_option("--ks", eval.ks, "Comma-separated cutoffs (default 1,3,5,10)");
  eval_cmd->add_option("--folds", eval.folds, "Number of folds")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset label for the report");
  eval_cmd->add_option("--config", eval.config, "JSON hyperparameter overlay");
  eval_cmd->add_flag("--dump-samples", eval.dump_samples, "Write samples.jsonl with per-model rankings");
  eval_cmd->add_option("--seed", eval.seed, "Seed (falls back to IC_SECURE_SEED)");

  RecommendArgs rec;
  auto* rec_cmd = app.add_subcommand("recommend", "Rank next modules for a partial playbook");
  rec_cmd->add_option("--model", rec.model, "Bundle directory")->required();
  rec_cmd->add_option("--alert", rec.alert, "Alert JSON file (key list)")->required();
  rec_cmd->add_option("--playbook", rec.playbook, "Partial playbook JSON file")->required();
  rec_cmd->add_option("--current", rec.current, "Current node id")->required();
  rec_cmd->add_option("--k", rec.k, "Number of recommendations")->capture_default_str();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve recommendations over HTTP");
  serve_cmd->add_option("--model", serve.model, "Bundle directory")->required();
  serve_cmd->add_option("--port", serve.server.port, "Port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--host", serve.server.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--cors-origin", serve.server.cors_origin, "Allowed browser origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval);
    if (*rec_cmd) return cmd_recommend(rec);
    if (*serve_cmd) return cmd_serve(serve);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
