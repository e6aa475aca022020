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

// HTTP/JSON recommendation service. Handlers are plain functions from a
// request body to (status, JSON) so they can be tested without sockets; the
// httplib wiring is a thin layer on top.

#include <csignal>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

// Eigen must precede httplib: <resolv.h> defines an `_res` macro that
// collides with Eigen's internal parameter names.
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <httplib.h>
#include <json.hpp>

#include "icsecure/bundle.hpp"
#include "icsecure/core/error.hpp"
#include "icsecure/core/io.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/embedding/alert.hpp"
#include "icsecure/recommender.hpp"

namespace icsecure {

inline constexpr std::size_t kMaxRequestBytes = std::size_t{1} << 20;
inline constexpr int kDefaultRecommendK = 5;

struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

/// Immutable once loaded; handlers only read it. `bundle` stays empty until
/// loading finishes, which /health reports as 503.
class ServiceState {
 public:
  ServiceState() = default;
  explicit ServiceState(ModelBundle bundle, std::string fingerprint) { load(std::move(bundle), std::move(fingerprint)); }

  void load(ModelBundle bundle, std::string fingerprint) {
    auto loaded = std::make_shared<const Loaded>(Loaded{std::move(bundle), std::move(fingerprint)});
    std::lock_guard lock(mu_);
    loaded_ = std::move(loaded);
  }

  struct Loaded {
    ModelBundle bundle;
    std::string fingerprint;
  };

  std::shared_ptr<const Loaded> get() const {
    std::lock_guard lock(mu_);
    return loaded_;
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Loaded> loaded_;
};

inline HttpResult error_result(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", {{"code", code}, {"message", message}}}}};
}

inline HttpResult handle_health(const ServiceState& state) {
  auto s = state.get();
  if (!s) return {503, {{"status", "loading"}}};
  return {200, {{"status", "ok"}, {"bundle", s->fingerprint}}};
}

inline HttpResult handle_modules(const ServiceState& state) {
  auto s = state.get();
  if (!s) return error_result(503, "not_ready", "model bundle not loaded");
  nlohmann::json mods = nlohmann::json::array();
  const auto& reg = s->bundle.modules;
  for (std::size_t i = 0; i < reg.num_candidates(); ++i) {
    const auto& id = reg.candidate(i);
    mods.push_back({{"id", id}, {"name", module_display_name(id)}, {"index", i}, {"eop", id == kEopModule}});
  }
  return {200, {{"modules", mods}, {"bundle", s->fingerprint}}};
}

/// POST /recommend. Structural problems are 400s with a machine-readable
/// code; unknown alert keys are dropped and reported as warnings.
inline HttpResult handle_recommend(const ServiceState& state, const std::string& body) {
  if (body.size() > kMaxRequestBytes) return error_result(413, "payload_too_large", "request body exceeds 1 MiB");
  auto s = state.get();
  if (!s) return error_result(503, "not_ready", "model bundle not loaded");
  const ModelBundle& bundle = s->bundle;
  try {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      return error_result(400, "invalid_json", e.what());
    }
    if (!req.is_object()) return error_result(400, "invalid_request", "request must be a JSON object");

    std::vector<std::string> keys;
    if (!req.contains("alert_keys") || !req.at("alert_keys").is_array()) {
      return error_result(400, "invalid_request", "alert_keys must be an array of strings");
    }
    for (const auto& k : req.at("alert_keys")) {
      if (!k.is_string()) return error_result(400, "invalid_request", "alert_keys must be an array of strings");
      keys.push_back(k.get<std::string>());
    }
    if (!req.contains("current_node") || !req.at("current_node").is_string()) {
      return error_result(400, "invalid_request", "current_node must be a string");
    }
    const std::string current = req.at("current_node").get<std::string>();
    int k = kDefaultRecommendK;
    if (req.contains("k")) {
      if (!req.at("k").is_number_integer()) return error_result(400, "invalid_k", "k must be an integer");
      const auto kk = req.at("k").get<long long>();
      if (kk < 1) return error_result(400, "invalid_k", "k must be >= 1");
      k = static_cast<int>(std::min<long long>(kk, static_cast<long long>(bundle.modules.num_candidates())));
    }
    if (!req.contains("playbook")) return error_result(400, "invalid_playbook", "playbook is required");
    Playbook pb;
    try {
      pb = playbook_from_json(req.at("playbook"));
    } catch (const Error& e) {
      return error_result(400, "invalid_playbook", e.what());
    }
    if (!pb.has_node(current)) {
      return error_result(400, "unknown_current_node", "current node '" + current + "' is not in the playbook");
    }
    if (auto v = playbook_violations(pb); !v.empty()) return error_result(400, "invalid_playbook", v.front().describe());

    nlohmann::json warnings = nlohmann::json::array();
    std::vector<std::string> ignored;
    const AlertOneHot alert = one_hot_encode_lenient(keys, bundle.schema, ignored);
    for (const auto& key : ignored) {
      warnings.push_back({{"code", "unknown_alert_key"}, {"key", key}});
    }
    const std::string& current_module = pb.module_of(current);
    if (current_module == kEopModule || !bundle.module_table.contains(current_module)) {
      return error_result(400, "unknown_module", "module '" + current_module + "' of the current node is unknown");
    }
    for (const auto& m : pb.module_set()) {
      if (!bundle.modules.contains(m)) warnings.push_back({{"code", "unknown_module"}, {"module", m}});
    }

    const auto scores = score_all(bundle, alert, pb, current);
    const auto order = rank_candidates(scores, bundle.modules);
    nlohmann::json recs = nlohmann::json::array();
    int eop_rank = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] == bundle.modules.eop_index()) eop_rank = static_cast<int>(i + 1);
      if (static_cast<int>(i) < k) {
        const auto& id = bundle.modules.candidate(order[i]);
        recs.push_back({{"candidate", id},
                        {"name", module_display_name(id)},
                        {"score", round_sig9(scores[order[i]])},
                        {"rank", static_cast<int>(i + 1)}});
      }
    }
    return {200,
            {{"recommendations", recs},
             {"eop_rank", eop_rank},
             {"eop_score", round_sig9(scores[bundle.modules.eop_index()])},
             {"warnings", warnings},
             {"bundle", s->fingerprint}}};
  } catch (const Error& e) {
    return error_result(400, e.code(), e.what());
  } catch (const std::exception& e) {
    return error_result(500, "internal", e.what());
  }
}

// ---------------------------------------------------------------------------
// httplib wiring

struct ServerOptions {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string cors_origin;  // empty: no CORS headers
};

inline void install_routes(httplib::Server& server, const ServiceState& state, const ServerOptions& opt) {
  auto reply = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.set_payload_max_length(kMaxRequestBytes);
  if (!opt.cors_origin.empty()) {
    server.set_default_headers({{"Access-Control-Allow-Origin", opt.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Vary", "Origin"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }
  server.Get("/health", [&state, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_health(state));
  });
  server.Get("/modules", [&state, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_modules(state));
  });
  server.Post("/recommend", [&state, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_recommend(state, req.body));
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 413   ? "payload_too_large"
                             : res.status == 404 ? "not_found"
                             : res.status == 405 ? "method_not_allowed"
                                                 : "http_error";
    res.set_content(nlohmann::json{{"error", {{"code", code}, {"message", httplib::status_message(res.status)}}}}.dump(),
                    "application/json");
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", {{"code", "internal"}, {"message", what}}}}.dump(), "application/json");
  });
}

/// Blocks SIGINT/SIGTERM in every thread, serves on a worker thread, and
/// stops the server when one of those signals arrives. Returns once the
/// server has drained.
inline int serve_until_signal(const ServiceState& state, const ServerOptions& opt,
                              const std::function<void(int)>& on_listening = {}) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  httplib::Server server;
  install_routes(server, state, opt);
  const int port = opt.port == 0 ? server.bind_to_any_port(opt.host) : (server.bind_to_port(opt.host, opt.port) ? opt.port : -1);
  if (port < 0) throw Error("bind_failed", "cannot bind " + opt.host + ":" + std::to_string(opt.port));
  std::thread worker([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  if (on_listening) on_listening(port);
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  worker.join();
  return 0;
}

}  // namespace icsecure
