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

// JSON corpus files: schema.json, alerts.json, playbooks.json, mapping.json.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsecure/core/error.hpp"
#include "icsecure/core/model.hpp"

namespace icsecure {

using json = nlohmann::json;

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("invalid_json", path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << text;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Rounds to 9 significant digits; nlohmann prints the shortest round-trip
/// form, so the emitted text carries at most 9 digits.
inline double round_sig9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

// --- playbooks --------------------------------------------------------------

inline json playbook_to_json(const Playbook& pb) {
  json nodes = json::array();
  for (const auto& [n, m] : pb.nodes) nodes.push_back({{"id", n}, {"module", m}});
  json edges = json::array();
  for (const auto& [a, b] : pb.edges) edges.push_back(json::array({a, b}));
  json j = {{"start", pb.start}, {"nodes", nodes}, {"edges", edges}};
  if (!pb.id.empty()) j["id"] = pb.id;
  return j;
}

/// Parses the node/edge layout shared by playbooks.json and service
/// requests. Duplicate node ids are rejected; duplicate edges collapse.
inline Playbook playbook_from_json(const json& j) {
  if (!j.is_object()) throw Error("invalid_playbook", "playbook must be a JSON object");
  Playbook pb;
  try {
    if (j.contains("id")) pb.id = j.at("id").get<std::string>();
    pb.start = j.at("start").get<std::string>();
    for (const auto& n : j.at("nodes")) {
      auto id = n.at("id").get<std::string>();
      auto mod = n.at("module").get<std::string>();
      if (!pb.nodes.emplace(id, mod).second) {
        throw Error("invalid_playbook", "duplicate node id " + id + " in playbook " + pb.id);
      }
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error("invalid_playbook", "edge must be a [from, to] pair");
      pb.edges.emplace(e[0].get<std::string>(), e[1].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error("invalid_playbook", std::string("malformed playbook: ") + e.what());
  }
  return pb;
}

// --- individual files --------------------------------------------------------

inline json schema_to_json(const SchemaKeyRegistry& reg) { return {{"keys", reg.keys()}}; }

inline SchemaKeyRegistry schema_from_json(const json& j) {
  try {
    return SchemaKeyRegistry(j.at("keys").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw Error("invalid_schema", std::string("malformed schema: ") + e.what());
  }
}

inline json alerts_to_json(const std::map<std::string, AlertRule>& alerts) {
  json arr = json::array();
  for (const auto& [id, a] : alerts) arr.push_back({{"id", id}, {"keys", a.present_keys}});
  return arr;
}

inline std::map<std::string, AlertRule> alerts_from_json(const json& j) {
  std::map<std::string, AlertRule> out;
  try {
    for (const auto& a : j) {
      AlertRule r;
      r.id = a.at("id").get<std::string>();
      for (const auto& k : a.at("keys")) r.present_keys.insert(k.get<std::string>());
      if (!out.emplace(r.id, r).second) throw Error("invalid_alerts", "duplicate alert id " + r.id);
    }
  } catch (const json::exception& e) {
    throw Error("invalid_alerts", std::string("malformed alerts: ") + e.what());
  }
  return out;
}

inline json playbooks_to_json(const std::map<std::string, Playbook>& pbs) {
  json arr = json::array();
  for (const auto& [id, pb] : pbs) arr.push_back(playbook_to_json(pb));
  return arr;
}

inline std::map<std::string, Playbook> playbooks_from_json(const json& j) {
  if (!j.is_array()) throw Error("invalid_playbook", "playbooks file must hold an array");
  std::map<std::string, Playbook> out;
  for (const auto& item : j) {
    Playbook pb = playbook_from_json(item);
    if (pb.id.empty()) throw Error("invalid_playbook", "playbook without id");
    std::string id = pb.id;
    if (!out.emplace(id, std::move(pb)).second) throw Error("invalid_playbook", "duplicate playbook id " + id);
  }
  return out;
}

inline json mapping_to_json(const AlertPlaybookMapping& m) {
  json j = json::object();
  for (const auto& [a, pbs] : m) j[a] = pbs;
  return j;
}

inline AlertPlaybookMapping mapping_from_json(const json& j) {
  try {
    return j.get<AlertPlaybookMapping>();
  } catch (const json::exception& e) {
    throw Error("invalid_mapping", std::string("malformed mapping: ") + e.what());
  }
}

// --- whole corpus -------------------------------------------------------------

inline Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus c;
  c.registry = schema_from_json(read_json_file(dir / "schema.json"));
  c.alerts = alerts_from_json(read_json_file(dir / "alerts.json"));
  c.playbooks = playbooks_from_json(read_json_file(dir / "playbooks.json"));
  c.mapping = mapping_from_json(read_json_file(dir / "mapping.json"));
  return c;
}

inline void save_corpus(const std::filesystem::path& dir, const Corpus& c) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "schema.json", schema_to_json(c.registry));
  write_json_file(dir / "alerts.json", alerts_to_json(c.alerts));
  write_json_file(dir / "playbooks.json", playbooks_to_json(c.playbooks));
  write_json_file(dir / "mapping.json", mapping_to_json(c.mapping));
}

}  // namespace icsecure
