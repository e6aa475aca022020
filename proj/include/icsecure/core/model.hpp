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

// Data model: schema keys, alert rules, security modules, playbook graphs and
// the alert -> playbook mapping, plus corpus validation and the unified
// module-level graph.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "icsecure/core/error.hpp"
#include "icsecure/core/hash.hpp"

namespace icsecure {

inline const std::string kStartModule = "START";
inline const std::string kEopModule = "EOP";

// ---------------------------------------------------------------------------
// Schema keys

/// Ordered universe of alert schema keys; the position of a key is its
/// one-hot axis.
class SchemaKeyRegistry {
 public:
  SchemaKeyRegistry() = default;
  explicit SchemaKeyRegistry(std::vector<std::string> keys) : keys_(std::move(keys)) {
    index_.reserve(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (!index_.emplace(keys_[i], i).second) {
        throw Error("duplicate_key", "schema key listed twice: " + keys_[i]);
      }
    }
  }

  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }
  std::optional<std::size_t> index_of(std::string_view key) const {
    auto it = index_.find(std::string(key));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view key) const { return index_of(key).has_value(); }

  /// Hash of the key order; two registries with the same fingerprint produce
  /// identical one-hot vectors.
  std::uint64_t fingerprint() const {
    Fnv1a64 h;
    for (const auto& k : keys_) {
      h.update(k);
      h.update(std::string_view("\n"));
    }
    return h.digest();
  }

  friend bool operator==(const SchemaKeyRegistry& a, const SchemaKeyRegistry& b) {
    return a.keys_ == b.keys_;
  }

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AlertRule {
  std::string id;
  std::set<std::string> present_keys;

  friend bool operator==(const AlertRule&, const AlertRule&) = default;
};

// ---------------------------------------------------------------------------
// Modules

/// Module universe with START at position 0 and EOP last. Candidates (label
/// and score axes) are every module except START; EOP is the last candidate.
class ModuleRegistry {
 public:
  ModuleRegistry() : ModuleRegistry(std::vector<std::string>{}) {}

  /// `modules` are ordinary module ids; START/EOP are ignored if present.
  /// Ids are sorted so the order is independent of discovery order.
  explicit ModuleRegistry(std::vector<std::string> modules) {
    std::set<std::string> uniq;
    for (auto& m : modules) {
      if (m != kStartModule && m != kEopModule) uniq.insert(std::move(m));
    }
    modules_.push_back(kStartModule);
    modules_.insert(modules_.end(), uniq.begin(), uniq.end());
    modules_.push_back(kEopModule);
    for (std::size_t i = 1; i < modules_.size(); ++i) candidate_index_.emplace(modules_[i], i - 1);
  }

  /// START, ordinary modules (sorted), EOP.
  const std::vector<std::string>& modules() const { return modules_; }
  std::vector<std::string> candidates() const { return {modules_.begin() + 1, modules_.end()}; }
  std::size_t num_candidates() const { return modules_.size() - 1; }
  std::size_t eop_index() const { return num_candidates() - 1; }
  const std::string& candidate(std::size_t i) const { return modules_.at(i + 1); }

  std::optional<std::size_t> candidate_index(std::string_view module) const {
    auto it = candidate_index_.find(std::string(module));
    if (it == candidate_index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view module) const {
    return module == kStartModule || candidate_index(module).has_value();
  }

  friend bool operator==(const ModuleRegistry& a, const ModuleRegistry& b) {
    return a.modules_ == b.modules_;
  }

 private:
  std::vector<std::string> modules_;
  std::map<std::string, std::size_t> candidate_index_;
};

/// "m_block_ip" -> "Block Ip". Display only.
inline std::string module_display_name(std::string_view id) {
  if (id == kStartModule) return "Start";
  if (id == kEopModule) return "End of Playbook";
  std::string_view s = id;
  if (s.starts_with("m_")) s.remove_prefix(2);
  std::string out;
  bool upper = true;
  for (char c : s) {
    if (c == '_' || c == '-') {
      out.push_back(' ');
      upper = true;
    } else {
      out.push_back(upper && c >= 'a' && c <= 'z' ? static_cast<char>(c - 'a' + 'A') : c);
      upper = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Playbooks

using Edge = std::pair<std::string, std::string>;

/// Directed graph of module-typed nodes. Node ids are distinct from module
/// ids so the same module may appear on several nodes.
struct Playbook {
  std::string id;
  std::string start;
  std::map<std::string, std::string> nodes;  // node id -> module id
  std::set<Edge> edges;

  bool has_node(std::string_view node) const { return nodes.contains(std::string(node)); }

  const std::string& module_of(const std::string& node) const {
    auto it = nodes.find(node);
    if (it == nodes.end()) throw Error("unknown_node", "playbook " + id + " has no node " + node);
    return it->second;
  }

  std::vector<std::string> successors(const std::string& node) const {
    std::vector<std::string> out;
    for (auto it = edges.lower_bound({node, std::string()}); it != edges.end() && it->first == node; ++it) {
      out.push_back(it->second);
    }
    return out;
  }

  /// Nodes reachable from `from` along directed edges (including `from`).
  std::set<std::string> reachable_from(const std::string& from) const {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& [a, b] : edges) adj[a].push_back(b);
    std::set<std::string> seen;
    if (!has_node(from)) return seen;
    std::deque<std::string> queue{from};
    seen.insert(from);
    while (!queue.empty()) {
      std::string u = std::move(queue.front());
      queue.pop_front();
      for (const auto& v : adj[u]) {
        if (seen.insert(v).second) queue.push_back(v);
      }
    }
    return seen;
  }

  /// Distinct module ids used by the nodes, START included.
  std::set<std::string> module_set() const {
    std::set<std::string> out;
    for (const auto& [n, m] : nodes) out.insert(m);
    return out;
  }

  friend bool operator==(const Playbook&, const Playbook&) = default;
};

/// Dense integer view of a playbook for the hot loops (WL relabeling, sample
/// generation). Node order follows the sorted node ids.
struct IndexedGraph {
  std::vector<std::string> node_ids;
  std::vector<std::string> modules;
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;
  int start = -1;

  explicit IndexedGraph(const Playbook& pb) {
    std::map<std::string, int> idx;
    for (const auto& [n, m] : pb.nodes) {
      idx.emplace(n, static_cast<int>(node_ids.size()));
      node_ids.push_back(n);
      modules.push_back(m);
    }
    out.resize(node_ids.size());
    in.resize(node_ids.size());
    for (const auto& [a, b] : pb.edges) {
      auto ia = idx.find(a), ib = idx.find(b);
      if (ia == idx.end() || ib == idx.end()) {
        throw Error("invalid_playbook", "edge endpoint missing in playbook " + pb.id);
      }
      out[ia->second].push_back(ib->second);
      in[ib->second].push_back(ia->second);
    }
    if (auto it = idx.find(pb.start); it != idx.end()) start = it->second;
  }

  std::size_t size() const { return node_ids.size(); }
  int index_of(const std::string& node) const {
    auto it = std::lower_bound(node_ids.begin(), node_ids.end(), node);
    if (it == node_ids.end() || *it != node) return -1;
    return static_cast<int>(it - node_ids.begin());
  }
};

using AlertPlaybookMapping = std::map<std::string, std::vector<std::string>>;

// ---------------------------------------------------------------------------
// Corpus

struct Corpus {
  SchemaKeyRegistry registry;
  std::map<std::string, AlertRule> alerts;
  std::map<std::string, Playbook> playbooks;
  AlertPlaybookMapping mapping;

  std::vector<std::string> alert_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, a] : alerts) out.push_back(id);
    return out;
  }

  const Playbook& playbook(const std::string& id) const {
    auto it = playbooks.find(id);
    if (it == playbooks.end()) throw Error("unknown_playbook", "unknown playbook " + id);
    return it->second;
  }
  const AlertRule& alert(const std::string& id) const {
    auto it = alerts.find(id);
    if (it == alerts.end()) throw Error("unknown_alert", "unknown alert " + id);
    return it->second;
  }

  /// Playbooks triggered by the given alerts, de-duplicated, in id order.
  std::vector<const Playbook*> playbooks_for(const std::vector<std::string>& alert_ids) const {
    std::set<std::string> ids;
    for (const auto& a : alert_ids) {
      if (auto it = mapping.find(a); it != mapping.end()) ids.insert(it->second.begin(), it->second.end());
    }
    std::vector<const Playbook*> out;
    for (const auto& id : ids) out.push_back(&playbook(id));
    return out;
  }

  /// Module registry over every module used by any playbook.
  ModuleRegistry module_registry() const {
    std::vector<std::string> mods;
    for (const auto& [id, pb] : playbooks) {
      for (const auto& [n, m] : pb.nodes) mods.push_back(m);
    }
    return ModuleRegistry(std::move(mods));
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.registry == b.registry && a.alerts == b.alerts && a.playbooks == b.playbooks &&
           a.mapping == b.mapping;
  }
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  kEmptyAlert,
  kUnknownKey,
  kMissingStart,
  kStartNotStartModule,
  kReservedModule,
  kDanglingEdge,
  kSelfLoop,
  kUnreachableNode,
  kDanglingAlertReference,
  kDanglingPlaybookReference,
  kEmptyMappingEntry,
};

inline std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kEmptyAlert: return "empty alert";
    case ViolationKind::kUnknownKey: return "unknown key";
    case ViolationKind::kMissingStart: return "missing start node";
    case ViolationKind::kStartNotStartModule: return "start node not START";
    case ViolationKind::kReservedModule: return "reserved module on non-start node";
    case ViolationKind::kDanglingEdge: return "dangling edge";
    case ViolationKind::kSelfLoop: return "self loop";
    case ViolationKind::kUnreachableNode: return "unreachable node";
    case ViolationKind::kDanglingAlertReference: return "dangling alert reference";
    case ViolationKind::kDanglingPlaybookReference: return "dangling playbook reference";
    case ViolationKind::kEmptyMappingEntry: return "empty mapping entry";
  }
  return "?";
}

struct Violation {
  ViolationKind kind;
  std::string subject;  // id of the offending alert/playbook/mapping entry
  std::string detail;

  std::string describe() const { return std::string(to_string(kind)) + " [" + subject + "] " + detail; }
};

/// Structural checks of a single playbook. With `require_reachable` every
/// node must be reachable from the start node.
inline std::vector<Violation> playbook_violations(const Playbook& pb, bool require_reachable = true) {
  std::vector<Violation> out;
  auto start_it = pb.nodes.find(pb.start);
  if (start_it == pb.nodes.end()) {
    out.push_back({ViolationKind::kMissingStart, pb.id, "start '" + pb.start + "' is not a node"});
  } else if (start_it->second != kStartModule) {
    out.push_back({ViolationKind::kStartNotStartModule, pb.id, "start maps to " + start_it->second});
  }
  for (const auto& [n, m] : pb.nodes) {
    if ((m == kStartModule && n != pb.start) || m == kEopModule) {
      out.push_back({ViolationKind::kReservedModule, pb.id, "node " + n + " uses " + m});
    }
  }
  bool dangling = false;
  for (const auto& [a, b] : pb.edges) {
    if (!pb.has_node(a) || !pb.has_node(b)) {
      out.push_back({ViolationKind::kDanglingEdge, pb.id, a + "->" + b});
      dangling = true;
    } else if (a == b) {
      out.push_back({ViolationKind::kSelfLoop, pb.id, a});
    }
  }
  if (require_reachable && start_it != pb.nodes.end() && !dangling) {
    auto seen = pb.reachable_from(pb.start);
    for (const auto& [n, m] : pb.nodes) {
      if (!seen.contains(n)) out.push_back({ViolationKind::kUnreachableNode, pb.id, n});
    }
  }
  return out;
}

/// Returns every violation found; an empty list means the corpus is valid.
inline std::vector<Violation> validate_corpus(const Corpus& corpus) {
  std::vector<Violation> out;
  for (const auto& [id, alert] : corpus.alerts) {
    if (alert.present_keys.empty()) out.push_back({ViolationKind::kEmptyAlert, id, ""});
    for (const auto& k : alert.present_keys) {
      if (!corpus.registry.contains(k)) out.push_back({ViolationKind::kUnknownKey, id, k});
    }
  }
  for (const auto& [id, pb] : corpus.playbooks) {
    auto v = playbook_violations(pb);
    out.insert(out.end(), v.begin(), v.end());
  }
  for (const auto& [alert_id, pbs] : corpus.mapping) {
    if (!corpus.alerts.contains(alert_id)) {
      out.push_back({ViolationKind::kDanglingAlertReference, alert_id, "mapping references unknown alert"});
    }
    if (pbs.empty()) out.push_back({ViolationKind::kEmptyMappingEntry, alert_id, ""});
    for (const auto& pb : pbs) {
      if (!corpus.playbooks.contains(pb)) {
        out.push_back({ViolationKind::kDanglingPlaybookReference, alert_id, "unknown playbook " + pb});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unified module-level graph

struct UnifiedGraph {
  std::set<std::string> nodes;
  std::set<Edge> edges;

  friend bool operator==(const UnifiedGraph&, const UnifiedGraph&) = default;
};

/// Union of the playbooks' module sets and module-level edge projections.
template <typename PlaybookPtrs>
UnifiedGraph build_unified_graph(const PlaybookPtrs& playbooks) {
  UnifiedGraph g;
  bool any = false;
  for (const Playbook* pb : playbooks) {
    any = true;
    for (const auto& [n, m] : pb->nodes) g.nodes.insert(m);
    for (const auto& [a, b] : pb->edges) g.edges.emplace(pb->module_of(a), pb->module_of(b));
  }
  if (!any) throw Error("empty_input", "build_unified_graph: no playbooks");
  return g;
}

inline UnifiedGraph build_unified_graph(const std::vector<Playbook>& playbooks) {
  std::vector<const Playbook*> ptrs;
  for (const auto& p : playbooks) ptrs.push_back(&p);
  return build_unified_graph(ptrs);
}

}  // namespace icsecure
