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

// Synthetic corpora. Playbooks are layered random DAGs; every playbook owns a
// hidden key signature that the alerts mapped to it carry, plus noise keys,
// so alert fingerprints predict playbook structure.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "icsecure/core/error.hpp"
#include "icsecure/core/io.hpp"
#include "icsecure/core/model.hpp"
#include "icsecure/core/random.hpp"

namespace icsecure {

struct IntRange {
  int lo = 1;
  int hi = 1;
  bool valid() const { return lo >= 1 && lo <= hi; }
};

struct CorpusSpec {
  int n_keys = 2661;
  int n_alerts = 55;
  int n_playbooks = 23;
  int n_modules = 26;
  int signature_keys = 8;
  IntRange noise_keys{4, 12};
  IntRange playbook_size{4, 10};  // nodes, START included
  IntRange branching{1, 3};       // layer width
  IntRange playbooks_per_alert{1, 2};
  double extra_edge_probability = 0.3;
  std::uint64_t seed = 1;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error("infeasible_spec", m); };
    if (n_keys < 1 || n_alerts < 1 || n_playbooks < 1 || n_modules < 1 || signature_keys < 1) {
      fail("all counts must be >= 1");
    }
    if (!noise_keys.valid() || !branching.valid() || !playbooks_per_alert.valid()) fail("empty range");
    if (playbook_size.lo < 2 || playbook_size.lo > playbook_size.hi) fail("playbook size must be >= 2");
    if (playbook_size.lo - 1 > n_modules) fail("playbook size exceeds module count (modules do not repeat)");
    if (n_alerts < n_playbooks) fail("every playbook needs at least one alert");
    if (playbooks_per_alert.lo > n_playbooks) fail("playbooks_per_alert exceeds playbook count");
    if (static_cast<long>(n_playbooks) * std::min(playbook_size.hi - 1, n_modules) < n_modules) {
      fail("playbooks too small to use every module");
    }
    if (signature_keys + noise_keys.hi > n_keys) fail("not enough schema keys");
    if (extra_edge_probability < 0.0 || extra_edge_probability > 1.0) fail("extra_edge_probability outside [0,1]");
  }
};

/// Desk-scale stand-in for the smallest benchmark dataset.
inline CorpusSpec d1_spec(std::uint64_t seed = 1) {
  CorpusSpec s;
  s.seed = seed;
  return s;
}

inline nlohmann::json corpus_spec_to_json(const CorpusSpec& s) {
  auto range = [](IntRange r) { return nlohmann::json::array({r.lo, r.hi}); };
  return {{"n_keys", s.n_keys},
          {"n_alerts", s.n_alerts},
          {"n_playbooks", s.n_playbooks},
          {"n_modules", s.n_modules},
          {"signature_keys", s.signature_keys},
          {"noise_keys", range(s.noise_keys)},
          {"playbook_size", range(s.playbook_size)},
          {"branching", range(s.branching)},
          {"playbooks_per_alert", range(s.playbooks_per_alert)},
          {"extra_edge_probability", s.extra_edge_probability},
          {"seed", s.seed}};
}

// ---------------------------------------------------------------------------
// Names

/// SIEM-style field names; the first three are the usual network triple.
inline std::vector<std::string> synthetic_key_names(int n) {
  static const char* kPrefixes[] = {"src", "dest", "orig", "parent", "user", "host", "file", "process", "registry",
                                    "http", "dns", "email", "cert", "service", "device", "object", "session",
                                    "network", "vendor", "action", "signature", "threat", "cloud", "container",
                                    "auth", "policy", "rule", "app", "tcp", "tls", "ssh", "smb", "ldap", "kerberos",
                                    "firewall", "proxy", "dhcp", "vpn", "mail", "endpoint"};
  static const char* kFields[] = {"ip", "port", "name", "id", "domain", "user", "group", "path", "hash", "size",
                                  "count", "type", "category", "status", "code", "mac", "zone", "nt_domain",
                                  "priority", "bunit", "owner", "location", "lat", "long", "city", "country",
                                  "region", "os", "version", "vendor", "product", "time", "duration", "bytes",
                                  "bytes_in", "bytes_out", "packets", "packets_in", "packets_out", "protocol",
                                  "direction", "severity", "score", "label", "tag", "url", "uri", "method",
                                  "agent", "referrer", "query", "answer", "record", "subject", "sender",
                                  "recipient", "issuer", "serial", "pid", "ppid", "cmdline", "guid", "sid",
                                  "session_id", "role", "privilege", "result", "reason", "signature_id",
                                  "dvc", "asset_tag"};
  std::vector<std::string> out = {"srcip", "dstip", "hostname"};
  std::set<std::string> seen(out.begin(), out.end());
  for (const char* p : kPrefixes) {
    for (const char* f : kFields) {
      if (static_cast<int>(out.size()) >= n) break;
      std::string name = std::string(p) + "_" + f;
      if (seen.insert(name).second) out.push_back(std::move(name));
    }
  }
  for (int i = 0; static_cast<int>(out.size()) < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "extra_field_%05d", i);
    out.emplace_back(buf);
  }
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline std::vector<std::string> synthetic_module_names(int n) {
  static const char* kNames[] = {
      "m_geoip",          "m_whois",        "m_virustotal",   "m_sandbox",       "m_edr_isolate",  "m_fw_block",
      "m_ticket",         "m_email_notify", "m_user_lookup",  "m_ad_disable",    "m_dns_lookup",   "m_ip_reputation",
      "m_siem_search",    "m_pcap_capture", "m_hash_lookup",  "m_url_scan",      "m_quarantine",   "m_vuln_scan",
      "m_asset_lookup",   "m_chat_notify",  "m_pwd_reset",    "m_proxy_block",   "m_mfa_challenge", "m_log_collect",
      "m_process_kill",   "m_memory_dump",  "m_threat_intel", "m_case_update",   "m_approval",     "m_ioc_extract"};
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    if (i < static_cast<int>(std::size(kNames))) {
      out.emplace_back(kNames[i]);
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "m_module_%03d", i);
      out.emplace_back(buf);
    }
  }
  return out;
}

namespace detail {

inline std::string numbered(const char* prefix, int i, int width) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

/// Layered DAG over the given modules (slot order = node order). Layer 0 is
/// START; every node gets one parent in the previous layer, plus random extra
/// edges between consecutive layers.
inline Playbook layered_playbook(const std::string& id, const std::vector<std::string>& modules, IntRange branching,
                                 double extra_edge_probability, Rng& rng) {
  Playbook pb;
  pb.id = id;
  pb.start = "n0";
  pb.nodes["n0"] = kStartModule;
  std::vector<std::vector<std::string>> layers = {{"n0"}};
  std::size_t next = 0;
  while (next < modules.size()) {
    const int width = std::min(uniform_int(rng, branching.lo, branching.hi), static_cast<int>(modules.size() - next));
    std::vector<std::string> layer;
    for (int w = 0; w < width; ++w, ++next) {
      std::string node = "n" + std::to_string(next + 1);
      pb.nodes[node] = modules[next];
      layer.push_back(node);
    }
    const auto& prev = layers.back();
    for (const auto& v : layer) pb.edges.emplace(prev[uniform_index(rng, prev.size())], v);
    for (const auto& u : prev) {
      for (const auto& v : layer) {
        if (!pb.edges.contains({u, v}) && bernoulli(rng, extra_edge_probability)) pb.edges.emplace(u, v);
      }
    }
    layers.push_back(std::move(layer));
  }
  return pb;
}

inline std::vector<std::string> sample_keys(const std::vector<std::string>& keys, int count, Rng& rng) {
  std::vector<std::size_t> idx(keys.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Partial Fisher-Yates: the first `count` slots end up uniformly drawn.
  for (int i = 0; i < count; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) + uniform_index(rng, idx.size() - static_cast<std::size_t>(i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(keys[idx[static_cast<std::size_t>(i)]]);
  return out;
}

}  // namespace detail

inline Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, 0xda7a));
  Corpus c;
  const auto keys = synthetic_key_names(spec.n_keys);
  c.registry = SchemaKeyRegistry(keys);
  const auto modules = synthetic_module_names(spec.n_modules);

  // Playbook sizes, grown if needed so every module fits somewhere.
  std::vector<int> slots(static_cast<std::size_t>(spec.n_playbooks));
  const int max_slots = std::min(spec.playbook_size.hi - 1, spec.n_modules);
  long total = 0;
  for (auto& s : slots) {
    s = std::min(uniform_int(rng, spec.playbook_size.lo, spec.playbook_size.hi) - 1, max_slots);
    total += s;
  }
  for (std::size_t i = 0; total < spec.n_modules; i = (i + 1) % slots.size()) {
    if (slots[i] < max_slots) {
      ++slots[i];
      ++total;
    }
  }

  // Modules: one pass over a shuffled pool so each is used, then a skewed
  // popularity draw without repetition inside a playbook.
  std::vector<double> popularity(modules.size());
  for (std::size_t i = 0; i < modules.size(); ++i) popularity[i] = 1.0 / std::pow(static_cast<double>(i) + 1.0, 0.8);
  std::vector<std::size_t> perm(modules.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  shuffle(perm, rng);  // decouple popularity from name order
  std::vector<std::size_t> pool = perm;
  shuffle(pool, rng);
  std::vector<std::vector<std::string>> assigned(slots.size());
  std::size_t pool_pos = 0;
  for (std::size_t p = 0; pool_pos < pool.size(); p = (p + 1) % slots.size()) {
    if (static_cast<int>(assigned[p].size()) < slots[p]) assigned[p].push_back(modules[pool[pool_pos++]]);
  }
  for (std::size_t p = 0; p < slots.size(); ++p) {
    while (static_cast<int>(assigned[p].size()) < slots[p]) {
      std::vector<double> w(modules.size());
      for (std::size_t i = 0; i < modules.size(); ++i) {
        const auto& m = modules[perm[i]];
        w[i] = std::find(assigned[p].begin(), assigned[p].end(), m) == assigned[p].end() ? popularity[i] : 0.0;
      }
      AliasTable table(w);
      assigned[p].push_back(modules[perm[table.sample(rng)]]);
    }
    shuffle(assigned[p], rng);
    const std::string id = detail::numbered("pb_", static_cast<int>(p + 1), 2);
    c.playbooks.emplace(id, detail::layered_playbook(id, assigned[p], spec.branching, spec.extra_edge_probability, rng));
  }

  // Signatures and alerts.
  std::vector<std::string> pb_ids;
  for (const auto& [id, pb] : c.playbooks) pb_ids.push_back(id);
  std::map<std::string, std::vector<std::string>> signature;
  for (const auto& id : pb_ids) signature[id] = detail::sample_keys(keys, spec.signature_keys, rng);
  std::set<std::set<std::string>> seen;
  for (int a = 0; a < spec.n_alerts; ++a) {
    const std::string id = detail::numbered("ar_", a + 1, 3);
    std::set<std::string> mapped;
    if (a < spec.n_playbooks) mapped.insert(pb_ids[static_cast<std::size_t>(a)]);
    const int want = uniform_int(rng, spec.playbooks_per_alert.lo, spec.playbooks_per_alert.hi);
    while (static_cast<int>(mapped.size()) < want) mapped.insert(pb_ids[uniform_index(rng, pb_ids.size())]);
    AlertRule alert{id, {}};
    for (int attempt = 0;; ++attempt) {
      alert.present_keys.clear();
      for (const auto& pb : mapped) alert.present_keys.insert(signature[pb].begin(), signature[pb].end());
      for (const auto& k : detail::sample_keys(keys, uniform_int(rng, spec.noise_keys.lo, spec.noise_keys.hi), rng)) {
        alert.present_keys.insert(k);
      }
      if (seen.insert(alert.present_keys).second) break;
      if (attempt > 1000) throw Error("infeasible_spec", "cannot draw distinct alert key sets");
    }
    c.alerts.emplace(id, std::move(alert));
    c.mapping[id] = {mapped.begin(), mapped.end()};
  }
  return c;
}

/// One linear chain playbook per alert; chains are distinct module
/// sequences and alert key sets are distinct.
inline Corpus generate_memorization_corpus(int n_alerts, int chain_length, int n_modules, std::uint64_t seed,
                                           int n_keys = 2661) {
  if (n_alerts < 1 || chain_length < 1 || n_modules < chain_length) {
    throw Error("infeasible_spec", "memorization corpus needs n_modules >= chain_length >= 1 and n_alerts >= 1");
  }
  if (n_keys < 16) throw Error("infeasible_spec", "memorization corpus needs at least 16 schema keys");
  Rng rng(mix_seed(seed, 0x3e30));
  Corpus c;
  const auto keys = synthetic_key_names(n_keys);
  c.registry = SchemaKeyRegistry(keys);
  const auto modules = synthetic_module_names(n_modules);
  std::set<std::vector<std::string>> chains;
  std::set<std::set<std::string>> key_sets;
  for (int a = 0; a < n_alerts; ++a) {
    std::vector<std::string> chain;
    for (int attempt = 0;; ++attempt) {
      chain = detail::sample_keys(modules, chain_length, rng);
      if (chains.insert(chain).second) break;
      if (attempt > 1000) throw Error("infeasible_spec", "cannot draw distinct module chains");
    }
    const std::string pb_id = detail::numbered("pb_", a + 1, 2);
    Playbook pb;
    pb.id = pb_id;
    pb.start = "n0";
    pb.nodes["n0"] = kStartModule;
    for (int i = 0; i < chain_length; ++i) {
      pb.nodes["n" + std::to_string(i + 1)] = chain[static_cast<std::size_t>(i)];
      pb.edges.emplace("n" + std::to_string(i), "n" + std::to_string(i + 1));
    }
    c.playbooks.emplace(pb_id, std::move(pb));

    const std::string id = detail::numbered("ar_", a + 1, 3);
    AlertRule alert{id, {}};
    for (int attempt = 0;; ++attempt) {
      const auto ks = detail::sample_keys(keys, 8, rng);
      alert.present_keys = {ks.begin(), ks.end()};
      if (key_sets.insert(alert.present_keys).second) break;
      if (attempt > 1000) throw Error("infeasible_spec", "cannot draw distinct alert key sets");
    }
    c.alerts.emplace(id, std::move(alert));
    c.mapping[id] = {pb_id};
  }
  return c;
}

/// Writes the four corpus files plus corpus-manifest.json.
inline void write_corpus(const std::filesystem::path& dir, const Corpus& c, const nlohmann::json& generator) {
  save_corpus(dir, c);
  write_json_file(dir / "corpus-manifest.json",
                  {{"generator", generator},
                   {"counts",
                    {{"keys", c.registry.size()},
                     {"alerts", c.alerts.size()},
                     {"playbooks", c.playbooks.size()},
                     {"modules", c.module_registry().num_candidates() - 1}}}});
}

/// Mean pairwise Jaccard similarity of alert key sets, split into pairs that
/// share a playbook and pairs that do not.
inline std::pair<double, double> key_overlap_within_and_across(const Corpus& c) {
  double within = 0, across = 0;
  long n_within = 0, n_across = 0;
  const auto ids = c.alert_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const auto& a = c.alert(ids[i]).present_keys;
      const auto& b = c.alert(ids[j]).present_keys;
      std::size_t inter = 0;
      for (const auto& k : a) inter += b.contains(k) ? 1 : 0;
      const double jac = static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
      const auto& pa = c.mapping.at(ids[i]);
      const auto& pb = c.mapping.at(ids[j]);
      const bool share = std::any_of(pa.begin(), pa.end(),
                                     [&](const std::string& p) { return std::find(pb.begin(), pb.end(), p) != pb.end(); });
      (share ? within : across) += jac;
      ++(share ? n_within : n_across);
    }
  }
  return {n_within ? within / static_cast<double>(n_within) : 0.0, n_across ? across / static_cast<double>(n_across) : 0.0};
}

}  // namespace icsecure
