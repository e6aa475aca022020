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

// On-disk model bundle: manifest.json plus one little-endian f64 blob per
// model. Blob bytes depend only on parameters, so equal seeds give equal
// hashes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "icsecure/config.hpp"
#include "icsecure/core/binary.hpp"
#include "icsecure/core/error.hpp"
#include "icsecure/core/hash.hpp"
#include "icsecure/core/io.hpp"
#include "icsecure/recommender.hpp"

namespace icsecure {

inline constexpr int kBundleFormatVersion = 1;

inline const char* const kAutoencoderBlob = "autoencoder.bin";
inline const char* const kModuleEmbeddingBlob = "module_embeddings.bin";
inline const char* const kGraph2VecBlob = "graph2vec.bin";
inline const char* const kNcfBlob = "ncf.bin";

namespace detail {

inline nlohmann::json append_matrix(Blob& blob, const nn::Matrix& m) {
  nlohmann::json j = {{"shape", {m.rows(), m.cols()}}, {"offset", blob.size()}};
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) append_f64_le(blob, m(r, c));
  }
  return j;
}

inline nn::Matrix read_matrix(const nlohmann::json& j, std::span<const std::byte> blob) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw Error("invalid_manifest", "bad matrix shape");
  nn::Matrix m(shape[0], shape[1]);
  std::size_t off = j.at("offset").get<std::size_t>();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, off += 8) m(r, c) = read_f64_le(blob, off);
  }
  return m;
}

inline std::uint64_t blob_hash(const Blob& b) { return Fnv1a64{}.update(std::span<const std::byte>(b)).digest(); }

}  // namespace detail

struct SerializedBundle {
  nlohmann::json manifest;
  std::map<std::string, Blob> blobs;
};

/// Bundle fingerprint over the blob hashes and the scoring-relevant manifest.
inline std::string bundle_fingerprint(const nlohmann::json& manifest) {
  nlohmann::json core = manifest;
  core.erase("fingerprint");
  return to_hex(fnv1a64(core.dump()));
}

inline SerializedBundle serialize_bundle(const ModelBundle& b) {
  SerializedBundle out;
  nlohmann::json models;

  Blob ae;
  models["autoencoder"] = {{"file", kAutoencoderBlob},
                           {"network", nn::append_network(ae, b.autoencoder.spec, b.autoencoder.params)},
                           {"code_layer", AlertAutoencoder::kCodeLayer},
                           {"registry_fingerprint", to_hex(b.autoencoder.registry_fingerprint)}};
  out.blobs[kAutoencoderBlob] = std::move(ae);

  Blob mod;
  models["module_embeddings"] = {{"file", kModuleEmbeddingBlob},
                                 {"ids", b.module_table.ids},
                                 {"vectors", detail::append_matrix(mod, b.module_table.vectors)},
                                 {"context", detail::append_matrix(mod, b.module_table.context)},
                                 {"eop", detail::append_matrix(mod, nn::Matrix(b.module_table.eop.transpose()))}};
  out.blobs[kModuleEmbeddingBlob] = std::move(mod);

  Blob g2v;
  const auto& gm = b.graph_model;
  models["graph2vec"] = {{"file", kGraph2VecBlob},
                         {"variant", to_string(gm.config.variant)},
                         {"vocab", gm.vocab},
                         {"label_counts", gm.label_counts},
                         {"doc_ids", gm.doc_ids},
                         {"label_vectors", detail::append_matrix(g2v, gm.label_vectors)},
                         {"doc_vectors", detail::append_matrix(g2v, gm.doc_vectors)}};
  out.blobs[kGraph2VecBlob] = std::move(g2v);

  Blob ncf;
  models["ncf"] = {{"file", kNcfBlob}, {"network", nn::append_network(ncf, b.ncf_spec, b.ncf_params)}};
  if (!b.ncf_input.identity()) {
    models["ncf"]["input_shift"] = detail::append_matrix(ncf, nn::Matrix(b.ncf_input.shift.transpose()));
    models["ncf"]["input_scale"] = detail::append_matrix(ncf, nn::Matrix(b.ncf_input.scale.transpose()));
  }
  out.blobs[kNcfBlob] = std::move(ncf);

  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [name, blob] : out.blobs) hashes[name] = to_hex(detail::blob_hash(blob));

  out.manifest = {{"format_version", kBundleFormatVersion},
                  {"variant", to_string(b.variant)},
                  {"embedding_dim", kEmbeddingDim},
                  {"schema_keys", b.schema.keys()},
                  {"schema_fingerprint", to_hex(b.schema.fingerprint())},
                  {"module_registry", b.modules.modules()},
                  {"candidates", b.modules.candidates()},
                  {"training_fingerprint", to_hex(b.training_fingerprint)},
                  {"graph_infer_seed", b.graph_infer_seed},
                  {"config", config_to_json(b.config)},
                  {"models", models},
                  {"blob_hashes", hashes}};
  out.manifest["fingerprint"] = bundle_fingerprint(out.manifest);
  return out;
}

namespace detail {
inline std::uint64_t parse_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }
}  // namespace detail

inline ModelBundle deserialize_bundle(const SerializedBundle& s) {
  const auto& m = s.manifest;
  try {
    if (m.at("format_version").get<int>() != kBundleFormatVersion) {
      throw Error("invalid_manifest", "unsupported bundle format version");
    }
    auto blob = [&](const std::string& name) -> const Blob& {
      auto it = s.blobs.find(name);
      if (it == s.blobs.end()) throw Error("invalid_manifest", "missing blob " + name);
      if (to_hex(detail::blob_hash(it->second)) != m.at("blob_hashes").at(name).get<std::string>()) {
        throw Error("corrupt_blob", "hash mismatch for " + name);
      }
      return it->second;
    };
    ModelBundle b;
    b.schema = SchemaKeyRegistry(m.at("schema_keys").get<std::vector<std::string>>());
    if (to_hex(b.schema.fingerprint()) != m.at("schema_fingerprint").get<std::string>()) {
      throw Error("invalid_manifest", "schema fingerprint mismatch");
    }
    std::vector<std::string> reg = m.at("module_registry").get<std::vector<std::string>>();
    b.modules = ModuleRegistry(reg);
    if (b.modules.modules() != reg) throw Error("invalid_manifest", "module registry is not in canonical order");
    b.variant = graph_variant_from_string(m.at("variant").get<std::string>());
    b.training_fingerprint = detail::parse_hex(m.at("training_fingerprint").get<std::string>());
    b.graph_infer_seed = m.at("graph_infer_seed").get<std::uint64_t>();
    b.config = config_overlay(PipelineConfig{}, m.at("config"));

    const auto& models = m.at("models");
    const auto& ae = models.at("autoencoder");
    const Blob& ae_blob = blob(ae.at("file").get<std::string>());
    b.autoencoder.spec = nn::network_spec_from_manifest(ae.at("network"));
    b.autoencoder.params = nn::read_network(ae.at("network"), ae_blob);
    b.autoencoder.registry_fingerprint = detail::parse_hex(ae.at("registry_fingerprint").get<std::string>());

    const auto& me = models.at("module_embeddings");
    const Blob& me_blob = blob(me.at("file").get<std::string>());
    b.module_table.ids = me.at("ids").get<std::vector<std::string>>();
    b.module_table.vectors = detail::read_matrix(me.at("vectors"), me_blob);
    b.module_table.context = detail::read_matrix(me.at("context"), me_blob);
    b.module_table.eop = detail::read_matrix(me.at("eop"), me_blob).row(0).transpose();

    const auto& g = models.at("graph2vec");
    const Blob& g_blob = blob(g.at("file").get<std::string>());
    b.graph_model.config = b.config.graph2vec;
    b.graph_model.config.variant = graph_variant_from_string(g.at("variant").get<std::string>());
    b.graph_model.vocab = g.at("vocab").get<std::vector<std::string>>();
    b.graph_model.label_counts = g.at("label_counts").get<std::vector<double>>();
    b.graph_model.doc_ids = g.at("doc_ids").get<std::vector<std::string>>();
    b.graph_model.label_vectors = detail::read_matrix(g.at("label_vectors"), g_blob);
    b.graph_model.doc_vectors = detail::read_matrix(g.at("doc_vectors"), g_blob);

    const auto& ncf = models.at("ncf");
    const Blob& ncf_blob = blob(ncf.at("file").get<std::string>());
    b.ncf_spec = nn::network_spec_from_manifest(ncf.at("network"));
    b.ncf_params = nn::read_network(ncf.at("network"), ncf_blob);
    if (ncf.contains("input_shift")) {
      b.ncf_input.shift = detail::read_matrix(ncf.at("input_shift"), ncf_blob).row(0).transpose();
      b.ncf_input.scale = detail::read_matrix(ncf.at("input_scale"), ncf_blob).row(0).transpose();
      if (b.ncf_input.shift.size() != 3 * kEmbeddingDim || b.ncf_input.scale.size() != 3 * kEmbeddingDim) {
        throw Error("invalid_manifest", "scorer input standardization has the wrong width");
      }
    }

    if (b.autoencoder.input_dim() != static_cast<int>(b.schema.size()) ||
        b.ncf_spec.output_dim() != static_cast<int>(b.modules.num_candidates()) ||
        b.ncf_spec.input_dim() != 3 * kEmbeddingDim) {
      throw Error("invalid_manifest", "model dimensions do not match the registries");
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_manifest", std::string("malformed bundle manifest: ") + e.what());
  } catch (const Error& e) {
    // Bad variant names or config values inside a manifest are manifest errors.
    if (e.code() == "invalid_config") throw Error("invalid_manifest", e.what());
    throw;
  }
}

inline void save_bundle(const std::filesystem::path& dir, const ModelBundle& b) {
  const auto s = serialize_bundle(b);
  std::filesystem::create_directories(dir);
  for (const auto& [name, blob] : s.blobs) write_blob(dir / name, blob);
  write_json_file(dir / "manifest.json", s.manifest);
}

inline SerializedBundle read_serialized_bundle(const std::filesystem::path& dir) {
  SerializedBundle s;
  s.manifest = read_json_file(dir / "manifest.json");
  if (!s.manifest.contains("models") || !s.manifest.at("models").is_object()) {
    throw Error("invalid_manifest", "manifest has no models section");
  }
  for (const auto& [name, model] : s.manifest.at("models").items()) {
    const std::string file = model.at("file").get<std::string>();
    s.blobs[file] = read_blob(dir / file);
  }
  return s;
}

inline ModelBundle load_bundle(const std::filesystem::path& dir) { return deserialize_bundle(read_serialized_bundle(dir)); }

/// Training-log side file; not part of the fingerprint.
inline nlohmann::json training_log(const ModelBundle& b) {
  auto rounded = [](const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v) out.push_back(round_sig9(x));
    return out;
  };
  return {{"autoencoder_loss", rounded(b.autoencoder.loss_history)},
          {"node2vec_loss", rounded(b.module_table.loss_history)},
          {"graph2vec_loss", rounded(b.graph_model.loss_history)},
          {"ncf_loss", rounded(b.ncf_loss_history)}};
}

}  // namespace icsecure
