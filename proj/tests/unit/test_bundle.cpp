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


#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "icsecure/bundle.hpp"
#include "icsecure/datagen.hpp"
#include "test_util.hpp"

namespace icsecure {
namespace {

class BundleTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus_ = new Corpus(generate_memorization_corpus(6, 3, 7, 9, 48));
    bundle_ = new ModelBundle(train(testing::fast_config(21)));
  }
  static void TearDownTestSuite() {
    delete bundle_;
    delete corpus_;
  }
  static ModelBundle train(const PipelineConfig& c) {
    return train_bundle(*corpus_, corpus_->alert_ids(), c, GraphVariant::kWithoutAttributes);
  }
  static std::string code_of_load(const std::filesystem::path& dir) {
    try {
      load_bundle(dir);
    } catch (const Error& e) {
      return e.code();
    }
    return "none";
  }

  static Corpus* corpus_;
  static ModelBundle* bundle_;
};

Corpus* BundleTest::corpus_ = nullptr;
ModelBundle* BundleTest::bundle_ = nullptr;

TEST_F(BundleTest, RoundTripPreservesScores) {
  const auto dir = testing::scratch_dir("bundle_rt");
  save_bundle(dir, *bundle_);
  for (const char* f : {"manifest.json", "autoencoder.bin", "module_embeddings.bin", "graph2vec.bin", "ncf.bin"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto loaded = load_bundle(dir);
  EXPECT_EQ(loaded.modules, bundle_->modules);
  EXPECT_EQ(loaded.variant, GraphVariant::kWithoutAttributes);
  EXPECT_EQ(serialize_bundle(loaded).manifest, serialize_bundle(*bundle_).manifest);

  Rng rng(4);
  const auto samples = generate_epoch(*corpus_, corpus_->alert_ids(), bundle_->modules, rng);
  ASSERT_FALSE(samples.empty());
  for (const auto& s : samples) {
    const auto& alert = corpus_->alert(s.alert_id);
    const auto a = score_all(*bundle_, alert, s.partial, s.current_node);
    const auto b = score_all(loaded, alert, s.partial, s.current_node);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-12);
  }
  std::filesystem::remove_all(dir);
}

TEST_F(BundleTest, SeedsDetermineHashes) {
  const auto a = serialize_bundle(*bundle_);
  const auto b = serialize_bundle(train(testing::fast_config(21)));
  EXPECT_EQ(a.manifest.at("blob_hashes"), b.manifest.at("blob_hashes"));
  EXPECT_EQ(a.manifest.at("fingerprint"), b.manifest.at("fingerprint"));
  EXPECT_EQ(a.blobs, b.blobs);

  const auto c = serialize_bundle(train(testing::fast_config(22)));
  EXPECT_NE(a.manifest.at("fingerprint"), c.manifest.at("fingerprint"));
  EXPECT_NE(a.manifest.at("blob_hashes").at("ncf.bin"), c.manifest.at("blob_hashes").at("ncf.bin"));
}

TEST_F(BundleTest, FingerprintIgnoresItsOwnField) {
  auto s = serialize_bundle(*bundle_);
  EXPECT_EQ(bundle_fingerprint(s.manifest), s.manifest.at("fingerprint").get<std::string>());
  EXPECT_EQ(s.manifest.at("fingerprint").get<std::string>().size(), 16u);
  s.manifest["candidates"].push_back("m_extra");
  EXPECT_NE(bundle_fingerprint(s.manifest), s.manifest.at("fingerprint").get<std::string>());
}

TEST_F(BundleTest, CorruptBlobIsDetected) {
  const auto dir = testing::scratch_dir("bundle_corrupt");
  save_bundle(dir, *bundle_);
  {
    std::fstream f(dir / "ncf.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  EXPECT_EQ(code_of_load(dir), "corrupt_blob");
  std::filesystem::remove_all(dir);
}

TEST_F(BundleTest, BadManifestsAreRejected) {
  const auto dir = testing::scratch_dir("bundle_manifest");
  save_bundle(dir, *bundle_);
  const auto good = read_json_file(dir / "manifest.json");

  auto with = [&](auto&& edit) {
    auto m = good;
    edit(m);
    write_json_file(dir / "manifest.json", m);
    return code_of_load(dir);
  };
  EXPECT_EQ(with([](auto& m) { m["format_version"] = 99; }), "invalid_manifest");
  EXPECT_EQ(with([](auto& m) { m.erase("models"); }), "invalid_manifest");
  EXPECT_EQ(with([](auto& m) { m.erase("schema_keys"); }), "invalid_manifest");
  EXPECT_EQ(with([](auto& m) { m["schema_fingerprint"] = "0000000000000000"; }), "invalid_manifest");
  EXPECT_EQ(with([](auto& m) { m["module_registry"].erase(1); }), "invalid_manifest");
  EXPECT_EQ(with([](auto& m) { m["variant"] = "sideways"; }), "invalid_manifest");
  EXPECT_EQ(with([](auto& m) { m["models"]["ncf"]["network"]["tensors"][0]["offset"] = 1 << 30; }), "corrupt_blob");
  EXPECT_EQ(with([](auto&) {}), "none");
  std::filesystem::remove_all(dir);
}

TEST_F(BundleTest, TrainingLogHasEveryStage) {
  const auto log = training_log(*bundle_);
  const auto cfg = testing::fast_config(21);
  EXPECT_EQ(log.at("autoencoder_loss").size(), static_cast<std::size_t>(cfg.autoencoder.epochs + 1));
  EXPECT_EQ(log.at("ncf_loss").size(), static_cast<std::size_t>(cfg.ncf.epochs));
  EXPECT_FALSE(log.at("node2vec_loss").empty());
  EXPECT_FALSE(log.at("graph2vec_loss").empty());
}

}  // namespace
}  // namespace icsecure
