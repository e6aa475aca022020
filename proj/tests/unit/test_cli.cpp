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


#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <thread>

#include <gtest/gtest.h>
#include <json.hpp>

#include "icsecure/core/io.hpp"
#include "icsecure/service.hpp"
#include "test_util.hpp"

namespace icsecure {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

/// Runs the CLI through the shell; stderr is discarded.
RunResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" ICSECURE_CLI_PATH "' " + args + " 2>/dev/null";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Tiny training schedule so end-to-end runs stay fast.
constexpr const char* kFastOverlay = R"({
  "autoencoder": {"hidden_dim": 32, "epochs": 100},
  "node2vec": {"epochs": 100},
  "graph2vec": {"epochs": 40, "infer_steps": 20},
  "ncf": {"epochs": 20},
  "baselines": {"frequency_epochs": 3, "nmf_iterations": 20}
})";

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(testing::scratch_dir("cli"));
    write_text_file(*dir_ / "fast.json", kFastOverlay);
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static fs::path* dir_;
};

fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("bogus").exit_code, 2);
  EXPECT_EQ(run("gen-data --memorize").exit_code, 2);
  EXPECT_EQ(run("gen-data --scale d9 --out " + q(*dir_ / "x")).exit_code, 2);
  EXPECT_EQ(run("gen-data --out " + q(*dir_ / "x"), "IC_SECURE_SEED=abc").exit_code, 2);
  EXPECT_EQ(run("train --data a --out b --graph-variant sideways").exit_code, 2);
  EXPECT_EQ(run("--help").exit_code, 0);
}

TEST_F(CliTest, GenDataWritesCorpus) {
  const auto out = *dir_ / "d1";
  const auto r = run("gen-data --scale d1 --seed 7 --out " + q(out));
  ASSERT_EQ(r.exit_code, 0);
  for (const char* f : {"schema.json", "alerts.json", "playbooks.json", "mapping.json", "corpus-manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(json::parse(r.out).at("alerts"), 55);
  const auto counts = read_json_file(out / "corpus-manifest.json").at("counts");
  EXPECT_EQ(counts.at("modules"), 26);
  EXPECT_EQ(counts.at("keys"), 2661);

  // Env seed stands in for --seed.
  const auto env_out = *dir_ / "d1_env";
  ASSERT_EQ(run("gen-data --out " + q(env_out), "IC_SECURE_SEED=7").exit_code, 0);
  EXPECT_EQ(read_json_file(out / "alerts.json"), read_json_file(env_out / "alerts.json"));
  EXPECT_EQ(read_json_file(out / "playbooks.json"), read_json_file(env_out / "playbooks.json"));
}

TEST_F(CliTest, TrainRecommendFlow) {
  const auto data = *dir_ / "mem";
  ASSERT_EQ(run("gen-data --memorize --alerts 6 --chain 3 --modules 7 --seed 2 --out " + q(data)).exit_code, 0);
  const auto playbooks = read_json_file(data / "playbooks.json");
  EXPECT_EQ(playbooks.size(), 6u);

  const std::string train = "train --data " + q(data) + " --config " + q(*dir_ / "fast.json") + " --seed 5 ";
  const auto a = run(train + "--out " + q(*dir_ / "b1"));
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_TRUE(fs::exists(*dir_ / "b1" / "manifest.json"));
  EXPECT_TRUE(fs::exists(*dir_ / "b1" / "training_log.json"));
  const auto b = run(train + "--out " + q(*dir_ / "b2"));
  ASSERT_EQ(b.exit_code, 0);
  EXPECT_EQ(json::parse(a.out).at("blob_hashes"), json::parse(b.out).at("blob_hashes"));
  EXPECT_EQ(json::parse(a.out).at("fingerprint"), json::parse(b.out).at("fingerprint"));

  const auto without = run(train + "--graph-variant without-attributes --out " + q(*dir_ / "b3"));
  ASSERT_EQ(without.exit_code, 0);
  EXPECT_EQ(read_json_file(*dir_ / "b3" / "manifest.json").at("variant"), "without-attributes");

  // Recommend from the first chain's second node.
  const auto alerts = read_json_file(data / "alerts.json");
  const auto mapping = read_json_file(data / "mapping.json");
  json pb;
  for (const auto& p : playbooks) {
    if (p.at("id") == "pb_01") pb = p;
  }
  write_json_file(*dir_ / "pb.json", pb);
  write_json_file(*dir_ / "alert.json", json{{"keys", alerts.at(0).at("keys")}});
  const std::string rec = "recommend --model " + q(*dir_ / "b1") + " --alert " + q(*dir_ / "alert.json") +
                          " --playbook " + q(*dir_ / "pb.json") + " --current n1 --k 5";
  const auto r = run(rec);
  ASSERT_EQ(r.exit_code, 0);
  const auto body = json::parse(r.out);
  EXPECT_EQ(body.at("recommendations").size(), 5u);
  EXPECT_EQ(body.at("bundle"), json::parse(a.out).at("fingerprint"));

  EXPECT_EQ(run(rec.substr(0, rec.find(" --current")) + " --current ghost").exit_code, 1);
  write_text_file(*dir_ / "broken.json", "{\"start\": ");
  EXPECT_EQ(run("recommend --model " + q(*dir_ / "b1") + " --alert " + q(*dir_ / "alert.json") + " --playbook " +
                q(*dir_ / "broken.json") + " --current n1")
                .exit_code,
            1);
  EXPECT_EQ(run(rec + " --k 0").exit_code, 2);
  EXPECT_EQ(run("recommend --model " + q(*dir_ / "nothing") + " --alert a --playbook b --current n1").exit_code, 1);
}

TEST_F(CliTest, EvalBaselinesOnly) {
  const auto data = *dir_ / "d1_eval";
  ASSERT_EQ(run("gen-data --seed 7 --out " + q(data)).exit_code, 0);
  const auto out = *dir_ / "report";
  const auto r = run("eval --data " + q(data) + " --out " + q(out) + " --models frequency --dump-samples --config " +
                     q(*dir_ / "fast.json"));
  ASSERT_EQ(r.exit_code, 0);
  const auto means = json::parse(r.out).at("means");
  ASSERT_EQ(means.size(), 4u);  // default ks 1,3,5,10
  for (const auto& m : means) EXPECT_EQ(m.at("model"), "frequency");
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "report.csv"));
  EXPECT_GT(fs::file_size(out / "samples.jsonl"), 0u);
  EXPECT_EQ(run("eval --data " + q(data) + " --out " + q(out) + " --models magic").exit_code, 2);
  EXPECT_EQ(run("eval --data " + q(data) + " --out " + q(out) + " --ks 0").exit_code, 2);
}

TEST_F(CliTest, ServeAnswersAndStopsOnSigterm) {
  EXPECT_EQ(run("serve --model " + q(*dir_ / "no_bundle") + " --port 0").exit_code, 1);

  const auto bundle = fs::path(ICSECURE_FIXTURE_DIR) / "golden" / "bundle";
  const auto log = *dir_ / "serve.log";
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    dup2(fd, STDERR_FILENO);
    execl(ICSECURE_CLI_PATH, ICSECURE_CLI_PATH, "serve", "--model", bundle.c_str(), "--port", "0", "--host",
          "127.0.0.1", static_cast<char*>(nullptr));
    _exit(127);
  }
  int port = 0;
  const std::regex re("listening on 127\\.0\\.0\\.1:(\\d+)");
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::smatch m;
    if (std::regex_search(text, m, re)) port = std::stoi(m[1]);
  }
  ASSERT_GT(port, 0) << "server did not report a port";
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body).at("status"), "ok");

  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

}  // namespace
}  // namespace icsecure
