// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Runs the tdpm executable end to end. TDPM_CLI_PATH is set by the build.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const fs::path& root() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "tdpm_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + TDPM_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Shared fixture: a sampled model and dataset written once.
struct Fixture {
  fs::path model, data;
  Fixture() {
    const auto d = root() / "fixture";
    REQUIRE(run("sample-model --actions 4 --classes 2 --stages 1:2 --family exponential --seed 3 --out " + q(d)) == 0);
    model = d / "model.json";
    REQUIRE(run("sample-data --model " + q(model) + " --n 60 --seed 4 --out " + q(d)) == 0);
    data = d / "data.jsonl";
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  CHECK(run("") == 2);
  CHECK(run("--help") == 0);
  CHECK(run("fit") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("sample-model --family gamma --out " + q(root() / "x")) == 2);
}

TEST_CASE("data and validation failures") {
  const auto bad = root() / "bad.jsonl";
  spit(bad, "{\"actions\":[\"A\"],\"times\":[3]}\n");
  CHECK(run("fit --data " + q(bad) + " --out " + q(root() / "bad_fit")) == 3);
  CHECK(run("validate --data " + q(bad)) == 3);

  const auto& f = fixture();
  CHECK(run("validate --model " + q(f.model) + " --data " + q(f.data)) == 0);
  std::string text = slurp(f.model);
  const auto pos = text.find("\"theta_C\"");
  REQUIRE(pos != std::string::npos);
  const auto open = text.find('[', pos), close = text.find(']', pos);
  text.replace(open, close - open + 1, "[0.6,0.6]");
  const auto broken = root() / "broken.json";
  spit(broken, text);
  CHECK(run("validate --model " + q(broken)) == 2);

  const auto stranger = root() / "stranger.jsonl";
  spit(stranger, "{\"actions\":[\"a1\",\"zz\"],\"times\":[0,1]}\n");
  CHECK(run("classify --model " + q(f.model) + " --data " + q(stranger) + " --out " + q(root() / "s")) == 3);
}

TEST_CASE("reruns are byte-identical") {
  const auto& f = fixture();
  const std::string fit_args = "fit --data " + q(f.data) + " --classes 2 --stages 1:2 --family weibull --max-iters 8 --seed 9";
  const std::string mf = " --model " + q(f.model) + " --data " + q(f.data);
  const std::vector<std::pair<std::string, std::string>> cmds{
      {fit_args, "trace.csv"},
      {"predict" + mf + " --train-frac 0.8 --mode mixture --n-samples 21 --seed 2", "predictions.csv"},
      {"eval-mae" + mf + " --train-frac 0.8 --mode median", "mae.csv"},
      {"classify" + mf, "classes.csv"},
      {"representative" + mf + " --class 1", "representative_steps.csv"},
      {"mae-table --data " + q(f.data) + " --classes 2 --stages 1:2 --max-iters 3 --n-samples 5", "mae_table.csv"},
      {"synthetic --families geometric --n-grid 20 40 --n-test 20 --seeds 2 --actions 3 --classes 2 --stages 1:2 "
       "--max-iters 4",
       "synthetic.csv"},
  };
  int i = 0;
  for (const auto& [args, file] : cmds) {
    CAPTURE(args);
    const auto a = root() / ("run_a" + std::to_string(i)), b = root() / ("run_b" + std::to_string(i));
    ++i;
    REQUIRE(run(args + " --out " + q(a)) == 0);
    REQUIRE(run(args + " --out " + q(b)) == 0);
    const std::string first = slurp(a / file);
    CHECK(!first.empty());
    CHECK(first == slurp(b / file));
    CHECK(fs::exists(a / "config.toml"));
  }
  CHECK(slurp(root() / "run_a0" / "model.json") == slurp(root() / "run_b0" / "model.json"));
}

TEST_CASE("resolved config reproduces the run") {
  const auto& f = fixture();
  const auto a = root() / "cfg_a", b = root() / "cfg_b";
  REQUIRE(run("classify --model " + q(f.model) + " --data " + q(f.data) + " --use-time false --out " + q(a)) == 0);
  REQUIRE(run("--config " + q(a / "config.toml") + " classify --out " + q(b)) == 0);
  CHECK(slurp(a / "classes.csv") == slurp(b / "classes.csv"));
}

}  // TEST_SUITE
