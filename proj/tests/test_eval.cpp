// Copyright 2026 The Originality Guard Authors.
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

#include "mock_backend.hpp"

#include <doctest.h>

#include "originality_guard/eval.hpp"
#include "test_util.hpp"

using namespace og;
using og::testing::code_of;
using og::testing::read_file;
using og::testing::TempDir;

namespace {

SimilarityCurve curve(std::vector<double> rates) {
  SimilarityCurve c;
  c.max_length = rates.size() + 1;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    c.points.push_back({i + 2, static_cast<std::uint64_t>(rates[i] * 100), 100, rates[i]});
  }
  return c;
}

ExperimentConfig small_config(const TempDir& dir) {
  ExperimentConfig cfg;
  cfg.dataset = og::testing::data_dir() / "toy500.txt";
  cfg.decoding.strategy = DecodeStrategy::sample(1.0);
  cfg.decoding.seed = 3;
  cfg.input_tokens = 8;
  cfg.max_inputs = 20;
  cfg.conditions = {"default", "spcd", "sp-prompt-only"};
  cfg.output_dir = dir.path() / "report";
  return cfg;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("compare_curves arithmetic and guards") {
  const auto a = curve({0.2, 0.10});
  const auto b = curve({0.1, 0.06});
  const auto r = compare_curves(a, b);
  REQUIRE(r.size() == 2);
  CHECK(r[1].length == 3);
  CHECK(r[1].absolute == doctest::Approx(0.04));
  CHECK(r[1].relative == doctest::Approx(0.40));
  CHECK_FALSE(r[1].undefined_baseline);
  for (const auto& x : compare_curves(a, a)) {
    CHECK(x.absolute == 0.0);
    CHECK(x.relative == 0.0);
  }
  const auto z = compare_curves(curve({0.0}), curve({0.0}));
  CHECK(z[0].relative == 0.0);
  CHECK(z[0].undefined_baseline);
  CHECK(code_of([&] { compare_curves(a, curve({0.1})); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("config parsing and validation") {
  TempDir dir;
  og::testing::write_file(dir / "toy.txt", read_file(og::testing::data_dir() / "toy500.txt"));
  og::testing::write_file(dir / "exp.json", R"({
    "dataset": {"path": "toy.txt", "format": "plain"},
    "decoding": {"lambda": 4, "strategy": "temperature", "seed": 11},
    "amateurs": [{"kind": "copy", "prompt": "verbatim:name"}],
    "conditions": ["default", "spcd"],
    "prompt_counts": [1],
    "lmax": 5
  })");
  const auto cfg = ExperimentConfig::load(dir / "exp.json");
  CHECK(cfg.dataset == dir / "toy.txt");
  CHECK(cfg.decoding.lambda == 4);
  CHECK(cfg.decoding.seed == 11);
  CHECK(cfg.amateurs.at(0).order == 5);
  CHECK(cfg.amateurs.at(0).prompt == "verbatim:name");
  CHECK(cfg.lmax == 5);
  cfg.validate();
  const auto again = ExperimentConfig::from_json(nlohmann::json::parse(cfg.to_json().dump()));
  CHECK(again.to_json() == cfg.to_json());

  auto bad = cfg;
  bad.conditions.clear();
  bad.prompt_counts.clear();
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidConfig);
  bad = cfg;
  bad.conditions = {"magic"};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidConfig);
  bad = cfg;
  bad.prompt_counts = {2};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidConfig);
  bad = cfg;
  bad.amateurs[0].prompt = "idea:detail";
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kCapability);
  bad = cfg;
  bad.dataset = dir / "gone.txt";
  try {
    bad.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPathNotFound);
    CHECK(std::string(e.what()).find("gone.txt") != std::string::npos);
  }
  CHECK(code_of([] {
          ExperimentConfig::from_json(nlohmann::json::parse(R"({"dataset": {"path": "x"}, "colour": 1})"));
        }) == ErrorCode::kInvalidConfig);
  CHECK(code_of([] { ExperimentConfig::from_json(nlohmann::json::parse(R"({"lmax": 3})")); }) ==
        ErrorCode::kInvalidConfig);
}

TEST_CASE("experiment report structure and direction") {
  TempDir dir;
  const auto cfg = small_config(dir);
  const auto r = run_experiment(cfg);
  REQUIRE(r.conditions.size() == 3);
  for (const auto& c : r.conditions) {
    CHECK(c.curve.points.size() == 6);
    CHECK(c.generations == 20);
    CHECK(c.failures == 0);
  }
  const auto& base = r.condition("default");
  const auto& spcd = r.condition("spcd");
  const auto& only = r.condition("sp-prompt-only");
  CHECK(spcd.penalized_steps > 0);
  CHECK(base.penalized_steps == 0);
  for (std::size_t L = 2; L <= 5; ++L) CHECK(spcd.curve.rate(L) <= base.curve.rate(L));
  for (std::size_t L = 2; L <= 7; ++L) CHECK(only.curve.rate(L) >= base.curve.rate(L));
  CHECK(r.comparisons.size() == 2);
  CHECK(r.metadata["test_inputs"] == 20);
  CHECK(r.metadata.contains("test_inputs_hash"));
  CHECK(r.metadata.contains("original_set_source_hash"));
  CHECK(r.metadata["conditions"].size() == 3);
  CHECK(std::isfinite(base.expert_perplexity));
  CHECK(base.mean_length > 0);
  CHECK_THROWS_AS(r.condition("nope"), Error);
}

TEST_CASE("reports are reproducible and round trip") {
  TempDir dir;
  auto cfg = small_config(dir);
  cfg.conditions = {"default", "spcd"};
  const auto a = run_experiment(cfg);
  cfg.threads = 3;
  const auto b = run_experiment(cfg);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_json().dump() != "");

  const auto files = export_report(a, dir / "out");
  REQUIRE(files.size() == 2);
  const std::string csv = read_file(dir / "out" / "report.csv");
  std::size_t rows = 0;
  std::istringstream lines(csv);
  std::string line;
  bool header = false;
  while (std::getline(lines, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header) {
      CHECK(line == "condition,L,matched,total,rate");
      header = true;
      continue;
    }
    ++rows;
  }
  CHECK(rows == 12);
  const std::string json = read_file(dir / "out" / "report.json");
  export_report(a, dir / "out");
  CHECK(read_file(dir / "out" / "report.csv") == csv);
  CHECK(read_file(dir / "out" / "report.json") == json);

  const auto back = Report::from_json(nlohmann::ordered_json::parse(json));
  CHECK(back.to_csv() == a.to_csv());
  CHECK(back.to_json().dump() == a.to_json().dump());
}

TEST_CASE("unwritable report directory is an io error") {
  TempDir dir;
  og::testing::write_file(dir / "file", "x");
  Report r;
  try {
    export_report(r, dir / "file" / "sub");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).find("sub") != std::string::npos);
  }
}

TEST_CASE("failing conditions leave a partial report") {
  TempDir dir;
  int port = 0;
  {
    og::testing::MockBackend gone([](const nlohmann::json&, httplib::Response&) {});
    port = gone.port();
  }
  auto cfg = small_config(dir);
  cfg.max_inputs = 2;
  cfg.conditions = {"default"};
  cfg.expert.kind = LmKind::kRemote;
  cfg.expert.endpoint = "http://127.0.0.1:" + std::to_string(port);
  CHECK(code_of([&] { run_experiment(cfg); }) == ErrorCode::kExperimentFailed);
  CHECK(std::filesystem::exists(cfg.output_dir / "report.partial.json"));
}

TEST_CASE("remote amateurs with several prompts") {
  TempDir dir;
  og::testing::MockBackend server([](const nlohmann::json& req, httplib::Response& res) {
    const std::string prompt = req["prompt"];
    if (prompt.empty()) {
      og::testing::reply(res, {{"the", 0.4}, {"harbor", 0.3}, {".", 0.2}, {"<eos>", 0.1}});
    } else {
      const double x = prompt.size() % 5 / 10.0 + 0.3;
      og::testing::reply(res, {{"the", x}, {".", 0.9 - x}});
    }
  });
  auto cfg = small_config(dir);
  cfg.max_inputs = 3;
  cfg.conditions = {"default", "spcd"};
  cfg.prompt_counts = {1, 2};
  cfg.expert.kind = LmKind::kRemote;
  cfg.expert.endpoint = server.endpoint();
  cfg.amateurs.clear();
  for (const char* p : {"verbatim:detail", "paraphrase:detail"}) {
    ModelSpec m;
    m.kind = LmKind::kRemote;
    m.endpoint = server.endpoint();
    m.prompt = p;
    cfg.amateurs.push_back(m);
  }
  cfg.decoding.max_new_tokens = 5;
  const auto r = run_experiment(cfg);
  CHECK(r.conditions.size() == 4);
  CHECK(r.condition("spcd-p2").prompt_count == 2);
  CHECK(std::isnan(r.condition("default").expert_perplexity));
}

}  // TEST_SUITE
