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

#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "fake_lm.hpp"
#include "originality_guard/decoder.hpp"

#include <nlohmann/json.hpp>
#include "test_util.hpp"

using namespace og;
using og::testing::code_of;
using og::testing::dist_of;
using og::testing::FakeLm;

namespace {

// Values computed in 40-digit arithmetic.
constexpr double kExpMinus3 = 0.049787068367863942979;
constexpr double kAdjustA = 0.069490974690032674976;  // (0.6, 0.4) with alpha (e^-3, 1)
constexpr double kAdjustB = 0.930509025309967325024;
constexpr double kStepA = 0.026738849661062997161;  // (0.6, 0.4) with alpha (e^-4, 1)
constexpr double kStepB = 0.973261150338937002839;

const PromptTemplate& verbatim() { return builtin_templates().lookup("verbatim:detail"); }

NextTokenDistribution random_dist(std::mt19937_64& rng, std::size_t n, TokenId base = 10) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TokenId> ids;
  std::vector<double> p;
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(base + static_cast<TokenId>(i));
    p.push_back(u(rng));
    s += p.back();
  }
  for (auto& x : p) x /= s;
  return dist_of(ids, p);
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("delta worked examples") {
  const auto e = dist_of({3, 4}, {0.6, 0.4});
  const auto d = delta(e, dist_of({3, 4}, {0.9, 0.1}));
  CHECK(d.values[0] == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(d.values[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK((delta(e, e).values == 0.0).all());
  const auto h = delta(dist_of({3, 4}, {0.5, 0.5}), dist_of({3}, {1.0}));
  CHECK(h.values[0] == -0.5);
  CHECK(h.values[1] == 0.5);
  CHECK(h.candidates == std::vector<TokenId>{3, 4});
}

TEST_CASE("delta alignment rules") {
  const auto e = dist_of({3, 4}, {0.6, 0.4});
  const auto swapped = delta(e, dist_of({4, 3}, {0.1, 0.9}));
  CHECK(swapped.values[0] == doctest::Approx(-0.3));
  CHECK(code_of([&] { delta(e, dist_of({7, 8}, {0.5, 0.5})); }) == ErrorCode::kAlignment);
  CHECK(code_of([&] { delta(NextTokenDistribution{}, e); }) == ErrorCode::kAlignment);
  const auto topk = dist_of({3, 4}, {0.5, 0.3}, Coverage::kTopK);
  const auto none = delta(topk, dist_of({7}, {1.0}));
  CHECK((none.values == topk.probs).all());
}

TEST_CASE("min_delta") {
  const std::vector<DeltaVector> two{
      {{3, 4}, (Eigen::ArrayXd(2) << -0.3, 0.3).finished()},
      {{3, 4}, (Eigen::ArrayXd(2) << 0.1, -0.2).finished()}};
  const auto m = min_delta(std::span<const DeltaVector>(two));
  CHECK(m.values[0] == -0.3);
  CHECK(m.values[1] == -0.2);
  const auto one = min_delta(std::span<const DeltaVector>(two).first(1));
  CHECK((one.values == two[0].values).all());

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<DeltaVector> v(3);
    for (auto& d : v) {
      d.candidates = {1, 2, 3, 4, 5};
      d.values.resize(5);
      for (auto& x : d.values) x = u(rng);
    }
    const auto got = min_delta(std::span<const DeltaVector>(v));
    for (Eigen::Index i = 0; i < 5; ++i) {
      CHECK(got.values[i] == std::min({v[0].values[i], v[1].values[i], v[2].values[i]}));
    }
  }
  std::vector<DeltaVector> bad{{{1}, Eigen::ArrayXd::Zero(1)}, {{2}, Eigen::ArrayXd::Zero(1)}};
  CHECK(code_of([&] { min_delta(std::span<const DeltaVector>(bad)); }) == ErrorCode::kAlignment);
  CHECK(code_of([] { min_delta(std::span<const DeltaVector>{}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("alpha branches") {
  const DeltaVector d{{1, 2, 3}, (Eigen::ArrayXd(3) << 0.3, 0.0, -0.3).finished()};
  const auto a = alpha(d, 10.0);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == 1.0);
  CHECK(a[2] == doctest::Approx(kExpMinus3).epsilon(1e-15));
  CHECK(code_of([&] { alpha(d, 0.0); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { alpha(d, -1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("alpha is strictly decreasing in lambda for negative delta") {
  const DeltaVector d{{1}, (Eigen::ArrayXd(1) << -0.2).finished()};
  double prev = 1.0;
  for (double lambda : {0.1, 1.0, 5.0, 10.0, 50.0}) {
    const double a = alpha(d, lambda)[0];
    CHECK(a < prev);
    prev = a;
  }
}

TEST_CASE("adjust worked examples and identities") {
  const auto e = dist_of({3, 4}, {0.6, 0.4});
  const auto r = adjust(e, (Eigen::ArrayXd(2) << std::exp(-3.0), 1.0).finished());
  CHECK(r.distribution.probs[0] == doctest::Approx(kAdjustA).epsilon(1e-12));
  CHECK(r.distribution.probs[1] == doctest::Approx(kAdjustB).epsilon(1e-12));
  CHECK(r.distribution.source == DistributionSource::kAdjusted);
  CHECK_FALSE(r.fallback);

  const auto same = adjust(e, Eigen::ArrayXd(Eigen::ArrayXd::Ones(2)));
  CHECK((same.distribution.probs == e.probs).all());
  CHECK(code_of([&] { adjust(e, Eigen::ArrayXd(Eigen::ArrayXd::Ones(3))); }) == ErrorCode::kAlignment);
}

TEST_CASE("adjust falls back when the normalizer underflows") {
  const auto e = dist_of({3, 4}, {0.3, 0.3}, Coverage::kTopK);
  const auto a = dist_of({3, 4}, {0.5, 0.5});
  const auto scales = alpha(delta(e, a), 200.0);
  const auto r = adjust(e, scales);
  CHECK(r.fallback);
  CHECK(r.normalizer < kProbabilityFloor);
  CHECK((r.distribution.probs == e.probs).all());
}

TEST_CASE("decode_step closed form") {
  const FakeLm expert(dist_of({3, 4}, {0.6, 0.4}));
  const FakeLm amateur(dist_of({3}, {1.0}));
  const std::vector<AmateurBinding> am{{&amateur, verbatim()}};
  ContrastiveConfig cfg;
  cfg.lambda = 10;
  Rng rng(0);
  const auto out = decode_step(expert, am, LmContext{}, cfg, rng);
  CHECK(out.token == 4);
  CHECK(out.penalized);
  CHECK(out.record.alpha[0] == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK(out.record.adjusted.probs[0] == doctest::Approx(kStepA).epsilon(1e-12));
  CHECK(out.record.adjusted.probs[1] == doctest::Approx(kStepB).epsilon(1e-12));
}

TEST_CASE("self-contrast is the identity") {
  std::mt19937_64 seed_rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto p = random_dist(seed_rng, 8);
    const FakeLm expert(p);
    const std::vector<AmateurBinding> am{{&expert, verbatim()}};
    ContrastiveConfig cfg;
    cfg.strategy = DecodeStrategy::sample(1.0);
    Rng r1(t), r2(t);
    const auto spcd = decode_step(expert, am, LmContext{}, cfg, r1);
    cfg.mode = DecodeMode::kExpertOnly;
    const auto base = decode_step(expert, am, LmContext{}, cfg, r2);
    CHECK(spcd.token == base.token);
    CHECK((spcd.record.adjusted.probs == p.probs).all());
    CHECK_FALSE(spcd.penalized);
  }
}

TEST_CASE("penalty direction and preservation") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 300; ++t) {
    const auto e = random_dist(rng, 12);
    const auto a = random_dist(rng, 12);
    for (double lambda : {0.5, 10.0}) {
      const auto d = delta(e, a);
      const auto s = alpha(d, lambda);
      const auto r = adjust(e, s);
      CHECK((s > 0.0).all());
      CHECK((s <= 1.0).all());
      CHECK(std::abs(r.distribution.probs.sum() - 1.0) <= 1e-9);
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (d.values[i] > 0) CHECK(s[i] == 1.0);
        if (d.values[i] < 0) CHECK(s[i] < 1.0);
        // Unnormalized mass: alpha * p, unchanged for positive delta.
        CHECK(r.distribution.probs[i] * r.normalizer == doctest::Approx(s[i] * e.probs[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("large lambda drives penalized tokens to zero") {
  const auto e = dist_of({3, 4}, {0.6, 0.4});
  const auto a = dist_of({3, 4}, {0.9, 0.1});
  const auto r = adjust(e, alpha(delta(e, a), 1000.0));
  CHECK(r.distribution.probs[0] < 1e-100);
  CHECK(r.distribution.probs[1] == doctest::Approx(1.0));
}

TEST_CASE("choose_token strategies") {
  Rng rng(1);
  const auto tie = dist_of({9, 5, 7}, {0.4, 0.4, 0.2});
  CHECK(choose_token(tie, DecodeStrategy::greedy(), rng) == 5);

  const auto d = dist_of({3, 4, 5, 6}, {0.5, 0.3, 0.15, 0.05});
  std::map<TokenId, int> seen;
  for (int i = 0; i < 2000; ++i) ++seen[choose_token(d, DecodeStrategy::top_k_sample(2), rng)];
  CHECK(seen.size() == 2);
  CHECK(seen.count(3));
  CHECK(seen.count(4));
  seen.clear();
  for (int i = 0; i < 2000; ++i) ++seen[choose_token(d, DecodeStrategy::nucleus(0.8), rng)];
  CHECK(seen.size() == 2);
  seen.clear();
  for (int i = 0; i < 4000; ++i) ++seen[choose_token(d, DecodeStrategy::sample(1.0), rng)];
  CHECK(seen.size() == 4);
  CHECK(seen[3] / 4000.0 == doctest::Approx(0.5).epsilon(0.08));
  seen.clear();
  for (int i = 0; i < 500; ++i) ++seen[choose_token(d, DecodeStrategy::sample(0.01), rng)];
  CHECK(seen[3] == 500);

  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    CHECK(choose_token(d, DecodeStrategy::sample(1.0), a) == choose_token(d, DecodeStrategy::sample(1.0), b));
  }
  CHECK(code_of([&] { choose_token(NextTokenDistribution{}, DecodeStrategy::greedy(), rng); }) ==
        ErrorCode::kInvalidDistribution);
}

TEST_CASE("config validation") {
  ContrastiveConfig cfg;
  cfg.max_new_tokens = 0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.lambda = 0;
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.strategy = DecodeStrategy::nucleus(1.5);
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.strategy = DecodeStrategy::sample(0);
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::kInvalidConfig);
  CHECK(code_of([] { parse_strategy("beam"); }) == ErrorCode::kInvalidConfig);

  const FakeLm e(dist_of({3}, {1.0}));
  CHECK(code_of([&] { generate_ids(e, {}, {kBosId}, ContrastiveConfig{}); }) ==
        ErrorCode::kInvalidConfig);
}

TEST_CASE("generation on the toy corpus") {
  const auto c = load_corpus(og::testing::data_dir() / "toy500.txt", CorpusFormat::kPlain);
  const SmoothedLm expert(c);
  const CopyModel amateur(c);
  const std::vector<AmateurBinding> am{{&amateur, verbatim()}};
  SymbolTable symbols(c.vocab());
  ContrastiveConfig cfg;
  cfg.seed = 5;
  cfg.strategy = DecodeStrategy::sample(1.0);

  const auto spcd = generate(expert, am, "anna and boris met at", cfg, symbols);
  CHECK(spcd.penalized_steps >= 1);
  CHECK(spcd.trace.steps.size() == spcd.steps);
  bool shrunk = false;
  for (const auto& s : spcd.trace.steps) shrunk |= (s.alpha < 1.0).any();
  CHECK(shrunk);
  CHECK(generate(expert, am, "anna and boris met at", cfg, symbols).tokens == spcd.tokens);

  cfg.mode = DecodeMode::kExpertOnly;
  const auto base = generate(expert, am, "anna and boris met at", cfg, symbols);
  const auto plain = generate(expert, {}, "anna and boris met at", cfg, symbols);
  CHECK(base.tokens == plain.tokens);
  CHECK(base.penalized_steps == 0);

  cfg.mode = DecodeMode::kAmateurOnly;
  cfg.strategy = DecodeStrategy::greedy();
  const auto copy = generate(expert, am, "anna and boris met at", cfg, symbols);
  CHECK_FALSE(copy.tokens.empty());
}

TEST_CASE("immediate eos is a valid empty generation") {
  const FakeLm e(dist_of({kEosId, 5}, {0.9, 0.1}));
  ContrastiveConfig cfg;
  cfg.mode = DecodeMode::kExpertOnly;
  const auto r = generate_ids(e, {}, {kBosId}, cfg);
  CHECK(r.tokens.empty());
  CHECK(r.stopped_at_eos);
  CHECK(r.trace.steps.size() == 1);
}

TEST_CASE("capability errors surface before any amateur query") {
  int calls = 0;
  const FakeLm e(dist_of({3, 4}, {0.5, 0.5}));
  const FakeLm a([&](const LmContext&) {
    ++calls;
    return dist_of({3}, {1.0});
  });
  const std::vector<AmateurBinding> am{{&a, verbatim()}, {&a, builtin_templates().lookup("idea:detail")}};
  Rng rng(0);
  CHECK(code_of([&] { decode_step(e, am, LmContext{}, ContrastiveConfig{}, rng); }) ==
        ErrorCode::kCapability);
  CHECK(calls == 0);
}

TEST_CASE("concurrent amateur queries merge in binding order") {
  const FakeLm e(dist_of({3, 4, 5}, {0.5, 0.3, 0.2}, Coverage::kFull), true);
  const FakeLm a([](const LmContext& ctx) {
    const double x = ctx.conditioning.size() % 7 / 10.0;
    return dist_of({3, 4, 5}, {x, 0.9 - x, 0.1});
  }, true);
  const auto sel = builtin_templates().select("verbatim:detail,paraphrase:detail,idea:name");
  std::vector<AmateurBinding> am;
  for (const auto& t : sel) am.push_back({&a, t});
  ContrastiveConfig cfg;
  cfg.max_new_tokens = 5;
  cfg.strategy = DecodeStrategy::sample(1.0);
  const auto par = generate_ids(e, am, {kBosId}, cfg);
  cfg.concurrent_amateurs = false;
  const auto seq = generate_ids(e, am, {kBosId}, cfg);
  CHECK(par.tokens == seq.tokens);
  SymbolTable symbols;
  for (const char* w : {"x", "y", "z"}) symbols.intern(w);
  std::ostringstream x, y;
  write_trace_jsonl(x, par.trace, symbols);
  write_trace_jsonl(y, seq.trace, symbols);
  CHECK(x.str() == y.str());
  const auto first = nlohmann::json::parse(x.str().substr(0, x.str().find('\n')));
  CHECK(first["amateur"].size() == 3);
  for (const char* key : {"step", "expert", "amateur", "delta", "alpha", "adjusted", "chosen", "fallback"}) {
    CHECK(first.contains(key));
  }
}

}  // TEST_SUITE
