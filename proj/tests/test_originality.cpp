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

#include <random>
#include <sstream>

#include "naive_got.hpp"
#include "originality_guard/originality.hpp"
#include "test_util.hpp"

using namespace og;
using og::testing::code_of;
using og::testing::corpus_of;
using og::testing::naive_fragments;
using og::testing::naive_occurs;

namespace {

TokenSequence ids(const Corpus& c, const std::string& text) {
  return c.vocab().encode(tokenize(text));
}

std::vector<TokenSequence> random_docs(std::mt19937_64& rng, std::size_t n, TokenId alphabet,
                                       std::size_t min_len, std::size_t max_len) {
  std::vector<TokenSequence> docs;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSequence d(min_len + rng() % (max_len - min_len + 1));
    for (auto& t : d) t = 3 + static_cast<TokenId>(rng() % alphabet);
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace

TEST_SUITE("originality") {

TEST_CASE("rolling windows equal direct fingerprints") {
  std::mt19937_64 rng(11);
  TokenSequence s(64);
  for (auto& t : s) t = static_cast<TokenId>(rng() % 7);
  RollingFingerprinter roll(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t n = 1; i + n <= s.size(); ++n) {
      CHECK(roll.window(i, n) == fingerprint(std::span<const TokenId>(s).subspan(i, n)));
    }
  }
  CHECK(fingerprint(std::vector<TokenId>{0}) != fingerprint(std::vector<TokenId>{0, 0}));
}

TEST_CASE("enumeration on tiny corpora") {
  const auto c = corpus_of({"a b c"});
  const auto o = OriginalSet::build(c, {3});
  CHECK(o.size(2) == 2);
  CHECK(o.size(3) == 1);
  CHECK(o.contains(ids(c, "a b")));
  CHECK(o.contains(ids(c, "b c")));
  CHECK(o.contains(ids(c, "a b c")));
  CHECK_FALSE(o.contains(ids(c, "a c")));
  CHECK_FALSE(o.contains(ids(c, "c b")));

  const auto c2 = corpus_of({"a b", "b c"});
  const auto o2 = OriginalSet::build(c2, {2});
  CHECK(o2.total_size() == 2);
  CHECK_FALSE(o2.contains(ids(c2, "a c")));
  CHECK_FALSE(o2.contains(ids(c2, "a b c")));
}

TEST_CASE("n-grams do not cross documents") {
  const auto c = corpus_of({"a b", "c d"});
  const auto o = OriginalSet::build(c, {3});
  CHECK_FALSE(o.contains(ids(c, "b c")));
}

TEST_CASE("build preconditions") {
  const auto c = corpus_of({"a b"});
  CHECK(code_of([&] { OriginalSet::build(c, {1}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { OriginalSet::build(std::span<const TokenSequence>{}, {}); }) ==
        ErrorCode::kEmptyCorpus);
}

TEST_CASE("detect_fragments worked examples") {
  const auto c = corpus_of({"a b c d", "x y"});
  const auto o = OriginalSet::build(c, {4});
  const auto m = detect_fragments(ids(c, "x b c y"), o);
  REQUIRE(m.size() == 1);
  CHECK(m[0].start == 1);
  CHECK(m[0].length == 2);
  CHECK(m[0].tokens == ids(c, "b c"));

  const auto c5 = corpus_of({"p q r s t"});
  const auto o5 = OriginalSet::build(c5, {5});
  CHECK(detect_fragments(ids(c5, "p q r s t"), o5).size() == 10);
  CHECK(detect_fragments(ids(c5, "p"), o5).empty());
}

TEST_CASE("membership agrees with a naive scan on random probes") {
  std::mt19937_64 rng(5);
  const auto docs = random_docs(rng, 1000, 12, 4, 14);
  const auto o = OriginalSet::build(docs, {7});
  for (int i = 0; i < 10000; ++i) {
    TokenSequence g(2 + rng() % 6);
    if (rng() % 2) {
      const auto& d = docs[rng() % docs.size()];
      if (d.size() < g.size()) continue;
      const auto s = rng() % (d.size() - g.size() + 1);
      std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(s), g.size(), g.begin());
    } else {
      for (auto& t : g) t = 3 + static_cast<TokenId>(rng() % 12);
    }
    CHECK(o.contains(g) == naive_occurs(docs, g));
  }
}

TEST_CASE("detect_fragments agrees with the naive double loop") {
  std::mt19937_64 rng(9);
  const auto docs = random_docs(rng, 60, 5, 3, 30);
  for (std::size_t lmax : {2u, 4u, 7u}) {
    const auto o = OriginalSet::build(docs, {lmax});
    for (int i = 0; i < 300; ++i) {
      TokenSequence s(rng() % 51);
      for (auto& t : s) t = 3 + static_cast<TokenId>(rng() % 5);
      CHECK(detect_fragments(s, o) == naive_fragments(s, docs, lmax));
    }
  }
}

TEST_CASE("every match implies matches at both shorter sub-windows") {
  std::mt19937_64 rng(21);
  const auto docs = random_docs(rng, 80, 4, 5, 20);
  const auto o = OriginalSet::build(docs, {7});
  for (int i = 0; i < 200; ++i) {
    TokenSequence s(2 + rng() % 30);
    for (auto& t : s) t = 3 + static_cast<TokenId>(rng() % 4);
    const auto m = detect_fragments(s, o);
    auto has = [&](std::size_t start, std::size_t len) {
      return std::any_of(m.begin(), m.end(),
                         [&](const auto& f) { return f.start == start && f.length == len; });
    };
    for (const auto& f : m) {
      CHECK(naive_occurs(docs, f.tokens));
      if (f.length > 2) {
        CHECK(has(f.start, f.length - 1));
        CHECK(has(f.start + 1, f.length - 1));
      }
    }
  }
}

TEST_CASE("similarity curve bounds and pooled counts") {
  const auto c = corpus_of({"a b c d e", "f g h"});
  const auto o = OriginalSet::build(c, {5});

  const std::vector<TokenSequence> copied{ids(c, "a b c d e")};
  const auto same = similarity_curve(copied, o);
  for (const auto& p : same.points) CHECK(p.rate == 1.0);

  const std::vector<TokenSequence> novel{TokenSequence{900, 901, 902, 903}};
  for (const auto& p : similarity_curve(novel, o).points) CHECK(p.rate == 0.0);

  // Windows at L=2: "a b" "b c" hit, "c x" "x y" miss.
  const auto half = similarity_curve(std::vector<TokenSequence>{TokenSequence{
                                         c.vocab().id("a"), c.vocab().id("b"),
                                         c.vocab().id("c"), 900, 901}},
                                     o);
  CHECK(half.at(2).matched == 2);
  CHECK(half.at(2).total == 4);
  CHECK(half.rate(2) == 0.5);

  const std::vector<TokenSequence> mixed{ids(c, "a b c"), ids(c, "f g")};
  const auto m = similarity_curve(mixed, o);
  CHECK(m.at(2).total == 3);
  CHECK(m.at(3).total == 1);
  CHECK(m.at(4).total == 0);
  CHECK(m.rate(4) == 0.0);
  CHECK(m.points.size() == 4);

  CHECK(code_of([&] { similarity_curve(std::vector<TokenSequence>{}, o); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("threading does not change the index or the curve") {
  std::mt19937_64 rng(2);
  const auto docs = random_docs(rng, 400, 9, 3, 25);
  const auto gen = random_docs(rng, 100, 9, 3, 25);
  const auto a = OriginalSet::build(docs, {6, ExactStorePolicy::kOn, 1});
  const auto b = OriginalSet::build(docs, {6, ExactStorePolicy::kOn, 4});
  std::stringstream sa, sb;
  a.write(sa);
  b.write(sb);
  CHECK(sa.str() == sb.str());
  const auto ca = similarity_curve(gen, a, 1);
  const auto cb = similarity_curve(gen, a, 3);
  for (std::size_t L = 2; L <= 6; ++L) CHECK(ca.at(L).matched == cb.at(L).matched);
}

TEST_CASE("binary round trip and validation") {
  std::mt19937_64 rng(4);
  const auto docs = random_docs(rng, 50, 6, 3, 12);
  for (auto policy : {ExactStorePolicy::kOn, ExactStorePolicy::kOff}) {
    const auto o = OriginalSet::build(docs, {5, policy}, 0xabcdef);
    std::stringstream buf;
    o.write(buf);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "GOT1");
    std::stringstream in(bytes);
    const auto back = OriginalSet::read(in);
    CHECK(back.max_length() == 5);
    CHECK(back.source_id() == 0xabcdef);
    CHECK(back.has_exact_store() == (policy == ExactStorePolicy::kOn));
    std::stringstream again;
    back.write(again);
    CHECK(again.str() == bytes);

    std::string bad = bytes;
    bad[0] = 'X';
    std::stringstream b1(bad);
    CHECK(code_of([&] { OriginalSet::read(b1); }) == ErrorCode::kBadIndexFile);
    std::string ver = bytes;
    ver[4] = 9;
    std::stringstream b2(ver);
    CHECK(code_of([&] { OriginalSet::read(b2); }) == ErrorCode::kBadIndexFile);
    std::stringstream b3(bytes.substr(0, bytes.size() / 2));
    CHECK(code_of([&] { OriginalSet::read(b3); }) == ErrorCode::kBadIndexFile);
  }
  og::testing::TempDir dir;
  const auto o = OriginalSet::build(docs, {3});
  o.save(dir / "x.got");
  CHECK(OriginalSet::load(dir / "x.got").total_size() == o.total_size());
  CHECK(code_of([&] { OriginalSet::load(dir / "nope.got"); }) == ErrorCode::kPathNotFound);
}

TEST_CASE("exact store policy") {
  const auto c = corpus_of({"a b c"});
  CHECK(OriginalSet::build(c, {3, ExactStorePolicy::kAuto}).has_exact_store());
  CHECK_FALSE(OriginalSet::build(c, {3, ExactStorePolicy::kOff}).has_exact_store());
}

}  // TEST_SUITE
