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

#include <atomic>

#include "test_util.hpp"

using namespace og;
using og::testing::code_of;
using og::testing::MockBackend;
using og::testing::reply;

namespace {

RemoteOptions fast(const std::string& endpoint) {
  RemoteOptions o;
  o.endpoint = endpoint;
  o.top_k = 2;
  o.max_retries = 3;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::milliseconds(2000);
  return o;
}

}  // namespace

TEST_SUITE("remote") {

TEST_CASE("log-probabilities become probabilities") {
  MockBackend server([](const nlohmann::json&, httplib::Response& res) {
    reply(res, {{"a", 0.7}, {"b", 0.3}});
  });
  auto symbols = std::make_shared<SymbolTable>();
  RemoteLm lm(fast(server.endpoint()), symbols);
  LmContext ctx;
  ctx.history = {symbols->intern("tim"), symbols->intern("was")};
  ctx.conditioning = "P:";
  const auto d = lm.next_distribution(ctx);
  CHECK(d.coverage == Coverage::kTopK);
  CHECK(d.probability(symbols->intern("a")) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(d.probability(symbols->intern("b")) == doctest::Approx(0.3).epsilon(1e-15));
  const auto req = nlohmann::json::parse(server.bodies().at(0));
  CHECK(req["prompt"] == "P:");
  CHECK(req["context"] == nlohmann::json::array({"tim", "was"}));
  CHECK(req["top_k"] == 2);
  CHECK(lm.prompt_capable());
}

TEST_CASE("more candidates than top_k is a protocol violation") {
  MockBackend server([](const nlohmann::json&, httplib::Response& res) {
    reply(res, {{"a", 0.5}, {"b", 0.3}, {"c", 0.2}});
  });
  RemoteLm lm(fast(server.endpoint()), nullptr);
  try {
    lm.next_distribution({});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProtocolViolation);
    CHECK(std::string(e.what()).find("protocol violation") != std::string::npos);
  }
  CHECK(server.request_count() == 1);
}

TEST_CASE("two timeouts then success leaves two retry events") {
  std::atomic<int> calls{0};
  MockBackend server([&](const nlohmann::json&, httplib::Response& res) {
    if (calls++ < 2) std::this_thread::sleep_for(std::chrono::milliseconds(400));
    reply(res, {{"a", 1.0}});
  });
  auto o = fast(server.endpoint());
  o.timeout = std::chrono::milliseconds(100);
  std::vector<RetryEvent> events;
  o.on_retry = [&](const RetryEvent& e) { events.push_back(e); };
  RemoteLm lm(o, nullptr);
  const auto d = lm.next_distribution({});
  CHECK(d.size() == 1);
  CHECK(lm.retry_count() == 2);
  REQUIRE(events.size() == 2);
  CHECK(events[0].attempt == 1);
  CHECK(events[1].attempt == 2);
  CHECK(events[1].backoff == 2 * events[0].backoff);
}

TEST_CASE("persistent failure exhausts retries") {
  MockBackend server([](const nlohmann::json&, httplib::Response& res) { res.status = 503; });
  RemoteLm lm(fast(server.endpoint()), nullptr);
  try {
    lm.next_distribution({});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBackendUnavailable);
    CHECK(std::string(e.what()).find("lm backend unavailable") != std::string::npos);
  }
  CHECK(server.request_count() == 4);
}

TEST_CASE("nobody listening is a transport failure") {
  int port = 0;
  {
    MockBackend gone([](const nlohmann::json&, httplib::Response&) {});
    port = gone.port();
  }
  auto o = fast("http://127.0.0.1:" + std::to_string(port));
  o.max_retries = 1;
  RemoteLm lm(o, nullptr);
  CHECK(code_of([&] { lm.next_distribution({}); }) == ErrorCode::kBackendUnavailable);
}

TEST_CASE("schema and invariant failures") {
  auto symbols = std::make_shared<SymbolTable>();
  auto code = [&](const std::string& body, std::size_t k = 3) {
    return code_of([&] { decode_logprob_response(body, k, *symbols); });
  };
  CHECK(code("not json") == ErrorCode::kProtocolViolation);
  CHECK(code("[]") == ErrorCode::kProtocolViolation);
  CHECK(code(R"({"candidates": ["a"]})") == ErrorCode::kProtocolViolation);
  CHECK(code(R"({"candidates": "a", "logprobs": [0]})") == ErrorCode::kProtocolViolation);
  CHECK(code(R"({"candidates": ["a", "b"], "logprobs": [0]})") == ErrorCode::kProtocolViolation);
  CHECK(code(R"({"candidates": [1], "logprobs": [0]})") == ErrorCode::kProtocolViolation);
  CHECK(code(R"({"candidates": ["a"], "logprobs": ["x"]})") == ErrorCode::kProtocolViolation);
  CHECK(code(R"({"candidates": [], "logprobs": []})") == ErrorCode::kInvalidDistribution);
  CHECK(code(R"({"candidates": ["a", "a"], "logprobs": [-1, -2]})") == ErrorCode::kInvalidDistribution);
  CHECK(code(R"({"candidates": ["a", "b"], "logprobs": [-0.1, -0.2]})") == ErrorCode::kInvalidDistribution);
  CHECK(code(R"({"candidates": ["a"], "logprobs": [1e999]})") == ErrorCode::kProtocolViolation);
  const auto d = decode_logprob_response(R"({"candidates": ["a", "b"], "logprobs": [-0.5, -2]})", 3, *symbols);
  CHECK(d.probs.sum() < 1.0);
}

TEST_CASE("non-transient status is not retried") {
  MockBackend server([](const nlohmann::json&, httplib::Response& res) { res.status = 404; });
  RemoteLm lm(fast(server.endpoint()), nullptr);
  CHECK(code_of([&] { lm.next_distribution({}); }) == ErrorCode::kProtocolViolation);
  CHECK(server.request_count() == 1);
}

TEST_CASE("endpoint and option checks") {
  CHECK(code_of([] { RemoteLm(RemoteOptions{"ftp://x"}, nullptr); }) == ErrorCode::kInvalidConfig);
  CHECK(code_of([] { RemoteLm(RemoteOptions{""}, nullptr); }) == ErrorCode::kInvalidConfig);
  RemoteOptions zero{"http://127.0.0.1:1"};
  zero.top_k = 0;
  CHECK(code_of([&] { RemoteLm(zero, nullptr); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("base path prefix and concurrent use") {
  MockBackend server([](const nlohmann::json& req, httplib::Response& res) {
    const auto n = req["context"].size();
    reply(res, {{"t" + std::to_string(n), 1.0}});
  });
  auto symbols = std::make_shared<SymbolTable>();
  RemoteLm lm(fast(server.endpoint() + "/"), symbols);
  std::vector<std::thread> pool;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      LmContext ctx;
      ctx.history.assign(static_cast<std::size_t>(t), kBosId);
      const auto d = lm.next_distribution(ctx);
      if (symbols->surface(d.candidates.at(0)) == "t" + std::to_string(t)) ++ok;
    });
  }
  for (auto& th : pool) th.join();
  CHECK(ok == 4);
}

}  // TEST_SUITE
