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

// Eigen (via lm.hpp) must precede httplib.h: <resolv.h> defines a `_res`
// macro that collides with Eigen parameter names.
#include "originality_guard/lm.hpp"

#include <cmath>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "originality_guard/error.hpp"

namespace og {
namespace {

[[noreturn]] void protocol_violation(const std::string& why) {
  throw Error(ErrorCode::kProtocolViolation, "protocol violation: " + why);
}

[[noreturn]] void invalid_distribution(const std::string& why) {
  throw Error(ErrorCode::kInvalidDistribution, "invalid distribution from backend: " + why);
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

NextTokenDistribution decode_logprob_response(std::string_view body, std::size_t top_k,
                                              SymbolTable& symbols) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    protocol_violation(std::string("response is not JSON (") + e.what() + ")");
  }
  if (!j.is_object() || !j.contains("candidates") || !j.contains("logprobs")) {
    protocol_violation("response must be an object with candidates and logprobs");
  }
  const auto& cands = j["candidates"];
  const auto& logps = j["logprobs"];
  if (!cands.is_array() || !logps.is_array()) {
    protocol_violation("candidates and logprobs must be arrays");
  }
  if (cands.size() != logps.size()) {
    protocol_violation("candidates and logprobs differ in length");
  }
  if (cands.size() > top_k) {
    protocol_violation(std::to_string(cands.size()) + " candidates returned for top_k=" +
                       std::to_string(top_k));
  }
  if (cands.empty()) invalid_distribution("no candidates");

  NextTokenDistribution dist;
  dist.coverage = Coverage::kTopK;
  dist.probs.resize(static_cast<Eigen::Index>(cands.size()));
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!cands[i].is_string()) protocol_violation("candidate is not a string");
    if (!logps[i].is_number()) protocol_violation("logprob is not a number");
    const auto surface = cands[i].get<std::string>();
    if (surface.empty()) invalid_distribution("empty candidate surface");
    if (!seen.insert(surface).second) invalid_distribution("duplicate candidate '" + surface + "'");
    const double lp = logps[i].get<double>();
    if (!std::isfinite(lp)) invalid_distribution("non-finite logprob");
    dist.candidates.push_back(symbols.intern(surface));
    dist.probs[static_cast<Eigen::Index>(i)] = std::exp(lp);
  }
  const double sum = dist.probs.sum();
  if (sum > 1.0 + 1e-6) {
    invalid_distribution("probabilities sum to " + std::to_string(sum));
  }
  return dist;
}

RemoteLm::RemoteLm(RemoteOptions options, std::shared_ptr<SymbolTable> symbols)
    : options_(std::move(options)), symbols_(std::move(symbols)) {
  descriptor_.kind = LmKind::kRemote;
  descriptor_.order = 0;
  descriptor_.endpoint = options_.endpoint;
  descriptor_.prompt_capable = true;
  descriptor_.validate();
  if (!symbols_) symbols_ = std::make_shared<SymbolTable>();
  if (options_.top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  if (options_.max_retries < 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_retries must be >= 0");
  }

  const std::string& url = options_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "remote endpoint must be an http:// URL, got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  std::string base = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  path_ = base + "/v1/logprobs";
}

NextTokenDistribution RemoteLm::next_distribution(const LmContext& ctx) const {
  return query(ctx, ctx.conditioning, options_.top_k);
}

NextTokenDistribution RemoteLm::query(const LmContext& ctx, std::string_view prompt,
                                      std::size_t top_k) const {
  if (top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 1");
  nlohmann::json request;
  request["prompt"] = prompt;
  auto& context = request["context"] = nlohmann::json::array();
  for (TokenId id : ctx.history) context.push_back(symbols_->surface(id));
  request["top_k"] = top_k;
  const std::string body = request.dump();

  httplib::Client client(scheme_host_port_);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout);
  const auto sec = static_cast<time_t>(timeout_us.count() / 1000000);
  const auto usec = static_cast<time_t>(timeout_us.count() % 1000000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  auto backoff = options_.initial_backoff;
  std::string last_failure;
  for (int attempt = 1;; ++attempt) {
    auto res = client.Post(path_, body, "application/json");
    if (res && res->status == 200) {
      auto dist = decode_logprob_response(res->body, top_k, *symbols_);
      dist.source = prompt.empty() ? DistributionSource::kExpert : DistributionSource::kAmateur;
      return dist;
    }
    if (res && !transient_status(res->status)) {
      protocol_violation("HTTP status " + std::to_string(res->status));
    }
    last_failure = res ? "HTTP status " + std::to_string(res->status)
                       : "transport error: " + httplib::to_string(res.error());
    if (attempt > options_.max_retries) break;
    ++retries_;
    if (options_.on_retry) options_.on_retry(RetryEvent{attempt, last_failure, backoff});
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(static_cast<std::int64_t>(
        static_cast<double>(backoff.count()) * options_.backoff_multiplier));
  }
  throw Error(ErrorCode::kBackendUnavailable,
              "lm backend unavailable: " + options_.endpoint + " (" + last_failure + ")");
}

}  // namespace og
