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

#pragma once

#include <Eigen/Core>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "originality_guard/corpus.hpp"

namespace og {

enum class Coverage { kFull, kTopK };
enum class DistributionSource { kExpert, kAmateur, kAdjusted };

std::string_view to_string(DistributionSource source);

/// A probability vector over an explicit candidate set. Tokens outside
/// `candidates` have probability zero.
template <typename Scalar>
struct BasicDistribution {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  std::vector<TokenId> candidates;
  Array probs;
  Coverage coverage = Coverage::kFull;
  DistributionSource source = DistributionSource::kExpert;

  Eigen::Index size() const { return probs.size(); }

  Scalar probability(TokenId id) const {
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (candidates[i] == id) return probs[static_cast<Eigen::Index>(i)];
    }
    return Scalar(0);
  }
};

using NextTokenDistribution = BasicDistribution<double>;

/// Throws kInvalidDistribution unless: candidates are unique and aligned with
/// probs, every probability is finite and >= 0, and the sum is 1 +- tol
/// (full coverage) or <= 1 + tol (top-K).
void validate(const NextTokenDistribution& dist, double tolerance = 1e-9);

struct LmContext {
  TokenSequence history;     // most recent token last
  std::string conditioning;  // prompt prefix for prompt-capable models
  // Set by sp() when a count-based amateur stands in for prompting.
  bool amateur_route = false;
};

enum class LmKind { kCopy, kSmoothed, kRemote };

std::string_view to_string(LmKind kind);
LmKind parse_lm_kind(std::string_view tag);

struct LmDescriptor {
  LmKind kind = LmKind::kSmoothed;
  std::size_t order = 3;
  std::vector<double> weights;  // highest order first, one per order
  double add_k = 0.01;
  std::string endpoint;
  bool prompt_capable = false;

  void validate() const;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  /// Deterministic for a fixed model and context; safe to call concurrently.
  virtual NextTokenDistribution next_distribution(const LmContext& ctx) const = 0;
  virtual const LmDescriptor& descriptor() const = 0;

  bool prompt_capable() const { return descriptor().prompt_capable; }
};

namespace detail {

struct Continuations {
  std::uint64_t total = 0;
  std::vector<std::pair<TokenId, std::uint64_t>> counts;  // sorted by id
};

// Context key (raw bytes of the ids) -> continuation counts, one map per
// context length.
using ContextTables = std::vector<std::unordered_map<std::string, Continuations>>;

ContextTables count_contexts(const Corpus& train, std::size_t max_context);
std::string context_key(std::span<const TokenId> ids);

}  // namespace detail

/// Memorizing amateur: raw continuation counts of the longest context suffix
/// (up to order - 1 tokens) that has been seen, with no smoothing. When no
/// suffix matches, falls back to unigram counts.
class CopyModel final : public LanguageModel {
 public:
  static constexpr std::size_t kDefaultOrder = 5;

  CopyModel(Corpus train, std::size_t order = kDefaultOrder);

  NextTokenDistribution next_distribution(const LmContext& ctx) const override;
  const LmDescriptor& descriptor() const override { return descriptor_; }
  const Corpus& training_corpus() const { return train_; }
  const Vocab& vocab() const { return train_.vocab(); }

  /// Length of the context suffix the model would use for `history`.
  std::size_t matched_context(std::span<const TokenId> history) const;

 private:
  Corpus train_;
  LmDescriptor descriptor_;
  detail::ContextTables tables_;
};

CopyModel train_copy_model(const Corpus& train, std::size_t order = CopyModel::kDefaultOrder);

struct Smoothing {
  std::vector<double> weights = {0.5, 0.3, 0.2};  // orders n..1
  double add_k = 0.01;
};

/// Interpolated n-gram expert. Each order is add-k smoothed,
///   P_j(w | h_j) = (c(h_j, w) + k) / (c(h_j) + k |V|),
/// orders whose context was never seen drop out and the remaining weights are
/// renormalized, so an unseen context yields the smoothed unigram. The support
/// is the whole vocab except <bos>, and every probability is >= k/(N + k|V|).
class SmoothedLm final : public LanguageModel {
 public:
  SmoothedLm(Corpus train, std::size_t order = 3, Smoothing smoothing = {});

  NextTokenDistribution next_distribution(const LmContext& ctx) const override;
  const LmDescriptor& descriptor() const override { return descriptor_; }
  const Corpus& training_corpus() const { return train_; }
  const Vocab& vocab() const { return train_.vocab(); }

  /// Number of predicted training tokens (documents plus one <eos> each).
  std::uint64_t predicted_tokens() const { return predicted_tokens_; }
  /// Size of the support (vocab minus <bos>).
  std::size_t support_size() const { return support_.size(); }

 private:
  Corpus train_;
  LmDescriptor descriptor_;
  detail::ContextTables tables_;
  std::vector<TokenId> support_;
  Eigen::ArrayXd unigram_;  // smoothed, aligned with support_
  std::vector<Eigen::Index> position_;  // token id -> index in support_, -1 for <bos>
  std::uint64_t predicted_tokens_ = 0;
};

SmoothedLm train_smoothed_lm(const Corpus& train, std::size_t order = 3,
                             const Smoothing& smoothing = {});

/// exp of the mean negative log-probability over every document token plus
/// its <eos>. Infinite when the model assigns zero to any of them.
double perplexity(const LanguageModel& model, const Corpus& corpus);

/// Writes a count-based model as JSON (descriptor, vocab, training ids);
/// loading retrains from the stored data, which is exact for count models.
void save_model(const LanguageModel& model, const std::filesystem::path& path);
std::unique_ptr<LanguageModel> load_model(const std::filesystem::path& path);

/// Append-only, thread-safe surface <-> id table shared by remote clients.
/// Seeded from a vocab, so built-in ids and remote ids agree.
class SymbolTable {
 public:
  SymbolTable();
  explicit SymbolTable(const Vocab& vocab);

  TokenId intern(std::string_view surface);
  std::string surface(TokenId id) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> index_;
};

struct RetryEvent {
  int attempt = 0;  // 1-based attempt that failed
  std::string reason;
  std::chrono::milliseconds backoff{0};
};

struct RemoteOptions {
  std::string endpoint;  // e.g. http://localhost:8080
  std::size_t top_k = 20;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{50};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{10000};
  std::function<void(const RetryEvent&)> on_retry;
};

/// HTTP client for POST {endpoint}/v1/logprobs.
///   request  {"prompt": str, "context": [str...], "top_k": K}
///   response {"candidates": [str...], "logprobs": [float...]}
/// Transport failures, timeouts, 429 and 5xx are retried with exponential
/// backoff; other failures are not.
class RemoteLm final : public LanguageModel {
 public:
  RemoteLm(RemoteOptions options, std::shared_ptr<SymbolTable> symbols);

  NextTokenDistribution next_distribution(const LmContext& ctx) const override;
  const LmDescriptor& descriptor() const override { return descriptor_; }

  /// One request with an explicit prompt and candidate cap.
  NextTokenDistribution query(const LmContext& ctx, std::string_view prompt,
                              std::size_t top_k) const;

  std::uint64_t retry_count() const { return retries_.load(); }
  const RemoteOptions& options() const { return options_; }

 private:
  RemoteOptions options_;
  std::shared_ptr<SymbolTable> symbols_;
  LmDescriptor descriptor_;
  std::string scheme_host_port_;
  std::string path_;
  mutable std::atomic<std::uint64_t> retries_{0};
};

/// Converts a wire response into a distribution, enforcing the protocol.
/// Exposed for tests; RemoteLm::query uses it.
NextTokenDistribution decode_logprob_response(std::string_view body, std::size_t top_k,
                                              SymbolTable& symbols);

}  // namespace og
