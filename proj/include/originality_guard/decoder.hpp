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

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "originality_guard/error.hpp"
#include "originality_guard/lm.hpp"
#include "originality_guard/prompts.hpp"
#include "originality_guard/rng.hpp"

namespace og {

template <typename Scalar>
using ProbArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Array-level contrastive algebra. These operate on candidate-aligned arrays
// and compose as Eigen expressions.
// ---------------------------------------------------------------------------

/// expert - amateur, elementwise. Both arrays must be aligned to the same
/// candidates; the result is an unevaluated expression.
template <typename ExpertDerived, typename AmateurDerived>
auto contrastive_difference(const Eigen::ArrayBase<ExpertDerived>& expert,
                            const Eigen::ArrayBase<AmateurDerived>& amateur) {
  return expert.derived() - amateur.derived();
}

/// 1 where delta > 0, exp(lambda * delta) elsewhere; every value in (0, 1].
template <typename Derived>
ProbArray<typename Derived::Scalar> regulatory_scale(
    const Eigen::ArrayBase<Derived>& delta, typename Derived::Scalar lambda) {
  using Scalar = typename Derived::Scalar;
  return (delta > Scalar(0)).select(Scalar(1), (lambda * delta.derived()).exp());
}

/// Writes alpha * p / sum(alpha * p) into `out` and returns the normalizer.
/// When the normalizer is below `epsilon`, `out` is left with the
/// unnormalized mass and the caller decides what to do.
template <typename PDerived, typename ADerived>
typename PDerived::Scalar reweight(const Eigen::ArrayBase<PDerived>& p,
                                   const Eigen::ArrayBase<ADerived>& alpha,
                                   ProbArray<typename PDerived::Scalar>& out,
                                   typename PDerived::Scalar epsilon) {
  out = alpha.derived() * p.derived();
  const auto z = out.sum();
  if (z >= epsilon) out /= z;
  return z;
}

// ---------------------------------------------------------------------------
// Distribution-level operations.
// ---------------------------------------------------------------------------

template <typename Scalar>
struct BasicDeltaVector {
  std::vector<TokenId> candidates;
  ProbArray<Scalar> values;

  Eigen::Index size() const { return values.size(); }
};

using DeltaVector = BasicDeltaVector<double>;

/// Amateur probabilities re-indexed onto `candidates`; absent tokens get 0.
template <typename Scalar>
ProbArray<Scalar> align_to(const BasicDistribution<Scalar>& dist,
                           std::span<const TokenId> candidates,
                           std::size_t* overlap = nullptr) {
  std::unordered_map<TokenId, Eigen::Index> where;
  where.reserve(dist.candidates.size());
  for (std::size_t i = 0; i < dist.candidates.size(); ++i) {
    where.emplace(dist.candidates[i], static_cast<Eigen::Index>(i));
  }
  ProbArray<Scalar> out = ProbArray<Scalar>::Zero(static_cast<Eigen::Index>(candidates.size()));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (auto it = where.find(candidates[i]); it != where.end()) {
      out[static_cast<Eigen::Index>(i)] = dist.probs[it->second];
      ++hits;
    }
  }
  if (overlap) *overlap = hits;
  return out;
}

/// p_exp - p_ama over the expert's candidates. Throws kAlignment when the
/// expert is empty, or when it covers its whole vocabulary and still shares
/// no candidate with the amateur (the two use different vocabularies).
template <typename Scalar>
BasicDeltaVector<Scalar> delta(const BasicDistribution<Scalar>& expert,
                               const BasicDistribution<Scalar>& amateur) {
  if (expert.candidates.empty()) {
    throw Error(ErrorCode::kAlignment, "cannot align against an empty expert distribution");
  }
  std::size_t overlap = 0;
  const auto aligned = align_to(amateur, expert.candidates, &overlap);
  if (overlap == 0 && !amateur.candidates.empty() && expert.coverage == Coverage::kFull) {
    throw Error(ErrorCode::kAlignment,
                "amateur and expert distributions share no candidates (disjoint vocabularies)");
  }
  return BasicDeltaVector<Scalar>{expert.candidates,
                                  contrastive_difference(expert.probs, aligned)};
}

/// Elementwise minimum across prompts: the most punitive difference per token.
template <typename Scalar>
BasicDeltaVector<Scalar> min_delta(std::span<const BasicDeltaVector<Scalar>> deltas) {
  if (deltas.empty()) throw Error(ErrorCode::kInvalidArgument, "min_delta of no vectors");
  BasicDeltaVector<Scalar> out = deltas.front();
  for (const auto& d : deltas.subspan(1)) {
    if (d.candidates != out.candidates) {
      throw Error(ErrorCode::kAlignment, "min_delta over mismatched candidate sets");
    }
    out.values = out.values.min(d.values);
  }
  return out;
}

template <typename Scalar>
ProbArray<Scalar> alpha(const BasicDeltaVector<Scalar>& d, Scalar lambda) {
  if (!(lambda > Scalar(0)) || !std::isfinite(static_cast<double>(lambda))) {
    throw Error(ErrorCode::kInvalidArgument, "lambda must be a finite value > 0");
  }
  return regulatory_scale(d.values, lambda);
}

template <typename Scalar>
struct BasicAdjustResult {
  BasicDistribution<Scalar> distribution;
  bool fallback = false;  // normalizer underflowed; distribution == expert
  Scalar normalizer = Scalar(0);
};

using AdjustResult = BasicAdjustResult<double>;

inline constexpr double kProbabilityFloor = 1e-12;

/// p~ proportional to scales * p_exp, renormalized over the expert's
/// candidates. All-ones scales on a normalized expert return it unchanged.
template <typename Scalar>
BasicAdjustResult<Scalar> adjust(const BasicDistribution<Scalar>& expert,
                                 const ProbArray<Scalar>& scales,
                                 Scalar epsilon = Scalar(kProbabilityFloor)) {
  if (scales.size() != expert.probs.size()) {
    throw Error(ErrorCode::kAlignment, "scale vector not aligned with expert candidates");
  }
  BasicAdjustResult<Scalar> result;
  result.distribution = expert;
  result.distribution.source = DistributionSource::kAdjusted;
  const Scalar mass = expert.probs.sum();
  if ((scales == Scalar(1)).all() && std::abs(static_cast<double>(mass) - 1.0) <= 1e-9) {
    result.normalizer = mass;
    return result;
  }
  result.normalizer = reweight(expert.probs, scales, result.distribution.probs, epsilon);
  if (result.normalizer < epsilon) {
    result.distribution.probs = expert.probs;
    result.fallback = true;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Decoding loop.
// ---------------------------------------------------------------------------

enum class StrategyKind { kGreedy, kTemperature, kTopK, kNucleus };

struct DecodeStrategy {
  StrategyKind kind = StrategyKind::kGreedy;
  double temperature = 1.0;  // kTemperature; also applied before kTopK/kNucleus
  std::size_t top_k = 40;    // kTopK
  double top_p = 0.9;        // kNucleus

  static DecodeStrategy greedy() { return {}; }
  static DecodeStrategy sample(double t) { return {StrategyKind::kTemperature, t, 40, 0.9}; }
  static DecodeStrategy top_k_sample(std::size_t k) { return {StrategyKind::kTopK, 1.0, k, 0.9}; }
  static DecodeStrategy nucleus(double p) { return {StrategyKind::kNucleus, 1.0, 40, p}; }
};

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view tag);

enum class DecodeMode {
  kExpertOnly,    // baseline decoding from p_exp
  kContrastive,   // self-plagiarism contrastive decoding
  kAmateurOnly,   // decode straight from the first amateur under its prompt
};

std::string_view to_string(DecodeMode mode);

struct ContrastiveConfig {
  double lambda = 10.0;
  std::size_t top_k = 20;  // candidate cap requested from remote backends
  DecodeStrategy strategy;
  std::size_t max_new_tokens = 20;
  std::uint64_t seed = 0;
  double epsilon = kProbabilityFloor;
  DecodeMode mode = DecodeMode::kContrastive;
  bool record_trace = true;
  bool concurrent_amateurs = true;

  void validate() const;
};

struct AmateurBinding {
  const LanguageModel* model = nullptr;
  PromptTemplate prompt;
};

struct StepRecord {
  std::size_t step = 0;
  NextTokenDistribution expert;
  std::vector<std::pair<std::string, NextTokenDistribution>> amateurs;
  Eigen::ArrayXd delta;  // aligned with expert.candidates; empty unless contrastive
  Eigen::ArrayXd alpha;
  NextTokenDistribution adjusted;
  TokenId chosen = kEosId;
  bool fallback = false;
};

struct DecodeTrace {
  std::vector<StepRecord> steps;
};

/// Picks a token from `dist` per `strategy`. Greedy ties go to the lowest id.
TokenId choose_token(const NextTokenDistribution& dist, const DecodeStrategy& strategy,
                     Rng& rng);

struct StepOutcome {
  TokenId token = kEosId;
  StepRecord record;
  bool penalized = false;  // some alpha < 1 at this step
};

/// One decoding step: expert and amateur distributions, Δ, min over prompts,
/// α, renormalization, then token choice.
StepOutcome decode_step(const LanguageModel& expert, std::span<const AmateurBinding> amateurs,
                        const LmContext& ctx, const ContrastiveConfig& cfg, Rng& rng);

struct GenerationResult {
  TokenSequence prompt;  // <bos> + input tokens
  TokenSequence tokens;  // continuation, without the final <eos>
  std::string text;
  bool stopped_at_eos = false;
  std::size_t steps = 0;
  std::size_t fallback_steps = 0;
  std::size_t penalized_steps = 0;
  DecodeTrace trace;
};

/// Decodes from `prompt_ids` (which should start with <bos>) until <eos> or
/// max_new_tokens.
GenerationResult generate_ids(const LanguageModel& expert,
                              std::span<const AmateurBinding> amateurs,
                              TokenSequence prompt_ids, const ContrastiveConfig& cfg,
                              std::string expert_conditioning = {});

/// Tokenizes `input_text`, interning surfaces through `symbols`, decodes, and
/// detokenizes the continuation.
GenerationResult generate(const LanguageModel& expert, std::span<const AmateurBinding> amateurs,
                          std::string_view input_text, const ContrastiveConfig& cfg,
                          SymbolTable& symbols, const TokenizerConfig& tokenizer = {});

/// JSON Lines, one object per step:
/// {step, expert: [[tok,p]...], amateur: {templateId: [[tok,p]...]}, delta,
///  alpha, adjusted, chosen, fallback}
void write_trace_jsonl(std::ostream& out, const DecodeTrace& trace, const SymbolTable& symbols);

}  // namespace og
