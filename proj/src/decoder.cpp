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

#include "originality_guard/decoder.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

namespace og {
namespace {

// Candidate positions ordered by probability (desc), ties by token id (asc).
std::vector<Eigen::Index> ranked(const NextTokenDistribution& dist, const Eigen::ArrayXd& p) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (p[a] != p[b]) return p[a] > p[b];
    return dist.candidates[static_cast<std::size_t>(a)] <
           dist.candidates[static_cast<std::size_t>(b)];
  });
  return order;
}

TokenId sample_from(const NextTokenDistribution& dist, const Eigen::ArrayXd& weights,
                    std::span<const Eigen::Index> positions, Rng& rng) {
  double total = 0.0;
  for (auto i : positions) total += weights[i];
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kInvalidDistribution, "cannot sample from zero mass");
  }
  const double u = uniform_unit(rng) * total;
  double acc = 0.0;
  Eigen::Index last_positive = positions.front();
  for (auto i : positions) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (u < acc) return dist.candidates[static_cast<std::size_t>(i)];
  }
  return dist.candidates[static_cast<std::size_t>(last_positive)];
}

Eigen::ArrayXd tempered(const Eigen::ArrayXd& p, double temperature) {
  if (temperature == 1.0) return p;
  const double peak = p.maxCoeff();
  if (!(peak > 0.0)) return p;
  return (p / peak).pow(1.0 / temperature);
}

nlohmann::ordered_json pairs_json(const NextTokenDistribution& d, const SymbolTable& symbols) {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < d.candidates.size(); ++i) {
    arr.push_back({symbols.surface(d.candidates[i]), d.probs[static_cast<Eigen::Index>(i)]});
  }
  return arr;
}

nlohmann::ordered_json array_json(const Eigen::ArrayXd& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

void check_amateurs(std::span<const AmateurBinding> amateurs) {
  if (amateurs.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "this decode mode needs at least one amateur");
  }
  for (const auto& a : amateurs) {
    if (!a.model) throw Error(ErrorCode::kInvalidConfig, "amateur binding without a model");
  }
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kGreedy: return "greedy";
    case StrategyKind::kTemperature: return "temperature";
    case StrategyKind::kTopK: return "top-k";
    case StrategyKind::kNucleus: return "nucleus";
  }
  return "greedy";
}

StrategyKind parse_strategy(std::string_view tag) {
  if (tag == "greedy") return StrategyKind::kGreedy;
  if (tag == "temperature" || tag == "sample") return StrategyKind::kTemperature;
  if (tag == "top-k" || tag == "top_k") return StrategyKind::kTopK;
  if (tag == "nucleus" || tag == "top-p") return StrategyKind::kNucleus;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown strategy '" + std::string(tag) + "' (greedy|temperature|top-k|nucleus)");
}

std::string_view to_string(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kExpertOnly: return "default";
    case DecodeMode::kContrastive: return "spcd";
    case DecodeMode::kAmateurOnly: return "sp-prompt-only";
  }
  return "default";
}

void ContrastiveConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::kInvalidConfig, why); };
  if (!(lambda > 0.0) || !std::isfinite(lambda)) bad("lambda must be > 0");
  if (max_new_tokens < 1) bad("max_new_tokens must be >= 1");
  if (top_k < 1) bad("top_k must be >= 1");
  if (!(epsilon > 0.0)) bad("epsilon must be > 0");
  if (!(strategy.temperature > 0.0) || !std::isfinite(strategy.temperature)) {
    bad("temperature must be > 0");
  }
  if (strategy.kind == StrategyKind::kTopK && strategy.top_k < 1) bad("top-k k must be >= 1");
  if (strategy.kind == StrategyKind::kNucleus &&
      !(strategy.top_p > 0.0 && strategy.top_p <= 1.0)) {
    bad("nucleus p must lie in (0, 1]");
  }
}

TokenId choose_token(const NextTokenDistribution& dist, const DecodeStrategy& strategy,
                     Rng& rng) {
  if (dist.candidates.empty()) {
    throw Error(ErrorCode::kInvalidDistribution, "no candidates to choose from");
  }
  const auto& p = dist.probs;
  switch (strategy.kind) {
    case StrategyKind::kGreedy: {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < p.size(); ++i) {
        const auto id = dist.candidates[static_cast<std::size_t>(i)];
        const auto best_id = dist.candidates[static_cast<std::size_t>(best)];
        if (p[i] > p[best] || (p[i] == p[best] && id < best_id)) best = i;
      }
      return dist.candidates[static_cast<std::size_t>(best)];
    }
    case StrategyKind::kTemperature: {
      const auto w = tempered(p, strategy.temperature);
      std::vector<Eigen::Index> all(static_cast<std::size_t>(p.size()));
      std::iota(all.begin(), all.end(), Eigen::Index{0});
      return sample_from(dist, w, all, rng);
    }
    case StrategyKind::kTopK: {
      const auto w = tempered(p, strategy.temperature);
      auto order = ranked(dist, w);
      order.resize(std::min(order.size(), strategy.top_k));
      return sample_from(dist, w, order, rng);
    }
    case StrategyKind::kNucleus: {
      const auto w = tempered(p, strategy.temperature);
      auto order = ranked(dist, w);
      const double total = w.sum();
      double acc = 0.0;
      std::size_t keep = 0;
      while (keep < order.size()) {
        acc += w[order[keep++]];
        if (acc >= strategy.top_p * total) break;
      }
      order.resize(keep);
      return sample_from(dist, w, order, rng);
    }
  }
  return kEosId;
}

StepOutcome decode_step(const LanguageModel& expert, std::span<const AmateurBinding> amateurs,
                        const LmContext& ctx, const ContrastiveConfig& cfg, Rng& rng) {
  StepOutcome out;
  auto& rec = out.record;

  if (cfg.mode == DecodeMode::kExpertOnly) {
    rec.expert = expert.next_distribution(ctx);
    rec.expert.source = DistributionSource::kExpert;
    out.token = choose_token(rec.expert, cfg.strategy, rng);
    if (cfg.record_trace) rec.adjusted = rec.expert;
    rec.chosen = out.token;
    return out;
  }

  check_amateurs(amateurs);
  if (cfg.mode == DecodeMode::kAmateurOnly) {
    const auto& a = amateurs.front();
    auto dist = a.model->next_distribution(sp(ctx, a.prompt, *a.model));
    dist.source = DistributionSource::kAmateur;
    out.token = choose_token(dist, cfg.strategy, rng);
    rec.chosen = out.token;
    if (cfg.record_trace) {
      rec.adjusted = dist;
      rec.amateurs.emplace_back(a.prompt.id(), std::move(dist));
    }
    return out;
  }

  // Build every conditioned context first so capability errors surface before
  // any backend traffic.
  std::vector<LmContext> contexts;
  contexts.reserve(amateurs.size());
  for (const auto& a : amateurs) contexts.push_back(sp(ctx, a.prompt, *a.model));

  std::vector<NextTokenDistribution> amateur_dists(amateurs.size());
  if (cfg.concurrent_amateurs && amateurs.size() > 1) {
    std::vector<std::future<NextTokenDistribution>> pending;
    pending.reserve(amateurs.size());
    for (std::size_t j = 0; j < amateurs.size(); ++j) {
      pending.push_back(std::async(std::launch::async, [&, j] {
        return amateurs[j].model->next_distribution(contexts[j]);
      }));
    }
    rec.expert = expert.next_distribution(ctx);
    // Collected in binding order; get() rethrows backend errors.
    for (std::size_t j = 0; j < pending.size(); ++j) amateur_dists[j] = pending[j].get();
  } else {
    rec.expert = expert.next_distribution(ctx);
    for (std::size_t j = 0; j < amateurs.size(); ++j) {
      amateur_dists[j] = amateurs[j].model->next_distribution(contexts[j]);
    }
  }
  rec.expert.source = DistributionSource::kExpert;

  std::vector<DeltaVector> deltas;
  deltas.reserve(amateurs.size());
  for (auto& d : amateur_dists) {
    d.source = DistributionSource::kAmateur;
    deltas.push_back(delta(rec.expert, d));
  }
  const DeltaVector worst = min_delta(std::span<const DeltaVector>(deltas));
  Eigen::ArrayXd scales = alpha(worst, cfg.lambda);
  auto adjusted = adjust(rec.expert, scales, cfg.epsilon);

  out.penalized = (scales < 1.0).any();
  rec.fallback = adjusted.fallback;
  out.token = choose_token(adjusted.distribution, cfg.strategy, rng);
  rec.chosen = out.token;
  if (cfg.record_trace) {
    for (std::size_t j = 0; j < amateurs.size(); ++j) {
      std::string key = amateurs[j].prompt.id();
      for (int dup = 2; std::any_of(rec.amateurs.begin(), rec.amateurs.end(),
                                    [&](const auto& kv) { return kv.first == key; });
           ++dup) {
        key = amateurs[j].prompt.id() + "#" + std::to_string(dup);
      }
      rec.amateurs.emplace_back(std::move(key), std::move(amateur_dists[j]));
    }
    rec.delta = worst.values;
    rec.alpha = std::move(scales);
    rec.adjusted = std::move(adjusted.distribution);
  }
  return out;
}

GenerationResult generate_ids(const LanguageModel& expert,
                              std::span<const AmateurBinding> amateurs,
                              TokenSequence prompt_ids, const ContrastiveConfig& cfg,
                              std::string expert_conditioning) {
  cfg.validate();
  if (cfg.mode != DecodeMode::kExpertOnly) check_amateurs(amateurs);

  GenerationResult result;
  result.prompt = prompt_ids;
  LmContext ctx;
  ctx.history = std::move(prompt_ids);
  ctx.conditioning = std::move(expert_conditioning);
  Rng rng(cfg.seed);

  for (std::size_t step = 0; step < cfg.max_new_tokens; ++step) {
    auto outcome = decode_step(expert, amateurs, ctx, cfg, rng);
    ++result.steps;
    if (outcome.record.fallback) ++result.fallback_steps;
    if (outcome.penalized) ++result.penalized_steps;
    if (cfg.record_trace) {
      outcome.record.step = step;
      result.trace.steps.push_back(std::move(outcome.record));
    }
    if (outcome.token == kEosId) {
      result.stopped_at_eos = true;
      break;
    }
    result.tokens.push_back(outcome.token);
    ctx.history.push_back(outcome.token);
  }
  return result;
}

GenerationResult generate(const LanguageModel& expert, std::span<const AmateurBinding> amateurs,
                          std::string_view input_text, const ContrastiveConfig& cfg,
                          SymbolTable& symbols, const TokenizerConfig& tokenizer) {
  TokenSequence prompt{kBosId};
  for (const auto& surface : tokenize(input_text, tokenizer)) {
    prompt.push_back(symbols.intern(surface));
  }
  auto result = generate_ids(expert, amateurs, std::move(prompt), cfg);
  std::vector<std::string> surfaces;
  surfaces.reserve(result.tokens.size());
  for (TokenId id : result.tokens) surfaces.push_back(symbols.surface(id));
  result.text = detokenize(surfaces);
  return result;
}

void write_trace_jsonl(std::ostream& out, const DecodeTrace& trace, const SymbolTable& symbols) {
  for (const auto& rec : trace.steps) {
    nlohmann::ordered_json j;
    j["step"] = rec.step;
    j["expert"] = pairs_json(rec.expert, symbols);
    auto amateur = nlohmann::ordered_json::object();
    for (const auto& [id, dist] : rec.amateurs) amateur[id] = pairs_json(dist, symbols);
    j["amateur"] = std::move(amateur);
    j["delta"] = array_json(rec.delta);
    j["alpha"] = array_json(rec.alpha);
    j["adjusted"] = pairs_json(rec.adjusted, symbols);
    j["chosen"] = symbols.surface(rec.chosen);
    j["fallback"] = rec.fallback;
    out << j.dump() << '\n';
  }
}

}  // namespace og
