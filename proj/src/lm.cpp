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

#include "originality_guard/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "originality_guard/error.hpp"

namespace og {

std::string_view to_string(DistributionSource source) {
  switch (source) {
    case DistributionSource::kExpert: return "expert";
    case DistributionSource::kAmateur: return "amateur";
    case DistributionSource::kAdjusted: return "adjusted";
  }
  return "expert";
}

std::string_view to_string(LmKind kind) {
  switch (kind) {
    case LmKind::kCopy: return "copy";
    case LmKind::kSmoothed: return "smoothed";
    case LmKind::kRemote: return "remote";
  }
  return "copy";
}

LmKind parse_lm_kind(std::string_view tag) {
  if (tag == "copy") return LmKind::kCopy;
  if (tag == "smoothed") return LmKind::kSmoothed;
  if (tag == "remote") return LmKind::kRemote;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown model kind '" + std::string(tag) + "' (copy|smoothed|remote)");
}

void validate(const NextTokenDistribution& dist, double tolerance) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidDistribution, "invalid distribution: " + why);
  };
  if (static_cast<Eigen::Index>(dist.candidates.size()) != dist.probs.size()) {
    fail("candidates and probabilities differ in length");
  }
  if (!dist.probs.isFinite().all()) fail("non-finite probability");
  if ((dist.probs < 0.0).any()) fail("negative probability");
  std::unordered_set<TokenId> seen;
  for (TokenId id : dist.candidates) {
    if (!seen.insert(id).second) fail("duplicate candidate");
  }
  const double sum = dist.probs.sum();
  if (dist.coverage == Coverage::kFull) {
    if (std::abs(sum - 1.0) > tolerance) fail("sum " + std::to_string(sum) + " != 1");
  } else if (sum > 1.0 + tolerance) {
    fail("truncated sum " + std::to_string(sum) + " > 1");
  }
}

void LmDescriptor::validate() const {
  if (kind == LmKind::kRemote) {
    if (endpoint.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "remote model needs an endpoint");
    }
    return;
  }
  if (!endpoint.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "endpoint given for a count-based model");
  }
  if (kind == LmKind::kCopy && order < 2) {
    throw Error(ErrorCode::kInvalidArgument, "copy model order must be >= 2");
  }
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "order must be >= 1");
  if (kind == LmKind::kSmoothed) {
    if (weights.size() != order) {
      throw Error(ErrorCode::kInvalidArgument,
                  "expected " + std::to_string(order) + " interpolation weights");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "interpolation weights must sum to 1");
    }
    if (!(add_k > 0.0) || !std::isfinite(add_k)) {
      throw Error(ErrorCode::kInvalidArgument, "add-k constant must be > 0");
    }
  }
}

namespace detail {

std::string context_key(std::span<const TokenId> ids) {
  std::string key(ids.size() * sizeof(TokenId), '\0');
  if (!ids.empty()) std::memcpy(key.data(), ids.data(), key.size());
  return key;
}

ContextTables count_contexts(const Corpus& train, std::size_t max_context) {
  std::vector<std::unordered_map<std::string, std::map<TokenId, std::uint64_t>>> raw(
      max_context + 1);
  TokenSequence seq;
  for (const auto& doc : train.documents()) {
    seq.clear();
    seq.push_back(kBosId);
    seq.insert(seq.end(), doc.begin(), doc.end());
    seq.push_back(kEosId);
    const std::span<const TokenId> view(seq);
    for (std::size_t t = 1; t < seq.size(); ++t) {
      const std::size_t reach = std::min(max_context, t);
      for (std::size_t k = 0; k <= reach; ++k) {
        ++raw[k][context_key(view.subspan(t - k, k))][seq[t]];
      }
    }
  }
  ContextTables tables(max_context + 1);
  for (std::size_t k = 0; k <= max_context; ++k) {
    tables[k].reserve(raw[k].size());
    for (auto& [key, counts] : raw[k]) {
      Continuations c;
      c.counts.assign(counts.begin(), counts.end());
      for (const auto& [id, n] : c.counts) c.total += n;
      tables[k].emplace(key, std::move(c));
    }
  }
  return tables;
}

}  // namespace detail

CopyModel::CopyModel(Corpus train, std::size_t order) : train_(std::move(train)) {
  descriptor_.kind = LmKind::kCopy;
  descriptor_.order = order;
  descriptor_.add_k = 0.0;
  descriptor_.validate();
  if (train_.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty corpus");
  tables_ = detail::count_contexts(train_, order - 1);
}

std::size_t CopyModel::matched_context(std::span<const TokenId> history) const {
  const std::size_t reach = std::min(descriptor_.order - 1, history.size());
  for (std::size_t k = reach; k > 0; --k) {
    if (tables_[k].count(detail::context_key(history.last(k)))) return k;
  }
  return 0;
}

NextTokenDistribution CopyModel::next_distribution(const LmContext& ctx) const {
  const std::span<const TokenId> history(ctx.history);
  const std::size_t k = matched_context(history);
  const auto& cont = tables_[k].at(detail::context_key(history.last(k)));
  NextTokenDistribution dist;
  dist.source = DistributionSource::kAmateur;
  dist.coverage = Coverage::kFull;
  dist.candidates.reserve(cont.counts.size());
  dist.probs.resize(static_cast<Eigen::Index>(cont.counts.size()));
  const double total = static_cast<double>(cont.total);
  for (std::size_t i = 0; i < cont.counts.size(); ++i) {
    dist.candidates.push_back(cont.counts[i].first);
    dist.probs[static_cast<Eigen::Index>(i)] = static_cast<double>(cont.counts[i].second) / total;
  }
  return dist;
}

CopyModel train_copy_model(const Corpus& train, std::size_t order) {
  return CopyModel(train, order);
}

SmoothedLm::SmoothedLm(Corpus train, std::size_t order, Smoothing smoothing)
    : train_(std::move(train)) {
  descriptor_.kind = LmKind::kSmoothed;
  descriptor_.order = order;
  descriptor_.weights = std::move(smoothing.weights);
  descriptor_.add_k = smoothing.add_k;
  descriptor_.validate();
  if (train_.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty corpus");

  tables_ = detail::count_contexts(train_, order - 1);
  const auto& vocab = train_.vocab();
  position_.assign(vocab.size(), -1);
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (id == kBosId) continue;
    position_[id] = static_cast<Eigen::Index>(support_.size());
    support_.push_back(id);
  }
  const auto& unigram = tables_[0].at(std::string());
  predicted_tokens_ = unigram.total;
  const double k = descriptor_.add_k;
  const double v = static_cast<double>(support_.size());
  unigram_ = Eigen::ArrayXd::Constant(static_cast<Eigen::Index>(support_.size()), k);
  for (const auto& [id, n] : unigram.counts) unigram_[position_[id]] += static_cast<double>(n);
  unigram_ /= static_cast<double>(predicted_tokens_) + k * v;
}

NextTokenDistribution SmoothedLm::next_distribution(const LmContext& ctx) const {
  const std::span<const TokenId> history(ctx.history);
  const std::size_t order = descriptor_.order;
  const double k = descriptor_.add_k;
  const double v = static_cast<double>(support_.size());

  // weights[0] belongs to the highest order; context length = order - 1 - i.
  std::vector<const detail::Continuations*> seen(order, nullptr);
  double active_weight = descriptor_.weights[order - 1];
  for (std::size_t i = 0; i + 1 < order; ++i) {
    const std::size_t len = order - 1 - i;
    if (history.size() < len) continue;
    auto it = tables_[len].find(detail::context_key(history.last(len)));
    if (it != tables_[len].end()) {
      seen[i] = &it->second;
      active_weight += descriptor_.weights[i];
    }
  }

  NextTokenDistribution dist;
  dist.source = DistributionSource::kExpert;
  dist.coverage = Coverage::kFull;
  dist.candidates = support_;
  if (!(active_weight > 0.0)) {
    dist.probs = unigram_;
    return dist;
  }
  dist.probs = (descriptor_.weights[order - 1] / active_weight) * unigram_;
  for (std::size_t i = 0; i + 1 < order; ++i) {
    if (!seen[i]) continue;
    const double w = descriptor_.weights[i] / active_weight;
    const double denom = static_cast<double>(seen[i]->total) + k * v;
    dist.probs += w * k / denom;
    for (const auto& [id, n] : seen[i]->counts) {
      dist.probs[position_[id]] += w * static_cast<double>(n) / denom;
    }
  }
  return dist;
}

SmoothedLm train_smoothed_lm(const Corpus& train, std::size_t order,
                             const Smoothing& smoothing) {
  return SmoothedLm(train, order, smoothing);
}

double perplexity(const LanguageModel& model, const Corpus& corpus) {
  double nll = 0.0;
  std::uint64_t n = 0;
  LmContext ctx;
  for (const auto& doc : corpus.documents()) {
    ctx.history.assign(1, kBosId);
    for (std::size_t t = 0; t <= doc.size(); ++t) {
      const TokenId next = t < doc.size() ? doc[t] : kEosId;
      const double p = model.next_distribution(ctx).probability(next);
      if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
      nll -= std::log(p);
      ++n;
      ctx.history.push_back(next);
    }
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::exp(nll / static_cast<double>(n));
}

namespace {

constexpr std::string_view kModelFormat = "originality-guard-lm";

nlohmann::json corpus_json(const Corpus& corpus) {
  nlohmann::json j;
  j["vocab"] = corpus.vocab().surfaces();
  j["documents"] = corpus.documents();
  return j;
}

}  // namespace

void save_model(const LanguageModel& model, const std::filesystem::path& path) {
  const auto& d = model.descriptor();
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = 1;
  j["kind"] = to_string(d.kind);
  j["order"] = d.order;
  if (const auto* copy = dynamic_cast<const CopyModel*>(&model)) {
    j.update(corpus_json(copy->training_corpus()));
  } else if (const auto* smoothed = dynamic_cast<const SmoothedLm*>(&model)) {
    j["weights"] = d.weights;
    j["add_k"] = d.add_k;
    j.update(corpus_json(smoothed->training_corpus()));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "only count-based models can be saved");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::unique_ptr<LanguageModel> load_model(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw Error(ErrorCode::kPathNotFound, "path not found: " + path.string());
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("format").get<std::string>() != kModelFormat || j.at("version") != 1) {
      throw Error(ErrorCode::kMalformedRecord, path.string() + ": not a model file");
    }
    const auto surfaces = j.at("vocab").get<std::vector<std::string>>();
    auto vocab = std::make_shared<const Vocab>(Vocab::from_surfaces(surfaces));
    Corpus train(j.at("documents").get<std::vector<TokenSequence>>(), vocab,
                 CorpusFormat::kPlain, path);
    const auto kind = parse_lm_kind(j.at("kind").get<std::string>());
    const auto order = j.at("order").get<std::size_t>();
    if (kind == LmKind::kCopy) return std::make_unique<CopyModel>(std::move(train), order);
    if (kind == LmKind::kSmoothed) {
      Smoothing s{j.at("weights").get<std::vector<double>>(), j.at("add_k").get<double>()};
      return std::make_unique<SmoothedLm>(std::move(train), order, std::move(s));
    }
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": remote models are not files");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
  }
}

SymbolTable::SymbolTable() : SymbolTable(Vocab()) {}

SymbolTable::SymbolTable(const Vocab& vocab) : surfaces_(vocab.surfaces()) {
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    index_.emplace(surfaces_[i], static_cast<TokenId>(i));
  }
}

TokenId SymbolTable::intern(std::string_view surface) {
  const std::string key(surface);
  {
    std::shared_lock lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto [it, inserted] = index_.try_emplace(key, static_cast<TokenId>(surfaces_.size()));
  if (inserted) surfaces_.push_back(key);
  return it->second;
}

std::string SymbolTable::surface(TokenId id) const {
  std::shared_lock lock(mutex_);
  return surfaces_.at(id);
}

std::size_t SymbolTable::size() const {
  std::shared_lock lock(mutex_);
  return surfaces_.size();
}

}  // namespace og
