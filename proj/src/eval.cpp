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

#include "originality_guard/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "originality_guard/error.hpp"
#include "originality_guard/prompts.hpp"
#include "originality_guard/rng.hpp"

namespace og {
namespace {

constexpr double kRelativeEpsilon = 1e-12;
constexpr double kMaxFailureFraction = 0.01;
constexpr std::string_view kDenominatorNote =
    "pooled: matched windows / total windows of each length over all generated "
    "continuations (input openings excluded)";

[[noreturn]] void bad_config(const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, "experiment config: " + why);
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

ModelSpec model_from_json(const nlohmann::json& j, const ModelSpec& defaults) {
  ModelSpec m = defaults;
  if (j.contains("kind")) m.kind = parse_lm_kind(j.at("kind").get<std::string>());
  if (m.kind == LmKind::kCopy && !j.contains("order")) m.order = CopyModel::kDefaultOrder;
  m.order = get_or(j, "order", m.order);
  if (j.contains("weights")) m.smoothing.weights = j.at("weights").get<std::vector<double>>();
  m.smoothing.add_k = get_or(j, "add_k", m.smoothing.add_k);
  m.endpoint = get_or(j, "endpoint", m.endpoint);
  m.prompt = get_or(j, "prompt", m.prompt);
  return m;
}

nlohmann::ordered_json model_to_json(const ModelSpec& m, bool amateur) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(m.kind);
  if (m.kind == LmKind::kRemote) {
    j["endpoint"] = m.endpoint;
  } else {
    j["order"] = m.order;
    if (m.kind == LmKind::kSmoothed) {
      j["weights"] = m.smoothing.weights;
      j["add_k"] = m.smoothing.add_k;
    }
  }
  if (amateur) j["prompt"] = m.prompt;
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10f", v);
  return buf;
}

struct ConditionSpec {
  std::string name;
  DecodeMode mode;
  std::size_t prompt_count;
};

std::vector<ConditionSpec> expand_conditions(const ExperimentConfig& cfg) {
  std::vector<ConditionSpec> out;
  const std::size_t all = cfg.amateurs.size();
  for (const auto& name : cfg.conditions) {
    if (name == "default") {
      out.push_back({name, DecodeMode::kExpertOnly, 0});
    } else if (name == "spcd") {
      out.push_back({name, DecodeMode::kContrastive, all});
    } else if (name == "sp-prompt-only") {
      out.push_back({name, DecodeMode::kAmateurOnly, 1});
    } else {
      bad_config("unknown condition '" + name + "' (default|spcd|sp-prompt-only)");
    }
  }
  for (std::size_t n : cfg.prompt_counts) {
    out.push_back({"spcd-p" + std::to_string(n), DecodeMode::kContrastive, n});
  }
  return out;
}

struct Generation {
  TokenSequence continuation;
  bool failed = false;
  bool stopped_at_eos = false;
  std::size_t fallback_steps = 0;
  std::size_t penalized_steps = 0;
  std::string error;
};

// Summed negative log-probability of the continuation (and its <eos>)
// under the expert, with the token count.
std::pair<double, std::size_t> expert_nll(const LanguageModel& expert,
                                          const TokenSequence& prompt,
                                          const Generation& g) {
  LmContext ctx;
  ctx.history = prompt;
  double nll = 0.0;
  std::size_t n = 0;
  auto score = [&](TokenId tok) {
    const double p = expert.next_distribution(ctx).probability(tok);
    nll -= std::log(std::max(p, std::numeric_limits<double>::min()));
    ++n;
    ctx.history.push_back(tok);
  };
  for (TokenId t : g.continuation) score(t);
  if (g.stopped_at_eos) score(kEosId);
  return {nll, n};
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

nlohmann::ordered_json curve_json(const SimilarityCurve& c) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : c.points) {
    arr.push_back({{"L", p.length}, {"matched", p.matched}, {"total", p.total}, {"rate", p.rate}});
  }
  return arr;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    if (!j.is_object()) bad_config("top level must be an object");
    static const std::vector<std::string> known = {
        "dataset", "split", "expert", "amateurs", "decoding", "conditions", "prompt_counts",
        "lmax", "input_tokens", "samples_per_input", "max_inputs", "threads", "output_dir"};
    for (const auto& [key, _] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        bad_config("unknown key '" + key + "'");
      }
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    const auto& ds = j.at("dataset");
    cfg.dataset = resolve(ds.at("path").get<std::string>());
    cfg.format = parse_corpus_format(get_or<std::string>(ds, "format", "plain"));
    cfg.min_count = get_or(ds, "min_count", cfg.min_count);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      cfg.split.train = get_or(s, "train", cfg.split.train);
      cfg.split.eval = get_or(s, "eval", cfg.split.eval);
      cfg.split.test = get_or(s, "test", cfg.split.test);
      cfg.split.seed = get_or(s, "seed", cfg.split.seed);
    }
    if (j.contains("expert")) cfg.expert = model_from_json(j.at("expert"), cfg.expert);
    if (j.contains("amateurs")) {
      cfg.amateurs.clear();
      ModelSpec defaults{LmKind::kCopy, CopyModel::kDefaultOrder, {}, {}, "verbatim:detail"};
      for (const auto& a : j.at("amateurs")) cfg.amateurs.push_back(model_from_json(a, defaults));
    }
    if (j.contains("decoding")) {
      const auto& d = j.at("decoding");
      auto& dc = cfg.decoding;
      dc.lambda = get_or(d, "lambda", dc.lambda);
      if (d.contains("strategy")) dc.strategy.kind = parse_strategy(d.at("strategy").get<std::string>());
      dc.strategy.temperature = get_or(d, "temperature", dc.strategy.temperature);
      dc.strategy.top_k = get_or(d, "top_k", dc.strategy.top_k);
      dc.strategy.top_p = get_or(d, "top_p", dc.strategy.top_p);
      dc.max_new_tokens = get_or(d, "max_new_tokens", dc.max_new_tokens);
      dc.seed = get_or(d, "seed", dc.seed);
      dc.top_k = get_or(d, "remote_top_k", dc.top_k);
    }
    if (j.contains("conditions")) cfg.conditions = j.at("conditions").get<std::vector<std::string>>();
    if (j.contains("prompt_counts")) {
      cfg.prompt_counts = j.at("prompt_counts").get<std::vector<std::size_t>>();
    }
    cfg.lmax = get_or(j, "lmax", cfg.lmax);
    cfg.input_tokens = get_or(j, "input_tokens", cfg.input_tokens);
    cfg.samples_per_input = get_or(j, "samples_per_input", cfg.samples_per_input);
    cfg.max_inputs = get_or(j, "max_inputs", cfg.max_inputs);
    cfg.threads = get_or(j, "threads", cfg.threads);
    if (j.contains("output_dir")) cfg.output_dir = resolve(j.at("output_dir").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    bad_config(e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kPathNotFound, "path not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    bad_config(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["dataset"] = {{"path", dataset.string()}, {"format", to_string(format)},
                  {"min_count", min_count}};
  j["split"] = {{"train", split.train}, {"eval", split.eval}, {"test", split.test},
                {"seed", split.seed}};
  j["expert"] = model_to_json(expert, false);
  auto am = nlohmann::ordered_json::array();
  for (const auto& a : amateurs) am.push_back(model_to_json(a, true));
  j["amateurs"] = std::move(am);
  j["decoding"] = {{"lambda", decoding.lambda},
                   {"strategy", to_string(decoding.strategy.kind)},
                   {"temperature", decoding.strategy.temperature},
                   {"top_k", decoding.strategy.top_k},
                   {"top_p", decoding.strategy.top_p},
                   {"max_new_tokens", decoding.max_new_tokens},
                   {"seed", decoding.seed},
                   {"remote_top_k", decoding.top_k}};
  j["conditions"] = conditions;
  j["prompt_counts"] = prompt_counts;
  j["lmax"] = lmax;
  j["input_tokens"] = input_tokens;
  j["samples_per_input"] = samples_per_input;
  j["max_inputs"] = max_inputs;
  j["threads"] = threads;
  j["output_dir"] = output_dir.string();
  return j;
}

void ExperimentConfig::validate() const {
  if (conditions.empty() && prompt_counts.empty()) bad_config("at least one condition required");
  split.validate();
  decoding.validate();
  if (lmax < 2) bad_config("lmax must be >= 2");
  if (input_tokens < 1) bad_config("input_tokens must be >= 1");
  if (samples_per_input < 1) bad_config("samples_per_input must be >= 1");
  if (min_count < 1) bad_config("min_count must be >= 1");
  const auto specs = expand_conditions(*this);
  for (const auto& c : specs) {
    if (c.mode != DecodeMode::kExpertOnly && (c.prompt_count < 1 || c.prompt_count > amateurs.size())) {
      bad_config("condition " + c.name + " needs " + std::to_string(std::max<std::size_t>(1, c.prompt_count)) +
                 " amateur(s), " + std::to_string(amateurs.size()) + " configured");
    }
  }
  auto check_model = [](const ModelSpec& m) {
    LmDescriptor d;
    d.kind = m.kind;
    d.order = m.order;
    d.weights = m.smoothing.weights;
    d.add_k = m.smoothing.add_k;
    d.endpoint = m.endpoint;
    if (m.kind == LmKind::kCopy && m.order < 2) bad_config("copy model order must be >= 2");
    try {
      d.validate();
    } catch (const Error& e) {
      bad_config(e.what());
    }
  };
  check_model(expert);
  if (expert.kind == LmKind::kCopy) bad_config("the expert must be a smoothed or remote model");
  for (const auto& a : amateurs) {
    check_model(a);
    const auto& t = builtin_templates().lookup(a.prompt);
    sp(LmContext{}, t, a.kind == LmKind::kRemote);  // throws kCapability
  }
  std::error_code ec;
  if (!std::filesystem::exists(dataset, ec)) {
    throw Error(ErrorCode::kPathNotFound, "path not found: " + dataset.string());
  }
}

std::vector<LengthReduction> compare_curves(const SimilarityCurve& baseline,
                                            const SimilarityCurve& candidate) {
  if (baseline.max_length != candidate.max_length ||
      baseline.points.size() != candidate.points.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot compare curves with different Lmax");
  }
  std::vector<LengthReduction> out;
  for (std::size_t i = 0; i < baseline.points.size(); ++i) {
    const auto& a = baseline.points[i];
    const auto& b = candidate.points[i];
    LengthReduction r;
    r.length = a.length;
    r.absolute = a.rate - b.rate;
    if (a.rate <= 0.0) {
      r.undefined_baseline = true;
    } else {
      r.relative = r.absolute / std::max(a.rate, kRelativeEpsilon);
    }
    out.push_back(r);
  }
  return out;
}

const ConditionResult& Report::condition(std::string_view name) const {
  for (const auto& c : conditions) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "report has no condition " + std::string(name));
}

nlohmann::ordered_json Report::to_json() const {
  nlohmann::ordered_json j;
  j["metadata"] = metadata;
  auto conds = nlohmann::ordered_json::array();
  for (const auto& c : conditions) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["mode"] = to_string(c.mode);
    cj["prompt_count"] = c.prompt_count;
    cj["lmax"] = c.curve.max_length;
    cj["curve"] = curve_json(c.curve);
    cj["generations"] = c.generations;
    cj["failures"] = c.failures;
    cj["degenerate_steps"] = c.degenerate_steps;
    cj["penalized_steps"] = c.penalized_steps;
    cj["generated_tokens"] = c.generated_tokens;
    cj["proxy_mean_length"] = c.mean_length;
    cj["proxy_expert_perplexity"] = c.expert_perplexity;
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);
  auto comps = nlohmann::ordered_json::array();
  for (const auto& c : comparisons) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : c.reductions) {
      rows.push_back({{"L", r.length},
                      {"absolute", r.absolute},
                      {"relative", r.relative},
                      {"undefined_baseline", r.undefined_baseline}});
    }
    comps.push_back({{"baseline", c.baseline}, {"candidate", c.candidate}, {"reductions", rows}});
  }
  j["comparisons"] = std::move(comps);
  return j;
}

Report Report::from_json(const nlohmann::ordered_json& j) {
  Report r;
  try {
    r.metadata = j.at("metadata");
    for (const auto& cj : j.at("conditions")) {
      ConditionResult c;
      c.name = cj.at("name").get<std::string>();
      const auto mode = cj.at("mode").get<std::string>();
      c.mode = mode == "spcd"             ? DecodeMode::kContrastive
               : mode == "sp-prompt-only" ? DecodeMode::kAmateurOnly
                                          : DecodeMode::kExpertOnly;
      c.prompt_count = cj.at("prompt_count").get<std::size_t>();
      c.curve.max_length = cj.at("lmax").get<std::size_t>();
      for (const auto& p : cj.at("curve")) {
        c.curve.points.push_back(SimilarityPoint{p.at("L").get<std::size_t>(),
                                                 p.at("matched").get<std::uint64_t>(),
                                                 p.at("total").get<std::uint64_t>(),
                                                 p.at("rate").get<double>()});
      }
      c.generations = cj.at("generations").get<std::size_t>();
      c.failures = cj.at("failures").get<std::size_t>();
      c.degenerate_steps = cj.at("degenerate_steps").get<std::size_t>();
      c.penalized_steps = cj.at("penalized_steps").get<std::size_t>();
      c.generated_tokens = cj.at("generated_tokens").get<std::size_t>();
      c.mean_length = cj.at("proxy_mean_length").get<double>();
      const auto& ppl = cj.at("proxy_expert_perplexity");
      c.expert_perplexity = ppl.is_null() ? std::numeric_limits<double>::quiet_NaN() : ppl.get<double>();
      r.conditions.push_back(std::move(c));
    }
    for (const auto& cj : j.at("comparisons")) {
      CurveComparison c;
      c.baseline = cj.at("baseline").get<std::string>();
      c.candidate = cj.at("candidate").get<std::string>();
      for (const auto& rj : cj.at("reductions")) {
        c.reductions.push_back(LengthReduction{rj.at("L").get<std::size_t>(),
                                               rj.at("absolute").get<double>(),
                                               rj.at("relative").get<double>(),
                                               rj.at("undefined_baseline").get<bool>()});
      }
      r.comparisons.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("bad report: ") + e.what());
  }
  return r;
}

std::string Report::to_csv() const {
  std::ostringstream out;
  for (const auto& [key, value] : metadata.items()) {
    out << "# " << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump())
        << '\n';
  }
  out << "condition,L,matched,total,rate\n";
  for (const auto& c : conditions) {
    for (const auto& p : c.curve.points) {
      out << c.name << ',' << p.length << ',' << p.matched << ',' << p.total << ','
          << format_rate(p.rate) << '\n';
    }
  }
  return out.str();
}

std::vector<std::filesystem::path> export_report(const Report& report,
                                                 const std::filesystem::path& dir,
                                                 std::vector<ReportFormat> formats) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (auto f : formats) {
    const auto path = dir / (f == ReportFormat::kJson ? "report.json" : "report.csv");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    if (f == ReportFormat::kJson) {
      out << report.to_json().dump(2) << '\n';
    } else {
      out << report.to_csv();
    }
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
    written.push_back(path);
  }
  return written;
}

Report run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto specs = expand_conditions(cfg);

  const Corpus corpus = load_corpus(cfg.dataset, cfg.format, cfg.min_count);
  const CorpusSplit parts = split(corpus, cfg.split);
  OriginalSetOptions index_options;
  index_options.max_length = cfg.lmax;
  index_options.threads = cfg.threads;
  const OriginalSet index = OriginalSet::build(parts.train, index_options);

  auto symbols = std::make_shared<SymbolTable>(corpus.vocab());
  auto make_model = [&](const ModelSpec& m) -> std::unique_ptr<LanguageModel> {
    switch (m.kind) {
      case LmKind::kCopy: return std::make_unique<CopyModel>(parts.train, m.order);
      case LmKind::kSmoothed: return std::make_unique<SmoothedLm>(parts.train, m.order, m.smoothing);
      case LmKind::kRemote: {
        RemoteOptions o;
        o.endpoint = m.endpoint;
        o.top_k = cfg.decoding.top_k;
        return std::make_unique<RemoteLm>(o, symbols);
      }
    }
    return nullptr;
  };
  const auto expert = make_model(cfg.expert);
  std::vector<std::unique_ptr<LanguageModel>> amateur_models;
  std::vector<AmateurBinding> bindings;
  for (const auto& a : cfg.amateurs) {
    amateur_models.push_back(make_model(a));
    bindings.push_back({amateur_models.back().get(), builtin_templates().lookup(a.prompt)});
  }

  // Test openings: the first input_tokens tokens of each test document.
  std::vector<TokenSequence> openings;
  ContentHash input_hash;
  for (const auto& doc : parts.test.documents()) {
    if (cfg.max_inputs && openings.size() >= cfg.max_inputs) break;
    TokenSequence prompt{kBosId};
    const std::size_t n = std::min(cfg.input_tokens, doc.size());
    prompt.insert(prompt.end(), doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(n));
    input_hash.update(prompt.data(), prompt.size() * sizeof(TokenId));
    openings.push_back(std::move(prompt));
  }
  const std::size_t jobs = openings.size() * cfg.samples_per_input;

  Report report;
  auto& meta = report.metadata;
  meta["seed"] = cfg.decoding.seed;
  meta["lambda"] = cfg.decoding.lambda;
  meta["strategy"] = to_string(cfg.decoding.strategy.kind);
  meta["temperature"] = cfg.decoding.strategy.temperature;
  meta["max_new_tokens"] = cfg.decoding.max_new_tokens;
  auto prompts = nlohmann::ordered_json::array();
  for (const auto& b : bindings) prompts.push_back(b.prompt.id());
  meta["prompt_set"] = std::move(prompts);
  meta["expert"] = model_to_json(cfg.expert, false);
  auto am = nlohmann::ordered_json::array();
  for (const auto& a : cfg.amateurs) am.push_back(model_to_json(a, true));
  meta["amateurs"] = std::move(am);
  auto cond_names = nlohmann::ordered_json::array();
  for (const auto& s : specs) cond_names.push_back(s.name);
  meta["conditions"] = std::move(cond_names);
  meta["dataset"] = cfg.dataset.filename().string();
  meta["format"] = to_string(cfg.format);
  meta["corpus_documents"] = corpus.size();
  meta["train_documents"] = parts.train.size();
  meta["eval_documents"] = parts.eval.size();
  meta["test_documents"] = parts.test.size();
  meta["vocab_size"] = corpus.vocab().size();
  meta["split_seed"] = cfg.split.seed;
  meta["lmax"] = cfg.lmax;
  meta["input_tokens"] = cfg.input_tokens;
  meta["samples_per_input"] = cfg.samples_per_input;
  meta["test_inputs"] = openings.size();
  meta["generations_per_condition"] = jobs;
  meta["original_set_source_hash"] = hex64(index.source_id());
  meta["original_set_ngrams"] = index.total_size();
  meta["test_inputs_hash"] = hex64(input_hash.digest());
  meta["similarity_denominator"] = std::string(kDenominatorNote);
  meta["proxies"] = "mean continuation length and expert perplexity are fluency proxies";

  bool failed = false;
  for (const auto& spec : specs) {
    ContrastiveConfig dc = cfg.decoding;
    dc.mode = spec.mode;
    dc.record_trace = false;
    const std::span<const AmateurBinding> active(bindings.data(), spec.prompt_count);

    std::vector<Generation> gens(jobs);
    parallel_for(jobs, cfg.threads, [&](std::size_t job) {
      ContrastiveConfig local = dc;
      local.seed = mix_seed(cfg.decoding.seed, job);
      auto& g = gens[job];
      try {
        auto r = generate_ids(*expert, active, openings[job / cfg.samples_per_input], local);
        g.continuation = std::move(r.tokens);
        g.stopped_at_eos = r.stopped_at_eos;
        g.fallback_steps = r.fallback_steps;
        g.penalized_steps = r.penalized_steps;
      } catch (const Error& e) {
        g.failed = true;
        g.error = e.what();
      }
    });

    ConditionResult res;
    res.name = spec.name;
    res.mode = spec.mode;
    res.prompt_count = spec.prompt_count;
    res.generations = jobs;
    std::vector<TokenSequence> outputs;
    double nll = 0.0;
    std::size_t scored = 0;
    const bool remote_expert = cfg.expert.kind == LmKind::kRemote;
    for (std::size_t job = 0; job < jobs; ++job) {
      const auto& g = gens[job];
      if (g.failed) {
        ++res.failures;
        continue;
      }
      res.degenerate_steps += g.fallback_steps;
      res.penalized_steps += g.penalized_steps;
      res.generated_tokens += g.continuation.size();
      if (!remote_expert) {
        const auto [s, n] = expert_nll(*expert, openings[job / cfg.samples_per_input], g);
        nll += s;
        scored += n;
      }
      outputs.push_back(g.continuation);
    }
    const std::size_t ok = jobs - res.failures;
    res.mean_length = ok ? static_cast<double>(res.generated_tokens) / static_cast<double>(ok) : 0.0;
    res.expert_perplexity = remote_expert || scored == 0
                                ? std::numeric_limits<double>::quiet_NaN()
                                : std::exp(nll / static_cast<double>(scored));
    if (outputs.empty()) outputs.emplace_back();
    res.curve = similarity_curve(outputs, index, cfg.threads);
    report.conditions.push_back(std::move(res));

    if (jobs > 0 && static_cast<double>(report.conditions.back().failures) >
                        kMaxFailureFraction * static_cast<double>(jobs)) {
      failed = true;
      meta["failed_condition"] = spec.name;
      for (const auto& g : gens) {
        if (g.failed) {
          meta["first_error"] = g.error;
          break;
        }
      }
      break;
    }
  }

  auto baseline = std::find_if(report.conditions.begin(), report.conditions.end(),
                               [](const auto& c) { return c.name == "default"; });
  if (baseline != report.conditions.end()) {
    for (const auto& c : report.conditions) {
      if (c.name == baseline->name) continue;
      report.comparisons.push_back({baseline->name, c.name, compare_curves(baseline->curve, c.curve)});
    }
  }

  if (failed) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    const auto partial = cfg.output_dir / "report.partial.json";
    std::ofstream out(partial, std::ios::trunc);
    if (out) out << report.to_json().dump(2) << '\n';
    throw Error(ErrorCode::kExperimentFailed,
                "condition " + meta["failed_condition"].get<std::string>() +
                    " failed on more than 1% of inputs (" +
                    meta.value("first_error", std::string("unknown error")) +
                    "); partial results in " + partial.string());
  }
  return report;
}

}  // namespace og
