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

#include "originality_guard/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "originality_guard/corpus.hpp"
#include "originality_guard/decoder.hpp"
#include "originality_guard/error.hpp"
#include "originality_guard/eval.hpp"
#include "originality_guard/lm.hpp"
#include "originality_guard/originality.hpp"
#include "originality_guard/prompts.hpp"

namespace og {
namespace {

const Vocab* model_vocab(const LanguageModel& m) {
  if (const auto* c = dynamic_cast<const CopyModel*>(&m)) return &c->vocab();
  if (const auto* s = dynamic_cast<const SmoothedLm*>(&m)) return &s->vocab();
  return nullptr;
}

const Corpus* model_corpus(const LanguageModel& m) {
  if (const auto* c = dynamic_cast<const CopyModel*>(&m)) return &c->training_corpus();
  if (const auto* s = dynamic_cast<const SmoothedLm*>(&m)) return &s->training_corpus();
  return nullptr;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  return f;
}

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ExitCode exit_code_for(const Error& e) {
  switch (category(e.code())) {
    case ErrorCategory::kUsage: return kExitUsage;
    case ErrorCategory::kData: return kExitData;
    case ErrorCategory::kBackend: return kExitBackend;
  }
  return kExitData;
}

struct CorpusFlags {
  std::string path;
  std::string format = "plain";
  std::uint64_t min_count = 1;

  void add(CLI::App* cmd, const char* flag) {
    cmd->add_option(flag, path, "Corpus file")->required();
    cmd->add_option("--format", format, "plain | rocstories | aasc");
    cmd->add_option("--min-count", min_count, "Map rarer tokens to <unk>");
  }
  Corpus load() const { return load_corpus(path, parse_corpus_format(format), min_count); }
};

struct StrategyFlags {
  std::string kind = "greedy";
  double temperature = 1.0;
  std::size_t top_k = 40;
  double top_p = 0.9;

  void add(CLI::App* cmd) {
    cmd->add_option("--strategy", kind, "greedy | temperature | top-k | nucleus");
    cmd->add_option("--temperature", temperature);
    cmd->add_option("--top-k", top_k, "Cut-off for top-k sampling");
    cmd->add_option("--top-p", top_p, "Mass for nucleus sampling");
  }
  DecodeStrategy get() const {
    DecodeStrategy s;
    s.kind = parse_strategy(kind);
    s.temperature = temperature;
    s.top_k = top_k;
    s.top_p = top_p;
    return s;
  }
};

// ---- ingest -------------------------------------------------------------

struct IngestCmd {
  std::string input, format = "plain", output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("ingest", "Normalize a corpus to one tokenized document per line");
    c->add_option("--input", input, "Raw corpus file")->required();
    c->add_option("--format", format, "plain | rocstories | aasc");
    c->add_option("--output", output, "Output file (default stdout)");
    c->callback([this] { ran = true; });
  }
  int run(std::ostream& out, std::ostream& err) const {
    const auto raw = load_raw_corpus(input, parse_corpus_format(format));
    std::ostringstream text;
    std::size_t docs = 0, tokens = 0;
    for (const auto& d : raw.documents) {
      const auto toks = tokenize(d);
      if (toks.empty()) continue;
      text << detokenize(toks) << '\n';
      ++docs;
      tokens += toks.size();
    }
    if (docs == 0) throw Error(ErrorCode::kEmptyCorpus, "empty corpus: " + input);
    if (output.empty()) {
      out << text.str();
    } else {
      auto f = open_output(output);
      f << text.str();
    }
    err << "ingested " << docs << " documents, " << tokens << " tokens (" << format << ")\n";
    return kExitOk;
  }
  bool ran = false;
};

// ---- build-index --------------------------------------------------------

struct BuildIndexCmd {
  CorpusFlags corpus;
  std::size_t lmax = 7;
  std::string exact = "auto";
  unsigned threads = 1;
  std::string output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("build-index", "Build the n-gram original set of a corpus");
    corpus.add(c, "--corpus");
    c->add_option("--lmax", lmax, "Longest n-gram length");
    c->add_option("--exact-store", exact, "auto | on | off");
    c->add_option("--threads", threads);
    c->add_option("--output", output, "Index file")->required();
    c->callback([this] { ran = true; });
  }
  int run(std::ostream&, std::ostream& err) const {
    OriginalSetOptions o;
    o.max_length = lmax;
    o.threads = threads;
    if (exact == "auto") o.exact_store = ExactStorePolicy::kAuto;
    else if (exact == "on") o.exact_store = ExactStorePolicy::kOn;
    else if (exact == "off") o.exact_store = ExactStorePolicy::kOff;
    else throw Error(ErrorCode::kInvalidArgument, "--exact-store must be auto, on or off");
    const auto index = OriginalSet::build(corpus.load(), o);
    index.save(output);
    err << "indexed " << index.total_size() << " n-grams (L=2.." << lmax << ", exact store "
        << (index.has_exact_store() ? "on" : "off") << ") -> " << output << '\n';
    return kExitOk;
  }
  bool ran = false;
};

// ---- train-lm -----------------------------------------------------------

struct TrainCmd {
  CorpusFlags corpus;
  std::string kind = "smoothed";
  std::optional<std::size_t> order;
  std::string weights;
  double add_k = 0.01;
  std::string output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("train-lm", "Train a built-in count model");
    corpus.add(c, "--corpus");
    c->add_option("--kind", kind, "smoothed | copy");
    c->add_option("--order", order, "n-gram order (smoothed 3, copy 5)");
    c->add_option("--weights", weights, "Interpolation weights, highest order first");
    c->add_option("--add-k", add_k, "Add-k constant");
    c->add_option("--output", output, "Model file")->required();
    c->callback([this] { ran = true; });
  }
  int run(std::ostream&, std::ostream& err) const {
    const LmKind k = parse_lm_kind(kind);
    if (k == LmKind::kRemote) {
      throw Error(ErrorCode::kInvalidArgument, "remote models are not trained locally");
    }
    const Corpus train = corpus.load();
    std::unique_ptr<LanguageModel> model;
    if (k == LmKind::kCopy) {
      model = std::make_unique<CopyModel>(train, order.value_or(CopyModel::kDefaultOrder));
    } else {
      Smoothing s;
      s.add_k = add_k;
      if (!weights.empty()) {
        s.weights.clear();
        for (const auto& w : split_list(weights)) {
          try {
            s.weights.push_back(std::stod(w));
          } catch (const std::exception&) {
            throw Error(ErrorCode::kInvalidArgument, "bad weight '" + w + "'");
          }
        }
      }
      model = std::make_unique<SmoothedLm>(train, order.value_or(s.weights.size()), s);
    }
    save_model(*model, output);
    err << "trained " << kind << " order " << model->descriptor().order << " on " << train.size()
        << " documents -> " << output << '\n';
    return kExitOk;
  }
  bool ran = false;
};

// ---- generate -----------------------------------------------------------

struct GenerateCmd {
  std::string expert_path, amateur_path, remote, input, prompts = "verbatim:detail", trace, index;
  double lambda = 10.0;
  std::size_t max_new = 20;
  std::size_t remote_top_k = 20;
  std::uint64_t seed = 0;
  bool no_spcd = false, prompt_only = false;
  StrategyFlags strategy;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("generate", "Continue an input with or without contrastive decoding");
    c->add_option("--expert", expert_path, "Expert model file");
    c->add_option("--amateur", amateur_path, "Amateur (copy) model file");
    c->add_option("--remote", remote, "Logprob server for expert and amateurs");
    c->add_option("--input", input, "Input text")->required();
    c->add_option("--lambda", lambda, "Penalty sharpness");
    c->add_option("--max-new", max_new, "Maximum new tokens");
    c->add_option("--seed", seed);
    c->add_option("--prompts", prompts, "Comma list of kind:style amateur templates");
    c->add_option("--remote-top-k", remote_top_k, "Candidates requested per remote query");
    c->add_option("--trace", trace, "Write a JSONL step trace here");
    c->add_option("--index", index, "Report originality of the output against this index");
    auto* off = c->add_flag("--no-spcd", no_spcd, "Plain expert decoding");
    c->add_flag("--sp-prompt-only", prompt_only, "Decode from the first amateur alone")
        ->excludes(off);
    strategy.add(c);
    c->callback([this] { ran = true; });
  }

  int run(std::ostream& out, std::ostream& err) const {
    std::string endpoint = remote;
    if (endpoint.empty() && expert_path.empty()) {
      if (const char* env = std::getenv(kRemoteEnvVar)) endpoint = env;
    }
    const DecodeMode mode = no_spcd       ? DecodeMode::kExpertOnly
                            : prompt_only ? DecodeMode::kAmateurOnly
                                          : DecodeMode::kContrastive;
    const auto templates = builtin_templates().select(prompts);
    if (templates.empty()) throw Error(ErrorCode::kInvalidArgument, "--prompts is empty");

    ContrastiveConfig cfg;
    cfg.lambda = lambda;
    cfg.max_new_tokens = max_new;
    cfg.seed = seed;
    cfg.mode = mode;
    cfg.top_k = remote_top_k;
    cfg.strategy = strategy.get();
    cfg.record_trace = !trace.empty();
    cfg.validate();

    std::shared_ptr<SymbolTable> symbols;
    std::unique_ptr<LanguageModel> expert, amateur;
    const Vocab* vocab = nullptr;
    if (!endpoint.empty()) {
      if (!expert_path.empty() || !amateur_path.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "--remote replaces --expert/--amateur; give one or the other");
      }
      symbols = std::make_shared<SymbolTable>();
      RemoteOptions o;
      o.endpoint = endpoint;
      o.top_k = remote_top_k;
      o.on_retry = [&err](const RetryEvent& e) {
        err << "retry " << e.attempt << ": " << e.reason << '\n';
      };
      expert = std::make_unique<RemoteLm>(o, symbols);
    } else {
      if (expert_path.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("--expert or --remote is required (or set ") + kRemoteEnvVar + ")");
      }
      expert = load_model(expert_path);
      vocab = model_vocab(*expert);
      if (mode != DecodeMode::kExpertOnly) {
        if (amateur_path.empty()) {
          throw Error(ErrorCode::kInvalidArgument, "--amateur is required unless --no-spcd");
        }
        amateur = load_model(amateur_path);
        const Vocab* av = model_vocab(*amateur);
        if (!vocab || !av || !(*vocab == *av)) {
          throw Error(ErrorCode::kAlignment,
                      "expert and amateur were trained on different vocabularies");
        }
        for (const auto& t : templates) {
          if (t.kind != PlagiarismKind::kVerbatim) {
            throw Error(ErrorCode::kCapability,
                        "template " + t.id() +
                            " requires a prompt-capable backend; capability matrix: built-in "
                            "count models realize verbatim:* only, paraphrase:* and idea:* need "
                            "--remote");
          }
        }
      }
      symbols = std::make_shared<SymbolTable>(*vocab);
    }
    const LanguageModel& amateur_model = amateur ? *amateur : *expert;
    std::vector<AmateurBinding> bindings;
    for (const auto& t : templates) bindings.push_back({&amateur_model, t});

    err << "condition: " << to_string(mode) << " (lambda " << lambda << ", seed " << seed
        << ", strategy " << to_string(cfg.strategy.kind);
    if (mode != DecodeMode::kExpertOnly) err << ", prompts " << prompts;
    err << ", backend " << (endpoint.empty() ? "built-in" : endpoint) << ")\n";

    GenerationResult result;
    if (vocab) {
      TokenSequence ids{kBosId};
      const auto surf = tokenize(input);
      const auto enc = vocab->encode(surf);
      ids.insert(ids.end(), enc.begin(), enc.end());
      result = generate_ids(*expert, bindings, std::move(ids), cfg);
      result.text = detokenize(vocab->decode(result.tokens));
    } else {
      result = generate(*expert, bindings, input, cfg, *symbols);
    }
    out << result.text << '\n';

    if (!trace.empty()) {
      auto f = open_output(trace);
      write_trace_jsonl(f, result.trace, *symbols);
      if (!f) throw Error(ErrorCode::kIo, "write failed: " + trace);
    }
    err << "generated " << result.tokens.size() << " tokens"
        << (result.stopped_at_eos ? " (eos)" : "") << ", penalized steps "
        << result.penalized_steps << ", fallback steps " << result.fallback_steps << '\n';

    if (!index.empty()) {
      const auto got = OriginalSet::load(index);
      const Corpus* train = model_corpus(*expert);
      if (!train || train->content_hash() != got.source_id()) {
        throw Error(ErrorCode::kBadIndexFile,
                    "index " + index + " was not built from the expert's training corpus");
      }
      const TokenSequence seqs[] = {result.tokens};
      const auto curve = similarity_curve(seqs, got);
      for (const auto& p : curve.points) {
        err << "originality L=" << p.length << " matched " << p.matched << "/" << p.total << '\n';
      }
    }
    return kExitOk;
  }
  bool ran = false;
};

// ---- evaluate -----------------------------------------------------------

struct EvaluateCmd {
  std::string config, output, conditions, prompt_counts, formats = "json,csv";
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<unsigned> threads;
  std::optional<std::size_t> lmax, max_inputs, samples;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("evaluate", "Run a default vs contrastive experiment");
    c->add_option("--config", config, "Experiment JSON file")->required();
    c->add_option("--output", output, "Report directory");
    c->add_option("--seed", seed);
    c->add_option("--lambda", lambda);
    c->add_option("--threads", threads);
    c->add_option("--lmax", lmax);
    c->add_option("--max-inputs", max_inputs);
    c->add_option("--samples", samples, "Samples per test input");
    c->add_option("--conditions", conditions, "Comma list: default,spcd,sp-prompt-only");
    c->add_option("--prompt-counts", prompt_counts, "Comma list of amateur counts");
    c->add_option("--formats", formats, "json,csv");
    c->callback([this] { ran = true; });
  }
  int run(std::ostream& out, std::ostream& err) const {
    auto cfg = ExperimentConfig::load(config);
    if (!output.empty()) cfg.output_dir = output;
    if (seed) cfg.decoding.seed = *seed;
    if (lambda) cfg.decoding.lambda = *lambda;
    if (threads) cfg.threads = *threads;
    if (lmax) cfg.lmax = *lmax;
    if (max_inputs) cfg.max_inputs = *max_inputs;
    if (samples) cfg.samples_per_input = *samples;
    if (!conditions.empty()) cfg.conditions = split_list(conditions);
    if (!prompt_counts.empty()) {
      cfg.prompt_counts.clear();
      for (const auto& n : split_list(prompt_counts)) {
        try {
          cfg.prompt_counts.push_back(std::stoul(n));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidArgument, "bad prompt count '" + n + "'");
        }
      }
    }
    std::vector<ReportFormat> fs;
    for (const auto& f : split_list(formats)) {
      if (f == "json") fs.push_back(ReportFormat::kJson);
      else if (f == "csv") fs.push_back(ReportFormat::kCsv);
      else throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + f + "'");
    }
    err << "conditions:";
    for (const auto& c : cfg.conditions) err << ' ' << c;
    for (auto n : cfg.prompt_counts) err << " spcd-p" << n;
    err << " (lambda " << cfg.decoding.lambda << ", seed " << cfg.decoding.seed << ")\n";
    const Report report = run_experiment(cfg);
    for (const auto& p : export_report(report, cfg.output_dir, fs)) out << p.string() << '\n';
    return kExitOk;
  }
  bool ran = false;
};

// ---- report -------------------------------------------------------------

struct ReportCmd {
  std::string input, format = "summary", output;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Print or convert a saved report");
    c->add_option("--input", input, "report.json")->required();
    c->add_option("--format", format, "summary | csv | json");
    c->add_option("--output", output, "Output file (default stdout)");
    c->callback([this] { ran = true; });
  }
  int run(std::ostream& out, std::ostream&) const {
    std::ifstream in(input);
    if (!in) throw Error(ErrorCode::kPathNotFound, "path not found: " + input);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRecord, input + ": " + e.what());
    }
    const Report r = Report::from_json(j);
    std::string text;
    if (format == "json") {
      text = r.to_json().dump(2) + "\n";
    } else if (format == "csv") {
      text = r.to_csv();
    } else if (format == "summary") {
      text = summary(r);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown format '" + format + "'");
    }
    if (output.empty()) {
      out << text;
    } else {
      auto f = open_output(output);
      f << text;
    }
    return kExitOk;
  }

  static std::string summary(const Report& r) {
    std::ostringstream s;
    s << "condition";
    if (!r.conditions.empty()) {
      for (const auto& p : r.conditions.front().curve.points) s << "\tL=" << p.length;
    }
    s << "\tmean_len\tppl\n";
    for (const auto& c : r.conditions) {
      s << c.name;
      for (const auto& p : c.curve.points) s << '\t' << fmt(p.rate);
      s << '\t' << fmt(c.mean_length, 2) << '\t'
        << (std::isnan(c.expert_perplexity) ? std::string("n/a") : fmt(c.expert_perplexity, 2))
        << '\n';
    }
    for (const auto& c : r.comparisons) {
      s << "relative reduction " << c.candidate << " vs " << c.baseline;
      for (const auto& x : c.reductions) {
        s << '\t' << (x.undefined_baseline ? std::string("undef") : fmt(x.relative));
      }
      s << '\n';
    }
    return s.str();
  }
  bool ran = false;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Originality Guard: contrastive decoding against self-plagiarism"};
  app.name("originality-guard");
  app.require_subcommand(1);
  IngestCmd ingest;
  BuildIndexCmd build_index;
  TrainCmd train;
  GenerateCmd generate_cmd;
  EvaluateCmd evaluate;
  ReportCmd report;
  ingest.add(app);
  build_index.add(app);
  train.add(app);
  generate_cmd.add(app);
  evaluate.add(app);
  report.add(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0 && e.get_name() != "CallForHelp" && e.get_name() != "CallForAllHelp") {
      err << app.help();
    }
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ingest.ran) return ingest.run(out, err);
    if (build_index.ran) return build_index.run(out, err);
    if (train.ran) return train.run(out, err);
    if (generate_cmd.ran) return generate_cmd.run(out, err);
    if (evaluate.ran) return evaluate.run(out, err);
    if (report.ran) return report.run(out, err);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [io]: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace og
