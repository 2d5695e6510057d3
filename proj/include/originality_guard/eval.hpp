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

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "originality_guard/corpus.hpp"
#include "originality_guard/decoder.hpp"
#include "originality_guard/lm.hpp"
#include "originality_guard/originality.hpp"

namespace og {

/// How one model of an experiment is obtained.
struct ModelSpec {
  LmKind kind = LmKind::kSmoothed;
  std::size_t order = 3;
  Smoothing smoothing;
  std::string endpoint;     // remote only
  std::string prompt = "verbatim:detail";  // template id, amateurs only
};

/// Experiment file schema (JSON). Relative paths resolve against the config
/// file's directory.
///   dataset: {path, format, min_count}
///   split: {train, eval, test, seed}
///   expert: {kind, order, weights, add_k, endpoint}
///   amateurs: [{kind, order, endpoint, prompt}, ...]
///   decoding: {lambda, strategy, temperature, top_k, top_p, max_new_tokens,
///              seed, remote_top_k}
///   conditions: ["default", "spcd", "sp-prompt-only"]
///   prompt_counts: [1, 2, 3]
///   lmax, input_tokens, samples_per_input, max_inputs, threads, output_dir
struct ExperimentConfig {
  std::filesystem::path dataset;
  CorpusFormat format = CorpusFormat::kPlain;
  std::uint64_t min_count = 1;
  SplitSpec split{0.8, 0.1, 0.1, 7};
  ModelSpec expert;
  std::vector<ModelSpec> amateurs{ModelSpec{LmKind::kCopy, CopyModel::kDefaultOrder, {}, {},
                                            "verbatim:detail"}};
  ContrastiveConfig decoding;
  std::vector<std::string> conditions{"default", "spcd"};
  std::vector<std::size_t> prompt_counts;
  std::size_t lmax = 7;
  std::size_t input_tokens = 10;
  std::size_t samples_per_input = 1;
  std::size_t max_inputs = 0;  // 0 = every test document
  unsigned threads = 1;
  std::filesystem::path output_dir = "report";

  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  /// Structural checks plus: the dataset file exists (kPathNotFound).
  void validate() const;
};

struct LengthReduction {
  std::size_t length = 0;
  double absolute = 0.0;  // baseline.rate - candidate.rate
  double relative = 0.0;  // absolute / baseline.rate, 0 when undefined
  bool undefined_baseline = false;
};

/// Per-length reduction of `candidate` relative to `baseline`.
std::vector<LengthReduction> compare_curves(const SimilarityCurve& baseline,
                                            const SimilarityCurve& candidate);

struct ConditionResult {
  std::string name;
  DecodeMode mode = DecodeMode::kExpertOnly;
  std::size_t prompt_count = 0;
  SimilarityCurve curve;
  std::size_t generations = 0;
  std::size_t failures = 0;
  std::size_t degenerate_steps = 0;
  std::size_t penalized_steps = 0;
  std::size_t generated_tokens = 0;
  // Proxies only; not an originality metric.
  double mean_length = 0.0;
  double expert_perplexity = 0.0;  // NaN when the expert is remote
};

struct CurveComparison {
  std::string baseline;
  std::string candidate;
  std::vector<LengthReduction> reductions;
};

struct Report {
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<ConditionResult> conditions;
  std::vector<CurveComparison> comparisons;

  const ConditionResult& condition(std::string_view name) const;

  nlohmann::ordered_json to_json() const;
  static Report from_json(const nlohmann::ordered_json& j);
  /// condition,L,matched,total,rate with '#'-prefixed metadata lines on top.
  std::string to_csv() const;
};

enum class ReportFormat { kJson, kCsv };

/// Writes report.json / report.csv into `dir` (created if missing) and
/// returns the paths written. Throws kIo naming the path on failure.
std::vector<std::filesystem::path> export_report(const Report& report,
                                                 const std::filesystem::path& dir,
                                                 std::vector<ReportFormat> formats = {
                                                     ReportFormat::kJson, ReportFormat::kCsv});

/// Runs every configured condition on identical test openings and seeds, and
/// scores each against the original set built from the training split. When
/// a condition fails on more than 1% of generations, a partial report is
/// written to output_dir/report.partial.json and kExperimentFailed is thrown.
Report run_experiment(const ExperimentConfig& config);

}  // namespace og
