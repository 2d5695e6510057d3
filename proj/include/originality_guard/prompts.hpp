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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "originality_guard/lm.hpp"

namespace og {

enum class PlagiarismKind { kVerbatim, kParaphrase, kIdea };
enum class TemplateStyle { kNameOnly, kDetailDefinition };

struct PromptTemplate {
  PlagiarismKind kind = PlagiarismKind::kVerbatim;
  TemplateStyle style = TemplateStyle::kDetailDefinition;
  std::string text;
  // True for texts written for this library rather than taken from a
  // published template.
  bool synthesized = true;

  /// "verbatim:detail", "idea:name", ...
  std::string id() const;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

std::string_view to_string(PlagiarismKind kind);
std::string_view to_string(TemplateStyle style);

class TemplateRegistry {
 public:
  TemplateRegistry() = default;
  /// Throws kInvalidConfig on empty text or a repeated (kind, style).
  explicit TemplateRegistry(std::vector<PromptTemplate> templates);

  const std::vector<PromptTemplate>& templates() const { return templates_; }
  std::size_t size() const { return templates_.size(); }

  const PromptTemplate& lookup(PlagiarismKind kind, TemplateStyle style) const;
  /// Accepts "kind:style" with style in {detail, detail-definition, name,
  /// name-only}; style defaults to detail.
  const PromptTemplate& lookup(std::string_view id) const;
  /// Comma-separated list of ids, in the order given.
  std::vector<PromptTemplate> select(std::string_view ids) const;

  /// JSON array of {kind, style, text, synthesized}.
  std::string to_json() const;
  static TemplateRegistry from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static TemplateRegistry load(const std::filesystem::path& path);

 private:
  std::vector<PromptTemplate> templates_;
};

/// The six built-in templates, Verbatim/Paraphrase/Idea x NameOnly/Detail.
/// Only Verbatim/DetailDefinition carries published wording.
const TemplateRegistry& builtin_templates();

/// Default conditioning for the expert: empty (no system prompt).
inline constexpr std::string_view kExpertDefaultConditioning = "";

/// Self-plagiarism conditioning transform. For a prompt-capable model the
/// template text is prepended to the conditioning; for a count-based model the
/// context is tagged for the amateur copy model, which can only realize
/// Verbatim (kCapability otherwise). The token history is never changed.
LmContext sp(const LmContext& ctx, const PromptTemplate& prompt, bool prompt_capable);
LmContext sp(const LmContext& ctx, const PromptTemplate& prompt, const LanguageModel& model);

struct ConditioningPlan {
  std::vector<PromptTemplate> amateur_templates;
  std::string expert_conditioning{kExpertDefaultConditioning};

  /// At least one amateur template when contrastive decoding is enabled.
  void validate(bool contrastive_enabled) const;
};

}  // namespace og
