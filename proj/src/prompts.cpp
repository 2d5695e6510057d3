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

#include "originality_guard/prompts.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "originality_guard/error.hpp"

namespace og {
namespace {

PlagiarismKind parse_kind(std::string_view s) {
  if (s == "verbatim") return PlagiarismKind::kVerbatim;
  if (s == "paraphrase") return PlagiarismKind::kParaphrase;
  if (s == "idea") return PlagiarismKind::kIdea;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown plagiarism kind '" + std::string(s) + "' (verbatim|paraphrase|idea)");
}

TemplateStyle parse_style(std::string_view s) {
  if (s == "detail" || s == "detail-definition") return TemplateStyle::kDetailDefinition;
  if (s == "name" || s == "name-only") return TemplateStyle::kNameOnly;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown template style '" + std::string(s) + "' (detail|name)");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(PlagiarismKind kind) {
  switch (kind) {
    case PlagiarismKind::kVerbatim: return "verbatim";
    case PlagiarismKind::kParaphrase: return "paraphrase";
    case PlagiarismKind::kIdea: return "idea";
  }
  return "verbatim";
}

std::string_view to_string(TemplateStyle style) {
  return style == TemplateStyle::kNameOnly ? "name" : "detail";
}

std::string PromptTemplate::id() const {
  return std::string(to_string(kind)) + ":" + std::string(to_string(style));
}

TemplateRegistry::TemplateRegistry(std::vector<PromptTemplate> templates)
    : templates_(std::move(templates)) {
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    if (templates_[i].text.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "template " + templates_[i].id() + " has no text");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (templates_[j].kind == templates_[i].kind &&
          templates_[j].style == templates_[i].style) {
        throw Error(ErrorCode::kInvalidConfig, "duplicate template " + templates_[i].id());
      }
    }
  }
}

const PromptTemplate& TemplateRegistry::lookup(PlagiarismKind kind, TemplateStyle style) const {
  for (const auto& t : templates_) {
    if (t.kind == kind && t.style == style) return t;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "no template " + std::string(to_string(kind)) + ":" +
                  std::string(to_string(style)));
}

const PromptTemplate& TemplateRegistry::lookup(std::string_view id) const {
  id = trim(id);
  const auto colon = id.find(':');
  const auto kind = parse_kind(trim(id.substr(0, colon)));
  const auto style = colon == std::string_view::npos
                         ? TemplateStyle::kDetailDefinition
                         : parse_style(trim(id.substr(colon + 1)));
  return lookup(kind, style);
}

std::vector<PromptTemplate> TemplateRegistry::select(std::string_view ids) const {
  std::vector<PromptTemplate> out;
  while (!ids.empty()) {
    const auto comma = ids.find(',');
    const auto item = trim(ids.substr(0, comma));
    if (!item.empty()) out.push_back(lookup(item));
    if (comma == std::string_view::npos) break;
    ids.remove_prefix(comma + 1);
  }
  return out;
}

std::string TemplateRegistry::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& t : templates_) {
    arr.push_back({{"kind", to_string(t.kind)},
                   {"style", to_string(t.style)},
                   {"text", t.text},
                   {"synthesized", t.synthesized}});
  }
  return arr.dump(2);
}

TemplateRegistry TemplateRegistry::from_json(std::string_view json) {
  try {
    const auto arr = nlohmann::json::parse(json);
    if (!arr.is_array()) throw Error(ErrorCode::kInvalidConfig, "templates must be a JSON array");
    std::vector<PromptTemplate> templates;
    for (const auto& item : arr) {
      PromptTemplate t;
      t.kind = parse_kind(item.at("kind").get<std::string>());
      t.style = parse_style(item.at("style").get<std::string>());
      t.text = item.at("text").get<std::string>();
      t.synthesized = item.value("synthesized", true);
      templates.push_back(std::move(t));
    }
    return TemplateRegistry(std::move(templates));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad template file: ") + e.what());
  }
}

void TemplateRegistry::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json() << '\n';
}

TemplateRegistry TemplateRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kPathNotFound, "path not found: " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return from_json(s.str());
}

const TemplateRegistry& builtin_templates() {
  using K = PlagiarismKind;
  using S = TemplateStyle;
  static const TemplateRegistry registry({
      {K::kVerbatim, S::kNameOnly,
       "The following text contains verbatim plagiarism:", true},
      {K::kVerbatim, S::kDetailDefinition,
       "The following text contains exact copies of words or phrases without "
       "transformation of language:",
       false},
      {K::kParaphrase, S::kNameOnly,
       "The following text contains paraphrase plagiarism:", true},
      {K::kParaphrase, S::kDetailDefinition,
       "The following text contains passages restated from their source with "
       "synonyms swapped in, words rearranged, or meaning carried through a "
       "round-trip translation:",
       true},
      {K::kIdea, S::kNameOnly,
       "The following text contains idea plagiarism:", true},
      {K::kIdea, S::kDetailDefinition,
       "The following text contains borrowed core ideas, condensed or "
       "summarized from the source content:",
       true},
  });
  return registry;
}

LmContext sp(const LmContext& ctx, const PromptTemplate& prompt, bool prompt_capable) {
  LmContext out = ctx;
  if (prompt_capable) {
    out.conditioning = ctx.conditioning.empty() ? prompt.text
                                                : prompt.text + "\n" + ctx.conditioning;
    return out;
  }
  if (prompt.kind != PlagiarismKind::kVerbatim) {
    throw Error(ErrorCode::kCapability,
                "template requires prompt-capable backend: " + prompt.id() +
                    " (built-in count models realize verbatim only; paraphrase and "
                    "idea need --remote)");
  }
  out.amateur_route = true;
  return out;
}

LmContext sp(const LmContext& ctx, const PromptTemplate& prompt, const LanguageModel& model) {
  return sp(ctx, prompt, model.prompt_capable());
}

void ConditioningPlan::validate(bool contrastive_enabled) const {
  if (contrastive_enabled && amateur_templates.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "contrastive decoding needs at least one amateur template");
  }
}

}  // namespace og
