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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace og {

using TokenId = std::uint32_t;

inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr std::string_view kUnkSurface = "<unk>";
inline constexpr std::string_view kBosSurface = "<bos>";
inline constexpr std::string_view kEosSurface = "<eos>";

using TokenSequence = std::vector<TokenId>;

struct Token {
  TokenId id = kUnkId;
  std::string surface;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenizerConfig {
  bool lowercase = true;
  // ASCII punctuation becomes its own token ("fishing." -> "fishing", ".").
  bool split_punctuation = true;
};

/// Whitespace + punctuation-isolating word tokenizer. Only ASCII letters are
/// case-folded; bytes >= 0x80 are treated as word characters, so UTF-8 text
/// passes through intact.
std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config = {});

/// Joins surfaces with single spaces. tokenize(detokenize(tokenize(t))) ==
/// tokenize(t) for any t.
std::string detokenize(std::span<const std::string> surfaces);

class Vocab {
 public:
  /// A vocab containing only the reserved tokens.
  Vocab();

  /// Builds from documents already split into surfaces. Throws kEmptyCorpus
  /// when there are no tokens at all, kInvalidArgument if min_count < 1.
  static Vocab build(std::span<const std::vector<std::string>> documents,
                     std::uint64_t min_count = 1);

  /// Rebuilds a vocab from its id-ordered surface list (reserved first).
  static Vocab from_surfaces(std::span<const std::string> surfaces,
                             std::span<const std::uint64_t> counts = {});

  std::size_t size() const { return surfaces_.size(); }
  /// <unk> for surfaces not retained.
  TokenId id(std::string_view surface) const;
  bool contains(std::string_view surface) const;
  const std::string& surface(TokenId id) const;
  std::uint64_t count(TokenId id) const { return counts_.at(id); }
  const std::vector<std::string>& surfaces() const { return surfaces_; }

  TokenSequence encode(std::span<const std::string> surfaces) const;
  std::vector<Token> tokens(std::span<const std::string> surfaces) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.surfaces_ == b.surfaces_;
  }

 private:
  TokenId add(std::string surface, std::uint64_t count);

  std::vector<std::string> surfaces_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

/// tokenize() then map to ids through `vocab`.
std::vector<Token> tokenize(std::string_view text, const Vocab& vocab,
                            const TokenizerConfig& config = {});

enum class CorpusFormat { kPlain, kRocStories, kAasc };

CorpusFormat parse_corpus_format(std::string_view tag);
std::string_view to_string(CorpusFormat format);

/// Documents as raw text, one string per document, before tokenization.
struct RawCorpus {
  std::vector<std::string> documents;
  CorpusFormat format = CorpusFormat::kPlain;
  std::filesystem::path provenance;
};

/// plain: one document per non-blank line.
/// rocstories: CSV storyid,title,sent1..sent5 with a header row; the five
///   sentences are joined with spaces into one document.
/// aasc: TSV section<TAB>sentence; the section label is dropped.
/// CRLF and lone CR line endings are normalized to LF.
RawCorpus load_raw_corpus(const std::filesystem::path& path,
                          CorpusFormat format);

class Corpus {
 public:
  Corpus() = default;
  /// Throws kEmptyCorpus if any document is empty, kInvalidArgument if an id
  /// is out of range for `vocab`.
  Corpus(std::vector<TokenSequence> documents,
         std::shared_ptr<const Vocab> vocab,
         CorpusFormat format = CorpusFormat::kPlain,
         std::filesystem::path provenance = {});

  /// Tokenizes every raw document; documents that tokenize to nothing are
  /// dropped.
  static Corpus encode(const RawCorpus& raw, std::shared_ptr<const Vocab> vocab,
                       const TokenizerConfig& config = {});

  std::size_t size() const { return documents_.size(); }
  bool empty() const { return documents_.empty(); }
  const std::vector<TokenSequence>& documents() const { return documents_; }
  const TokenSequence& operator[](std::size_t i) const { return documents_[i]; }
  const Vocab& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocab>& shared_vocab() const { return vocab_; }
  CorpusFormat format() const { return format_; }
  const std::filesystem::path& provenance() const { return provenance_; }
  std::size_t token_count() const;
  /// FNV-1a over the document token ids; stable across runs.
  std::uint64_t content_hash() const;

  Corpus subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<TokenSequence> documents_;
  std::shared_ptr<const Vocab> vocab_;
  CorpusFormat format_ = CorpusFormat::kPlain;
  std::filesystem::path provenance_;
};

/// Tokenizes `raw`, builds a vocab from all of it, and encodes it.
Corpus build_corpus(const RawCorpus& raw, std::uint64_t min_count = 1,
                    const TokenizerConfig& config = {});

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::uint64_t min_count = 1,
                   const TokenizerConfig& config = {});

struct SplitSpec {
  double train = 0.98;
  double eval = 0.01;
  double test = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train, eval, test;
};

/// Seeded shuffle of document indices. eval/test sizes are round(n * ratio)
/// (at least 1 each), train gets the rest. Indices inside each part are
/// returned in ascending corpus order.
SplitIndices split_indices(std::size_t corpus_size, const SplitSpec& spec);

struct CorpusSplit {
  Corpus train, eval, test;
};

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec);

}  // namespace og
