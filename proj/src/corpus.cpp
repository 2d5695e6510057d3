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

#include "originality_guard/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "originality_guard/error.hpp"
#include "originality_guard/rng.hpp"

namespace og {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c) != 0;
}

std::string read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw Error(ErrorCode::kPathNotFound, "path not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string normalize_newlines(std::string text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return is_space(static_cast<unsigned char>(c)); });
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  throw Error(ErrorCode::kMalformedRecord,
              path.string() + ":" + std::to_string(line) + ": " + what);
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line the record starts on
};

// RFC 4180: quoted fields may contain commas, doubled quotes and newlines.
std::vector<CsvRecord> parse_csv(const std::string& text,
                                 const std::filesystem::path& path) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  std::size_t line = 1;
  current.line = 1;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool any_content = false;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (any_content) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
    any_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          malformed(path, line, "unexpected quote inside unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        any_content = true;
        break;
      case ',':
        any_content = true;
        end_field();
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        if (field_was_quoted) malformed(path, line, "text after closing quote");
        if (!is_space(static_cast<unsigned char>(c))) any_content = true;
        field.push_back(c);
    }
  }
  if (in_quotes) malformed(path, current.line, "unterminated quoted field");
  end_record();
  return records;
}

RawCorpus load_plain(const std::string& text) {
  RawCorpus raw;
  for (auto& line : split_lines(text)) {
    if (!blank(line)) raw.documents.push_back(std::move(line));
  }
  return raw;
}

RawCorpus load_rocstories(const std::string& text,
                          const std::filesystem::path& path) {
  constexpr std::size_t kColumns = 7;  // storyid,title,sent1..sent5
  auto records = parse_csv(text, path);
  if (records.empty()) malformed(path, 1, "missing header row");
  const auto& header = records.front();
  if (header.fields.size() != kColumns || trim(header.fields[0]) != "storyid") {
    malformed(path, header.line,
              "expected header storyid,title,sentence1..sentence5");
  }
  RawCorpus raw;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != kColumns) {
      malformed(path, rec.line,
                "expected 7 columns, found " + std::to_string(rec.fields.size()));
    }
    std::string story;
    for (std::size_t s = 2; s < kColumns; ++s) {
      std::string sentence = trim(rec.fields[s]);
      if (sentence.empty()) {
        malformed(path, rec.line, "empty sentence" + std::to_string(s - 1));
      }
      if (!story.empty()) story.push_back(' ');
      story += sentence;
    }
    raw.documents.push_back(std::move(story));
  }
  return raw;
}

RawCorpus load_aasc(const std::string& text, const std::filesystem::path& path) {
  RawCorpus raw;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) malformed(path, i + 1, "missing TAB separator");
    std::string sentence = trim(std::string_view(line).substr(tab + 1));
    if (sentence.empty()) malformed(path, i + 1, "empty sentence");
    raw.documents.push_back(std::move(sentence));
  }
  return raw;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text,
                                  const TokenizerConfig& config) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (config.split_punctuation && is_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word.push_back(config.lowercase && c < 0x80
                         ? static_cast<char>(std::tolower(c))
                         : ch);
    }
  }
  flush();
  return out;
}

std::string detokenize(std::span<const std::string> surfaces) {
  std::string out;
  for (const auto& s : surfaces) {
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

Vocab::Vocab() {
  add(std::string(kUnkSurface), 0);
  add(std::string(kBosSurface), 0);
  add(std::string(kEosSurface), 0);
}

TokenId Vocab::add(std::string surface, std::uint64_t count) {
  const auto id = static_cast<TokenId>(surfaces_.size());
  index_.emplace(surface, id);
  surfaces_.push_back(std::move(surface));
  counts_.push_back(count);
  return id;
}

Vocab Vocab::build(std::span<const std::vector<std::string>> documents,
                   std::uint64_t min_count) {
  if (min_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_count must be >= 1");
  }
  // First-occurrence order keeps ids stable for a given corpus.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& doc : documents) {
    for (const auto& surface : doc) {
      auto [it, inserted] = counts.try_emplace(surface, 0);
      if (inserted) order.push_back(surface);
      ++it->second;
      ++total;
    }
  }
  if (total == 0) throw Error(ErrorCode::kEmptyCorpus, "empty corpus");

  Vocab vocab;
  for (auto& surface : order) {
    const auto c = counts[surface];
    if (vocab.contains(surface)) {
      // A literal "<unk>" etc. in the text; fold into the reserved entry.
      vocab.counts_[vocab.id(surface)] += c;
    } else if (c >= min_count) {
      vocab.add(std::move(surface), c);
    } else {
      vocab.counts_[kUnkId] += c;
    }
  }
  return vocab;
}

Vocab Vocab::from_surfaces(std::span<const std::string> surfaces,
                           std::span<const std::uint64_t> counts) {
  if (surfaces.size() < 3 || surfaces[kUnkId] != kUnkSurface ||
      surfaces[kBosId] != kBosSurface || surfaces[kEosId] != kEosSurface) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocab surface list must start with <unk>, <bos>, <eos>");
  }
  if (!counts.empty() && counts.size() != surfaces.size()) {
    throw Error(ErrorCode::kInvalidArgument, "vocab counts size mismatch");
  }
  Vocab vocab;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!counts.empty()) vocab.counts_[i] = counts[i];
  }
  for (std::size_t i = 3; i < surfaces.size(); ++i) {
    if (surfaces[i].empty() || vocab.contains(surfaces[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "vocab surfaces must be unique and non-empty");
    }
    vocab.add(surfaces[i], counts.empty() ? 0 : counts[i]);
  }
  return vocab;
}

TokenId Vocab::id(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view surface) const {
  return index_.count(std::string(surface)) != 0;
}

const std::string& Vocab::surface(TokenId id) const { return surfaces_.at(id); }

TokenSequence Vocab::encode(std::span<const std::string> surfaces) const {
  TokenSequence ids;
  ids.reserve(surfaces.size());
  for (const auto& s : surfaces) ids.push_back(id(s));
  return ids;
}

std::vector<Token> Vocab::tokens(std::span<const std::string> surfaces) const {
  std::vector<Token> out;
  out.reserve(surfaces.size());
  for (const auto& s : surfaces) {
    const TokenId i = id(s);
    out.push_back(Token{i, i == kUnkId ? std::string(kUnkSurface) : s});
  }
  return out;
}

std::vector<std::string> Vocab::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId i : ids) out.push_back(surface(i));
  return out;
}

std::vector<Token> tokenize(std::string_view text, const Vocab& vocab,
                            const TokenizerConfig& config) {
  return vocab.tokens(tokenize(text, config));
}

CorpusFormat parse_corpus_format(std::string_view tag) {
  if (tag == "plain") return CorpusFormat::kPlain;
  if (tag == "rocstories") return CorpusFormat::kRocStories;
  if (tag == "aasc") return CorpusFormat::kAasc;
  throw Error(ErrorCode::kUnknownFormat,
              "unknown corpus format '" + std::string(tag) +
                  "' (expected plain|rocstories|aasc)");
}

std::string_view to_string(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kPlain: return "plain";
    case CorpusFormat::kRocStories: return "rocstories";
    case CorpusFormat::kAasc: return "aasc";
  }
  return "plain";
}

RawCorpus load_raw_corpus(const std::filesystem::path& path,
                          CorpusFormat format) {
  const std::string text = normalize_newlines(read_file(path));
  RawCorpus raw;
  switch (format) {
    case CorpusFormat::kPlain: raw = load_plain(text); break;
    case CorpusFormat::kRocStories: raw = load_rocstories(text, path); break;
    case CorpusFormat::kAasc: raw = load_aasc(text, path); break;
  }
  raw.format = format;
  raw.provenance = path;
  return raw;
}

Corpus::Corpus(std::vector<TokenSequence> documents,
               std::shared_ptr<const Vocab> vocab, CorpusFormat format,
               std::filesystem::path provenance)
    : documents_(std::move(documents)),
      vocab_(std::move(vocab)),
      format_(format),
      provenance_(std::move(provenance)) {
  if (!vocab_) throw Error(ErrorCode::kInvalidArgument, "corpus without vocab");
  for (const auto& doc : documents_) {
    if (doc.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty document");
    for (TokenId id : doc) {
      if (id >= vocab_->size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "token id " + std::to_string(id) + " outside vocab");
      }
    }
  }
}

Corpus Corpus::encode(const RawCorpus& raw, std::shared_ptr<const Vocab> vocab,
                      const TokenizerConfig& config) {
  std::vector<TokenSequence> docs;
  docs.reserve(raw.documents.size());
  for (const auto& text : raw.documents) {
    auto ids = vocab->encode(tokenize(text, config));
    if (!ids.empty()) docs.push_back(std::move(ids));
  }
  return Corpus(std::move(docs), std::move(vocab), raw.format, raw.provenance);
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& d : documents_) n += d.size();
  return n;
}

std::uint64_t Corpus::content_hash() const {
  ContentHash h;
  for (const auto& doc : documents_) {
    h.update_value(static_cast<std::uint64_t>(doc.size()));
    h.update(doc.data(), doc.size() * sizeof(TokenId));
  }
  return h.digest();
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  std::vector<TokenSequence> docs;
  docs.reserve(indices.size());
  for (std::size_t i : indices) docs.push_back(documents_.at(i));
  return Corpus(std::move(docs), vocab_, format_, provenance_);
}

Corpus build_corpus(const RawCorpus& raw, std::uint64_t min_count,
                    const TokenizerConfig& config) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(raw.documents.size());
  for (const auto& text : raw.documents) tokenized.push_back(tokenize(text, config));
  auto vocab = std::make_shared<const Vocab>(Vocab::build(tokenized, min_count));
  std::vector<TokenSequence> docs;
  for (const auto& surfaces : tokenized) {
    if (!surfaces.empty()) docs.push_back(vocab->encode(surfaces));
  }
  return Corpus(std::move(docs), std::move(vocab), raw.format, raw.provenance);
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::uint64_t min_count, const TokenizerConfig& config) {
  return build_corpus(load_raw_corpus(path, format), min_count, config);
}

void SplitSpec::validate() const {
  for (double r : {train, eval, test}) {
    if (!(r > 0.0 && r < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "split ratios must each lie in (0, 1)");
    }
  }
  if (std::abs(train + eval + test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must sum to 1");
  }
}

SplitIndices split_indices(std::size_t corpus_size, const SplitSpec& spec) {
  spec.validate();
  if (corpus_size < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "split needs at least 3 documents, got " +
                    std::to_string(corpus_size));
  }
  const auto n = static_cast<double>(corpus_size);
  auto part = [&](double ratio) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * ratio)));
  };
  const std::size_t n_eval = part(spec.eval);
  const std::size_t n_test = part(spec.test);
  if (n_eval + n_test >= corpus_size) {
    throw Error(ErrorCode::kInvalidArgument, "split leaves no training documents");
  }

  std::vector<std::size_t> order(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) order[i] = i;
  Rng rng(spec.seed);
  shuffle_in_place(std::span<std::size_t>(order), rng);

  SplitIndices out;
  out.eval.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_eval),
                  order.begin() + static_cast<std::ptrdiff_t>(n_eval + n_test));
  out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_eval + n_test),
                   order.end());
  for (auto* v : {&out.train, &out.eval, &out.test}) std::sort(v->begin(), v->end());
  return out;
}

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec) {
  const auto idx = split_indices(corpus.size(), spec);
  return CorpusSplit{corpus.subset(idx.train), corpus.subset(idx.eval),
                     corpus.subset(idx.test)};
}

}  // namespace og
