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

#include "originality_guard/originality.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

#include "originality_guard/error.hpp"

namespace og {
namespace {

constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;
constexpr std::uint64_t kBaseHi = 0x1F3D5B79A2C4E68Bull % kMersenne61;
constexpr std::uint64_t kBaseLo = 0x0CA7F00DDEADBEEFull % kMersenne61;

constexpr std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  std::uint64_t r = static_cast<std::uint64_t>(p & kMersenne61) +
                    static_cast<std::uint64_t>(p >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

constexpr std::uint64_t add_mod(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

constexpr std::uint64_t sub_mod(std::uint64_t a, std::uint64_t b) {
  return a >= b ? a - b : a + kMersenne61 - b;
}

// Symbols are offset by one so id 0 still contributes to the hash.
constexpr std::uint64_t symbol(TokenId id) { return std::uint64_t{id} + 1; }

std::string exact_key(std::span<const TokenId> ngram) {
  std::string key(ngram.size() * sizeof(TokenId), '\0');
  std::memcpy(key.data(), ngram.data(), key.size());
  return key;
}

struct ShardResult {
  std::vector<std::vector<Fingerprint>> fingerprints;
};

void hash_shard(std::span<const TokenSequence> docs, std::size_t max_length,
                ShardResult& out) {
  out.fingerprints.assign(max_length - 1, {});
  for (const auto& doc : docs) {
    RollingFingerprinter fp(doc);
    const std::size_t top = std::min(max_length, doc.size());
    for (std::size_t len = 2; len <= top; ++len) {
      auto& bucket = out.fingerprints[len - 2];
      for (std::size_t i = 0; i + len <= doc.size(); ++i) {
        bucket.push_back(fp.window(i, len));
      }
    }
  }
  for (auto& bucket : out.fingerprints) {
    std::sort(bucket.begin(), bucket.end());
    bucket.erase(std::unique(bucket.begin(), bucket.end()), bucket.end());
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(ErrorCode::kBadIndexFile, "truncated originality index");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

Fingerprint fingerprint(std::span<const TokenId> tokens) {
  Fingerprint f;
  for (TokenId id : tokens) {
    f.hi = add_mod(mul_mod(f.hi, kBaseHi), symbol(id));
    f.lo = add_mod(mul_mod(f.lo, kBaseLo), symbol(id));
  }
  return f;
}

RollingFingerprinter::RollingFingerprinter(std::span<const TokenId> tokens)
    : prefix_hi_(tokens.size() + 1, 0),
      prefix_lo_(tokens.size() + 1, 0),
      pow_hi_(tokens.size() + 1, 1),
      pow_lo_(tokens.size() + 1, 1) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    prefix_hi_[i + 1] = add_mod(mul_mod(prefix_hi_[i], kBaseHi), symbol(tokens[i]));
    prefix_lo_[i + 1] = add_mod(mul_mod(prefix_lo_[i], kBaseLo), symbol(tokens[i]));
    pow_hi_[i + 1] = mul_mod(pow_hi_[i], kBaseHi);
    pow_lo_[i + 1] = mul_mod(pow_lo_[i], kBaseLo);
  }
}

Fingerprint RollingFingerprinter::window(std::size_t start, std::size_t length) const {
  const std::size_t end = start + length;
  return Fingerprint{
      sub_mod(prefix_hi_[end], mul_mod(prefix_hi_[start], pow_hi_[length])),
      sub_mod(prefix_lo_[end], mul_mod(prefix_lo_[start], pow_lo_[length]))};
}

OriginalSet OriginalSet::build(const Corpus& train, const OriginalSetOptions& options) {
  return build(train.documents(), options, train.content_hash());
}

OriginalSet OriginalSet::build(std::span<const TokenSequence> documents,
                               const OriginalSetOptions& options,
                               std::uint64_t source_id) {
  if (options.max_length < 2) {
    throw Error(ErrorCode::kInvalidArgument, "Lmax must be >= 2");
  }
  if (documents.empty()) throw Error(ErrorCode::kEmptyCorpus, "empty corpus");

  const std::size_t lmax = options.max_length;
  const unsigned shards = std::max(
      1u, std::min<unsigned>(options.threads, static_cast<unsigned>(documents.size())));
  std::vector<ShardResult> results(shards);
  const std::size_t per_shard = (documents.size() + shards - 1) / shards;
  auto shard_docs = [&](unsigned s) {
    const std::size_t b = std::min(documents.size(), s * per_shard);
    const std::size_t e = std::min(documents.size(), b + per_shard);
    return documents.subspan(b, e - b);
  };
  if (shards == 1) {
    hash_shard(documents, lmax, results[0]);
  } else {
    std::vector<std::thread> workers;
    for (unsigned s = 0; s < shards; ++s) {
      workers.emplace_back([&, s] { hash_shard(shard_docs(s), lmax, results[s]); });
    }
    for (auto& w : workers) w.join();
  }

  OriginalSet set;
  set.max_length_ = lmax;
  set.source_id_ = source_id;
  set.fingerprints_.assign(lmax - 1, {});
  for (std::size_t l = 0; l + 1 < lmax; ++l) {
    auto& merged = set.fingerprints_[l];
    for (auto& r : results) {
      merged.insert(merged.end(), r.fingerprints[l].begin(), r.fingerprints[l].end());
      r.fingerprints[l] = {};
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
  }

  const bool exact = options.exact_store == ExactStorePolicy::kOn ||
                     (options.exact_store == ExactStorePolicy::kAuto &&
                      set.total_size() < kExactStoreAutoLimit);
  if (exact) {
    set.exact_.assign(lmax - 1, {});
    for (const auto& doc : documents) {
      const std::span<const TokenId> view(doc);
      const std::size_t top = std::min(lmax, doc.size());
      for (std::size_t len = 2; len <= top; ++len) {
        for (std::size_t i = 0; i + len <= doc.size(); ++i) {
          set.exact_[len - 2].insert(exact_key(view.subspan(i, len)));
        }
      }
    }
  }
  return set;
}

std::size_t OriginalSet::size(std::size_t length) const {
  if (length < 2 || length > max_length_) return 0;
  return fingerprints_[length - 2].size();
}

std::size_t OriginalSet::total_size() const {
  std::size_t n = 0;
  for (const auto& b : fingerprints_) n += b.size();
  return n;
}

bool OriginalSet::contains(std::span<const TokenId> ngram) const {
  return contains(ngram, fingerprint(ngram));
}

bool OriginalSet::contains(std::span<const TokenId> ngram, const Fingerprint& fp) const {
  const std::size_t len = ngram.size();
  if (len < 2 || len > max_length_) return false;
  const auto& bucket = fingerprints_[len - 2];
  if (!std::binary_search(bucket.begin(), bucket.end(), fp)) return false;
  return exact_.empty() || exact_[len - 2].count(exact_key(ngram)) != 0;
}

void OriginalSet::write(std::ostream& out) const {
  out.write("GOT1", 4);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(max_length_));
  put<std::uint32_t>(out, has_exact_store() ? 1u : 0u);
  put<std::uint64_t>(out, source_id_);
  for (const auto& bucket : fingerprints_) {
    put<std::uint64_t>(out, bucket.size());
    for (const auto& f : bucket) {
      put<std::uint64_t>(out, f.hi);
      put<std::uint64_t>(out, f.lo);
    }
  }
  if (has_exact_store()) {
    for (std::size_t l = 0; l < exact_.size(); ++l) {
      std::vector<std::string> keys(exact_[l].begin(), exact_[l].end());
      std::sort(keys.begin(), keys.end());
      put<std::uint64_t>(out, keys.size());
      for (const auto& key : keys) {
        for (std::size_t i = 0; i < l + 2; ++i) {
          TokenId id = 0;
          std::memcpy(&id, key.data() + i * sizeof(TokenId), sizeof(TokenId));
          put<std::uint32_t>(out, id);
        }
      }
    }
  }
}

OriginalSet OriginalSet::read(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || std::string_view(magic.data(), 4) != "GOT1") {
    throw Error(ErrorCode::kBadIndexFile, "not an originality index (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kBadIndexFile,
                "unsupported originality index version " + std::to_string(version));
  }
  OriginalSet set;
  set.max_length_ = get<std::uint32_t>(in);
  if (set.max_length_ < 2 || set.max_length_ > 4096) {
    throw Error(ErrorCode::kBadIndexFile, "corrupt originality index (Lmax)");
  }
  const auto flags = get<std::uint32_t>(in);
  set.source_id_ = get<std::uint64_t>(in);
  set.fingerprints_.assign(set.max_length_ - 1, {});
  for (auto& bucket : set.fingerprints_) {
    const auto n = get<std::uint64_t>(in);
    bucket.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 24)));
    for (std::uint64_t i = 0; i < n; ++i) {
      Fingerprint f;
      f.hi = get<std::uint64_t>(in);
      f.lo = get<std::uint64_t>(in);
      bucket.push_back(f);
    }
    if (!std::is_sorted(bucket.begin(), bucket.end())) {
      throw Error(ErrorCode::kBadIndexFile, "corrupt originality index (unsorted)");
    }
  }
  if (flags & 1u) {
    set.exact_.assign(set.max_length_ - 1, {});
    for (std::size_t l = 0; l < set.exact_.size(); ++l) {
      const auto n = get<std::uint64_t>(in);
      TokenSequence ngram(l + 2);
      for (std::uint64_t i = 0; i < n; ++i) {
        for (auto& id : ngram) id = get<std::uint32_t>(in);
        set.exact_[l].insert(exact_key(ngram));
      }
    }
  }
  return set;
}

void OriginalSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write(out);
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

OriginalSet OriginalSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      throw Error(ErrorCode::kPathNotFound, "path not found: " + path.string());
    }
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  return read(in);
}

std::vector<FragmentMatch> detect_fragments(std::span<const TokenId> sentence,
                                            const OriginalSet& index,
                                            std::size_t document) {
  std::vector<FragmentMatch> matches;
  if (sentence.size() < 2) return matches;
  const RollingFingerprinter fp(sentence);
  const std::size_t top = std::min(sentence.size(), index.max_length());
  for (std::size_t len = 2; len <= top; ++len) {
    for (std::size_t i = 0; i + len <= sentence.size(); ++i) {
      const auto slice = sentence.subspan(i, len);
      if (index.contains(slice, fp.window(i, len))) {
        matches.push_back(
            FragmentMatch{document, i, len, TokenSequence(slice.begin(), slice.end())});
      }
    }
  }
  return matches;
}

const SimilarityPoint& SimilarityCurve::at(std::size_t length) const {
  if (length < 2 || length > max_length) {
    throw Error(ErrorCode::kInvalidArgument,
                "fragment length " + std::to_string(length) + " outside curve");
  }
  return points[length - 2];
}

SimilarityCurve similarity_curve(std::span<const TokenSequence> generated,
                                 const OriginalSet& index, unsigned threads) {
  if (generated.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "similarity curve of no documents");
  }
  const std::size_t lmax = index.max_length();
  using Counts = std::vector<std::pair<std::uint64_t, std::uint64_t>>;
  auto count_range = [&](std::size_t b, std::size_t e, Counts& counts) {
    counts.assign(lmax - 1, {0, 0});
    for (std::size_t d = b; d < e; ++d) {
      const std::span<const TokenId> doc(generated[d]);
      if (doc.size() < 2) continue;
      const RollingFingerprinter fp(doc);
      const std::size_t top = std::min(lmax, doc.size());
      for (std::size_t len = 2; len <= top; ++len) {
        auto& [matched, total] = counts[len - 2];
        for (std::size_t i = 0; i + len <= doc.size(); ++i) {
          ++total;
          if (index.contains(doc.subspan(i, len), fp.window(i, len))) ++matched;
        }
      }
    }
  };

  const unsigned shards = std::max(
      1u, std::min<unsigned>(threads, static_cast<unsigned>(generated.size())));
  std::vector<Counts> partial(shards);
  const std::size_t per = (generated.size() + shards - 1) / shards;
  if (shards == 1) {
    count_range(0, generated.size(), partial[0]);
  } else {
    std::vector<std::thread> workers;
    for (unsigned s = 0; s < shards; ++s) {
      const std::size_t b = std::min(generated.size(), s * per);
      const std::size_t e = std::min(generated.size(), b + per);
      workers.emplace_back([&, s, b, e] { count_range(b, e, partial[s]); });
    }
    for (auto& w : workers) w.join();
  }

  SimilarityCurve curve;
  curve.max_length = lmax;
  for (std::size_t len = 2; len <= lmax; ++len) {
    SimilarityPoint p;
    p.length = len;
    for (const auto& c : partial) {
      p.matched += c[len - 2].first;
      p.total += c[len - 2].second;
    }
    p.rate = p.total == 0 ? 0.0
                          : static_cast<double>(p.matched) / static_cast<double>(p.total);
    curve.points.push_back(p);
  }
  return curve;
}

SimilarityCurve similarity_curve(const Corpus& generated, const OriginalSet& index,
                                 unsigned threads) {
  return similarity_curve(std::span<const TokenSequence>(generated.documents()), index,
                          threads);
}

}  // namespace og
