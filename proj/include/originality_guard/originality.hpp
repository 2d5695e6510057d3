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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "originality_guard/corpus.hpp"

namespace og {

/// 128-bit fingerprint of a token-id slice: two independent polynomial
/// hashes modulo the Mersenne prime 2^61 - 1.
struct Fingerprint {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend auto operator<=>(const Fingerprint&, const Fingerprint&) = default;
};

Fingerprint fingerprint(std::span<const TokenId> tokens);

/// Prefix hashes over one sequence so any window's fingerprint is O(1).
/// window(i, n) == fingerprint(tokens.subspan(i, n)).
class RollingFingerprinter {
 public:
  explicit RollingFingerprinter(std::span<const TokenId> tokens);

  Fingerprint window(std::size_t start, std::size_t length) const;
  std::size_t size() const { return prefix_hi_.size() - 1; }

 private:
  std::vector<std::uint64_t> prefix_hi_, prefix_lo_;
  std::vector<std::uint64_t> pow_hi_, pow_lo_;
};

enum class ExactStorePolicy { kAuto, kOn, kOff };

struct OriginalSetOptions {
  std::size_t max_length = 7;
  ExactStorePolicy exact_store = ExactStorePolicy::kAuto;
  // Documents are hashed in this many shards; the merged index is identical
  // for every thread count.
  unsigned threads = 1;
};

/// kAuto keeps the exact store when the index holds fewer distinct n-grams
/// than this.
inline constexpr std::size_t kExactStoreAutoLimit = 1'000'000;

/// The originality index: every distinct n-gram (2 <= n <= max_length) of
/// the training documents. N-grams never span two documents.
class OriginalSet {
 public:
  static OriginalSet build(const Corpus& train, const OriginalSetOptions& options = {});
  static OriginalSet build(std::span<const TokenSequence> documents,
                           const OriginalSetOptions& options = {},
                           std::uint64_t source_id = 0);

  std::size_t max_length() const { return max_length_; }
  bool has_exact_store() const { return !exact_.empty(); }
  std::uint64_t source_id() const { return source_id_; }

  /// Distinct n-grams stored for one length.
  std::size_t size(std::size_t length) const;
  std::size_t total_size() const;

  bool contains(std::span<const TokenId> ngram) const;
  /// Membership for a slice whose fingerprint the caller already has.
  bool contains(std::span<const TokenId> ngram, const Fingerprint& fp) const;

  /// Binary layout (little-endian): "GOT1", u32 version, u32 max_length,
  /// u32 flags (bit 0: exact store present), u64 source id; then for each
  /// length 2..max_length a u64 count followed by sorted (u64 hi, u64 lo)
  /// pairs; then, if flagged, for each length a u64 count followed by that
  /// many sorted n-grams of `length` u32 ids.
  void write(std::ostream& out) const;
  static OriginalSet read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static OriginalSet load(const std::filesystem::path& path);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  std::size_t max_length_ = 0;
  std::uint64_t source_id_ = 0;
  // Index L - 2 holds length-L data.
  std::vector<std::vector<Fingerprint>> fingerprints_;
  std::vector<std::unordered_set<std::string>> exact_;
};

struct FragmentMatch {
  std::size_t document = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  TokenSequence tokens;

  friend bool operator==(const FragmentMatch&, const FragmentMatch&) = default;
};

/// Every window (length 2..min(|sentence|, max_length), every start) whose
/// slice is in the index, ordered by length then start. Overlapping matches
/// are all reported.
std::vector<FragmentMatch> detect_fragments(std::span<const TokenId> sentence,
                                            const OriginalSet& index,
                                            std::size_t document = 0);

struct SimilarityPoint {
  std::size_t length = 0;
  std::uint64_t matched = 0;
  std::uint64_t total = 0;
  double rate = 0.0;
};

/// Pooled-window similarity: for each length, matched windows over all
/// generated documents divided by the total number of windows of that length.
struct SimilarityCurve {
  std::size_t max_length = 0;
  std::vector<SimilarityPoint> points;  // lengths 2..max_length in order

  const SimilarityPoint& at(std::size_t length) const;
  double rate(std::size_t length) const { return at(length).rate; }
};

SimilarityCurve similarity_curve(std::span<const TokenSequence> generated,
                                 const OriginalSet& index, unsigned threads = 1);
SimilarityCurve similarity_curve(const Corpus& generated, const OriginalSet& index,
                                 unsigned threads = 1);

}  // namespace og
