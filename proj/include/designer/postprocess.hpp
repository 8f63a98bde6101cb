#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "designer/error.hpp"
#include "designer/hash.hpp"
#include "designer/logic.hpp"
#include "designer/text.hpp"

namespace designer {

// ---------------------------------------------------------------------------
// MinHash

struct MinHashParams {
  std::size_t permutations = 128;
  std::size_t shingle_n = 5;
  std::size_t bands = 16;
  std::size_t rows = 8;
  double threshold = 0.8;
  std::uint64_t seed = 0;

  void validate() const {
    if (permutations < 1) throw Error(ErrorCode::invalid_argument, "permutation count must be >= 1");
    if (shingle_n < 1) throw Error(ErrorCode::invalid_argument, "shingle size must be >= 1");
    if (bands * rows != permutations) throw Error(ErrorCode::invalid_argument, "bands * rows must equal permutations");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::invalid_argument, "threshold outside [0, 1]");
  }
};

using ShingleSet = std::vector<std::uint64_t>;  // sorted, unique

inline std::uint64_t hash_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::uint64_t h = fnv1a64("");
  for (std::size_t i = begin; i < end; ++i) {
    h = fnv1a64(tokens[i], h);
    h = fnv1a64("\x1f", h);
  }
  return mix64(h);
}

/// Hashed word n-grams of the normalized text. Fewer than n tokens yields
/// one shingle of all tokens; no tokens yields the empty set.
inline ShingleSet shingles(std::string_view text_in, std::size_t n, const text::NormalizeOptions& norm = {}) {
  const auto tokens = text::normalize_tokens(text_in, norm);
  ShingleSet out;
  if (tokens.empty()) return out;
  if (tokens.size() < n) {
    out.push_back(hash_tokens(tokens, 0, tokens.size()));
    return out;
  }
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) out.push_back(hash_tokens(tokens, i, i + n));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline double exact_jaccard(const ShingleSet& a, const ShingleSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

using MinHashSignature = std::vector<std::uint64_t>;

inline MinHashSignature minhash_of_shingles(const ShingleSet& set, std::size_t p, std::uint64_t seed) {
  MinHashSignature sig(p, std::numeric_limits<std::uint64_t>::max());
  for (std::size_t i = 0; i < p; ++i) {
    const std::uint64_t salt = mix64(seed * 0x9e3779b97f4a7c15ULL + i + 1);
    for (auto s : set) sig[i] = std::min(sig[i], mix64(s ^ salt));
  }
  return sig;
}

inline MinHashSignature minhash_signature(std::string_view text_in, std::size_t p = 128, std::size_t shingle_n = 5,
                                          std::uint64_t seed = 0) {
  if (p < 1) throw Error(ErrorCode::invalid_argument, "permutation count must be >= 1");
  return minhash_of_shingles(shingles(text_in, shingle_n), p, seed);
}

inline double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorCode::invalid_argument, "signature lengths differ");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

struct NearDuplicateResult {
  /// Groups of input indices (ascending), each of size >= 2, ordered by first member.
  std::vector<std::vector<std::size_t>> groups;
  /// Every index except the first of its group, ascending.
  std::vector<std::size_t> dropped;
  std::size_t candidate_pairs = 0;
  std::size_t verified_pairs = 0;
};

/// LSH banding proposes candidate pairs; each is confirmed with exact
/// Jaccard >= threshold; confirmed pairs are merged into connected groups
/// whose earliest member (input order) survives.
inline NearDuplicateResult near_duplicates(const std::vector<std::string>& texts, const MinHashParams& params = {}) {
  params.validate();
  const auto n = texts.size();
  std::vector<ShingleSet> sets(n);
  std::vector<MinHashSignature> sigs(n);
  for (std::size_t i = 0; i < n; ++i) {
    sets[i] = shingles(texts[i], params.shingle_n);
    sigs[i] = minhash_of_shingles(sets[i], params.permutations, params.seed);
  }
  std::unordered_set<std::uint64_t> seen_pairs;
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t b = 0; b < params.bands; ++b) {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t h = mix64(b + 1);
      for (std::size_t r = 0; r < params.rows; ++r) h = mix64(h ^ sigs[i][b * params.rows + r]);
      buckets[h].push_back(i);
    }
    for (const auto& [_, members] : buckets) {
      for (std::size_t x = 0; x < members.size(); ++x) {
        for (std::size_t y = x + 1; y < members.size(); ++y) {
          const auto key = static_cast<std::uint64_t>(members[x]) * n + members[y];
          if (seen_pairs.insert(key).second) candidates.emplace_back(members[x], members[y]);
        }
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  NearDuplicateResult out;
  out.candidate_pairs = candidates.size();
  UnionFind uf(n);
  for (const auto& [i, j] : candidates) {
    if (exact_jaccard(sets[i], sets[j]) >= params.threshold) {
      ++out.verified_pairs;
      uf.unite(i, j);
    }
  }
  for (auto& g : groups_of(uf, n)) {
    if (g.size() < 2) continue;
    out.dropped.insert(out.dropped.end(), g.begin() + 1, g.end());
    out.groups.push_back(std::move(g));
  }
  std::sort(out.dropped.begin(), out.dropped.end());
  return out;
}

// ---------------------------------------------------------------------------
// N-gram decontamination

struct BenchmarkItem {
  std::string benchmark;
  std::string text;
};

/// Hashed n-token windows of normalized benchmark text, each mapped to the
/// benchmarks it came from.
class NGramIndex {
 public:
  explicit NGramIndex(std::size_t n = 13, text::NormalizeOptions norm = {}) : n_(n), norm_(norm) {
    if (n_ < 1) throw Error(ErrorCode::invalid_argument, "n must be >= 1");
  }

  void add(const BenchmarkItem& item) {
    const auto tokens = text::normalize_tokens(item.text, norm_);
    if (tokens.size() < n_) return;
    const auto b = benchmark_slot(item.benchmark);
    for (std::size_t i = 0; i + n_ <= tokens.size(); ++i) {
      auto& owners = grams_[hash_tokens(tokens, i, i + n_)];
      if (std::find(owners.begin(), owners.end(), b) == owners.end()) owners.push_back(b);
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return grams_.size(); }
  const text::NormalizeOptions& normalization() const noexcept { return norm_; }
  const std::vector<std::string>& benchmarks() const noexcept { return names_; }

  /// Indices (into benchmarks()) of every benchmark sharing a window with text.
  std::vector<std::uint32_t> matches(std::string_view text_in) const {
    std::vector<std::uint32_t> hit;
    const auto tokens = text::normalize_tokens(text_in, norm_);
    if (tokens.size() < n_) return hit;
    for (std::size_t i = 0; i + n_ <= tokens.size(); ++i) {
      const auto it = grams_.find(hash_tokens(tokens, i, i + n_));
      if (it == grams_.end()) continue;
      for (auto b : it->second) {
        if (std::find(hit.begin(), hit.end(), b) == hit.end()) hit.push_back(b);
      }
    }
    std::sort(hit.begin(), hit.end());
    return hit;
  }

 private:
  std::uint32_t benchmark_slot(const std::string& name) {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it != names_.end()) return static_cast<std::uint32_t>(it - names_.begin());
    names_.push_back(name);
    return static_cast<std::uint32_t>(names_.size() - 1);
  }

  std::size_t n_;
  text::NormalizeOptions norm_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> grams_;
  std::vector<std::string> names_;
};

inline NGramIndex build_ngram_index(const std::vector<BenchmarkItem>& items, std::size_t n = 13,
                                    text::NormalizeOptions norm = {}) {
  NGramIndex idx(n, norm);
  for (const auto& item : items) idx.add(item);
  return idx;
}

struct DecontaminationResult {
  std::vector<bool> contaminated;  // per input text
  std::map<std::string, std::size_t> hits_per_benchmark;
  std::size_t flagged = 0;
};

inline DecontaminationResult decontaminate(const std::vector<std::string>& texts, const NGramIndex& index) {
  DecontaminationResult r;
  r.contaminated.assign(texts.size(), false);
  for (const auto& b : index.benchmarks()) r.hits_per_benchmark[b] = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto hit = index.matches(texts[i]);
    if (hit.empty()) continue;
    r.contaminated[i] = true;
    ++r.flagged;
    for (auto b : hit) ++r.hits_per_benchmark[index.benchmarks()[b]];
  }
  return r;
}

}  // namespace designer
