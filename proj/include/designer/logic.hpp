#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "designer/error.hpp"
#include "designer/gateway.hpp"
#include "designer/hash.hpp"
#include "designer/mermaid.hpp"
#include "designer/model.hpp"
#include "designer/prompts.hpp"
#include "designer/text.hpp"
#include "designer/util.hpp"

namespace designer {

// ---------------------------------------------------------------------------
// Extraction

/// Bodies of ```mermaid fenced blocks (fence tag case-insensitive), in order.
inline std::vector<std::string> mermaid_blocks(std::string_view completion) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  for (;;) {
    const auto fence = completion.find("```", pos);
    if (fence == std::string_view::npos) break;
    const auto line_end = completion.find('\n', fence);
    if (line_end == std::string_view::npos) break;
    const auto tag = text::to_lower(completion.substr(fence + 3, line_end - fence - 3));
    const auto close = completion.find("```", line_end + 1);
    if (close == std::string_view::npos) break;
    if (tag.find("mermaid") != std::string::npos) {
      auto body = completion.substr(line_end + 1, close - line_end - 1);
      while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
      blocks.emplace_back(body);
    }
    pos = close + 3;
  }
  return blocks;
}

/// The last Mermaid block of a completion, validated.
inline std::string parse_mermaid_output(std::string_view completion, Warnings* warnings = nullptr) {
  const auto blocks = mermaid_blocks(completion);
  if (blocks.empty()) throw Error(ErrorCode::no_mermaid_block, "completion has no mermaid block", std::string(completion));
  if (blocks.size() > 1) warn(warnings, "multiple_mermaid_blocks");
  const auto& body = blocks.back();
  if (auto why = validate_mermaid(body)) {
    throw Error(ErrorCode::invalid_mermaid, "invalid mermaid: " + *why, std::string(completion));
  }
  return body;
}

inline DesignLogic extract_design_logic(Gateway& gw, const QuestionRecord& q, Warnings* warnings = nullptr) {
  if (q.discipline.name.empty()) throw Error(ErrorCode::invalid_argument, "question " + q.id + " has no discipline");
  const auto completion = gw.chat(Role::extractor, prompts::logic_extraction_prompt(q.text));
  DesignLogic l;
  l.mermaid_text = parse_mermaid_output(completion, warnings);
  l.id = content_id("logic-", q.id + "\x1f" + l.mermaid_text);
  l.discipline = q.discipline;
  l.source_question_id = q.id;
  return l;
}

// ---------------------------------------------------------------------------
// Similarity and Algorithm 1

/// Dense symmetric matrix with unit diagonal.
struct SimilarityMatrix {
  std::size_t n = 0;
  std::vector<double> entries;  // row-major n*n

  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t size) : n(size), entries(size * size, 0.0) {
    for (std::size_t i = 0; i < n; ++i) entries[i * n + i] = 1.0;
  }
  double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
  void set(std::size_t i, std::size_t j, double v) { entries[i * n + j] = entries[j * n + i] = v; }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline SimilarityMatrix pairwise_similarity(const std::vector<EmbeddingVector>& vs) {
  const auto n = vs.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (vs[i].values.size() != vs[0].values.size()) throw Error(ErrorCode::dimension_mismatch, "mixed dimensions");
    norms[i] = l2_norm(vs[i].values);
    if (norms[i] == 0.0) throw Error(ErrorCode::zero_vector, "embedding " + std::to_string(i) + " is zero");
  }
  SimilarityMatrix s(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      s.set(i, j, std::clamp(dot(vs[i].values, vs[j].values) / (norms[i] * norms[j]), -1.0, 1.0));
    }
  }
  return s;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // root = smallest member
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Groups of indices from a union-find, each sorted, ordered by smallest member.
inline std::vector<std::vector<std::size_t>> groups_of(UnionFind& uf, std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> slot(n, SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = uf.find(i);
    if (slot[r] == SIZE_MAX) {
      slot[r] = out.size();
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

struct EdgeRule {
  double tau = 0.85;
  /// Use S_ij >= tau instead of the strict S_ij > tau.
  bool inclusive = false;
  bool edge(double s) const { return inclusive ? s >= tau : s > tau; }
};

inline std::vector<std::vector<std::size_t>> connected_components(const SimilarityMatrix& s, EdgeRule rule) {
  UnionFind uf(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = i + 1; j < s.n; ++j) {
      if (rule.edge(s.at(i, j))) uf.unite(i, j);
    }
  }
  return groups_of(uf, s.n);
}

inline std::vector<std::vector<std::size_t>> connected_components(const SimilarityMatrix& s, double tau) {
  return connected_components(s, EdgeRule{tau, false});
}

/// Member with the largest summed similarity to the rest of its component;
/// ties go to the smallest id.
inline std::size_t select_centroid(const std::vector<std::size_t>& component, const SimilarityMatrix& s) {
  if (component.empty()) throw Error(ErrorCode::invalid_argument, "empty component");
  std::size_t best = component.front();
  double best_sum = -std::numeric_limits<double>::infinity();
  for (auto i : component) {
    double sum = 0.0;
    for (auto j : component) {
      if (j != i) sum += s.at(i, j);
    }
    if (sum > best_sum || (sum == best_sum && i < best)) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

struct DedupOutcome {
  std::vector<std::size_t> kept;  // ascending
  std::size_t components = 0;
};

inline DedupOutcome dedup_by_similarity(const SimilarityMatrix& s, EdgeRule rule) {
  DedupOutcome out;
  const auto comps = connected_components(s, rule);
  out.components = comps.size();
  for (const auto& c : comps) out.kept.push_back(select_centroid(c, s));
  std::sort(out.kept.begin(), out.kept.end());
  return out;
}

struct LogicDedupResult {
  /// Input logics with non-centroids marked dropped_duplicate, input order.
  std::vector<DesignLogic> logics;
  std::size_t components = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

/// One centroid per connected component of the similarity graph is kept.
inline LogicDedupResult dedup_design_logics(std::vector<DesignLogic> logics, EdgeRule rule = {}) {
  std::vector<EmbeddingVector> vs;
  for (const auto& l : logics) {
    if (!l.embedding) throw Error(ErrorCode::missing_embedding, "logic " + l.id + " has no embedding");
    vs.push_back(*l.embedding);
  }
  LogicDedupResult r;
  const auto outcome = dedup_by_similarity(pairwise_similarity(vs), rule);
  r.components = outcome.components;
  std::vector<bool> keep(logics.size(), false);
  for (auto i : outcome.kept) keep[i] = true;
  for (std::size_t i = 0; i < logics.size(); ++i) {
    if (!keep[i]) logics[i].status = LogicStatus::dropped_duplicate;
  }
  r.kept = outcome.kept.size();
  r.dropped = logics.size() - r.kept;
  r.logics = std::move(logics);
  return r;
}

}  // namespace designer
