#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "designer/error.hpp"
#include "designer/jsonl.hpp"
#include "designer/logic.hpp"
#include "designer/model.hpp"

namespace designer {

namespace detail {
inline void check_cosine_args(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()) + " differ");
  }
}
inline double cosine_from(double d, double na, double nb) { return std::clamp(d / (na * nb), -1.0, 1.0); }
}  // namespace detail

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  detail::check_cosine_args(a.values, b.values);
  const double na = l2_norm(a.values);
  const double nb = l2_norm(b.values);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::zero_vector, "cosine of a zero vector");
  return detail::cosine_from(dot(a.values, b.values), na, nb);
}

struct ScoredLogic {
  std::string logic_id;
  double score = 0.0;
};

/// Exact per-discipline index over active logic embeddings.
class LogicIndex {
 public:
  LogicIndex() = default;
  explicit LogicIndex(std::string discipline, std::size_t dimension = 0)
      : discipline_(std::move(discipline)), dimension_(dimension) {}

  void add(std::string logic_id, EmbeddingVector v) {
    if (v.values.empty()) throw Error(ErrorCode::dimension_mismatch, "empty embedding for " + logic_id);
    if (dimension_ == 0) dimension_ = v.values.size();
    if (v.values.size() != dimension_) {
      throw Error(ErrorCode::dimension_mismatch, "index dimension is " + std::to_string(dimension_) + ", logic " +
                                                     logic_id + " has " + std::to_string(v.values.size()));
    }
    if (!ids_seen_.insert(logic_id).second) throw Error(ErrorCode::invalid_argument, "duplicate logic id " + logic_id);
    const double n = l2_norm(v.values);
    if (n == 0.0) throw Error(ErrorCode::zero_vector, "logic " + logic_id + " has a zero embedding");
    ids_.push_back(std::move(logic_id));
    vectors_.push_back(std::move(v));
    norms_.push_back(n);
  }

  const std::string& discipline() const noexcept { return discipline_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const EmbeddingVector& vector(std::size_t i) const { return vectors_[i]; }
  double norm(std::size_t i) const { return norms_[i]; }

  /// Header line {dimension, discipline, count}, then one {logic_id, embedding} per line.
  std::string serialize() const {
    std::string out = jsonl::canonical({{"count", size()}, {"dimension", dimension_}, {"discipline", discipline_}}) + "\n";
    for (std::size_t i = 0; i < size(); ++i) {
      out += jsonl::canonical({{"embedding", vectors_[i].values}, {"logic_id", ids_[i]}}) + "\n";
    }
    return out;
  }

  void save(const std::filesystem::path& path) const { jsonl::write_atomic(path, serialize()); }

  static LogicIndex load(const std::filesystem::path& path) {
    const auto lines = jsonl::read_all(path);
    if (lines.empty()) throw Error(ErrorCode::malformed_field, "index file " + path.string() + " has no header");
    const auto& h = lines.front();
    if (!h.contains("dimension") || !h.contains("discipline") || !h.contains("count")) {
      throw Error(ErrorCode::malformed_field, "index header must carry dimension, discipline and count");
    }
    LogicIndex idx(h["discipline"].get<std::string>(), h["dimension"].get<std::size_t>());
    for (std::size_t i = 1; i < lines.size(); ++i) {
      idx.add(lines[i].at("logic_id").get<std::string>(),
              EmbeddingVector{lines[i].at("embedding").get<std::vector<double>>()});
    }
    if (idx.size() != h["count"].get<std::size_t>()) {
      throw Error(ErrorCode::malformed_field, "index count mismatch in " + path.string());
    }
    return idx;
  }

 private:
  std::string discipline_;
  std::size_t dimension_ = 0;
  std::vector<std::string> ids_;
  std::vector<EmbeddingVector> vectors_;
  std::vector<double> norms_;
  std::set<std::string> ids_seen_;
};

/// Exact top-k by cosine, descending; ties broken by ascending logic id.
inline std::vector<ScoredLogic> retrieve_top_k(const EmbeddingVector& query, const LogicIndex& index,
                                               std::size_t k = 5) {
  if (index.empty()) throw Error(ErrorCode::empty_index, "index for '" + index.discipline() + "' is empty");
  if (k < 1) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  detail::check_cosine_args(query.values, index.vector(0).values);
  const double nq = l2_norm(query.values);
  if (nq == 0.0) throw Error(ErrorCode::zero_vector, "query embedding is zero");
  std::vector<ScoredLogic> scored;
  scored.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    scored.push_back({index.id(i), detail::cosine_from(dot(query.values, index.vector(i).values), nq, index.norm(i))});
  }
  const auto better = [](const ScoredLogic& a, const ScoredLogic& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.logic_id < b.logic_id;
  };
  const auto take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
  scored.resize(take);
  return scored;
}

}  // namespace designer
