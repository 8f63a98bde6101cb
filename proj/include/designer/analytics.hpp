#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "designer/clustering.hpp"
#include "designer/error.hpp"
#include "designer/logic.hpp"
#include "designer/model.hpp"
#include "designer/text.hpp"
#include "designer/util.hpp"

namespace designer {

namespace detail {
inline void require_pairs(const Points& e) {
  if (e.size() < 2) throw Error(ErrorCode::invalid_argument, "need at least 2 embeddings");
  check_points(e);
}

inline std::vector<double> norms_of(const Points& e) {
  std::vector<double> n(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    n[i] = l2_norm(e[i]);
    if (n[i] == 0.0) throw Error(ErrorCode::zero_vector, "embedding " + std::to_string(i) + " is zero");
  }
  return n;
}
}  // namespace detail

struct PairwiseDistances {
  double cosine = 0.0;
  double l2 = 0.0;
};

/// Mean cosine distance and mean Euclidean distance over all unique pairs.
inline PairwiseDistances mean_pairwise_distances(const Points& e) {
  detail::require_pairs(e);
  const auto norms = detail::norms_of(e);
  const auto n = e.size();
  double cos_sum = 0.0, l2_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      cos_sum += 1.0 - std::clamp(dot(e[i], e[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      l2_sum += std::sqrt(squared_distance(e[i], e[j]));
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return {cos_sum / pairs, l2_sum / pairs};
}

/// Mean cosine distance from each embedding to its nearest other embedding.
inline double one_nn_distance(const Points& e) {
  detail::require_pairs(e);
  const auto norms = detail::norms_of(e);
  const auto n = e.size();
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = 1.0 - std::clamp(dot(e[i], e[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      best[i] = std::min(best[i], d);
      best[j] = std::min(best[j], d);
    }
  }
  double sum = 0.0;
  for (double b : best) sum += b;
  return sum / static_cast<double>(n);
}

inline std::size_t default_inertia_k(std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n) / 2.0))));
}

struct InertiaResult {
  double inertia = 0.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

inline InertiaResult cluster_inertia(const Points& e, std::size_t k, std::uint64_t seed) {
  return {kmeans(e, k, seed).inertia, k, seed};
}

/// Geometric mean of per-dimension population standard deviations,
/// computed in log space; 0 if any dimension has zero spread.
inline double radius(const Points& e) {
  detail::require_pairs(e);
  const auto n = static_cast<double>(e.size());
  const auto d = e.front().size();
  double log_sum = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& p : e) mean += p[j];
    mean /= n;
    double var = 0.0;
    for (const auto& p : e) var += (p[j] - mean) * (p[j] - mean);
    var /= n;
    if (var <= 0.0) return 0.0;
    log_sum += 0.5 * std::log(var);
  }
  return std::exp(log_sum / static_cast<double>(d));
}

struct DiversityReport {
  std::size_t n_sampled = 0;
  double mean_cosine_distance = 0.0;
  double mean_l2_distance = 0.0;
  double one_nn_distance = 0.0;
  double cluster_inertia = 0.0;
  std::size_t inertia_k = 0;
  std::uint64_t inertia_seed = 0;
  double radius = 0.0;
};

inline DiversityReport diversity_report(const Points& e, std::uint64_t seed, std::size_t inertia_k = 0) {
  detail::require_pairs(e);
  DiversityReport r;
  r.n_sampled = e.size();
  const auto pd = mean_pairwise_distances(e);
  r.mean_cosine_distance = pd.cosine;
  r.mean_l2_distance = pd.l2;
  r.one_nn_distance = one_nn_distance(e);
  const auto inertia = cluster_inertia(e, inertia_k ? inertia_k : default_inertia_k(e.size()), seed);
  r.cluster_inertia = inertia.inertia;
  r.inertia_k = inertia.k;
  r.inertia_seed = inertia.seed;
  r.radius = radius(e);
  return r;
}

inline json to_json(const DiversityReport& r) {
  return {{"n_sampled", r.n_sampled},
          {"mean_cosine_distance", r.mean_cosine_distance},
          {"mean_l2_distance", r.mean_l2_distance},
          {"one_nn_distance", r.one_nn_distance},
          {"cluster_inertia", r.cluster_inertia},
          {"inertia_k", r.inertia_k},
          {"inertia_seed", r.inertia_seed},
          {"radius", r.radius}};
}

// ---------------------------------------------------------------------------
// Distributions

struct DistributionReport {
  std::size_t records = 0;
  std::map<std::string, double> by_qtype;       // percent
  std::map<std::string, double> by_difficulty;  // percent over labeled records
  std::size_t unlabeled_difficulty = 0;
  double avg_question_length = 0.0;  // characters
  double avg_response_length = 0.0;  // characters, over records with a response
};

/// Percentages over active records. A missing question type counts as Other.
inline DistributionReport distribution_report(const std::vector<QuestionRecord>& records) {
  DistributionReport r;
  std::map<QuestionType, std::size_t> qt;
  std::map<Difficulty, std::size_t> diff;
  std::size_t labeled = 0, responses = 0;
  double qlen = 0.0, rlen = 0.0;
  for (const auto& q : records) {
    if (!q.active()) continue;
    ++r.records;
    ++qt[q.qtype.value_or(QuestionType::other)];
    if (q.difficulty) {
      ++diff[*q.difficulty];
      ++labeled;
    } else {
      ++r.unlabeled_difficulty;
    }
    qlen += static_cast<double>(text::char_count(q.text));
    if (q.response) {
      rlen += static_cast<double>(text::char_count(*q.response));
      ++responses;
    }
  }
  if (r.records == 0) throw Error(ErrorCode::invalid_argument, "no active records");
  const auto total = static_cast<double>(r.records);
  for (auto t : kAllQuestionTypes) r.by_qtype[std::string(to_string(t))] = static_cast<double>(qt[t]) * 100.0 / total;
  for (auto d : kAllDifficulties) {
    r.by_difficulty[std::string(to_string(d))] =
        labeled ? static_cast<double>(diff[d]) * 100.0 / static_cast<double>(labeled) : 0.0;
  }
  r.avg_question_length = qlen / total;
  r.avg_response_length = responses ? rlen / static_cast<double>(responses) : 0.0;
  return r;
}

inline json to_json(const DistributionReport& r) {
  return {{"records", r.records},
          {"by_qtype", r.by_qtype},
          {"by_difficulty", r.by_difficulty},
          {"unlabeled_difficulty", r.unlabeled_difficulty},
          {"avg_question_length", r.avg_question_length},
          {"avg_response_length", r.avg_response_length}};
}

/// Seeded uniform sample of n indices out of population, without
/// replacement, returned ascending. n above the population takes everything
/// (and warns).
inline std::vector<std::size_t> sample_uniform(std::size_t population, std::size_t n, std::uint64_t seed,
                                               Warnings* warnings = nullptr) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  if (n >= population) {
    if (n > population) warn(warnings, "sample_exceeds_population");
    return idx;
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + uniform_below(rng, population - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

template <typename T>
std::vector<T> sample_uniform(const std::vector<T>& records, std::size_t n, std::uint64_t seed,
                              Warnings* warnings = nullptr) {
  std::vector<T> out;
  for (auto i : sample_uniform(records.size(), n, seed, warnings)) out.push_back(records[i]);
  return out;
}

}  // namespace designer
