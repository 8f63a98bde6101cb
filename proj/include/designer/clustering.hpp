#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "designer/error.hpp"
#include "designer/model.hpp"
#include "designer/util.hpp"

namespace designer {

using Points = std::vector<std::vector<double>>;

inline Points to_points(const std::vector<EmbeddingVector>& vs) {
  Points p;
  p.reserve(vs.size());
  for (const auto& v : vs) p.push_back(v.values);
  return p;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline void check_points(const Points& points) {
  if (points.empty()) throw Error(ErrorCode::invalid_argument, "no points");
  const auto d = points.front().size();
  if (d == 0) throw Error(ErrorCode::dimension_mismatch, "zero-dimensional points");
  for (const auto& p : points) {
    if (p.size() != d) throw Error(ErrorCode::dimension_mismatch, "points differ in dimension");
  }
}

struct KMeansOptions {
  double tolerance = 1e-6;  // max centroid movement (Euclidean) to stop
  int max_iterations = 100;
};

struct KMeansResult {
  std::vector<std::size_t> assignments;
  Points centroids;
  double inertia = 0.0;
  /// Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_history;
  int iterations = 0;
};

namespace detail {

/// Nearest centroid; ties go to the lower index.
inline std::pair<std::size_t, double> nearest(const std::vector<double>& p, const Points& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

inline Points kmeans_plus_plus(const Points& points, std::size_t k, std::mt19937_64& rng) {
  const auto n = points.size();
  Points centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);
  auto pick = [&](std::size_t i) {
    chosen[i] = true;
    centroids.push_back(points[i]);
  };
  pick(uniform_below(rng, n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t next = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && target < acc) {
          next = i;
          break;
        }
      }
      if (next == n) {  // rounding at the top end
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a centroid: take an unchosen one uniformly.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      next = rest[uniform_below(rng, rest.size())];
    }
    pick(next);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }
  return centroids;
}

}  // namespace detail

/// Lloyd's algorithm from a seeded k-means++ start. Empty clusters keep
/// their previous centroid.
inline KMeansResult kmeans(const Points& points, std::size_t k, std::uint64_t seed, const KMeansOptions& opts = {}) {
  check_points(points);
  const auto n = points.size();
  if (k < 1 || k > n) {
    throw Error(ErrorCode::invalid_argument, "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  const auto d = points.front().size();
  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centroids = detail::kmeans_plus_plus(points, k, rng);
  r.assignments.assign(n, 0);

  auto assign = [&] {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [c, dist] = detail::nearest(points[i], r.centroids);
      r.assignments[i] = c;
      inertia += dist;
    }
    return inertia;
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    r.inertia_history.push_back(assign());
    ++r.iterations;
    Points next(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = next[r.assignments[i]];
      for (std::size_t j = 0; j < d; ++j) c[j] += points[i][j];
      ++counts[r.assignments[i]];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        next[c] = r.centroids[c];
        continue;
      }
      for (double& x : next[c]) x /= static_cast<double>(counts[c]);
      movement = std::max(movement, std::sqrt(squared_distance(next[c], r.centroids[c])));
    }
    r.centroids = std::move(next);
    if (movement < opts.tolerance) break;
  }
  r.inertia = assign();
  return r;
}

inline KMeansResult kmeans(const std::vector<EmbeddingVector>& points, std::size_t k, std::uint64_t seed,
                           const KMeansOptions& opts = {}) {
  return kmeans(to_points(points), k, seed, opts);
}

/// Mean silhouette coefficient (Euclidean). Singleton clusters score 0.
/// Requires at least two non-empty clusters.
inline double silhouette(const Points& points, const std::vector<std::size_t>& labels) {
  const auto n = points.size();
  std::size_t k = 0;
  for (auto l : labels) k = std::max(k, l + 1);
  std::vector<std::size_t> sizes(k, 0);
  for (auto l : labels) ++sizes[l];
  std::size_t nonempty = 0;
  for (auto s : sizes) nonempty += s > 0 ? 1 : 0;
  if (nonempty < 2) throw Error(ErrorCode::invalid_argument, "silhouette needs at least two clusters");

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i * n + j] = dist[j * n + i] = std::sqrt(squared_distance(points[i], points[j]));
    }
  }
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sums[labels[j]] += dist[i * n + j];
    const double a = sums[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != labels[i] && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

struct KSelection {
  std::size_t k = 0;
  double score = 0.0;
  /// (k, silhouette) for each k evaluated.
  std::vector<std::pair<std::size_t, double>> scores;
};

/// Default search range 2..min(50, n-1).
inline std::pair<std::size_t, std::size_t> default_k_range(std::size_t n) {
  return {2, std::min<std::size_t>(50, n - 1)};
}

/// k in [k_lo, k_hi] maximizing the mean silhouette of kmeans(points, k,
/// seed); ties go to the smaller k. Clusterings with fewer than two
/// non-empty clusters are not candidates.
inline KSelection choose_k_by_silhouette(const Points& points, std::size_t k_lo, std::size_t k_hi, std::uint64_t seed,
                                         const KMeansOptions& opts = {}) {
  check_points(points);
  const auto n = points.size();
  if (n < 3) throw Error(ErrorCode::invalid_argument, "silhouette search needs at least 3 points");
  if (k_lo < 2 || k_hi > n - 1 || k_lo > k_hi) {
    throw Error(ErrorCode::invalid_argument, "k range must lie within [2, n-1]");
  }
  bool all_same = true;
  for (std::size_t i = 1; i < n && all_same; ++i) all_same = points[i] == points[0];
  if (all_same) throw Error(ErrorCode::invalid_argument, "silhouette undefined: all points identical");

  KSelection best;
  best.score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    const auto r = kmeans(points, k, seed, opts);
    std::vector<bool> used(k, false);
    std::size_t nonempty = 0;
    for (auto a : r.assignments) {
      if (!used[a]) {
        used[a] = true;
        ++nonempty;
      }
    }
    if (nonempty < 2) continue;
    const double s = silhouette(points, r.assignments);
    best.scores.emplace_back(k, s);
    if (s > best.score) {
      best.score = s;
      best.k = k;
    }
  }
  if (best.k == 0) throw Error(ErrorCode::invalid_argument, "no k in range produced two clusters");
  return best;
}

inline KSelection choose_k_by_silhouette(const Points& points, std::uint64_t seed) {
  const auto [lo, hi] = default_k_range(points.size());
  return choose_k_by_silhouette(points, lo, hi, seed);
}

}  // namespace designer
