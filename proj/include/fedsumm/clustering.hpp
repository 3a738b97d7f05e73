/*
 * Copyright 2026 The fedsumm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fedsumm/error.hpp"
#include "fedsumm/matrix.hpp"
#include "fedsumm/rng.hpp"

namespace fedsumm {

enum class ClusterMethod { kmeans, dbscan };

inline std::string_view to_string(ClusterMethod m) { return m == ClusterMethod::kmeans ? "kmeans" : "dbscan"; }

inline ClusterMethod parse_cluster_method(std::string_view s) {
  if (s == "kmeans") return ClusterMethod::kmeans;
  if (s == "dbscan") return ClusterMethod::dbscan;
  throw ValidationError("unknown clustering method '" + std::string(s) + "' (expected kmeans|dbscan)");
}

inline constexpr std::int32_t kNoise = -1;

struct ClusterModel {
  ClusterMethod method = ClusterMethod::kmeans;
  // Requested k for kmeans; number of clusters found for dbscan.
  std::size_t k = 0;
  // kmeans only: one row per cluster.
  Matrix centroids;
  // One entry per input point; kNoise marks DBSCAN noise.
  std::vector<std::int32_t> labels;
  // kmeans objective J: sum of squared distances to the assigned centroids.
  double objective = 0.0;
  std::size_t iterations = 0;
  // J after the initial assignment and after every Lloyd iteration.
  std::vector<double> objective_trace;

  std::size_t non_empty_clusters() const {
    std::vector<std::int32_t> seen;
    for (auto l : labels) {
      if (l != kNoise) seen.push_back(l);
    }
    std::sort(seen.begin(), seen.end());
    return static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
  }
};

enum class KMeansInit { kmeans_plus_plus, random, given };

inline KMeansInit parse_kmeans_init(std::string_view s) {
  if (s == "kmeans++") return KMeansInit::kmeans_plus_plus;
  if (s == "random") return KMeansInit::random;
  if (s == "given") return KMeansInit::given;
  throw ValidationError("unknown kmeans init '" + std::string(s) + "' (expected kmeans++|random|given)");
}

inline std::string_view to_string(KMeansInit i) {
  switch (i) {
    case KMeansInit::kmeans_plus_plus: return "kmeans++";
    case KMeansInit::random: return "random";
    case KMeansInit::given: return "given";
  }
  return "?";
}

struct KMeansOptions {
  std::size_t k = 2;
  KMeansInit init = KMeansInit::kmeans_plus_plus;
  // Used when init == given: k rows of the points' dimension.
  Matrix initial_centroids;
  std::size_t max_iters = 300;
  // Stop once the largest centroid shift of an iteration is below tol.
  double tol = 0.0;
  std::uint64_t seed = 0;
  // Independent seeded runs; the lowest final J wins (ties: earliest run).
  std::size_t restarts = 1;
  // Polled once per iteration; returning true aborts with BudgetExceeded.
  std::function<bool()> should_stop;
};

namespace detail {

// Nearest centroid by squared distance, ties to the lower index.
inline double assign_points(const Matrix& points, const Matrix& centroids, std::vector<std::int32_t>& labels,
                            std::vector<double>& dist) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto p = points.row(i);
    double best = std::numeric_limits<double>::infinity();
    std::int32_t arg = 0;
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
      const double d = squared_distance(p, centroids.row(j));
      if (d < best) {
        best = d;
        arg = static_cast<std::int32_t>(j);
      }
    }
    labels[i] = arg;
    dist[i] = best;
    total += best;
  }
  return total;
}

inline Matrix seed_kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids;
  std::vector<char> chosen(n, 0);
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  std::size_t first = any(rng);
  chosen[first] = 1;
  centroids.append_row(points.row(first));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), points.row(first));
  while (centroids.rows() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double r = u(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc >= r) break;
      }
    }
    if (pick == n || chosen[pick]) {
      // All remaining mass is zero (duplicate points): any unchosen point.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> r(0, rest.size() - 1);
      pick = rest[r(rng)];
    }
    chosen[pick] = 1;
    centroids.append_row(points.row(pick));
    const auto c = points.row(pick);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), c));
  }
  return centroids;
}

inline Matrix seed_random(const Matrix& points, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(points.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Matrix centroids;
  for (std::size_t i = 0; i < k; ++i) centroids.append_row(points.row(idx[i]));
  return centroids;
}

inline ClusterModel lloyd(const Matrix& points, Matrix centroids, const KMeansOptions& opts) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  const std::size_t k = centroids.rows();
  ClusterModel model;
  model.method = ClusterMethod::kmeans;
  model.k = k;
  model.labels.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  double objective = assign_points(points, centroids, model.labels, dist);
  model.objective_trace.push_back(objective);

  std::vector<std::size_t> counts(k);
  std::vector<std::int32_t> next(n);
  while (model.iterations < opts.max_iters) {
    if (opts.should_stop && opts.should_stop()) throw BudgetExceeded("kmeans exceeded its time budget");
    ++model.iterations;

    std::fill(counts.begin(), counts.end(), 0);
    for (auto l : model.labels) ++counts[static_cast<std::size_t>(l)];
    // Empty cluster: reseed with the point farthest from its centroid, taken
    // from a cluster that keeps at least one other member.
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(model.labels[i])] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) break;
      --counts[static_cast<std::size_t>(model.labels[far])];
      model.labels[far] = static_cast<std::int32_t>(j);
      dist[far] = 0.0;
      counts[j] = 1;
    }

    Matrix updated(k, dim);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = updated.row(static_cast<std::size_t>(model.labels[i]));
      const auto p = points.row(i);
      for (std::size_t d = 0; d < dim; ++d) c[d] += p[d];
    }
    double movement = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      auto c = updated.row(j);
      if (counts[j] == 0) {
        std::copy(centroids.row(j).begin(), centroids.row(j).end(), c.begin());
        continue;
      }
      for (double& v : c) v /= static_cast<double>(counts[j]);
      movement = std::max(movement, std::sqrt(squared_distance(c, centroids.row(j))));
    }
    centroids = std::move(updated);

    objective = assign_points(points, centroids, next, dist);
    model.objective_trace.push_back(objective);
    const bool changed = next != model.labels;
    model.labels.swap(next);
    if (!changed || movement < opts.tol) break;
  }
  model.centroids = std::move(centroids);
  model.objective = objective;
  return model;
}

inline void validate_points(const Matrix& points) {
  require(!points.empty(), "clustering: no points");
  for (double v : points.data()) require(std::isfinite(v), "clustering: non-finite point coordinate");
}

}  // namespace detail

// Lloyd's algorithm minimizing J = sum_j sum_{i in j} ||x_i - c_j||^2.
inline ClusterModel kmeans(const Matrix& points, const KMeansOptions& opts) {
  detail::validate_points(points);
  detail::require(opts.k >= 1, "kmeans: k must be >= 1");
  detail::require(opts.k <= points.rows(), "kmeans: k (" + std::to_string(opts.k) + ") exceeds the number of points (" +
                                               std::to_string(points.rows()) + ")");
  detail::require(opts.restarts >= 1, "kmeans: restarts must be >= 1");
  if (opts.init == KMeansInit::given) {
    detail::require(opts.initial_centroids.rows() == opts.k && opts.initial_centroids.cols() == points.cols(),
                    "kmeans: given initial centroids must be k rows of the point dimension");
    return detail::lloyd(points, opts.initial_centroids, opts);
  }
  ClusterModel best;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    Rng rng = make_rng(opts.seed, {r});
    Matrix init = opts.init == KMeansInit::random ? detail::seed_random(points, opts.k, rng)
                                                  : detail::seed_kmeans_plus_plus(points, opts.k, rng);
    ClusterModel m = detail::lloyd(points, std::move(init), opts);
    if (r == 0 || m.objective < best.objective) best = std::move(m);
  }
  return best;
}

inline double kmeans_objective(const Matrix& points, const Matrix& centroids, std::span<const std::int32_t> labels) {
  double j = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    j += squared_distance(points.row(i), centroids.row(static_cast<std::size_t>(labels[i])));
  }
  return j;
}

struct DbscanOptions {
  double eps = 0.5;
  // Minimum neighborhood size (the point itself included) for a core point.
  std::size_t min_pts = 5;
  // Polled once per region query; returning true aborts with BudgetExceeded.
  std::function<bool()> should_stop;
};

// DBSCAN over n points given a squared-distance callback sq(i, j). Points are
// visited in index order, so cluster ids follow the lowest-index core point
// of each cluster and a border point joins the first (lowest-id) cluster that
// reaches it.
template <typename SquaredDistance>
ClusterModel dbscan_with(std::size_t n, const DbscanOptions& opts, SquaredDistance&& sq) {
  detail::require(opts.eps > 0.0 && std::isfinite(opts.eps), "dbscan: eps must be > 0");
  detail::require(opts.min_pts >= 1, "dbscan: min_pts must be >= 1");
  constexpr std::int32_t kUnvisited = -2;
  const double eps2 = opts.eps * opts.eps;

  auto region = [&](std::size_t i) {
    if (opts.should_stop && opts.should_stop()) throw BudgetExceeded("dbscan exceeded its time budget");
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || sq(i, j) <= eps2) out.push_back(j);
    }
    return out;
  };

  ClusterModel model;
  model.method = ClusterMethod::dbscan;
  model.labels.assign(n, kUnvisited);
  std::int32_t cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (model.labels[i] != kUnvisited) continue;
    auto seeds = region(i);
    if (seeds.size() < opts.min_pts) {
      model.labels[i] = kNoise;
      continue;
    }
    model.labels[i] = cluster;
    for (std::size_t q = 0; q < seeds.size(); ++q) {
      const std::size_t p = seeds[q];
      if (model.labels[p] == kNoise) model.labels[p] = cluster;
      if (model.labels[p] != kUnvisited) continue;
      model.labels[p] = cluster;
      auto more = region(p);
      if (more.size() >= opts.min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  model.k = static_cast<std::size_t>(cluster);
  return model;
}

inline ClusterModel dbscan(const Matrix& points, const DbscanOptions& opts) {
  detail::validate_points(points);
  return dbscan_with(points.rows(), opts,
                     [&](std::size_t i, std::size_t j) { return squared_distance(points.row(i), points.row(j)); });
}

inline ClusterModel dbscan(const Matrix& points, double eps, std::size_t min_pts) {
  return dbscan(points, DbscanOptions{eps, min_pts, {}});
}

// Adjusted Rand index of two labelings of the same points. Noise labels are
// treated as singleton clusters. When the chance-corrected denominator
// vanishes (both labelings all-singletons, or both one cluster) the
// labelings are identical up to renaming and the index is 1.
inline double adjusted_rand_index(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  detail::require(a.size() == b.size(), "adjusted_rand_index: labelings cover different numbers of clients");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  auto canon = [n](std::span<const std::int32_t> l) {
    std::vector<std::int64_t> out(n);
    std::int64_t next_noise = std::numeric_limits<std::int32_t>::max();
    for (std::size_t i = 0; i < n; ++i) out[i] = l[i] == kNoise ? ++next_noise : l[i];
    return out;
  };
  const auto ca = canon(a);
  const auto cb = canon(b);
  std::map<std::pair<std::int64_t, std::int64_t>, double> joint;
  std::map<std::int64_t, double> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{ca[i], cb[i]}] += 1.0;
    rows[ca[i]] += 1.0;
    cols[cb[i]] += 1.0;
  }
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, m] : joint) index += pairs(m);
  for (const auto& [key, m] : rows) sum_a += pairs(m);
  for (const auto& [key, m] : cols) sum_b += pairs(m);
  const double expected = sum_a * sum_b / pairs(static_cast<double>(n));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

inline double adjusted_rand_index(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  return adjusted_rand_index(std::span<const std::int32_t>(a), std::span<const std::int32_t>(b));
}

inline double adjusted_rand_index(const std::vector<std::uint32_t>& a, const std::vector<std::int32_t>& b) {
  std::vector<std::int32_t> conv(a.begin(), a.end());
  return adjusted_rand_index(conv, b);
}

// Keyed form: both maps must cover exactly the same client ids.
inline double adjusted_rand_index(const std::map<std::string, std::int32_t>& a,
                                  const std::map<std::string, std::int32_t>& b) {
  detail::require(a.size() == b.size(), "adjusted_rand_index: client sets differ");
  std::vector<std::int32_t> la, lb;
  la.reserve(a.size());
  lb.reserve(b.size());
  auto it = b.begin();
  for (const auto& [id, label] : a) {
    detail::require(it != b.end() && it->first == id, "adjusted_rand_index: client sets differ at '" + id + "'");
    la.push_back(label);
    lb.push_back(it->second);
    ++it;
  }
  return adjusted_rand_index(la, lb);
}

}  // namespace fedsumm
