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

// Reference implementations used only by the test suites. They are written
// for clarity over speed and share no code with the library paths they check.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

namespace fedsumm::testing {

using Points = std::vector<std::vector<double>>;

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// All integer quota vectors q with sum k and 0 <= q_c <= counts_c that
// minimize sum_c |q_c/k - counts_c/n|.
inline std::vector<std::vector<std::size_t>> brute_force_quotas(const std::vector<std::size_t>& counts,
                                                                std::size_t k) {
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  std::vector<std::vector<std::size_t>> best;
  double best_err = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> q(counts.size(), 0);
  auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
    if (i == counts.size()) {
      if (left != 0) return;
      double err = 0.0;
      for (std::size_t c = 0; c < counts.size(); ++c) {
        err += std::abs(static_cast<double>(q[c]) / static_cast<double>(k) - static_cast<double>(counts[c]) / n);
      }
      if (err < best_err - 1e-12) {
        best_err = err;
        best = {q};
      } else if (std::abs(err - best_err) <= 1e-12) {
        best.push_back(q);
      }
      return;
    }
    for (std::size_t v = 0; v <= std::min(left, counts[i]); ++v) {
      q[i] = v;
      self(self, i + 1, left - v);
    }
    q[i] = 0;
  };
  rec(rec, 0, k);
  return best;
}

// Optimal k=2 objective by enumerating every split into two non-empty sets.
inline double brute_force_kmeans2(const Points& pts) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.front().size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    if (mask & 1u) continue;  // fix point 0 on side 0 to skip mirrored splits
    double j = 0.0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> mean(dim, 0.0);
      std::size_t m = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1u) != static_cast<std::uint32_t>(side)) continue;
        for (std::size_t d = 0; d < dim; ++d) mean[d] += pts[i][d];
        ++m;
      }
      for (auto& v : mean) v /= static_cast<double>(m);
      for (std::size_t i = 0; i < n; ++i) {
        if (((mask >> i) & 1u) == static_cast<std::uint32_t>(side)) j += sq_dist(pts[i], mean);
      }
    }
    best = std::min(best, j);
  }
  return best;
}

// DBSCAN by explicit reachability: core points are those with >= min_pts
// points (self included) within eps; the transitive closure of the core-core
// eps graph gives the clusters, numbered by their lowest-index core point; a
// non-core point joins the lowest-numbered cluster owning a core point within
// eps, otherwise it is noise (-1).
inline std::vector<std::int32_t> reference_dbscan(const Points& pts, double eps, std::size_t min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<bool>> near(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) near[i][j] = std::sqrt(sq_dist(pts[i], pts[j])) <= eps;
  }
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) c += near[i][j] ? 1 : 0;
    core[i] = c >= min_pts;
  }
  // reach[i][j]: core i and core j are density-connected.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) reach[i][j] = core[i] && core[j] && (i == j || near[i][j]);
  }
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!reach[i][m]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[m][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<std::int32_t> label(n, -1);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] != -1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j]) label[j] = next;
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    std::int32_t best = -1;
    for (std::size_t j = 0; j < n; ++j) {
      if (core[j] && near[i][j] && (best == -1 || label[j] < best)) best = label[j];
    }
    label[i] = best;
  }
  return label;
}

// ARI from explicit pair enumeration; noise (-1) points are singletons.
inline double pairwise_ari(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  const std::size_t n = a.size();
  double both = 0.0, in_a = 0.0, in_b = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] != -1 && a[i] == a[j];
      const bool sb = b[i] != -1 && b[i] == b[j];
      both += (sa && sb) ? 1.0 : 0.0;
      in_a += sa ? 1.0 : 0.0;
      in_b += sb ? 1.0 : 0.0;
      pairs += 1.0;
    }
  }
  const double expected = in_a * in_b / pairs;
  const double max_index = 0.5 * (in_a + in_b);
  if (max_index == expected) return 1.0;
  return (both - expected) / (max_index - expected);
}

}  // namespace fedsumm::testing
