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
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fedsumm/dataset.hpp"
#include "fedsumm/error.hpp"
#include "fedsumm/rng.hpp"

namespace fedsumm {

inline constexpr std::size_t kDefaultCoresetK = 128;

// Label-proportion-preserving subsample of one client's dataset.
struct Coreset {
  std::string client_id;
  std::size_t k = 0;
  // Ascending, unique indices into the source dataset.
  std::vector<std::size_t> indices;
  // Per-label number of selected samples.
  std::vector<std::size_t> quotas;

  std::size_t size() const noexcept { return indices.size(); }
};

// Largest-remainder apportionment of k slots over label counts. Every label
// first receives floor(k * count / n); remaining slots go to the largest
// fractional remainders, ties to the smaller label. If k >= n every label gets
// its full count.
inline std::vector<std::size_t> apportion(const std::vector<std::size_t>& counts, std::size_t k) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (k >= n) return counts;
  std::vector<std::size_t> quotas(counts.size());
  std::vector<std::size_t> remainder(counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    // k < n and counts[c] <= n, so k * counts[c] fits whenever n * n does.
    const unsigned __int128 scaled = static_cast<unsigned __int128>(k) * counts[c];
    quotas[c] = static_cast<std::size_t>(scaled / n);
    remainder[c] = static_cast<std::size_t>(scaled % n);
    assigned += quotas[c];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < k && i < order.size(); ++i) {
    const std::size_t c = order[i];
    if (remainder[c] == 0 || quotas[c] >= counts[c]) continue;
    ++quotas[c];
    ++assigned;
  }
  return quotas;
}

inline Coreset build_coreset(const ClientDataset& ds, std::size_t k, std::uint64_t seed) {
  detail::require(k >= 1, "coreset: k must be >= 1");
  detail::require(ds.size() >= 1, "coreset: dataset '" + ds.client_id() + "' is empty");

  Coreset out;
  out.client_id = ds.client_id();
  out.k = k;
  const auto counts = ds.label_counts();
  out.quotas = apportion(counts, k);

  if (k >= ds.size()) {
    out.indices.resize(ds.size());
    std::iota(out.indices.begin(), out.indices.end(), std::size_t{0});
    return out;
  }

  std::vector<std::vector<std::size_t>> by_label(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_label[ds.label(i)].push_back(i);

  out.indices.reserve(k);
  for (std::size_t c = 0; c < by_label.size(); ++c) {
    auto& pool = by_label[c];
    const std::size_t take = out.quotas[c];
    if (take == 0) continue;
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    auto rng = make_rng(seed, {c});
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    out.indices.insert(out.indices.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

}  // namespace fedsumm
