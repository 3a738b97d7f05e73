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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsumm/coreset.hpp"
#include "fedsumm/dataset.hpp"
#include "fedsumm/embedder.hpp"
#include "fedsumm/error.hpp"

namespace fedsumm {

inline constexpr std::uint32_t kDefaultBins = 8;

// Per-class mean embeddings followed by the label distribution:
// [mean(class 0) .. mean(class C-1), p(0) .. p(C-1)], length C*H + C.
struct DistributionSummary {
  std::string client_id;
  std::uint32_t num_classes = 0;
  std::uint32_t embed_dim = 0;
  std::vector<double> values;

  static std::size_t length(std::size_t num_classes, std::size_t embed_dim) {
    return num_classes * embed_dim + num_classes;
  }

  std::span<const double> class_mean(std::uint32_t c) const {
    return {values.data() + static_cast<std::size_t>(c) * embed_dim, embed_dim};
  }
  std::span<const double> label_distribution() const {
    return {values.data() + static_cast<std::size_t>(num_classes) * embed_dim, num_classes};
  }

  // Copy with the label block scaled by `label_weight`.
  std::vector<double> weighted(double label_weight) const {
    std::vector<double> out = values;
    const std::size_t start = static_cast<std::size_t>(num_classes) * embed_dim;
    for (std::size_t i = start; i < out.size(); ++i) out[i] *= label_weight;
    return out;
  }

  friend bool operator==(const DistributionSummary&, const DistributionSummary&) = default;
};

enum class HistogramKind : std::uint8_t { label_only = 0, conditional = 1 };

inline std::string_view to_string(HistogramKind k) {
  return k == HistogramKind::label_only ? "label" : "conditional";
}

// Baseline summaries. `label_only` carries P(y) over C classes. `conditional`
// additionally carries, for every (class, dimension) pair, a B-bin histogram
// of feature values over [lo, hi], normalized per row; rows of classes absent
// from the dataset are all zero. Layout of `conditional` is
// [class][dimension][bin], dense.
struct HistogramSummary {
  std::string client_id;
  HistogramKind kind = HistogramKind::label_only;
  std::uint32_t num_classes = 0;
  std::uint32_t dim = 0;
  std::uint32_t bins = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> label_distribution;
  std::vector<double> conditional;

  std::span<const double> row(std::uint32_t c, std::uint32_t d) const {
    return {conditional.data() + (static_cast<std::size_t>(c) * dim + d) * bins, bins};
  }

  std::size_t element_count() const noexcept { return conditional.size() + label_distribution.size(); }

  // Vector used for clustering: conditional block (if any) then P(y).
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(element_count());
    out.insert(out.end(), conditional.begin(), conditional.end());
    out.insert(out.end(), label_distribution.begin(), label_distribution.end());
    return out;
  }

  friend bool operator==(const HistogramSummary&, const HistogramSummary&) = default;
};

namespace detail {

inline void check_provider(const ClientDataset& ds, const EmbeddingProvider& provider) {
  if (provider.kind() == EmbedderKind::precomputed) {
    require(ds.kind() == DataKind::embedded,
            "client '" + ds.client_id() +
                "': the precomputed embedder needs an embedded dataset; import the FDSM file produced by the export tool");
    require(ds.dim() == provider.output_dim(), "client '" + ds.client_id() + "': embedded dimension " +
                                                   std::to_string(ds.dim()) + " does not match embedder H=" +
                                                   std::to_string(provider.output_dim()));
    return;
  }
  require(ds.dim() == provider.input_dim(), "client '" + ds.client_id() + "': feature dimension " +
                                                std::to_string(ds.dim()) + " does not match embedder input " +
                                                std::to_string(provider.input_dim()));
}

}  // namespace detail

// Coreset -> embed -> per-class mean -> label distribution over the coreset.
inline DistributionSummary encoder_summary(const ClientDataset& ds, std::size_t coreset_k,
                                           const EmbeddingProvider& provider, std::uint64_t seed) {
  detail::check_provider(ds, provider);
  const Coreset coreset = build_coreset(ds, coreset_k, seed);
  const std::uint32_t num_classes = ds.num_classes();
  const std::uint32_t h = provider.output_dim();

  std::vector<double> embedded;
  embedded.reserve(coreset.size() * h);
  if (provider.kind() == EmbedderKind::precomputed) {
    for (auto i : coreset.indices) {
      const auto f = ds.features(i);
      embedded.insert(embedded.end(), f.begin(), f.end());
    }
  } else if (coreset.size() == ds.size()) {
    provider.embed_rows(ds.feature_matrix(), ds.size(), embedded);
  } else {
    std::vector<float> gathered;
    gathered.reserve(coreset.size() * ds.dim());
    for (auto i : coreset.indices) {
      const auto f = ds.features(i);
      gathered.insert(gathered.end(), f.begin(), f.end());
    }
    provider.embed_rows(std::span<const float>(gathered), coreset.size(), embedded);
  }

  DistributionSummary out;
  out.client_id = ds.client_id();
  out.num_classes = num_classes;
  out.embed_dim = h;
  out.values.assign(DistributionSummary::length(num_classes, h), 0.0);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t r = 0; r < coreset.size(); ++r) {
    const std::uint32_t c = ds.label(coreset.indices[r]);
    ++counts[c];
    double* mean = out.values.data() + static_cast<std::size_t>(c) * h;
    const double* e = embedded.data() + r * h;
    for (std::uint32_t j = 0; j < h; ++j) mean[j] += e[j];
  }
  const double k_eff = static_cast<double>(coreset.size());
  double* dist = out.values.data() + static_cast<std::size_t>(num_classes) * h;
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    double* mean = out.values.data() + static_cast<std::size_t>(c) * h;
    for (std::uint32_t j = 0; j < h; ++j) mean[j] /= static_cast<double>(counts[c]);
    dist[c] = static_cast<double>(counts[c]) / k_eff;
  }
  return out;
}

// P(y) over the full dataset.
inline HistogramSummary label_summary(const ClientDataset& ds) {
  detail::require(ds.size() >= 1, "label summary: dataset '" + ds.client_id() + "' is empty");
  HistogramSummary out;
  out.client_id = ds.client_id();
  out.kind = HistogramKind::label_only;
  out.num_classes = ds.num_classes();
  out.label_distribution.assign(ds.num_classes(), 0.0);
  const auto counts = ds.label_counts();
  const double n = static_cast<double>(ds.size());
  for (std::uint32_t c = 0; c < ds.num_classes(); ++c) out.label_distribution[c] = static_cast<double>(counts[c]) / n;
  return out;
}

// Bin index for value v among `bins` equal-width bins over [lo, hi]; values
// outside the range land in the edge bins and v == hi lands in the last bin.
inline std::uint32_t bin_index(double v, double lo, double hi, std::uint32_t bins) {
  const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(t > 0.0)) return 0;
  if (t >= static_cast<double>(bins)) return bins - 1;
  return static_cast<std::uint32_t>(t);
}

// P(X|y): per-(class, dimension) equal-width histograms over the full dataset,
// plus P(y).
inline HistogramSummary conditional_summary(const ClientDataset& ds, std::uint32_t bins = kDefaultBins,
                                            double lo = 0.0, double hi = 1.0) {
  detail::require(ds.size() >= 1, "conditional summary: dataset '" + ds.client_id() + "' is empty");
  detail::require(bins >= 2, "conditional summary: bins must be >= 2");
  detail::require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
                  "conditional summary: range must satisfy lo < hi");
  detail::require(ds.kind() == DataKind::raw,
                  "conditional summary: dataset '" + ds.client_id() + "' must hold raw features");

  HistogramSummary out = label_summary(ds);
  out.kind = HistogramKind::conditional;
  out.dim = ds.dim();
  out.bins = bins;
  out.lo = lo;
  out.hi = hi;
  const std::size_t dim = ds.dim();
  const std::size_t row_block = dim * bins;
  out.conditional.assign(static_cast<std::size_t>(ds.num_classes()) * row_block, 0.0);

  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = ds.features(i);
    double* block = out.conditional.data() + static_cast<std::size_t>(ds.label(i)) * row_block;
    for (std::size_t d = 0; d < dim; ++d) block[d * bins + bin_index(f[d], lo, hi, bins)] += 1.0;
  }
  const auto counts = ds.label_counts();
  for (std::uint32_t c = 0; c < ds.num_classes(); ++c) {
    if (counts[c] == 0) continue;
    const double n = static_cast<double>(counts[c]);
    double* block = out.conditional.data() + static_cast<std::size_t>(c) * row_block;
    for (std::size_t j = 0; j < row_block; ++j) block[j] /= n;
  }
  return out;
}

}  // namespace fedsumm
