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

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedsumm/error.hpp"
#include "fedsumm/rng.hpp"

namespace fedsumm {

inline constexpr std::uint32_t kDefaultEmbedDim = 64;

enum class EmbedderKind { identity, random_projection, precomputed };

inline std::string_view to_string(EmbedderKind kind) {
  switch (kind) {
    case EmbedderKind::identity: return "identity";
    case EmbedderKind::random_projection: return "randproj";
    case EmbedderKind::precomputed: return "precomputed";
  }
  return "?";
}

inline EmbedderKind parse_embedder_kind(std::string_view s) {
  if (s == "identity") return EmbedderKind::identity;
  if (s == "randproj") return EmbedderKind::random_projection;
  if (s == "precomputed") return EmbedderKind::precomputed;
  throw ValidationError("unknown embedder '" + std::string(s) + "' (expected identity|randproj|precomputed)");
}

// Maps D-dimensional raw features to H-dimensional embeddings.
//
// The random projection uses a fixed D x H sign matrix scaled by 1/sqrt(H):
// out[h] = (sum_d sign[d][h] * x[d]) / sqrt(H). Accumulation order is fixed, so
// outputs are deterministic and scaling the input by a power of two scales
// the output exactly.
//
// `precomputed` stands for embeddings produced offline and imported from FDSM
// files; it never embeds raw features itself.
class EmbeddingProvider {
 public:
  static EmbeddingProvider identity(std::uint32_t dim, bool unit_norm = false) {
    detail::require(dim >= 1, "embedder: dimension must be >= 1");
    return EmbeddingProvider(EmbedderKind::identity, dim, dim, 0, unit_norm);
  }

  static EmbeddingProvider random_projection(std::uint32_t input_dim, std::uint32_t output_dim, std::uint64_t seed,
                                             bool unit_norm = false) {
    detail::require(input_dim >= 1, "embedder: input dimension must be >= 1");
    detail::require(output_dim >= 1, "embedder: output dimension H must be >= 1");
    EmbeddingProvider p(EmbedderKind::random_projection, input_dim, output_dim, seed, unit_norm);
    auto signs = std::make_shared<std::vector<double>>(static_cast<std::size_t>(input_dim) * output_dim);
    auto rng = make_rng(seed, {0x5052ULL});
    std::bernoulli_distribution coin(0.5);
    for (auto& s : *signs) s = coin(rng) ? 1.0 : -1.0;
    p.signs_ = std::move(signs);
    return p;
  }

  static EmbeddingProvider precomputed(std::uint32_t dim) {
    detail::require(dim >= 1, "embedder: dimension must be >= 1");
    return EmbeddingProvider(EmbedderKind::precomputed, dim, dim, 0, false);
  }

  EmbedderKind kind() const noexcept { return kind_; }
  std::string name() const { return std::string(to_string(kind_)); }
  std::uint32_t input_dim() const noexcept { return input_dim_; }
  std::uint32_t output_dim() const noexcept { return output_dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool unit_norm() const noexcept { return unit_norm_; }

  // Embeds `rows` consecutive D-dimensional vectors stored in `features` and
  // appends the H-dimensional results to `out`.
  template <typename T>
  void embed_rows(std::span<const T> features, std::size_t rows, std::vector<double>& out) const {
    if (kind_ == EmbedderKind::precomputed) {
      throw ValidationError(
          "embedder 'precomputed' cannot embed raw features; import embeddings from an FDSM dataset file instead");
    }
    detail::require(features.size() == rows * input_dim_,
                    "embedder: input dimension mismatch (expected " + std::to_string(input_dim_) + ")");
    const std::size_t base = out.size();
    out.resize(base + rows * output_dim_, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(output_dim_));
    for (std::size_t r = 0; r < rows; ++r) {
      const T* x = features.data() + r * input_dim_;
      double* y = out.data() + base + r * output_dim_;
      if (kind_ == EmbedderKind::identity) {
        for (std::uint32_t d = 0; d < input_dim_; ++d) y[d] = static_cast<double>(x[d]);
      } else {
        const double* s = signs_->data();
        for (std::uint32_t d = 0; d < input_dim_; ++d) {
          const double xd = static_cast<double>(x[d]);
          const double* srow = s + static_cast<std::size_t>(d) * output_dim_;
          for (std::uint32_t h = 0; h < output_dim_; ++h) y[h] += srow[h] * xd;
        }
        for (std::uint32_t h = 0; h < output_dim_; ++h) y[h] *= scale;
      }
      if (unit_norm_) normalize(std::span<double>(y, output_dim_));
    }
  }

  template <typename T>
  std::vector<double> embed(std::span<const T> x) const {
    std::vector<double> out;
    out.reserve(output_dim_);
    embed_rows(x, 1, out);
    return out;
  }

  std::vector<double> embed(const std::vector<double>& x) const { return embed(std::span<const double>(x)); }
  std::vector<double> embed(const std::vector<float>& x) const { return embed(std::span<const float>(x)); }

  // Batch form: one output vector per input vector.
  template <typename T>
  std::vector<std::vector<double>> embed(const std::vector<std::vector<T>>& samples) const {
    std::vector<std::vector<double>> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(embed(std::span<const T>(s)));
    return out;
  }

 private:
  EmbeddingProvider(EmbedderKind kind, std::uint32_t in, std::uint32_t out, std::uint64_t seed, bool unit_norm)
      : kind_(kind), input_dim_(in), output_dim_(out), seed_(seed), unit_norm_(unit_norm) {}

  static void normalize(std::span<double> y) {
    double n2 = 0.0;
    for (double v : y) n2 += v * v;
    if (n2 <= 0.0) return;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& v : y) v *= inv;
  }

  EmbedderKind kind_;
  std::uint32_t input_dim_;
  std::uint32_t output_dim_;
  std::uint64_t seed_;
  bool unit_norm_;
  // D x H signs, row-major by input dimension. Shared: providers are immutable.
  std::shared_ptr<const std::vector<double>> signs_;
};

}  // namespace fedsumm

namespace fedsumm {

// Provider settings as they appear in run configurations.
struct EmbedderSettings {
  EmbedderKind kind = EmbedderKind::random_projection;
  std::uint32_t dim = kDefaultEmbedDim;
  std::uint64_t seed = 0;
  bool unit_norm = false;

  // `data_dim` is the dimension of the datasets the provider will see.
  EmbeddingProvider make(std::uint32_t data_dim) const {
    switch (kind) {
      case EmbedderKind::identity: return EmbeddingProvider::identity(data_dim, unit_norm);
      case EmbedderKind::random_projection: return EmbeddingProvider::random_projection(data_dim, dim, seed, unit_norm);
      case EmbedderKind::precomputed: return EmbeddingProvider::precomputed(data_dim);
    }
    throw ValidationError("unknown embedder kind");
  }
};

}  // namespace fedsumm
