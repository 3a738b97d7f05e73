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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedsumm/embedder.hpp"

namespace fedsumm {
namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TEST(Embedder, IdentityPassesThrough) {
  const auto p = EmbeddingProvider::identity(2);
  EXPECT_EQ(p.embed(std::vector<double>{0.2, 0.8}), (std::vector<double>{0.2, 0.8}));
}

TEST(Embedder, ProjectionOfZeroIsZero) {
  const auto p = EmbeddingProvider::random_projection(10, 4, 3);
  for (double v : p.embed(std::vector<double>(10, 0.0))) EXPECT_EQ(v, 0.0);
}

TEST(Embedder, ProjectionRoughlyPreservesDistances) {
  constexpr std::uint32_t kD = 100, kH = 16;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  int within = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = EmbeddingProvider::random_projection(kD, kH, static_cast<std::uint64_t>(trial));
    std::vector<double> a(kD), b(kD), diff(kD);
    for (std::uint32_t d = 0; d < kD; ++d) {
      a[d] = g(rng);
      b[d] = g(rng);
      diff[d] = a[d] - b[d];
    }
    const auto ea = p.embed(a);
    const auto eb = p.embed(b);
    std::vector<double> ediff(kH);
    for (std::uint32_t h = 0; h < kH; ++h) ediff[h] = ea[h] - eb[h];
    const double rel = std::abs(norm(ediff) - norm(diff)) / norm(diff);
    if (rel <= 0.5) ++within;
  }
  EXPECT_GE(within, 900);
}

TEST(Embedder, ProjectionIsExactlyHomogeneousForPowersOfTwo) {
  const auto p = EmbeddingProvider::random_projection(32, 8, 17);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(32);
  for (auto& v : x) v = u(rng);
  const auto base = p.embed(x);
  for (double alpha : {0.25, 2.0, -8.0, 1024.0}) {
    std::vector<double> scaled(x);
    for (auto& v : scaled) v *= alpha;
    const auto y = p.embed(scaled);
    for (std::size_t h = 0; h < y.size(); ++h) EXPECT_EQ(y[h], alpha * base[h]);
  }
}

TEST(Embedder, SignEntriesAreScaledByInverseSqrtH) {
  constexpr std::uint32_t kH = 9;
  const auto p = EmbeddingProvider::random_projection(5, kH, 4);
  for (std::uint32_t d = 0; d < 5; ++d) {
    std::vector<double> e(5, 0.0);
    e[d] = 1.0;
    for (double v : p.embed(e)) EXPECT_NEAR(std::abs(v), 1.0 / 3.0, 1e-15);
  }
}

TEST(Embedder, DeterministicForSeedAndDistinctAcrossSeeds) {
  const std::vector<float> x{0.1f, 0.7f, 0.3f, 0.9f};
  const auto a = EmbeddingProvider::random_projection(4, 6, 5).embed(x);
  const auto b = EmbeddingProvider::random_projection(4, 6, 5).embed(x);
  const auto c = EmbeddingProvider::random_projection(4, 6, 6).embed(x);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Embedder, BatchEmbeddingPreservesCount) {
  const auto p = EmbeddingProvider::random_projection(3, 2, 1);
  const std::vector<std::vector<double>> xs{{1, 2, 3}, {0, 0, 1}, {4, 4, 4}};
  const auto ys = p.embed(xs);
  ASSERT_EQ(ys.size(), 3u);
  EXPECT_EQ(ys[1], p.embed(xs[1]));
}

TEST(Embedder, UnitNormOption) {
  const auto p = EmbeddingProvider::random_projection(6, 4, 2, true);
  EXPECT_NEAR(norm(p.embed(std::vector<double>{1, 2, 3, 4, 5, 6})), 1.0, 1e-12);
  const auto id = EmbeddingProvider::identity(2, true);
  const auto y = id.embed(std::vector<double>{3, 4});
  EXPECT_NEAR(y[0], 0.6, 1e-15);
  EXPECT_NEAR(y[1], 0.8, 1e-15);
}

TEST(Embedder, Errors) {
  const auto p = EmbeddingProvider::random_projection(4, 2, 0);
  EXPECT_THROW(p.embed(std::vector<double>{1, 2, 3}), ValidationError);
  try {
    EmbeddingProvider::precomputed(4).embed(std::vector<double>{1, 2, 3, 4});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("import"), std::string::npos);
  }
  EXPECT_THROW(EmbeddingProvider::random_projection(4, 0, 0), ValidationError);
  EXPECT_THROW(parse_embedder_kind("pca"), ValidationError);
  EXPECT_EQ(parse_embedder_kind("randproj"), EmbedderKind::random_projection);
}

}  // namespace
}  // namespace fedsumm
