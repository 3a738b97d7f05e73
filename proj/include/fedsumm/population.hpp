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
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedsumm/dataset.hpp"
#include "fedsumm/error.hpp"
#include "fedsumm/rng.hpp"

namespace fedsumm {

// Per-client sample counts follow a log-normal with this mean and standard
// deviation, truncated at max (draws above max are redrawn).
struct SampleCountSpec {
  double mean = 109.0;
  double std = 211.63;
  std::uint32_t max = 6709;
};

struct PopulationSpec {
  std::uint32_t num_clients = 100;
  std::uint32_t num_classes = 10;
  std::uint32_t feature_dim = 64;
  SampleCountSpec samples_per_client;
  // Planted heterogeneity groups.
  std::uint32_t group_count = 1;
  // Dirichlet concentration of each group's label template.
  double dirichlet_alpha = 0.1;
  // How tightly a client's label distribution follows its group template
  // (Dirichlet(concentration * template)). Larger is tighter.
  double client_concentration = 50.0;
  // Gaussian feature noise around the per-(group, class) archetype.
  double noise_std = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(num_clients >= 1, "population: num_clients must be >= 1");
    detail::require(num_classes >= 1, "population: num_classes must be >= 1");
    detail::require(feature_dim >= 1, "population: feature_dim must be >= 1");
    detail::require(group_count >= 1, "population: group_count must be >= 1");
    detail::require(group_count <= num_clients, "population: group_count (" + std::to_string(group_count) +
                                                    ") must not exceed num_clients (" +
                                                    std::to_string(num_clients) + ")");
    detail::require(dirichlet_alpha > 0.0 && std::isfinite(dirichlet_alpha),
                    "population: dirichlet_alpha must be > 0");
    detail::require(client_concentration > 0.0 && std::isfinite(client_concentration),
                    "population: client_concentration must be > 0");
    detail::require(noise_std >= 0.0 && std::isfinite(noise_std), "population: noise_std must be >= 0");
    detail::require(samples_per_client.mean >= 1.0 && std::isfinite(samples_per_client.mean),
                    "population: samples_per_client.mean must be >= 1");
    detail::require(samples_per_client.std >= 0.0 && std::isfinite(samples_per_client.std),
                    "population: samples_per_client.std must be >= 0");
    detail::require(samples_per_client.max >= 1, "population: samples_per_client.max must be >= 1");
  }
};

// Synthetic non-IID population. Holds only the per-group templates; client
// datasets are drawn on demand from per-client derived seeds, so a client can
// be regenerated without materializing the whole population.
class Population {
 public:
  explicit Population(PopulationSpec spec) : spec_(spec) {
    spec_.validate();
    build_label_templates();
    assign_groups();
  }

  const PopulationSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return spec_.num_clients; }

  // Initial (pre-drift) planted group of a client. Evaluation only.
  std::uint32_t group_of(std::size_t client) const { return groups_.at(client); }
  const std::vector<std::uint32_t>& ground_truth() const noexcept { return groups_; }

  std::span<const double> label_template(std::uint32_t group) const {
    return {templates_.data() + static_cast<std::size_t>(group) * spec_.num_classes, spec_.num_classes};
  }

  static std::string client_id(std::size_t index) { return "client-" + std::to_string(index); }

  std::uint32_t sample_count(std::size_t client) const {
    auto rng = make_rng(spec_.seed, {kCountStream, client});
    const auto& s = spec_.samples_per_client;
    if (s.std == 0.0) return clamp_count(std::llround(s.mean));
    const double sigma2 = std::log1p((s.std * s.std) / (s.mean * s.mean));
    std::lognormal_distribution<double> dist(std::log(s.mean) - 0.5 * sigma2, std::sqrt(sigma2));
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const long long n = std::llround(dist(rng));
      if (n <= static_cast<long long>(s.max)) return clamp_count(n);
    }
    return s.max;
  }

  // Fixed per-(group, class) feature archetype with entries in [0, 1].
  std::vector<float> archetype(std::uint32_t group, std::uint32_t label) const {
    auto rng = make_rng(spec_.seed, {kArchetypeStream, group, label});
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::vector<float> a(spec_.feature_dim);
    for (auto& v : a) v = unit(rng);
    return a;
  }

  // Draws the dataset of `client` as if it belonged to `group`. `epoch`
  // distinguishes redraws of the same client (e.g. after drift).
  ClientDataset draw_client(std::size_t client, std::uint32_t group, std::uint64_t epoch = 0) const {
    detail::require(client < spec_.num_clients, "population: client index out of range");
    detail::require(group < spec_.group_count, "population: group index out of range");
    const std::uint32_t n = sample_count(client);
    const std::uint32_t num_classes = spec_.num_classes;
    const std::uint32_t dim = spec_.feature_dim;
    auto rng = make_rng(spec_.seed, {kClientStream, client, epoch});

    const auto tmpl = label_template(group);
    std::vector<double> dist(num_classes, 0.0);
    double total = 0.0;
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      if (tmpl[c] <= 0.0) continue;
      std::gamma_distribution<double> gamma(spec_.client_concentration * tmpl[c], 1.0);
      dist[c] = gamma(rng);
      total += dist[c];
    }
    if (!(total > 0.0)) dist.assign(tmpl.begin(), tmpl.end());

    std::discrete_distribution<std::uint32_t> pick(dist.begin(), dist.end());
    std::normal_distribution<float> noise(0.0f, static_cast<float>(spec_.noise_std));
    std::vector<std::vector<float>> cache(num_classes);

    std::vector<std::uint32_t> labels(n);
    std::vector<float> features(static_cast<std::size_t>(n) * dim);
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::uint32_t label = pick(rng);
      labels[i] = label;
      if (cache[label].empty()) cache[label] = archetype(group, label);
      const auto& arch = cache[label];
      float* row = features.data() + static_cast<std::size_t>(i) * dim;
      for (std::uint32_t d = 0; d < dim; ++d) {
        const float v = spec_.noise_std > 0.0 ? arch[d] + noise(rng) : arch[d];
        row[d] = std::clamp(v, 0.0f, 1.0f);
      }
    }
    return ClientDataset(client_id(client), num_classes, dim, DataKind::raw, std::move(labels), std::move(features));
  }

  ClientDataset client(std::size_t index) const { return draw_client(index, group_of(index), 0); }

 private:
  static constexpr std::uint64_t kTemplateStream = 1;
  static constexpr std::uint64_t kGroupStream = 2;
  static constexpr std::uint64_t kCountStream = 3;
  static constexpr std::uint64_t kArchetypeStream = 4;
  static constexpr std::uint64_t kClientStream = 5;

  std::uint32_t clamp_count(long long n) const {
    return static_cast<std::uint32_t>(std::clamp<long long>(n, 1, spec_.samples_per_client.max));
  }

  void build_label_templates() {
    const std::uint32_t num_classes = spec_.num_classes;
    templates_.assign(static_cast<std::size_t>(spec_.group_count) * num_classes, 0.0);
    for (std::uint32_t g = 0; g < spec_.group_count; ++g) {
      auto rng = make_rng(spec_.seed, {kTemplateStream, g});
      std::gamma_distribution<double> gamma(spec_.dirichlet_alpha, 1.0);
      double* t = templates_.data() + static_cast<std::size_t>(g) * num_classes;
      double total = 0.0;
      for (std::uint32_t c = 0; c < num_classes; ++c) {
        t[c] = gamma(rng);
        total += t[c];
      }
      if (total > 0.0) {
        for (std::uint32_t c = 0; c < num_classes; ++c) t[c] /= total;
      } else {
        // Every gamma draw underflowed (tiny alpha): degenerate one-hot template.
        std::uniform_int_distribution<std::uint32_t> any(0, num_classes - 1);
        t[any(rng)] = 1.0;
      }
    }
  }

  void assign_groups() {
    groups_.resize(spec_.num_clients);
    for (std::uint32_t i = 0; i < spec_.num_clients; ++i) groups_[i] = i % spec_.group_count;
    auto rng = make_rng(spec_.seed, {kGroupStream});
    std::shuffle(groups_.begin(), groups_.end(), rng);
  }

  PopulationSpec spec_;
  std::vector<double> templates_;
  std::vector<std::uint32_t> groups_;
};

struct GeneratedPopulation {
  std::vector<ClientDataset> clients;
  // client index -> planted group. Evaluation only.
  std::vector<std::uint32_t> ground_truth;
};

inline GeneratedPopulation generate_population(const PopulationSpec& spec) {
  Population population(spec);
  GeneratedPopulation out;
  out.clients.reserve(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) out.clients.push_back(population.client(i));
  out.ground_truth = population.ground_truth();
  return out;
}

// Mean pairwise L1 distance between empirical label distributions, split into
// same-group and cross-group pairs.
struct LabelSeparation {
  double within = 0.0;
  double across = 0.0;
};

inline std::vector<double> empirical_label_distribution(const ClientDataset& ds) {
  std::vector<double> p(ds.num_classes(), 0.0);
  for (auto label : ds.labels()) p[label] += 1.0;
  for (auto& v : p) v /= static_cast<double>(ds.size());
  return p;
}

inline LabelSeparation label_separation(const std::vector<ClientDataset>& clients,
                                        const std::vector<std::uint32_t>& groups) {
  detail::require(clients.size() == groups.size(), "label_separation: clients and groups differ in size");
  std::vector<std::vector<double>> dists;
  dists.reserve(clients.size());
  for (const auto& c : clients) dists.push_back(empirical_label_distribution(c));
  double within = 0.0, across = 0.0;
  std::size_t nw = 0, na = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (std::size_t j = i + 1; j < dists.size(); ++j) {
      double l1 = 0.0;
      for (std::size_t c = 0; c < dists[i].size(); ++c) l1 += std::abs(dists[i][c] - dists[j][c]);
      if (groups[i] == groups[j]) {
        within += l1;
        ++nw;
      } else {
        across += l1;
        ++na;
      }
    }
  }
  return {nw ? within / static_cast<double>(nw) : 0.0, na ? across / static_cast<double>(na) : 0.0};
}

}  // namespace fedsumm
