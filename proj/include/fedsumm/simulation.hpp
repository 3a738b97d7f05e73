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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fedsumm/clustering.hpp"
#include "fedsumm/coreset.hpp"
#include "fedsumm/embedder.hpp"
#include "fedsumm/error.hpp"
#include "fedsumm/matrix.hpp"
#include "fedsumm/parallel.hpp"
#include "fedsumm/population.hpp"
#include "fedsumm/rng.hpp"
#include "fedsumm/summary.hpp"

namespace fedsumm {

struct DeviceProfile {
  std::string client_id;
  // Samples processed per second.
  double compute_speed = 1.0;
  // Probability of being reachable in a given round.
  double availability = 1.0;
};

// Log-normal compute speeds and uniform availabilities.
struct ProfileSpec {
  double speed_median = 50.0;
  double speed_sigma = 0.5;
  double availability_min = 0.6;
  double availability_max = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(speed_median > 0.0 && std::isfinite(speed_median), "profiles: speed_median must be > 0");
    detail::require(speed_sigma >= 0.0 && std::isfinite(speed_sigma), "profiles: speed_sigma must be >= 0");
    detail::require(0.0 <= availability_min && availability_min <= availability_max && availability_max <= 1.0,
                    "profiles: need 0 <= availability_min <= availability_max <= 1");
  }
};

inline std::vector<DeviceProfile> generate_profiles(std::size_t num_clients, const ProfileSpec& spec) {
  spec.validate();
  std::vector<DeviceProfile> out(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) {
    auto rng = make_rng(spec.seed, {0x50524fULL, i});
    std::lognormal_distribution<double> speed(std::log(spec.speed_median), spec.speed_sigma);
    std::uniform_real_distribution<double> avail(spec.availability_min, spec.availability_max);
    out[i].client_id = Population::client_id(i);
    out[i].compute_speed = speed(rng);
    out[i].availability = spec.availability_min == spec.availability_max ? spec.availability_min : avail(rng);
  }
  return out;
}

struct DriftSpec {
  // Drift is applied after this round completes; unset means no drift.
  std::optional<std::size_t> round;
  // Fraction of clients moved to a different planted group.
  double fraction = 0.0;
};

inline constexpr std::string_view kWeightedRoundRobinPolicy = "weighted-rr-fastest";

struct SimConfig {
  std::size_t rounds = 20;
  std::size_t clients_per_round = 10;
  // Re-summarize and re-cluster on rounds r with r % T == 0; unset means only
  // at round 0.
  std::optional<std::size_t> resummarize_every = 1;
  DriftSpec drift;
  std::string policy = std::string(kWeightedRoundRobinPolicy);
  // 0 selects the population's planted group count.
  std::size_t cluster_k = 0;
  std::size_t coreset_k = kDefaultCoresetK;
  EmbedderSettings embedder;
  std::size_t kmeans_restarts = 1;
  std::size_t kmeans_max_iters = 300;
  std::size_t threads = 1;
  std::uint64_t seed = 0;

  void validate(std::size_t population_size) const {
    detail::require(rounds >= 1, "simulation: rounds must be >= 1");
    detail::require(clients_per_round >= 1, "simulation: clients_per_round must be >= 1");
    detail::require(clients_per_round <= population_size,
                    "simulation: clients_per_round exceeds the population size");
    detail::require(!resummarize_every || *resummarize_every >= 1, "simulation: resummarize_every must be >= 1");
    detail::require(drift.fraction >= 0.0 && drift.fraction <= 1.0, "simulation: drift fraction must be in [0, 1]");
    detail::require(policy == kWeightedRoundRobinPolicy, "simulation: unknown selection policy '" + policy + "'");
    detail::require(coreset_k >= 1, "simulation: coreset_k must be >= 1");
    detail::require(kmeans_restarts >= 1, "simulation: kmeans_restarts must be >= 1");
    detail::require(embedder.kind != EmbedderKind::precomputed,
                    "simulation: the precomputed embedder cannot summarize synthetic raw data");
  }
};

struct RoundLog {
  std::size_t round = 0;
  std::vector<std::string> selected;
  std::int32_t cluster = -1;
  // Modeled round duration: slowest selected client's samples / speed.
  double wall_time = 0.0;
  bool resummarized = false;
  // Current clustering vs the current planted groups.
  double ari = 0.0;

  friend bool operator==(const RoundLog&, const RoundLog&) = default;
};

// Whether a client is reachable in a round; a pure function of the seed so
// logs can be audited after the fact.
inline bool client_available(std::uint64_t seed, std::size_t round, std::size_t client, double availability) {
  auto rng = make_rng(seed, {0x415641494cULL, round, client});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < availability;
}

inline bool resummarizes_on(const SimConfig& cfg, std::size_t round) {
  return round == 0 || (cfg.resummarize_every && round % *cfg.resummarize_every == 0);
}

// Per-round view of simulator state handed to an optional observer.
struct RoundState {
  std::size_t round = 0;
  // client index -> cluster of the clustering used this round.
  const std::vector<std::int32_t>& assignment;
  // client index -> current planted group.
  const std::vector<std::uint32_t>& truth;
  const RoundLog& log;
};

using RoundObserver = std::function<void(const RoundState&)>;

inline std::vector<RoundLog> run_simulation(const Population& population, const std::vector<DeviceProfile>& profiles,
                                            const SimConfig& cfg, const RoundObserver& observer = {}) {
  const std::size_t n = population.size();
  cfg.validate(n);
  detail::require(profiles.size() == n, "simulation: profiles do not cover the population");
  for (std::size_t i = 0; i < n; ++i) {
    detail::require(profiles[i].client_id == Population::client_id(i),
                    "simulation: profile " + std::to_string(i) + " belongs to '" + profiles[i].client_id + "'");
    detail::require(profiles[i].compute_speed > 0.0, "simulation: compute_speed must be > 0");
    detail::require(profiles[i].availability >= 0.0 && profiles[i].availability <= 1.0,
                    "simulation: availability must be in [0, 1]");
  }
  const std::uint32_t groups = population.spec().group_count;
  const std::size_t k = cfg.cluster_k == 0 ? groups : cfg.cluster_k;
  detail::require(k <= n, "simulation: cluster_k exceeds the population size");
  const auto provider = cfg.embedder.make(population.spec().feature_dim);

  std::vector<std::uint32_t> truth = population.ground_truth();
  std::vector<ClientDataset> data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) data.push_back(population.client(i));

  std::vector<std::int32_t> assignment(n, 0);
  std::vector<std::vector<std::size_t>> members;
  // Round-robin credit per cluster index; carried across re-clusterings.
  std::vector<double> rr_weight(k, 0.0);
  std::uint64_t drift_epoch = 0;

  std::vector<RoundLog> logs;
  logs.reserve(cfg.rounds);
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    RoundLog log;
    log.round = round;
    if (resummarizes_on(cfg, round)) {
      const std::size_t h = provider.output_dim();
      Matrix points(n, DistributionSummary::length(population.spec().num_classes, h));
      parallel_for(n, cfg.threads, [&](std::size_t i) {
        const auto s = encoder_summary(data[i], cfg.coreset_k, provider, derive_seed(cfg.seed, {1, round, i}));
        std::copy(s.values.begin(), s.values.end(), points.row(i).begin());
      });
      KMeansOptions opts;
      opts.k = k;
      opts.seed = derive_seed(cfg.seed, {2, round});
      opts.restarts = cfg.kmeans_restarts;
      opts.max_iters = cfg.kmeans_max_iters;
      assignment = kmeans(points, opts).labels;
      // Renumber clusters by first member so ids (and round-robin credit)
      // stay attached to the same groups across re-clusterings.
      std::vector<std::int32_t> rename(k, -1);
      std::int32_t next_id = 0;
      for (auto& a : assignment) {
        auto& r = rename[static_cast<std::size_t>(a)];
        if (r < 0) r = next_id++;
        a = r;
      }
      members.assign(k, {});
      for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(assignment[i])].push_back(i);
      log.resummarized = true;
    }
    log.ari = adjusted_rand_index(truth, assignment);

    // Smooth weighted round-robin over non-empty clusters, weight = size.
    double total = 0.0;
    std::size_t chosen = k;
    for (std::size_t j = 0; j < k; ++j) {
      if (members[j].empty()) continue;
      rr_weight[j] += static_cast<double>(members[j].size());
      total += static_cast<double>(members[j].size());
      if (chosen == k || rr_weight[j] > rr_weight[chosen]) chosen = j;
    }
    rr_weight[chosen] -= total;
    log.cluster = static_cast<std::int32_t>(chosen);

    std::vector<std::size_t> available;
    for (auto i : members[chosen]) {
      if (client_available(cfg.seed, round, i, profiles[i].availability)) available.push_back(i);
    }
    std::stable_sort(available.begin(), available.end(), [&](std::size_t a, std::size_t b) {
      return profiles[a].compute_speed > profiles[b].compute_speed;
    });
    if (available.size() > cfg.clients_per_round) available.resize(cfg.clients_per_round);
    for (auto i : available) {
      log.selected.push_back(data[i].client_id());
      log.wall_time = std::max(log.wall_time, static_cast<double>(data[i].size()) / profiles[i].compute_speed);
    }
    if (observer) observer(RoundState{round, assignment, truth, log});
    logs.push_back(std::move(log));

    if (cfg.drift.round && *cfg.drift.round == round && groups > 1 && cfg.drift.fraction > 0.0) {
      ++drift_epoch;
      auto rng = make_rng(cfg.seed, {3, round});
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      const auto moved = static_cast<std::size_t>(std::llround(cfg.drift.fraction * static_cast<double>(n)));
      std::uniform_int_distribution<std::uint32_t> shift(1, groups - 1);
      for (std::size_t m = 0; m < moved; ++m) {
        const std::size_t i = order[m];
        truth[i] = (truth[i] + shift(rng)) % groups;
        data[i] = population.draw_client(i, truth[i], drift_epoch);
      }
    }
  }
  return logs;
}

// Fraction of rounds with a non-empty selection that drew from each cluster.
inline std::map<std::int32_t, double> selection_coverage(const std::vector<RoundLog>& logs) {
  detail::require(!logs.empty(), "selection_coverage: no round logs");
  std::map<std::int32_t, double> freq;
  double rounds = 0.0;
  for (const auto& log : logs) {
    if (log.selected.empty()) continue;
    freq[log.cluster] += 1.0;
    rounds += 1.0;
  }
  for (auto& [cluster, f] : freq) f /= rounds;
  return freq;
}

}  // namespace fedsumm
