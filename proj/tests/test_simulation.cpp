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

#include <numeric>

#include "fedsumm/simulation.hpp"

namespace fedsumm {
namespace {

PopulationSpec sim_spec(std::uint32_t groups, std::uint64_t seed) {
  PopulationSpec s;
  s.num_clients = 60;
  s.num_classes = 10;
  s.feature_dim = 24;
  s.group_count = groups;
  s.samples_per_client = {60.0, 20.0, 150};
  s.seed = seed;
  return s;
}

SimConfig sim_config(std::uint64_t seed) {
  SimConfig cfg;
  cfg.rounds = 8;
  cfg.clients_per_round = 5;
  cfg.coreset_k = 32;
  cfg.embedder.dim = 16;
  cfg.embedder.seed = seed;
  cfg.kmeans_restarts = 3;
  cfg.seed = seed;
  return cfg;
}

std::size_t index_of(const std::string& id) { return std::stoul(id.substr(id.find('-') + 1)); }

TEST(Simulation, SingleGroupHasPerfectAri) {
  const Population pop(sim_spec(1, 3));
  auto cfg = sim_config(3);
  const auto logs = run_simulation(pop, generate_profiles(pop.size(), {}), cfg);
  ASSERT_EQ(logs.size(), cfg.rounds);
  for (const auto& log : logs) {
    EXPECT_EQ(log.ari, 1.0);
    EXPECT_EQ(log.cluster, 0);
  }
}

TEST(Simulation, SelectionRespectsClusterAvailabilityAndSpeed) {
  const Population pop(sim_spec(3, 4));
  auto cfg = sim_config(4);
  cfg.rounds = 12;
  cfg.resummarize_every = 5;
  const auto profiles = generate_profiles(pop.size(), {.seed = 9});
  std::size_t observed = 0;
  const auto logs = run_simulation(pop, profiles, cfg, [&](const RoundState& st) {
    ++observed;
    EXPECT_EQ(st.log.resummarized, st.round % 5 == 0);
    std::size_t available = 0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (st.assignment[i] == st.log.cluster && client_available(cfg.seed, st.round, i, profiles[i].availability)) {
        ++available;
      }
    }
    EXPECT_EQ(st.log.selected.size(), std::min(cfg.clients_per_round, available));
    double slowest = 0.0;
    double min_speed = std::numeric_limits<double>::infinity();
    for (const auto& id : st.log.selected) {
      const auto i = index_of(id);
      EXPECT_EQ(st.assignment[i], st.log.cluster);
      EXPECT_TRUE(client_available(cfg.seed, st.round, i, profiles[i].availability));
      slowest = std::max(slowest, static_cast<double>(pop.client(i).size()) / profiles[i].compute_speed);
      min_speed = std::min(min_speed, profiles[i].compute_speed);
    }
    // No available, unselected member of the cluster is faster than a selected one.
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (st.assignment[i] != st.log.cluster || !client_available(cfg.seed, st.round, i, profiles[i].availability)) {
        continue;
      }
      if (std::find(st.log.selected.begin(), st.log.selected.end(), Population::client_id(i)) == st.log.selected.end()) {
        EXPECT_LE(profiles[i].compute_speed, min_speed);
      }
    }
    if (!st.log.selected.empty()) {
      EXPECT_GT(st.log.wall_time, 0.0);
      EXPECT_DOUBLE_EQ(st.log.wall_time, slowest);
    }
  });
  EXPECT_EQ(observed, logs.size());
}

TEST(Simulation, DeterministicForFixedSeed) {
  const Population pop(sim_spec(3, 5));
  auto cfg = sim_config(5);
  cfg.drift = {2, 0.3};
  const auto profiles = generate_profiles(pop.size(), {.seed = 1});
  const auto a = run_simulation(pop, profiles, cfg);
  cfg.threads = 4;
  const auto b = run_simulation(pop, profiles, cfg);
  EXPECT_EQ(a, b);
}

TEST(Simulation, RefreshedSummariesTrackDrift) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Population pop(sim_spec(3, seed));
    auto cfg = sim_config(seed);
    cfg.rounds = 5;
    cfg.drift = {2, 0.3};
    const auto profiles = generate_profiles(pop.size(), {.seed = seed});
    const auto fresh = run_simulation(pop, profiles, cfg);
    cfg.resummarize_every.reset();
    const auto stale = run_simulation(pop, profiles, cfg);
    EXPECT_GE(fresh[3].ari, 0.9) << "seed " << seed;
    EXPECT_GT(fresh[3].ari, stale[3].ari) << "seed " << seed;
    EXPECT_EQ(stale[0].ari, fresh[0].ari);
    EXPECT_FALSE(stale[3].resummarized);
  }
}

TEST(Simulation, UnavailableClientsGiveEmptySelections) {
  const Population pop(sim_spec(2, 1));
  auto profiles = generate_profiles(pop.size(), {});
  for (auto& p : profiles) p.availability = 0.0;
  auto cfg = sim_config(1);
  cfg.rounds = 3;
  const auto logs = run_simulation(pop, profiles, cfg);
  for (const auto& log : logs) {
    EXPECT_TRUE(log.selected.empty());
    EXPECT_EQ(log.wall_time, 0.0);
  }
  EXPECT_TRUE(selection_coverage(logs).empty());
}

TEST(Simulation, InvalidConfigurationsAreRejected) {
  const Population pop(sim_spec(2, 1));
  const auto profiles = generate_profiles(pop.size(), {});
  auto cfg = sim_config(1);
  cfg.resummarize_every = 0;
  EXPECT_THROW(run_simulation(pop, profiles, cfg), ValidationError);
  cfg = sim_config(1);
  cfg.clients_per_round = 61;
  EXPECT_THROW(run_simulation(pop, profiles, cfg), ValidationError);
  cfg = sim_config(1);
  cfg.drift.fraction = 1.5;
  EXPECT_THROW(run_simulation(pop, profiles, cfg), ValidationError);
  cfg = sim_config(1);
  EXPECT_THROW(run_simulation(pop, generate_profiles(3, {}), cfg), ValidationError);
}

TEST(Coverage, SingleClusterHasFrequencyOne) {
  std::vector<RoundLog> logs(5);
  for (auto& l : logs) {
    l.cluster = 2;
    l.selected = {"client-0"};
  }
  const auto cov = selection_coverage(logs);
  ASSERT_EQ(cov.size(), 1u);
  EXPECT_EQ(cov.at(2), 1.0);
  EXPECT_THROW(selection_coverage({}), ValidationError);
}

TEST(Coverage, BalancedGroupsAreVisitedEvenly) {
  constexpr std::uint32_t kGroups = 4;
  const Population pop(sim_spec(kGroups, 6));
  auto cfg = sim_config(6);
  cfg.rounds = 500;
  cfg.resummarize_every.reset();
  const auto profiles = generate_profiles(pop.size(), {.availability_min = 1.0, .seed = 2});
  const auto cov = selection_coverage(run_simulation(pop, profiles, cfg));
  ASSERT_EQ(cov.size(), kGroups);
  double total = 0.0;
  for (const auto& [cluster, f] : cov) {
    EXPECT_NEAR(f, 1.0 / kGroups, 0.1) << "cluster " << cluster;
    total += f;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Coverage, ClusterIdsStayStableAcrossReclusterings) {
  constexpr std::uint32_t kGroups = 4;
  const Population pop(sim_spec(kGroups, 6));
  auto cfg = sim_config(6);
  cfg.rounds = 40;
  cfg.resummarize_every = 1;
  const auto profiles = generate_profiles(pop.size(), {.availability_min = 1.0, .seed = 2});
  std::vector<std::int32_t> first;
  const auto logs = run_simulation(pop, profiles, cfg, [&](const RoundState& st) {
    if (first.empty()) first = st.assignment;
    // Same partition, same ids: cluster ids are numbered by first member.
    if (adjusted_rand_index(first, st.assignment) == 1.0) {
      EXPECT_EQ(st.assignment, first);
    }
    std::int32_t seen = -1;
    for (auto a : st.assignment) {
      EXPECT_LE(a, seen + 1);
      seen = std::max(seen, a);
    }
  });
  for (const auto& [cluster, f] : selection_coverage(logs)) EXPECT_NEAR(f, 1.0 / kGroups, 0.1) << cluster;
}

}  // namespace
}  // namespace fedsumm
