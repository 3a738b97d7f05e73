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

// Resolved run configuration shared by every fedsumm subcommand. Configs are
// JSON; unknown keys are rejected and to_json() emits every field with its
// resolved value, so an echoed config reproduces the run.

#include <cstdint>
#include <limits>
#include <type_traits>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fedsumm/bench.hpp"
#include "fedsumm/clustering.hpp"
#include "fedsumm/embedder.hpp"
#include "fedsumm/error.hpp"
#include "fedsumm/population.hpp"
#include "fedsumm/simulation.hpp"
#include "fedsumm/summary.hpp"

namespace fedsumm {

struct SummarySettings {
  std::string method = "encoder";
  std::uint32_t bins = kDefaultBins;
  double lo = 0.0;
  double hi = 1.0;
};

struct ClusteringSettings {
  std::string method = "kmeans";
  // 0 selects the planted group count where one is known.
  std::size_t k = 0;
  KMeansInit init = KMeansInit::kmeans_plus_plus;
  std::size_t max_iters = 300;
  double tol = 0.0;
  std::size_t restarts = 1;
  double eps = 0.5;
  std::size_t min_pts = 5;
};

struct SimulationSettings {
  std::size_t rounds = 20;
  std::size_t clients_per_round = 10;
  std::optional<std::size_t> resummarize_every = 1;
  std::optional<std::size_t> drift_round;
  double drift_fraction = 0.0;
  std::string policy = std::string(kWeightedRoundRobinPolicy);
  ProfileSpec profiles;
};

struct BenchSettings {
  double conditional_eps = 20.0;
  double time_budget_s = 120.0;
  std::size_t resident_limit_bytes = std::size_t{1536} << 20;
  bool baselines_with_kmeans = false;
  bool weighted_variant = false;
  bool matched_variant = false;
  std::string machine_note;
  // csv | table
  std::string format = "csv";
};

struct PathSettings {
  std::string in;
  std::string out;
  std::string truth_out;
  // Evaluation only: planted ground truth to score clusterings against.
  std::string truth;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  PopulationSpec population;
  std::size_t coreset_k = kDefaultCoresetK;
  EmbedderSettings embedder;
  SummarySettings summary;
  ClusteringSettings clustering;
  SimulationSettings simulation;
  BenchSettings bench;
  PathSettings paths;

  PopulationSpec population_spec() const {
    PopulationSpec s = population;
    s.seed = seed;
    return s;
  }

  SimConfig sim_config() const {
    SimConfig c;
    c.rounds = simulation.rounds;
    c.clients_per_round = simulation.clients_per_round;
    c.resummarize_every = simulation.resummarize_every;
    c.drift.round = simulation.drift_round;
    c.drift.fraction = simulation.drift_fraction;
    c.policy = simulation.policy;
    c.cluster_k = clustering.k;
    c.coreset_k = coreset_k;
    c.embedder = embedder;
    c.kmeans_restarts = clustering.restarts;
    c.kmeans_max_iters = clustering.max_iters;
    c.threads = threads;
    c.seed = seed;
    return c;
  }

  ProfileSpec profile_spec() const {
    ProfileSpec p = simulation.profiles;
    p.seed = seed;
    return p;
  }

  BenchConfig bench_config() const {
    BenchConfig b;
    b.coreset_k = coreset_k;
    b.embedder = embedder;
    b.bins = summary.bins;
    b.lo = summary.lo;
    b.hi = summary.hi;
    b.cluster_k = clustering.k;
    b.kmeans_max_iters = clustering.max_iters;
    b.kmeans_restarts = clustering.restarts;
    b.eps = clustering.eps;
    b.conditional_eps = bench.conditional_eps;
    b.min_pts = clustering.min_pts;
    b.time_budget_s = bench.time_budget_s;
    b.resident_limit_bytes = bench.resident_limit_bytes;
    b.baselines_with_kmeans = bench.baselines_with_kmeans;
    b.weighted_variant = bench.weighted_variant;
    b.matched_variant = bench.matched_variant;
    b.threads = threads;
    b.seed = seed;
    b.machine_note = bench.machine_note;
    return b;
  }
};

namespace detail {

using nlohmann::json;

// Reads keys from one JSON object, remembering which were consumed so the
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config key '" + display() + "' must be an object");
  }

  ~ObjectReader() = default;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    read_value(*it, qualified(key), out);
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    T v{};
    read_value(*it, qualified(key), v);
    out = v;
  }

  ObjectReader child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    static const json kEmpty = json::object();
    return ObjectReader(it == j_.end() ? kEmpty : *it, qualified(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError("unknown config key '" + qualified(it.key()) + "'");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static void read_value(const json& v, const std::string& key, std::string& out) {
    if (!v.is_string()) throw ValidationError("config key '" + key + "' must be a string");
    out = v.get<std::string>();
  }
  static void read_value(const json& v, const std::string& key, bool& out) {
    if (!v.is_boolean()) throw ValidationError("config key '" + key + "' must be a boolean");
    out = v.get<bool>();
  }
  static void read_value(const json& v, const std::string& key, double& out) {
    if (!v.is_number()) throw ValidationError("config key '" + key + "' must be a number");
    out = v.get<double>();
  }
  template <typename T>
    requires std::is_unsigned_v<T>
  static void read_value(const json& v, const std::string& key, T& out) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > std::numeric_limits<T>::max()) {
      throw ValidationError("config key '" + key + "' must be a non-negative integer");
    }
    out = static_cast<T>(v.get<std::uint64_t>());
  }
  static void read_value(const json& v, const std::string& key, EmbedderKind& out) {
    std::string s;
    read_value(v, key, s);
    try {
      out = parse_embedder_kind(s);
    } catch (const ValidationError& e) {
      throw ValidationError("config key '" + key + "': " + e.what());
    }
  }
  static void read_value(const json& v, const std::string& key, KMeansInit& out) {
    std::string s;
    read_value(v, key, s);
    try {
      out = parse_kmeans_init(s);
    } catch (const ValidationError& e) {
      throw ValidationError("config key '" + key + "': " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json optional_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j, RunConfig cfg = {}) {
  detail::ObjectReader root(j, "");
  root.get("command", cfg.command);
  root.get("seed", cfg.seed);
  root.get("threads", cfg.threads);
  root.get("coreset_k", cfg.coreset_k);
  {
    auto p = root.child("population");
    p.get("num_clients", cfg.population.num_clients);
    p.get("num_classes", cfg.population.num_classes);
    p.get("feature_dim", cfg.population.feature_dim);
    p.get("group_count", cfg.population.group_count);
    p.get("dirichlet_alpha", cfg.population.dirichlet_alpha);
    p.get("client_concentration", cfg.population.client_concentration);
    p.get("noise_std", cfg.population.noise_std);
    auto s = p.child("samples_per_client");
    s.get("mean", cfg.population.samples_per_client.mean);
    s.get("std", cfg.population.samples_per_client.std);
    s.get("max", cfg.population.samples_per_client.max);
    s.finish();
    p.finish();
  }
  {
    auto e = root.child("embedder");
    e.get("kind", cfg.embedder.kind);
    e.get("dim", cfg.embedder.dim);
    e.get("seed", cfg.embedder.seed);
    e.get("unit_norm", cfg.embedder.unit_norm);
    e.finish();
  }
  {
    auto s = root.child("summary");
    s.get("method", cfg.summary.method);
    s.get("bins", cfg.summary.bins);
    s.get("lo", cfg.summary.lo);
    s.get("hi", cfg.summary.hi);
    s.finish();
  }
  {
    auto c = root.child("clustering");
    c.get("method", cfg.clustering.method);
    c.get("k", cfg.clustering.k);
    c.get("init", cfg.clustering.init);
    c.get("max_iters", cfg.clustering.max_iters);
    c.get("tol", cfg.clustering.tol);
    c.get("restarts", cfg.clustering.restarts);
    c.get("eps", cfg.clustering.eps);
    c.get("min_pts", cfg.clustering.min_pts);
    c.finish();
  }
  {
    auto s = root.child("simulation");
    s.get("rounds", cfg.simulation.rounds);
    s.get("clients_per_round", cfg.simulation.clients_per_round);
    s.get_optional("resummarize_every", cfg.simulation.resummarize_every);
    s.get("policy", cfg.simulation.policy);
    auto d = s.child("drift");
    d.get_optional("round", cfg.simulation.drift_round);
    d.get("fraction", cfg.simulation.drift_fraction);
    d.finish();
    auto p = s.child("profiles");
    p.get("speed_median", cfg.simulation.profiles.speed_median);
    p.get("speed_sigma", cfg.simulation.profiles.speed_sigma);
    p.get("availability_min", cfg.simulation.profiles.availability_min);
    p.get("availability_max", cfg.simulation.profiles.availability_max);
    p.finish();
    s.finish();
  }
  {
    auto b = root.child("bench");
    b.get("conditional_eps", cfg.bench.conditional_eps);
    b.get("time_budget_s", cfg.bench.time_budget_s);
    b.get("resident_limit_bytes", cfg.bench.resident_limit_bytes);
    b.get("baselines_with_kmeans", cfg.bench.baselines_with_kmeans);
    b.get("weighted_variant", cfg.bench.weighted_variant);
    b.get("matched_variant", cfg.bench.matched_variant);
    b.get("machine_note", cfg.bench.machine_note);
    b.get("format", cfg.bench.format);
    b.finish();
  }
  {
    auto p = root.child("paths");
    p.get("in", cfg.paths.in);
    p.get("out", cfg.paths.out);
    p.get("truth_out", cfg.paths.truth_out);
    p.get("truth", cfg.paths.truth);
    p.finish();
  }
  root.finish();
  return cfg;
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  using nlohmann::json;
  const auto& pop = cfg.population;
  const auto& sim = cfg.simulation;
  return json{
      {"command", cfg.command},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"coreset_k", cfg.coreset_k},
      {"population",
       {{"num_clients", pop.num_clients},
        {"num_classes", pop.num_classes},
        {"feature_dim", pop.feature_dim},
        {"group_count", pop.group_count},
        {"dirichlet_alpha", pop.dirichlet_alpha},
        {"client_concentration", pop.client_concentration},
        {"noise_std", pop.noise_std},
        {"samples_per_client",
         {{"mean", pop.samples_per_client.mean},
          {"std", pop.samples_per_client.std},
          {"max", pop.samples_per_client.max}}}}},
      {"embedder",
       {{"kind", to_string(cfg.embedder.kind)},
        {"dim", cfg.embedder.dim},
        {"seed", cfg.embedder.seed},
        {"unit_norm", cfg.embedder.unit_norm}}},
      {"summary",
       {{"method", cfg.summary.method}, {"bins", cfg.summary.bins}, {"lo", cfg.summary.lo}, {"hi", cfg.summary.hi}}},
      {"clustering",
       {{"method", cfg.clustering.method},
        {"k", cfg.clustering.k},
        {"init", to_string(cfg.clustering.init)},
        {"max_iters", cfg.clustering.max_iters},
        {"tol", cfg.clustering.tol},
        {"restarts", cfg.clustering.restarts},
        {"eps", cfg.clustering.eps},
        {"min_pts", cfg.clustering.min_pts}}},
      {"simulation",
       {{"rounds", sim.rounds},
        {"clients_per_round", sim.clients_per_round},
        {"resummarize_every", detail::optional_json(sim.resummarize_every)},
        {"policy", sim.policy},
        {"drift", {{"round", detail::optional_json(sim.drift_round)}, {"fraction", sim.drift_fraction}}},
        {"profiles",
         {{"speed_median", sim.profiles.speed_median},
          {"speed_sigma", sim.profiles.speed_sigma},
          {"availability_min", sim.profiles.availability_min},
          {"availability_max", sim.profiles.availability_max}}}}},
      {"bench",
       {{"conditional_eps", cfg.bench.conditional_eps},
        {"time_budget_s", cfg.bench.time_budget_s},
        {"resident_limit_bytes", cfg.bench.resident_limit_bytes},
        {"baselines_with_kmeans", cfg.bench.baselines_with_kmeans},
        {"weighted_variant", cfg.bench.weighted_variant},
        {"matched_variant", cfg.bench.matched_variant},
        {"machine_note", cfg.bench.machine_note},
        {"format", cfg.bench.format}}},
      {"paths",
       {{"in", cfg.paths.in}, {"out", cfg.paths.out}, {"truth_out", cfg.paths.truth_out}, {"truth", cfg.paths.truth}}},
  };
}

}  // namespace fedsumm
