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

// fedsumm: generate synthetic client populations, compute distribution
// summaries, cluster them, simulate cluster-based client selection and run the
// overhead benchmark.
//
// Exit codes: 0 success, 1 validation error (bad flags/config/spec), 2 runtime
// error (I/O, malformed FDSM input).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedsumm/config.hpp"
#include "fedsumm/fedsumm.hpp"

namespace {

using fedsumm::RunConfig;
using nlohmann::json;

// Flag overrides applied on top of the config file.
class Overrides {
 public:
  template <typename T>
  void option(CLI::App* app, const std::string& name, const std::string& desc,
              std::function<void(RunConfig&, const T&)> apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, desc);
    actions_.push_back([opt, value, apply](RunConfig& cfg) {
      if (opt->count() > 0) apply(cfg, *value);
    });
  }

  void flag(CLI::App* app, const std::string& name, const std::string& desc, std::function<void(RunConfig&)> apply) {
    CLI::Option* opt = app->add_flag(name, desc);
    actions_.push_back([opt, apply](RunConfig& cfg) {
      if (opt->count() > 0) apply(cfg);
    });
  }

  void apply(RunConfig& cfg) const {
    for (const auto& a : actions_) a(cfg);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> actions_;
};

void common_options(CLI::App* app, Overrides& o, std::string& config_path) {
  app->add_option("--config", config_path, "JSON run configuration (flags override its values)");
  o.option<std::uint64_t>(app, "--seed", "global seed", [](RunConfig& c, const std::uint64_t& v) { c.seed = v; });
  o.option<std::size_t>(app, "--threads", "worker cap", [](RunConfig& c, const std::size_t& v) { c.threads = v; });
}

void population_options(CLI::App* app, Overrides& o) {
  o.option<std::uint32_t>(app, "--clients", "number of clients",
                          [](RunConfig& c, const std::uint32_t& v) { c.population.num_clients = v; });
  o.option<std::uint32_t>(app, "--classes", "number of classes C",
                          [](RunConfig& c, const std::uint32_t& v) { c.population.num_classes = v; });
  o.option<std::uint32_t>(app, "--dim", "raw feature dimension D",
                          [](RunConfig& c, const std::uint32_t& v) { c.population.feature_dim = v; });
  o.option<std::uint32_t>(app, "--groups", "planted heterogeneity groups",
                          [](RunConfig& c, const std::uint32_t& v) { c.population.group_count = v; });
  o.option<double>(app, "--alpha", "Dirichlet concentration of group label templates",
                   [](RunConfig& c, const double& v) { c.population.dirichlet_alpha = v; });
  o.option<double>(app, "--samples-mean", "mean samples per client",
                   [](RunConfig& c, const double& v) { c.population.samples_per_client.mean = v; });
  o.option<double>(app, "--samples-std", "std of samples per client",
                   [](RunConfig& c, const double& v) { c.population.samples_per_client.std = v; });
  o.option<std::uint32_t>(app, "--samples-max", "max samples per client",
                          [](RunConfig& c, const std::uint32_t& v) { c.population.samples_per_client.max = v; });
  o.option<double>(app, "--noise", "feature noise std",
                   [](RunConfig& c, const double& v) { c.population.noise_std = v; });
}

void embedder_options(CLI::App* app, Overrides& o) {
  o.option<std::size_t>(app, "--coreset-k", "coreset size per client",
                        [](RunConfig& c, const std::size_t& v) { c.coreset_k = v; });
  o.option<std::string>(app, "--embedder", "identity|randproj|precomputed", [](RunConfig& c, const std::string& v) {
    c.embedder.kind = fedsumm::parse_embedder_kind(v);
  });
  o.option<std::uint32_t>(app, "--embed-dim", "embedding dimension H",
                          [](RunConfig& c, const std::uint32_t& v) { c.embedder.dim = v; });
  o.option<std::uint64_t>(app, "--embed-seed", "random projection seed",
                          [](RunConfig& c, const std::uint64_t& v) { c.embedder.seed = v; });
  o.flag(app, "--unit-norm", "normalize embeddings to unit length", [](RunConfig& c) { c.embedder.unit_norm = true; });
}

void path_options(CLI::App* app, Overrides& o, bool with_in) {
  if (with_in) {
    o.option<std::string>(app, "--in", "input file", [](RunConfig& c, const std::string& v) { c.paths.in = v; });
  }
  o.option<std::string>(app, "--out", "output file", [](RunConfig& c, const std::string& v) { c.paths.out = v; });
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw fedsumm::ValidationError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw fedsumm::ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return fedsumm::parse_run_config(j);
}

std::ofstream open_out(const std::string& path) {
  if (path.empty()) throw fedsumm::ValidationError("an output path is required (--out or paths.out)");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void require_input(const RunConfig& cfg) {
  if (cfg.paths.in.empty()) throw fedsumm::ValidationError("an input path is required (--in or paths.in)");
}

int run_generate(const RunConfig& cfg) {
  const fedsumm::Population population(cfg.population_spec());
  {
    auto out = open_out(cfg.paths.out);
    fedsumm::fdsm::Writer writer(out);
    for (std::size_t i = 0; i < population.size(); ++i) writer.write(population.client(i));
    writer.flush();
  }
  if (!cfg.paths.truth_out.empty()) {
    json assignments = json::object();
    for (std::size_t i = 0; i < population.size(); ++i) {
      assignments[fedsumm::Population::client_id(i)] = population.group_of(i);
    }
    std::ofstream out(cfg.paths.truth_out, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + cfg.paths.truth_out + "' for writing");
    out << json{{"groups", cfg.population.group_count}, {"assignments", assignments}}.dump(2) << '\n';
  }
  return 0;
}

int run_summarize(const RunConfig& cfg) {
  require_input(cfg);
  const bool embedded = cfg.embedder.kind == fedsumm::EmbedderKind::precomputed;
  const auto records =
      fedsumm::fdsm::read_file(cfg.paths.in, embedded ? fedsumm::DataKind::embedded : fedsumm::DataKind::raw);
  std::vector<fedsumm::ClientDataset> data;
  for (const auto& r : records) {
    if (!std::holds_alternative<fedsumm::ClientDataset>(r)) {
      throw fedsumm::ValidationError("summarize: '" + cfg.paths.in + "' contains non-dataset records");
    }
    data.push_back(std::get<fedsumm::ClientDataset>(r));
  }
  for (const auto& ds : data) {
    if (ds.dim() != data.front().dim()) throw fedsumm::ValidationError("summarize: datasets differ in dimension");
  }
  const std::string& method = cfg.summary.method;
  std::vector<fedsumm::fdsm::Record> out(data.size(), fedsumm::fdsm::Record(data.front()));
  if (method == "encoder") {
    const auto provider = cfg.embedder.make(data.front().dim());
    fedsumm::parallel_for(data.size(), cfg.threads, [&](std::size_t i) {
      out[i] = fedsumm::encoder_summary(data[i], cfg.coreset_k, provider, fedsumm::derive_seed(cfg.seed, {i}));
    });
  } else if (method == "label") {
    fedsumm::parallel_for(data.size(), cfg.threads, [&](std::size_t i) { out[i] = fedsumm::label_summary(data[i]); });
  } else if (method == "conditional") {
    fedsumm::parallel_for(data.size(), cfg.threads, [&](std::size_t i) {
      out[i] = fedsumm::conditional_summary(data[i], cfg.summary.bins, cfg.summary.lo, cfg.summary.hi);
    });
  } else {
    throw fedsumm::ValidationError("unknown summary method '" + method + "' (expected encoder|label|conditional)");
  }
  auto file = open_out(cfg.paths.out);
  fedsumm::fdsm::Writer writer(file);
  for (const auto& r : out) writer.write(r);
  writer.flush();
  return 0;
}

std::vector<std::int32_t> read_truth(const std::string& path, const std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read truth file '" + path + "'");
  const json j = json::parse(in);
  const auto& a = j.at("assignments");
  std::vector<std::int32_t> out;
  for (const auto& id : ids) {
    if (!a.contains(id)) throw fedsumm::ValidationError("truth file has no entry for '" + id + "'");
    out.push_back(a.at(id).get<std::int32_t>());
  }
  return out;
}

int run_cluster(const RunConfig& cfg) {
  require_input(cfg);
  const auto records = fedsumm::fdsm::read_file(cfg.paths.in);
  std::vector<std::string> ids;
  fedsumm::Matrix points;
  for (const auto& r : records) {
    if (const auto* s = std::get_if<fedsumm::DistributionSummary>(&r)) {
      ids.push_back(s->client_id);
      if (points.rows() > 0 && points.cols() != s->values.size()) {
        throw fedsumm::ValidationError("cluster: summaries differ in length");
      }
      points.append_row(s->values);
    } else if (const auto* h = std::get_if<fedsumm::HistogramSummary>(&r)) {
      ids.push_back(h->client_id);
      const auto v = h->flatten();
      if (points.rows() > 0 && points.cols() != v.size()) {
        throw fedsumm::ValidationError("cluster: summaries differ in length");
      }
      points.append_row(v);
    } else {
      throw fedsumm::ValidationError("cluster: '" + cfg.paths.in + "' contains dataset records, not summaries");
    }
  }
  const auto method = fedsumm::parse_cluster_method(cfg.clustering.method);
  fedsumm::ClusterModel model;
  if (method == fedsumm::ClusterMethod::kmeans) {
    if (cfg.clustering.k == 0) throw fedsumm::ValidationError("cluster: kmeans needs k >= 1 (--k)");
    fedsumm::KMeansOptions opts;
    opts.k = cfg.clustering.k;
    opts.init = cfg.clustering.init;
    if (opts.init == fedsumm::KMeansInit::given) {
      throw fedsumm::ValidationError("cluster: init 'given' is only available through the library API");
    }
    opts.max_iters = cfg.clustering.max_iters;
    opts.tol = cfg.clustering.tol;
    opts.restarts = cfg.clustering.restarts;
    opts.seed = cfg.seed;
    model = fedsumm::kmeans(points, opts);
  } else {
    model = fedsumm::dbscan(points, cfg.clustering.eps, cfg.clustering.min_pts);
  }
  json assignments = json::object();
  for (std::size_t i = 0; i < ids.size(); ++i) assignments[ids[i]] = model.labels[i];
  json out{{"method", fedsumm::to_string(method)},
           {"k", model.k},
           {"clusters", model.non_empty_clusters()},
           {"objective", model.objective},
           {"iterations", model.iterations},
           {"assignments", assignments}};
  if (!cfg.paths.truth.empty()) {
    out["ari"] = fedsumm::adjusted_rand_index(read_truth(cfg.paths.truth, ids), model.labels);
  }
  auto file = open_out(cfg.paths.out);
  file << out.dump(2) << '\n';
  return 0;
}

int run_simulate(const RunConfig& cfg) {
  const fedsumm::Population population(cfg.population_spec());
  const auto profiles = fedsumm::generate_profiles(population.size(), cfg.profile_spec());
  const auto logs = fedsumm::run_simulation(population, profiles, cfg.sim_config());
  auto file = open_out(cfg.paths.out);
  for (const auto& log : logs) {
    file << json{{"round", log.round},
                 {"selected", log.selected},
                 {"cluster", log.cluster},
                 {"wall_time", log.wall_time},
                 {"resummarized", log.resummarized},
                 {"ari", log.ari}}
                .dump()
         << '\n';
  }
  return 0;
}

int run_bench(const RunConfig& cfg) {
  const auto format = fedsumm::parse_report_format(cfg.bench.format);
  const auto report = fedsumm::run_bench(cfg.population_spec(), cfg.bench_config());
  auto file = open_out(cfg.paths.out);
  file << fedsumm::render_report(report, format);
  std::cerr << fedsumm::render_report(report, fedsumm::ReportFormat::table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedsumm: heterogeneity-aware client summaries for federated client selection"};
  app.require_subcommand(1);

  Overrides o;
  std::string config_path;

  auto* generate = app.add_subcommand("generate", "generate a synthetic non-IID client population (FDSM)");
  common_options(generate, o, config_path);
  population_options(generate, o);
  path_options(generate, o, false);
  o.option<std::string>(generate, "--truth-out", "write the planted group map (evaluation only)",
                        [](RunConfig& c, const std::string& v) { c.paths.truth_out = v; });

  auto* summarize = app.add_subcommand("summarize", "compute per-client distribution summaries");
  common_options(summarize, o, config_path);
  embedder_options(summarize, o);
  path_options(summarize, o, true);
  o.option<std::string>(summarize, "--method", "encoder|label|conditional",
                        [](RunConfig& c, const std::string& v) { c.summary.method = v; });
  o.option<std::uint32_t>(summarize, "--bins", "histogram bins for conditional",
                          [](RunConfig& c, const std::uint32_t& v) { c.summary.bins = v; });
  o.option<double>(summarize, "--lo", "histogram range low", [](RunConfig& c, const double& v) { c.summary.lo = v; });
  o.option<double>(summarize, "--hi", "histogram range high", [](RunConfig& c, const double& v) { c.summary.hi = v; });

  auto* cluster = app.add_subcommand("cluster", "cluster client summaries");
  common_options(cluster, o, config_path);
  path_options(cluster, o, true);
  o.option<std::string>(cluster, "--method", "kmeans|dbscan",
                        [](RunConfig& c, const std::string& v) { c.clustering.method = v; });
  o.option<std::size_t>(cluster, "--k", "number of kmeans clusters",
                        [](RunConfig& c, const std::size_t& v) { c.clustering.k = v; });
  o.option<double>(cluster, "--eps", "dbscan radius", [](RunConfig& c, const double& v) { c.clustering.eps = v; });
  o.option<std::size_t>(cluster, "--min-pts", "dbscan core threshold",
                        [](RunConfig& c, const std::size_t& v) { c.clustering.min_pts = v; });
  o.option<std::string>(cluster, "--init", "kmeans++|random", [](RunConfig& c, const std::string& v) {
    c.clustering.init = fedsumm::parse_kmeans_init(v);
  });
  o.option<std::size_t>(cluster, "--max-iters", "Lloyd iteration cap",
                        [](RunConfig& c, const std::size_t& v) { c.clustering.max_iters = v; });
  o.option<std::size_t>(cluster, "--restarts", "independent kmeans runs",
                        [](RunConfig& c, const std::size_t& v) { c.clustering.restarts = v; });
  o.option<std::string>(cluster, "--truth", "planted group map to score against (evaluation only)",
                        [](RunConfig& c, const std::string& v) { c.paths.truth = v; });

  auto* simulate = app.add_subcommand("simulate", "simulate cluster-based client selection with drift");
  common_options(simulate, o, config_path);
  population_options(simulate, o);
  embedder_options(simulate, o);
  path_options(simulate, o, false);
  o.option<std::size_t>(simulate, "--rounds", "number of rounds",
                        [](RunConfig& c, const std::size_t& v) { c.simulation.rounds = v; });
  o.option<std::size_t>(simulate, "--resummarize-every", "re-summarization period T",
                        [](RunConfig& c, const std::size_t& v) { c.simulation.resummarize_every = v; });
  o.option<std::size_t>(simulate, "--k", "clusters (0: planted group count)",
                        [](RunConfig& c, const std::size_t& v) { c.clustering.k = v; });

  auto* bench = app.add_subcommand("bench", "measure summary and clustering overhead per method");
  common_options(bench, o, config_path);
  population_options(bench, o);
  embedder_options(bench, o);
  path_options(bench, o, false);
  o.option<std::string>(bench, "--format", "report format: csv|table",
                        [](RunConfig& c, const std::string& v) { c.bench.format = v; });
  o.option<double>(bench, "--budget", "per-method phase time budget (s)",
                   [](RunConfig& c, const double& v) { c.bench.time_budget_s = v; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    RunConfig cfg = load_config(config_path);
    if (!cfg.command.empty() && cfg.command != sub->get_name()) {
      throw fedsumm::ValidationError("config is for '" + cfg.command + "', not '" + sub->get_name() + "'");
    }
    cfg.command = sub->get_name();
    o.apply(cfg);
    if (cfg.threads == 0) throw fedsumm::ValidationError("threads must be >= 1");
    cfg.population_spec().validate();

    std::cout << fedsumm::to_json(cfg).dump(2) << std::endl;

    const std::string& name = cfg.command;
    if (name == "generate") return run_generate(cfg);
    if (name == "summarize") return run_summarize(cfg);
    if (name == "cluster") return run_cluster(cfg);
    if (name == "simulate") return run_simulate(cfg);
    return run_bench(cfg);
  } catch (const fedsumm::ValidationError& e) {
    std::cerr << "fedsumm " << sub->get_name() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fedsumm " << sub->get_name() << ": " << e.what() << '\n';
    return 2;
  }
}
