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
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fedsumm/clustering.hpp"
#include "fedsumm/embedder.hpp"
#include "fedsumm/error.hpp"
#include "fedsumm/fdsm.hpp"
#include "fedsumm/matrix.hpp"
#include "fedsumm/parallel.hpp"
#include "fedsumm/population.hpp"
#include "fedsumm/rng.hpp"
#include "fedsumm/summary.hpp"

namespace fedsumm {

struct BenchConfig {
  std::size_t coreset_k = kDefaultCoresetK;
  EmbedderSettings embedder;
  std::uint32_t bins = kDefaultBins;
  double lo = 0.0;
  double hi = 1.0;
  // kmeans on encoder summaries; 0 selects the planted group count.
  std::size_t cluster_k = 0;
  std::size_t kmeans_max_iters = 100;
  std::size_t kmeans_restarts = 1;
  // DBSCAN on P(y) summaries.
  double eps = 0.1;
  // DBSCAN on P(X|y) summaries.
  double conditional_eps = 20.0;
  std::size_t min_pts = 5;
  // Cutoff applied separately to each method's summary phase and clustering phase.
  double time_budget_s = 120.0;
  // Memory allowed for P(X|y) summaries kept for the clustering phase.
  std::size_t resident_limit_bytes = std::size_t{1536} << 20;
  // Extra rows: DBSCAN baselines re-clustered with kmeans.
  bool baselines_with_kmeans = false;
  // Extra row: kmeans on encoder summaries with the label block scaled by H.
  bool weighted_variant = false;
  // Extra row: kmeans on the encoder summaries of exactly the clients whose
  // P(X|y) summaries DBSCAN clustered.
  bool matched_variant = false;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::string machine_note;

  void validate() const {
    detail::require(coreset_k >= 1, "bench: coreset_k must be >= 1");
    detail::require(bins >= 2, "bench: bins must be >= 2");
    detail::require(lo < hi, "bench: lo must be < hi");
    detail::require(eps > 0.0 && conditional_eps > 0.0, "bench: eps values must be > 0");
    detail::require(min_pts >= 1, "bench: min_pts must be >= 1");
    detail::require(time_budget_s > 0.0, "bench: time_budget_s must be > 0");
    detail::require(threads >= 1, "bench: threads must be >= 1");
    detail::require(embedder.kind != EmbedderKind::precomputed,
                    "bench: the precomputed embedder cannot summarize synthetic raw data");
  }
};

enum class PhaseStatus { ok, budget, not_run };

inline std::string_view to_string(PhaseStatus s) {
  switch (s) {
    case PhaseStatus::ok: return "ok";
    case PhaseStatus::budget: return "budget";
    case PhaseStatus::not_run: return "not-run";
  }
  return "?";
}

inline PhaseStatus parse_phase_status(std::string_view s) {
  if (s == "ok") return PhaseStatus::ok;
  if (s == "budget") return PhaseStatus::budget;
  if (s == "not-run") return PhaseStatus::not_run;
  throw ValidationError("unknown phase status '" + std::string(s) + "'");
}

struct MethodResult {
  std::string method;
  double summary_avg_s = 0.0;
  double summary_max_s = 0.0;
  std::uint64_t summary_bytes = 0;
  // Elapsed clustering time; a lower bound when cluster_status == budget.
  double cluster_time_s = 0.0;
  std::string cluster_method;
  std::size_t clients_summarized = 0;
  std::size_t clients_clustered = 0;
  PhaseStatus summary_status = PhaseStatus::ok;
  PhaseStatus cluster_status = PhaseStatus::ok;
  // Total wall time of the summary phase (differs from the per-client sum
  // only with threads > 1).
  double summary_wall_s = 0.0;
  // Non-empty clusters found and an FNV-1a digest of the assignments; both
  // are 0 when clustering did not finish.
  std::size_t clusters = 0;
  std::uint64_t assignment_hash = 0;

  friend bool operator==(const MethodResult&, const MethodResult&) = default;
};

struct BenchReport {
  PopulationSpec population;
  BenchConfig config;
  std::vector<MethodResult> methods;

  const MethodResult* find(std::string_view method) const {
    for (const auto& m : methods) {
      if (m.method == method) return &m;
    }
    return nullptr;
  }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// P(X|y) kept for clustering: only the classes present in the client are
// stored; absent-class rows are zero in the dense layout.
struct SparseConditional {
  std::vector<std::uint32_t> classes;
  std::vector<float> blocks;
  std::vector<double> block_sq_norm;
  std::vector<double> label_distribution;

  static SparseConditional from(const HistogramSummary& s) {
    SparseConditional out;
    const std::size_t block = static_cast<std::size_t>(s.dim) * s.bins;
    for (std::uint32_t c = 0; c < s.num_classes; ++c) {
      if (s.label_distribution[c] <= 0.0) continue;
      out.classes.push_back(c);
      double n2 = 0.0;
      for (std::size_t j = 0; j < block; ++j) {
        const float v = static_cast<float>(s.conditional[c * block + j]);
        out.blocks.push_back(v);
        n2 += static_cast<double>(v) * v;
      }
      out.block_sq_norm.push_back(n2);
    }
    out.label_distribution = s.label_distribution;
    return out;
  }

  std::size_t bytes() const {
    return blocks.size() * sizeof(float) + classes.size() * (sizeof(std::uint32_t) + sizeof(double)) +
           label_distribution.size() * sizeof(double);
  }
};

// Squared Euclidean distance between the dense flattened forms.
inline double sparse_sq_distance(const SparseConditional& a, const SparseConditional& b, std::size_t block) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.classes.size() || j < b.classes.size()) {
    if (j == b.classes.size() || (i < a.classes.size() && a.classes[i] < b.classes[j])) {
      s += a.block_sq_norm[i++];
    } else if (i == a.classes.size() || b.classes[j] < a.classes[i]) {
      s += b.block_sq_norm[j++];
    } else {
      const float* x = a.blocks.data() + i * block;
      const float* y = b.blocks.data() + j * block;
      double part = 0.0;
      for (std::size_t t = 0; t < block; ++t) {
        const double d = static_cast<double>(x[t]) - static_cast<double>(y[t]);
        part += d * d;
      }
      s += part;
      ++i;
      ++j;
    }
  }
  for (std::size_t c = 0; c < a.label_distribution.size(); ++c) {
    const double d = a.label_distribution[c] - b.label_distribution[c];
    s += d * d;
  }
  return s;
}

struct PhaseTimer {
  std::vector<double> times;
  double wall = 0.0;
  bool cut = false;

  double total() const {
    double t = 0.0;
    for (double x : times) t += x;
    return t;
  }
  void fill(MethodResult& r) const {
    r.clients_summarized = times.size();
    r.summary_wall_s = wall;
    if (!times.empty()) {
      r.summary_avg_s = total() / static_cast<double>(times.size());
      r.summary_max_s = *std::max_element(times.begin(), times.end());
    }
    r.summary_status = cut ? PhaseStatus::budget : PhaseStatus::ok;
  }
};

inline std::uint64_t fnv1a(std::span<const std::int32_t> labels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto l : labels) {
    const auto v = static_cast<std::uint32_t>(l);
    for (int s = 0; s < 32; s += 8) {
      h ^= (v >> s) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// `run` receives a stop predicate and returns the finished ClusterModel.
template <typename Fn>
void time_clustering(MethodResult& r, std::size_t clients, double budget, Fn&& run) {
  r.clients_clustered = clients;
  const auto t0 = Clock::now();
  try {
    const ClusterModel model = run([t0, budget] { return seconds_since(t0) > budget; });
    r.cluster_time_s = seconds_since(t0);
    r.cluster_status = PhaseStatus::ok;
    r.clusters = model.non_empty_clusters();
    r.assignment_hash = fnv1a(model.labels);
  } catch (const BudgetExceeded&) {
    r.cluster_time_s = seconds_since(t0);
    r.cluster_status = PhaseStatus::budget;
    r.clusters = 0;
    r.assignment_hash = 0;
  }
}

}  // namespace detail

// Generates one population and measures, per method, per-client summary time,
// serialized summary size and clustering time. Clients are generated one
// batch at a time so raw data for the whole population is never resident.
inline BenchReport run_bench(const PopulationSpec& spec, const BenchConfig& cfg) {
  spec.validate();
  cfg.validate();
  using detail::Clock;
  using detail::seconds_since;

  const Population population(spec);
  const std::size_t n = population.size();
  const std::uint32_t num_classes = spec.num_classes;
  const std::size_t k = cfg.cluster_k == 0 ? spec.group_count : cfg.cluster_k;
  detail::require(k <= n, "bench: cluster_k exceeds the number of clients");
  const auto provider = cfg.embedder.make(spec.feature_dim);
  const std::size_t h = provider.output_dim();
  const std::size_t block = static_cast<std::size_t>(spec.feature_dim) * cfg.bins;

  BenchReport report;
  report.population = spec;
  report.config = cfg;
  MethodResult label{.method = "label", .cluster_method = "dbscan"};
  MethodResult conditional{.method = "conditional", .cluster_method = "dbscan"};
  MethodResult encoder{.method = "encoder", .cluster_method = "kmeans"};

  detail::PhaseTimer label_t, cond_t, enc_t;
  Matrix label_rows, enc_rows;
  std::vector<detail::SparseConditional> cond_kept;
  std::size_t cond_resident = 0;
  bool cond_kept_all = true;

  const std::size_t batch = cfg.threads;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t count = std::min(batch, n - start);
    std::vector<std::optional<ClientDataset>> data(count);
    parallel_for(count, cfg.threads, [&](std::size_t b) { data[b].emplace(population.client(start + b)); });

    {
      std::vector<HistogramSummary> out(count);
      std::vector<double> t(count);
      const auto w0 = Clock::now();
      parallel_for(count, cfg.threads, [&](std::size_t b) {
        const auto t0 = Clock::now();
        out[b] = label_summary(*data[b]);
        t[b] = seconds_since(t0);
      });
      label_t.wall += seconds_since(w0);
      for (std::size_t b = 0; b < count; ++b) {
        if (label.summary_bytes == 0) label.summary_bytes = fdsm::measure_bytes(out[b]);
        label_t.times.push_back(t[b]);
        label_rows.append_row(out[b].label_distribution);
      }
    }

    if (!enc_t.cut) {
      std::vector<DistributionSummary> out(count);
      std::vector<double> t(count);
      const auto w0 = Clock::now();
      parallel_for(count, cfg.threads, [&](std::size_t b) {
        const auto seed = derive_seed(cfg.seed, {start + b});
        const auto t0 = Clock::now();
        out[b] = encoder_summary(*data[b], cfg.coreset_k, provider, seed);
        t[b] = seconds_since(t0);
      });
      enc_t.wall += seconds_since(w0);
      for (std::size_t b = 0; b < count; ++b) {
        if (encoder.summary_bytes == 0) encoder.summary_bytes = fdsm::measure_bytes(out[b]);
        enc_t.times.push_back(t[b]);
        enc_rows.append_row(out[b].values);
      }
      if (enc_t.total() > cfg.time_budget_s && start + count < n) enc_t.cut = true;
    }

    if (!cond_t.cut) {
      // One dense P(X|y) per worker is resident at a time.
      std::vector<double> t(count);
      std::vector<std::optional<detail::SparseConditional>> kept(count);
      std::vector<std::size_t> bytes(count, 0);
      const auto w0 = Clock::now();
      parallel_for(count, cfg.threads, [&](std::size_t b) {
        const auto t0 = Clock::now();
        const HistogramSummary s = conditional_summary(*data[b], cfg.bins, cfg.lo, cfg.hi);
        t[b] = seconds_since(t0);
        if (start + b == 0) bytes[b] = fdsm::measure_bytes(s);
        kept[b].emplace(detail::SparseConditional::from(s));
      });
      cond_t.wall += seconds_since(w0);
      for (std::size_t b = 0; b < count; ++b) {
        if (start + b == 0) conditional.summary_bytes = bytes[b];
        cond_t.times.push_back(t[b]);
        if (cond_kept_all && cond_resident + kept[b]->bytes() <= cfg.resident_limit_bytes) {
          cond_resident += kept[b]->bytes();
          cond_kept.push_back(std::move(*kept[b]));
        } else {
          cond_kept_all = false;
        }
      }
      if (cond_t.total() > cfg.time_budget_s && start + count < n) cond_t.cut = true;
    }
  }
  label_t.fill(label);
  enc_t.fill(encoder);
  cond_t.fill(conditional);

  const double budget = cfg.time_budget_s;
  auto dbscan_matrix = [&](const Matrix& m, double eps, const auto& stop) {
    return dbscan(m, DbscanOptions{eps, cfg.min_pts, stop});
  };
  auto kmeans_matrix = [&](const Matrix& m, const auto& stop) {
    KMeansOptions opts;
    opts.k = std::min(k, m.rows());
    opts.max_iters = cfg.kmeans_max_iters;
    opts.restarts = cfg.kmeans_restarts;
    opts.seed = derive_seed(cfg.seed, {0x4b4dULL});
    opts.should_stop = stop;
    return kmeans(m, opts);
  };

  detail::time_clustering(label, label_rows.rows(), budget,
                          [&](const auto& stop) { return dbscan_matrix(label_rows, cfg.eps, stop); });
  detail::time_clustering(conditional, cond_kept.size(), budget, [&](const auto& stop) {
    DbscanOptions opts{cfg.conditional_eps, cfg.min_pts, stop};
    return dbscan_with(cond_kept.size(), opts, [&](std::size_t i, std::size_t j) {
      return detail::sparse_sq_distance(cond_kept[i], cond_kept[j], block);
    });
  });
  detail::time_clustering(encoder, enc_rows.rows(), budget, [&](const auto& stop) { return kmeans_matrix(enc_rows, stop); });

  report.methods = {label, conditional, encoder};

  if (cfg.baselines_with_kmeans) {
    MethodResult lk = label;
    lk.method = "label+kmeans";
    lk.cluster_method = "kmeans";
    detail::time_clustering(lk, label_rows.rows(), budget, [&](const auto& stop) { return kmeans_matrix(label_rows, stop); });
    report.methods.push_back(lk);

    MethodResult ck = conditional;
    ck.method = "conditional+kmeans";
    ck.cluster_method = "kmeans";
    const std::size_t dense_bytes = cond_kept.size() * (static_cast<std::size_t>(num_classes) * block + num_classes) * 8;
    if (dense_bytes > cfg.resident_limit_bytes) {
      ck.clients_clustered = cond_kept.size();
      ck.cluster_time_s = 0.0;
      ck.cluster_status = PhaseStatus::not_run;
      ck.clusters = 0;
      ck.assignment_hash = 0;
    } else {
      Matrix dense(cond_kept.size(), static_cast<std::size_t>(num_classes) * block + num_classes);
      for (std::size_t i = 0; i < cond_kept.size(); ++i) {
        auto row = dense.row(i);
        const auto& s = cond_kept[i];
        for (std::size_t c = 0; c < s.classes.size(); ++c) {
          std::copy(s.blocks.begin() + static_cast<std::ptrdiff_t>(c * block),
                    s.blocks.begin() + static_cast<std::ptrdiff_t>((c + 1) * block),
                    row.begin() + static_cast<std::ptrdiff_t>(s.classes[c] * block));
        }
        std::copy(s.label_distribution.begin(), s.label_distribution.end(),
                  row.begin() + static_cast<std::ptrdiff_t>(num_classes * block));
      }
      detail::time_clustering(ck, dense.rows(), budget, [&](const auto& stop) { return kmeans_matrix(dense, stop); });
    }
    report.methods.push_back(ck);
  }

  if (cfg.weighted_variant) {
    MethodResult w = encoder;
    w.method = "encoder-weighted";
    Matrix weighted = enc_rows;
    const std::size_t start = static_cast<std::size_t>(num_classes) * h;
    for (std::size_t i = 0; i < weighted.rows(); ++i) {
      auto row = weighted.row(i);
      for (std::size_t j = start; j < row.size(); ++j) row[j] *= static_cast<double>(h);
    }
    detail::time_clustering(w, weighted.rows(), budget, [&](const auto& stop) { return kmeans_matrix(weighted, stop); });
    report.methods.push_back(w);
  }

  if (cfg.matched_variant) {
    MethodResult m = encoder;
    m.method = "encoder-matched";
    Matrix head(std::min(cond_kept.size(), enc_rows.rows()), enc_rows.cols());
    for (std::size_t i = 0; i < head.rows(); ++i) {
      const auto src = enc_rows.row(i);
      std::copy(src.begin(), src.end(), head.row(i).begin());
    }
    if (head.rows() == 0) {
      m.clients_clustered = 0;
      m.cluster_time_s = 0.0;
      m.cluster_status = PhaseStatus::not_run;
      m.clusters = 0;
      m.assignment_hash = 0;
    } else {
      detail::time_clustering(m, head.rows(), budget, [&](const auto& stop) { return kmeans_matrix(head, stop); });
    }
    report.methods.push_back(m);
  }
  return report;
}

enum class ReportFormat { table, csv };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "table") return ReportFormat::table;
  if (s == "csv") return ReportFormat::csv;
  throw ValidationError("unknown report format '" + std::string(s) + "' (expected table|csv)");
}

inline constexpr std::array<std::string_view, 13> kReportColumns{
    "method",         "summary_avg_s",  "summary_max_s",      "summary_bytes",     "cluster_time_s",
    "cluster_method", "clients_summarized", "clients_clustered", "summary_status", "cluster_status",
    "summary_wall_s", "clusters",       "assignment_hash"};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

inline std::vector<std::string> report_fields(const MethodResult& m) {
  return {m.method,
          format_double(m.summary_avg_s),
          format_double(m.summary_max_s),
          std::to_string(m.summary_bytes),
          format_double(m.cluster_time_s),
          m.cluster_method,
          std::to_string(m.clients_summarized),
          std::to_string(m.clients_clustered),
          std::string(to_string(m.summary_status)),
          std::string(to_string(m.cluster_status)),
          format_double(m.summary_wall_s),
          std::to_string(m.clusters),
          std::to_string(m.assignment_hash)};
}

}  // namespace detail

inline std::string render_report(const std::vector<MethodResult>& methods, ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::csv) {
    for (std::size_t i = 0; i < kReportColumns.size(); ++i) os << (i ? "," : "") << kReportColumns[i];
    os << '\n';
    for (const auto& m : methods) {
      const auto fields = detail::report_fields(m);
      for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
      os << '\n';
    }
    return os.str();
  }
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"method", "summary avg (s)", "summary max (s)", "bytes", "cluster time (s)", "clustering",
                  "clients", "status"});
  for (const auto& m : methods) {
    auto fmt = [](double v) {
      std::ostringstream s;
      s << std::setprecision(4) << v;
      return s.str();
    };
    std::string status = "ok";
    if (m.summary_status == PhaseStatus::budget) status = "summary cut (budget)";
    if (m.cluster_status == PhaseStatus::budget) {
      status = status == "ok" ? "clustering > budget" : status + ", clustering > budget";
    } else if (m.cluster_status == PhaseStatus::not_run) {
      status = status == "ok" ? "clustering skipped" : status + ", clustering skipped";
    }
    rows.push_back({m.method, fmt(m.summary_avg_s), fmt(m.summary_max_s), std::to_string(m.summary_bytes),
                    (m.cluster_status == PhaseStatus::budget ? ">" : "") + fmt(m.cluster_time_s), m.cluster_method,
                    std::to_string(m.clients_summarized) + "/" + std::to_string(m.clients_clustered), status});
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << std::left << std::setw(static_cast<int>(width[i])) << r[i] << (i + 1 < r.size() ? "  " : "");
    }
    os << '\n';
  }
  return os.str();
}

inline std::string render_report(const BenchReport& report, ReportFormat format) {
  return render_report(report.methods, format);
}

// Parses the CSV produced by render_report.
inline std::vector<MethodResult> parse_report_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    lines.push_back(std::move(fields));
  }
  detail::require(!lines.empty(), "report csv: missing header");
  detail::require(lines.front().size() == kReportColumns.size(), "report csv: unexpected header");
  for (std::size_t i = 0; i < kReportColumns.size(); ++i) {
    detail::require(lines.front()[i] == kReportColumns[i], "report csv: unexpected column '" + lines.front()[i] + "'");
  }
  std::vector<MethodResult> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& f = lines[r];
    detail::require(f.size() == kReportColumns.size(), "report csv: row " + std::to_string(r) + " has wrong width");
    MethodResult m;
    m.method = f[0];
    m.summary_avg_s = std::stod(f[1]);
    m.summary_max_s = std::stod(f[2]);
    m.summary_bytes = std::stoull(f[3]);
    m.cluster_time_s = std::stod(f[4]);
    m.cluster_method = f[5];
    m.clients_summarized = std::stoull(f[6]);
    m.clients_clustered = std::stoull(f[7]);
    m.summary_status = parse_phase_status(f[8]);
    m.cluster_status = parse_phase_status(f[9]);
    m.summary_wall_s = std::stod(f[10]);
    m.clusters = std::stoull(f[11]);
    m.assignment_hash = std::stoull(f[12]);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace fedsumm
