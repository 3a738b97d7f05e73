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

#include "fedsumm/bench.hpp"

namespace fedsumm {
namespace {

PopulationSpec bench_spec() {
  PopulationSpec s;
  s.num_clients = 40;
  s.num_classes = 12;
  s.feature_dim = 48;
  s.group_count = 3;
  s.samples_per_client = {50.0, 15.0, 120};
  s.seed = 3;
  return s;
}

BenchConfig bench_cfg() {
  BenchConfig c;
  c.coreset_k = 32;
  c.embedder.dim = 16;
  c.seed = 5;
  c.conditional_eps = 2.0;
  c.eps = 0.3;
  c.min_pts = 3;
  return c;
}

void clear_timing(std::vector<MethodResult>& methods) {
  for (auto& m : methods) {
    m.summary_avg_s = m.summary_max_s = m.cluster_time_s = m.summary_wall_s = 0.0;
  }
}

TEST(Bench, ReportIsCompleteAndConsistent) {
  const auto spec = bench_spec();
  const auto r = run_bench(spec, bench_cfg());
  ASSERT_EQ(r.methods.size(), 3u);
  for (const auto* name : {"label", "conditional", "encoder"}) {
    const auto* m = r.find(name);
    ASSERT_NE(m, nullptr) << name;
    EXPECT_GE(m->summary_avg_s, 0.0);
    EXPECT_GE(m->summary_max_s, m->summary_avg_s);
    EXPECT_GT(m->summary_bytes, 0u);
    EXPECT_GE(m->cluster_time_s, 0.0);
    EXPECT_EQ(m->clients_summarized, spec.num_clients);
    EXPECT_EQ(m->clients_clustered, spec.num_clients);
    EXPECT_EQ(m->cluster_status, PhaseStatus::ok);
  }
  EXPECT_EQ(r.find("encoder")->cluster_method, "kmeans");
  EXPECT_EQ(r.find("label")->cluster_method, "dbscan");
  EXPECT_EQ(r.find("conditional")->cluster_method, "dbscan");
}

TEST(Bench, SummaryBytesFollowTheRecordLayout) {
  const auto spec = bench_spec();
  const auto cfg = bench_cfg();
  const auto r = run_bench(spec, cfg);
  const std::size_t header = 4 + 2 + 1 + 2 + Population::client_id(0).size();
  const std::size_t c = spec.num_classes, h = cfg.embedder.dim, d = spec.feature_dim, b = cfg.bins;
  EXPECT_EQ(r.find("encoder")->summary_bytes, header + 8 + 4 * (c * h + c));
  EXPECT_EQ(r.find("label")->summary_bytes, header + 1 + 12 + 16 + 4 * c);
  EXPECT_EQ(r.find("conditional")->summary_bytes, header + 1 + 12 + 16 + 4 * (c * d * b + c));
}

TEST(Bench, DeskScaleByteRatioFromFormulas) {
  const std::size_t header = 4 + 2 + 1 + 2 + Population::client_id(0).size();
  const double encoder = static_cast<double>(header + 8 + 4 * (600 * 64 + 600));
  const double conditional = static_cast<double>(header + 1 + 12 + 16 + 4 * (600ull * 12288 * 8 + 600));
  EXPECT_GT(conditional / encoder, 100.0);
}

TEST(Bench, RerunsDifferOnlyInTiming) {
  auto cfg = bench_cfg();
  cfg.baselines_with_kmeans = true;
  cfg.weighted_variant = true;
  cfg.matched_variant = true;
  auto a = run_bench(bench_spec(), cfg).methods;
  cfg.threads = 3;
  auto b = run_bench(bench_spec(), cfg).methods;
  ASSERT_EQ(a.size(), 7u);
  clear_timing(a);
  clear_timing(b);
  EXPECT_EQ(a, b);
  for (const auto& m : a) EXPECT_NE(m.assignment_hash, 0u) << m.method;
}

TEST(Bench, BudgetCutoffIsMarked) {
  auto cfg = bench_cfg();
  cfg.time_budget_s = 1e-9;
  const auto r = run_bench(bench_spec(), cfg);
  for (const auto& m : r.methods) {
    EXPECT_EQ(m.cluster_status, PhaseStatus::budget) << m.method;
    EXPECT_EQ(m.assignment_hash, 0u);
    EXPECT_GE(m.summary_max_s, m.summary_avg_s);
  }
  EXPECT_EQ(r.find("conditional")->summary_status, PhaseStatus::budget);
  EXPECT_LT(r.find("conditional")->clients_summarized, 40u);
  EXPECT_EQ(r.find("label")->clients_summarized, 40u);
}

TEST(Bench, ResidentLimitBoundsRetainedConditionals) {
  auto cfg = bench_cfg();
  cfg.resident_limit_bytes = 20'000;
  const auto r = run_bench(bench_spec(), cfg);
  const auto* c = r.find("conditional");
  EXPECT_EQ(c->clients_summarized, 40u);
  EXPECT_LT(c->clients_clustered, 40u);
  EXPECT_GT(c->clients_clustered, 0u);
}

TEST(Bench, MatchedRowClustersTheDbscanClients) {
  auto cfg = bench_cfg();
  cfg.matched_variant = true;
  const auto full = run_bench(bench_spec(), cfg);
  const auto* m = full.find("encoder-matched");
  ASSERT_NE(m, nullptr);
  EXPECT_EQ(m->clients_clustered, full.find("conditional")->clients_clustered);
  // Same rows and seed as the encoder row when nothing was dropped.
  EXPECT_EQ(m->assignment_hash, full.find("encoder")->assignment_hash);

  cfg.resident_limit_bytes = 20'000;
  const auto capped = run_bench(bench_spec(), cfg);
  EXPECT_EQ(capped.find("encoder-matched")->clients_clustered, capped.find("conditional")->clients_clustered);
  EXPECT_LT(capped.find("encoder-matched")->clients_clustered, 40u);

  cfg.resident_limit_bytes = 0;
  EXPECT_EQ(run_bench(bench_spec(), cfg).find("encoder-matched")->cluster_status, PhaseStatus::not_run);
}

TEST(Bench, SparseDistanceMatchesDenseFlattening) {
  const Population pop(bench_spec());
  const auto a = conditional_summary(pop.client(0), 4);
  const auto b = conditional_summary(pop.client(7), 4);
  const auto sa = detail::SparseConditional::from(a);
  const auto sb = detail::SparseConditional::from(b);
  const auto fa = a.flatten();
  const auto fb = b.flatten();
  double dense = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    const bool hist = i < a.conditional.size();
    const double x = hist ? static_cast<float>(fa[i]) : fa[i];
    const double y = hist ? static_cast<float>(fb[i]) : fb[i];
    dense += (x - y) * (x - y);
  }
  EXPECT_NEAR(detail::sparse_sq_distance(sa, sb, 48 * 4), dense, 1e-9 * std::max(1.0, dense));
  EXPECT_EQ(detail::sparse_sq_distance(sa, sa, 48 * 4), 0.0);
}

TEST(Report, HeaderOnlyForEmptyReport) {
  const auto csv = render_report(std::vector<MethodResult>{}, ReportFormat::csv);
  EXPECT_EQ(csv, "method,summary_avg_s,summary_max_s,summary_bytes,cluster_time_s,cluster_method,clients_summarized,"
                 "clients_clustered,summary_status,cluster_status,summary_wall_s,clusters,assignment_hash\n");
  EXPECT_TRUE(parse_report_csv(csv).empty());
  const auto table = render_report(std::vector<MethodResult>{}, ReportFormat::table);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1);
}

TEST(Report, CsvRoundTripsThreeRows) {
  const auto r = run_bench(bench_spec(), bench_cfg());
  const auto csv = render_report(r, ReportFormat::csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(parse_report_csv(csv), r.methods);
  const auto table = render_report(r, ReportFormat::table);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_EQ(table.rfind("method", 0), 0u);
}

TEST(Report, RejectsMalformedCsv) {
  EXPECT_THROW(parse_report_csv(""), ValidationError);
  EXPECT_THROW(parse_report_csv("a,b\n"), ValidationError);
  EXPECT_THROW(parse_report_format("xml"), ValidationError);
}

}  // namespace
}  // namespace fedsumm
