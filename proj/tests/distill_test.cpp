// Copyright 2026 The PushForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pushforge/distill.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pushforge {
namespace {

using testing::make_record;
using testing::record_permille;

EngagementStats stats(int64_t pv, int64_t clicks, int64_t sv, int64_t lv, int64_t hates) {
  return derive_rates({clicks, sv, lv, hates}, pv);
}

TEST(HardFilter, PassesAllThresholds) {
  // ctr 0.007, svr 0.30, lvtr 0.60, htr 0.005, pv 1000
  EXPECT_TRUE(hard_filter(stats(1000, 7, 300, 600, 5), DistillConfig{}));
}

TEST(HardFilter, CtrBoundaryIsStrict) {
  EXPECT_FALSE(hard_filter(stats(1000, 6, 300, 600, 5), DistillConfig{}));
}

TEST(HardFilter, PvBoundaryIsStrict) {
  // pv 800 with rates that pass: ctr 8/800 = 0.01, svr 0.3, lvtr 0.6, htr 0.005
  EXPECT_FALSE(hard_filter(stats(800, 8, 240, 480, 4), DistillConfig{}));
  EXPECT_TRUE(hard_filter(stats(801, 8, 240, 481, 4), DistillConfig{}));
}

TEST(HardFilter, OtherBoundariesAreStrict) {
  EXPECT_FALSE(hard_filter(stats(1000, 7, 400, 600, 5), DistillConfig{}));   // svr = 0.40
  EXPECT_FALSE(hard_filter(stats(1000, 7, 300, 500, 5), DistillConfig{}));   // lvtr = 0.50
  EXPECT_FALSE(hard_filter(stats(1000, 7, 300, 600, 10), DistillConfig{}));  // htr = 0.01
}

TEST(HardFilter, MonotoneInEveryMetric) {
  SplitMix64 rng(5);
  const DistillConfig cfg;
  int passing = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto pv = static_cast<int64_t>(700 + rng.below(2000));
    auto draw = [&](double lo, double hi) { return static_cast<int64_t>(rng.uniform(lo, hi) * pv); };
    const auto base = stats(pv, draw(0.0, 0.02), draw(0.2, 0.5), draw(0.4, 0.8), draw(0.0, 0.02));
    if (!hard_filter(base, cfg)) continue;
    ++passing;
    const auto k = static_cast<int64_t>(1 + rng.below(3));
    const auto bigger_pv = pv * k;
    // Same or better rates at equal or larger exposure.
    const auto better = stats(bigger_pv, std::min(bigger_pv, base.clicks * k + static_cast<int64_t>(rng.below(5))),
                              std::max<int64_t>(0, base.short_views * k - static_cast<int64_t>(rng.below(5))),
                              std::min(bigger_pv, base.long_views * k + static_cast<int64_t>(rng.below(5))),
                              std::max<int64_t>(0, base.hates * k - static_cast<int64_t>(rng.below(2))));
    ASSERT_TRUE(hard_filter(better, cfg));
  }
  EXPECT_GT(passing, 100);
}

/// Quantile straight from the 1-based definition h = (N-1)p + 1.
double quantile_oracle(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p + 1.0;
  const double fl = std::floor(h);
  const auto lower = static_cast<std::size_t>(fl);  // 1-based
  if (lower >= x.size()) return x.back();
  return x[lower - 1] + (h - fl) * (x[lower] - x[lower - 1]);
}

TEST(EmpiricalQuantile, MatchesOneBasedDefinition) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> v(1 + rng.below(30));
    for (double& x : v) x = rng.uniform(0.0, 1.0);
    const double p = rng.uniform();
    ASSERT_NEAR(empirical_quantile(v, p), quantile_oracle(v, p), 1e-15);
  }
  EXPECT_NEAR(empirical_quantile({0.001, 0.002, 0.003, 0.004, 0.005}, 0.2), 0.0018, 1e-15);
}

TEST(SoftFilter, RemovesBottomCtrOnly) {
  std::vector<PushRecord> cluster;
  for (int c = 1; c <= 5; ++c) cluster.push_back(record_permille("p" + std::to_string(c), "k", c, 300, 600, 5));
  const auto kept = soft_filter(cluster, DistillConfig{});
  ASSERT_EQ(kept.size(), 4u);
  for (std::size_t i = 0; i < kept.size(); ++i) EXPECT_EQ(kept[i].push_id, "p" + std::to_string(i + 2));
}

TEST(SoftFilter, IdenticalMetricsRemoveNothing) {
  std::vector<PushRecord> cluster;
  for (int i = 0; i < 10; ++i) cluster.push_back(record_permille("p" + std::to_string(i), "k", 9, 300, 600, 5));
  EXPECT_EQ(soft_filter(cluster, DistillConfig{}).size(), 10u);
}

TEST(SoftFilter, SmallClusterSkipped) {
  std::vector<PushRecord> cluster = {record_permille("a", "k", 1, 300, 600, 5),
                                     record_permille("b", "k", 9, 390, 510, 9),
                                     record_permille("c", "k", 20, 100, 900, 1)};
  EXPECT_EQ(soft_filter(cluster, DistillConfig{}).size(), 3u);
}

TEST(SoftFilter, MixedClustersAreUsageError) {
  std::vector<PushRecord> cluster = {record_permille("a", "k", 1, 300, 600, 5),
                                     record_permille("b", "other", 9, 300, 600, 5)};
  try {
    soft_filter(cluster, DistillConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUsage);
  }
}

TEST(SoftFilter, TopSvrAndHtrAreCropped) {
  std::vector<PushRecord> cluster;
  for (int i = 0; i < 5; ++i) cluster.push_back(record_permille("p" + std::to_string(i), "k", 9, 300, 600, 5));
  cluster[2] = record_permille("p2", "k", 9, 350, 600, 5);  // highest svr
  cluster[4] = record_permille("p4", "k", 9, 300, 600, 8);  // highest htr
  const auto kept = soft_filter(cluster, DistillConfig{});
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].push_id, "p0");
  EXPECT_EQ(kept[1].push_id, "p1");
  EXPECT_EQ(kept[2].push_id, "p3");
}

TEST(SoftFilter, RetentionBoundForDistinctValues) {
  SplitMix64 rng(21);
  const DistillConfig cfg;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    std::vector<PushRecord> cluster;
    // Distinct per-mille values via shuffled ranks.
    std::vector<int64_t> ranks(n);
    for (std::size_t i = 0; i < n; ++i) ranks[i] = static_cast<int64_t>(i);
    auto permuted = [&] {
      auto r = ranks;
      rng.shuffle(r);
      return r;
    };
    const auto ctr = permuted(), svr = permuted(), lvtr = permuted(), htr = permuted();
    for (std::size_t i = 0; i < n; ++i) {
      cluster.push_back(make_record("p" + std::to_string(i), "k", 100000, 700 + ctr[i], 20000 + svr[i],
                                    60000 + lvtr[i], 100 + htr[i]));
    }
    const auto kept = soft_filter(cluster, cfg);
    const auto per_metric = static_cast<std::size_t>(std::ceil(cfg.quantile * static_cast<double>(n)));
    const std::size_t floor_bound = n > 4 * per_metric ? n - 4 * per_metric : 0;
    ASSERT_GE(kept.size(), floor_bound) << "n=" << n;
  }
}

TEST(ConfidenceWeight, Saturates) {
  EXPECT_NEAR(confidence_weight(stats(10000, 1000, 0, 0, 0), DistillConfig{}), 1.0, 1e-12);
}

TEST(ConfidenceWeight, FloorAtBase) {
  EXPECT_NEAR(confidence_weight(stats(1, 0, 0, 0, 0), DistillConfig{}), 0.3, 1e-12);
}

TEST(ConfidenceWeight, HalfTerms) {
  // ctr 0.05, pv 100: 0.3 + 0.35 * 0.5 + 0.35 * ln(100) / ln(10000) = 0.65
  EXPECT_NEAR(confidence_weight(stats(100, 5, 0, 0, 0), DistillConfig{}), 0.65, 1e-12);
}

TEST(ConfidenceWeight, ZeroPvIsDomainError) {
  try {
    confidence_weight(stats(0, 0, 0, 0, 0), DistillConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
  }
}

TEST(ConfidenceWeight, MonotoneAndBoundedOnGrid) {
  const DistillConfig cfg;
  for (int64_t pv = 1; pv <= 20000; pv += 97) {
    double prev = -1.0;
    for (int64_t clicks = 0; clicks <= pv; clicks += std::max<int64_t>(1, pv / 50)) {
      const double w = confidence_weight(stats(pv, clicks, 0, 0, 0), cfg);
      ASSERT_GE(w, 0.3);
      ASSERT_LE(w, 1.0 + 1e-12);
      ASSERT_GE(w, prev);
      prev = w;
    }
  }
}

TEST(ConfidenceWeight, LiteralLogTermIsClamped) {
  DistillConfig cfg;
  cfg.literal_log_term = true;
  // ln(1) = 0 at the cap, so the literal form peaks at 0.3 + 0.35.
  EXPECT_NEAR(confidence_weight(stats(10000, 1000, 0, 0, 0), cfg), 0.65, 1e-12);
  EXPECT_EQ(confidence_weight(stats(1, 0, 0, 0, 0), cfg), 0.01);
}

TEST(DistillConfig, RejectsBadConstants) {
  DistillConfig cfg;
  cfg.quantile = 0.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.pv_coeff = 0.4;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Distill, EmptyInput) { EXPECT_TRUE(distill(std::vector<PushRecord>{}, DistillConfig{}).empty()); }

TEST(Distill, HardFailureNeverSurvives) {
  std::vector<PushRecord> records;
  for (int i = 0; i < 8; ++i) records.push_back(record_permille("ok" + std::to_string(i), "k", 9, 300, 600, 5));
  records.push_back(make_record("low-pv", "k", 500, 9, 150, 300, 1));
  const auto out = distill(records, DistillConfig{});
  for (const auto& s : out) EXPECT_NE(s.record.push_id, "low-pv");
  EXPECT_EQ(out.size(), 8u);
}

std::vector<PushRecord> two_cluster_fixture() {
  std::vector<PushRecord> records;
  const int64_t ctr[] = {7, 12, 9, 15, 5, 20, 8, 11, 30, 10, 8, 14, 16, 7, 9, 13, 25, 11, 6, 18};
  const int64_t svr[] = {300, 200, 350, 250, 390, 100, 310, 280, 150, 330,
                         220, 260, 180, 410, 240, 300, 120, 205, 330, 260};
  const int64_t lvtr[] = {600, 700, 550, 650, 520, 800, 640, 610, 750, 580,
                          690, 560, 720, 600, 490, 630, 710, 660, 540, 600};
  const int64_t htr[] = {5, 3, 8, 2, 9, 1, 4, 6, 2, 7, 3, 5, 1, 4, 6, 2, 3, 8, 5, 4};
  for (int i = 0; i < 20; ++i) {
    records.push_back(record_permille("p" + std::to_string(i), i % 2 ? "odd" : "even", ctr[i], svr[i], lvtr[i],
                                      htr[i]));
  }
  return records;
}

TEST(Distill, EqualsManualComposition) {
  const auto records = two_cluster_fixture();
  const DistillConfig cfg;
  // Oracle: compose the three stages by hand.
  std::map<std::string, std::vector<PushRecord>> clusters;
  for (const auto& r : records) {
    if (hard_filter(r.stats, cfg)) clusters[r.tag_cluster].push_back(r);
  }
  std::set<std::string> survivors;
  for (const auto& [tag, members] : clusters) {
    for (const auto& r : soft_filter(members, cfg)) survivors.insert(r.push_id);
  }
  std::vector<WeightedSample> expected;
  for (const auto& r : records) {
    if (survivors.count(r.push_id)) expected.push_back({r, confidence_weight(r.stats, cfg)});
  }
  const auto actual = distill(records, cfg);
  ASSERT_EQ(actual.size(), expected.size());
  EXPECT_GT(actual.size(), 0u);
  EXPECT_LT(actual.size(), records.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    EXPECT_EQ(actual[i].record.push_id, expected[i].record.push_id);
    EXPECT_EQ(actual[i].confidence, expected[i].confidence);
    EXPECT_GE(actual[i].confidence, 0.3);
    EXPECT_LE(actual[i].confidence, 1.0);
  }
}

TEST(Distill, RerunOutputIsSubset) {
  const auto records = two_cluster_fixture();
  const auto first = distill(records, DistillConfig{});
  std::vector<PushRecord> again;
  for (const auto& s : first) again.push_back(s.record);
  std::set<std::string> ids;
  for (const auto& s : first) ids.insert(s.record.push_id);
  for (const auto& s : distill(again, DistillConfig{})) EXPECT_TRUE(ids.count(s.record.push_id));
}

TEST(Distill, TiedClusterIsFixedPoint) {
  std::vector<PushRecord> records;
  for (int i = 0; i < 12; ++i) records.push_back(record_permille("p" + std::to_string(i), "k", 9, 300, 600, 5));
  const auto first = distill(records, DistillConfig{});
  std::vector<PushRecord> again;
  for (const auto& s : first) again.push_back(s.record);
  EXPECT_EQ(distill(again, DistillConfig{}).size(), first.size());
  EXPECT_EQ(first.size(), records.size());
}

TEST(ExportSft, WritesWeightExactly) {
  auto r = record_permille("p1", "k", 50, 300, 600, 5);
  std::vector<WeightedSample> samples = {{r, 0.65}};
  std::vector<std::string> cats = {"Suspense"};
  const std::string out = export_sft_dataset(samples, cats, "Write a push.");
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out.back(), '\n');
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 1);
  const auto row = nlohmann::json::parse(out);
  EXPECT_EQ(row.at("weight").get<double>(), 0.65);
  EXPECT_NE(out.find("\"weight\":0.65"), std::string::npos);
  EXPECT_EQ(row.at("control_category"), "Suspense");
  EXPECT_EQ(row.at("item_caption"), *r.caption);
  EXPECT_EQ(row.at("target"), r.text);
  EXPECT_EQ(row.at("instruction"), "Write a push.");
}

TEST(ExportSft, EmptyInputEmptyOutput) {
  EXPECT_EQ(export_sft_dataset(std::vector<WeightedSample>{}, std::vector<std::string>{}, "Write."), "");
}

TEST(ExportSft, MissingCaptionNamesPushId) {
  auto r = record_permille("no-caption", "k", 50, 300, 600, 5);
  r.caption.reset();
  std::vector<WeightedSample> samples = {{r, 0.5}};
  std::vector<std::string> cats = {"Plot"};
  try {
    export_sft_dataset(samples, cats, "Write.");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExport);
    EXPECT_NE(std::string(e.what()).find("no-caption"), std::string::npos);
  }
}

}  // namespace
}  // namespace pushforge
