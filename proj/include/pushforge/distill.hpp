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

#ifndef PUSHFORGE_DISTILL_HPP_
#define PUSHFORGE_DISTILL_HPP_

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushforge/corpus.hpp"
#include "pushforge/error.hpp"

namespace pushforge {

struct DistillConfig {
  // Hard-filter thresholds; every comparison is strict.
  double ctr_min = 0.006;
  double svr_max = 0.40;
  double lvtr_min = 0.50;
  double htr_max = 0.01;
  int64_t pv_min = 800;
  // Within-cluster quantile cropping.
  double quantile = 0.2;
  int64_t min_cluster_size = 5;
  // Confidence weighting.
  double ctr_cap = 0.1;
  int64_t pv_cap = 10000;
  double weight_base = 0.3;
  double ctr_coeff = 0.35;
  double pv_coeff = 0.35;
  // Use log(min(pv, cap) / cap) as printed instead of the normalized
  // ln(min(pv, cap)) / ln(cap); the weight is then clamped to [0.01, 1].
  bool literal_log_term = false;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
    if (!(quantile > 0.0 && quantile < 0.5)) fail("quantile must lie in (0, 0.5)");
    for (double rate : {ctr_min, svr_max, lvtr_min, htr_max, ctr_cap}) {
      if (!(rate >= 0.0 && rate <= 1.0)) fail("rate thresholds must lie in [0, 1]");
    }
    if (ctr_cap <= 0.0) fail("ctr_cap must be positive");
    if (pv_min <= 0 || pv_cap <= 1 || min_cluster_size <= 0) {
      fail("pv_min, min_cluster_size must be positive and pv_cap > 1");
    }
    if (std::abs(weight_base + ctr_coeff + pv_coeff - 1.0) > 1e-12) {
      fail("weight_base + ctr_coeff + pv_coeff must equal 1");
    }
  }
};

struct WeightedSample {
  PushRecord record;
  double confidence = 0.0;
};

inline bool hard_filter(const EngagementStats& s, const DistillConfig& cfg) {
  return s.ctr > cfg.ctr_min && s.svr < cfg.svr_max && s.lvtr > cfg.lvtr_min &&
         s.htr < cfg.htr_max && s.pv > cfg.pv_min;
}

/// Linear-interpolation empirical quantile of `values` at probability `p`:
/// position (N-1)p on the ascending sort, interpolated between neighbours.
inline double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kUsage, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= values.size() || frac == 0.0) return values[lo];
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

/// Retention mask for one tag cluster. Clusters below min_cluster_size are
/// kept whole.
inline std::vector<bool> soft_filter_mask(std::span<const PushRecord> cluster,
                                          const DistillConfig& cfg) {
  std::vector<bool> keep(cluster.size(), true);
  if (cluster.empty()) return keep;
  for (const auto& r : cluster) {
    if (r.tag_cluster != cluster.front().tag_cluster) {
      throw Error(ErrorCode::kUsage, "soft_filter called on mixed tag clusters '" +
                                         cluster.front().tag_cluster + "' and '" +
                                         r.tag_cluster + "'");
    }
  }
  if (static_cast<int64_t>(cluster.size()) < cfg.min_cluster_size) return keep;

  auto column = [&](double EngagementStats::*field) {
    std::vector<double> v;
    v.reserve(cluster.size());
    for (const auto& r : cluster) v.push_back(r.stats.*field);
    return v;
  };
  const double q = cfg.quantile;
  const double ctr_floor = empirical_quantile(column(&EngagementStats::ctr), q);
  const double lvtr_floor = empirical_quantile(column(&EngagementStats::lvtr), q);
  const double svr_ceiling = empirical_quantile(column(&EngagementStats::svr), 1.0 - q);
  const double htr_ceiling = empirical_quantile(column(&EngagementStats::htr), 1.0 - q);

  for (std::size_t i = 0; i < cluster.size(); ++i) {
    const auto& s = cluster[i].stats;
    if (s.ctr < ctr_floor || s.lvtr < lvtr_floor || s.svr > svr_ceiling ||
        s.htr > htr_ceiling) {
      keep[i] = false;
    }
  }
  return keep;
}

inline std::vector<PushRecord> soft_filter(std::span<const PushRecord> cluster,
                                           const DistillConfig& cfg) {
  const auto keep = soft_filter_mask(cluster, cfg);
  std::vector<PushRecord> out;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    if (keep[i]) out.push_back(cluster[i]);
  }
  return out;
}

inline double confidence_weight(const EngagementStats& s, const DistillConfig& cfg) {
  if (s.pv <= 0) throw Error(ErrorCode::kDomain, "confidence weight needs pv >= 1");
  const double ctr_term = std::min(s.ctr, cfg.ctr_cap) / cfg.ctr_cap;
  const auto capped_pv = static_cast<double>(std::min(s.pv, cfg.pv_cap));
  const auto cap = static_cast<double>(cfg.pv_cap);
  if (cfg.literal_log_term) {
    const double w =
        cfg.weight_base + cfg.ctr_coeff * ctr_term + cfg.pv_coeff * std::log(capped_pv / cap);
    return std::clamp(w, 0.01, 1.0);
  }
  return cfg.weight_base + cfg.ctr_coeff * ctr_term +
         cfg.pv_coeff * (std::log(capped_pv) / std::log(cap));
}

/// Hard filter, then per-cluster soft filter, then confidence weighting.
/// Output keeps the input's relative order.
inline std::vector<WeightedSample> distill(std::span<const PushRecord> records,
                                           const DistillConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> passed;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (hard_filter(records[i].stats, cfg)) passed.push_back(i);
  }

  std::map<std::string, std::vector<std::size_t>> clusters;
  for (std::size_t i : passed) clusters[records[i].tag_cluster].push_back(i);

  std::vector<bool> retained(records.size(), false);
  for (const auto& [tag, members] : clusters) {
    std::vector<PushRecord> cluster;
    cluster.reserve(members.size());
    for (std::size_t i : members) cluster.push_back(records[i]);
    const auto keep = soft_filter_mask(cluster, cfg);
    for (std::size_t k = 0; k < members.size(); ++k) retained[members[k]] = keep[k];
  }

  std::vector<WeightedSample> out;
  for (std::size_t i : passed) {
    if (retained[i]) out.push_back({records[i], confidence_weight(records[i].stats, cfg)});
  }
  return out;
}

inline nlohmann::json weighted_sample_to_json(const WeightedSample& s) {
  nlohmann::json j = record_to_json(s.record);
  j["confidence"] = s.confidence;
  return j;
}

inline WeightedSample weighted_sample_from_json(const nlohmann::json& j) {
  return {record_from_json(j), j.at("confidence").get<double>()};
}

/// One row of the weighted SFT dataset. `weight` scales the sample's
/// fine-tuning loss in the external trainer.
struct SftExample {
  std::string instruction;
  std::string control_category;
  std::string item_caption;
  std::string target;
  double weight = 0.0;
};

inline nlohmann::json sft_example_to_json(const SftExample& e) {
  return {{"instruction", e.instruction},
          {"control_category", e.control_category},
          {"item_caption", e.item_caption},
          {"target", e.target},
          {"weight", e.weight}};
}

/// Pairs each sample with its control category (parallel arrays).
inline std::vector<SftExample> make_sft_examples(std::span<const WeightedSample> samples,
                                                 std::span<const std::string> categories,
                                                 std::string_view task_prompt) {
  if (samples.size() != categories.size()) {
    throw Error(ErrorCode::kUsage, "one control category is required per sample");
  }
  if (is_blank(task_prompt)) throw Error(ErrorCode::kExport, "task prompt is empty");
  std::vector<SftExample> rows;
  rows.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& r = samples[i].record;
    if (!r.caption || is_blank(*r.caption)) {
      throw Error(ErrorCode::kExport, "push_id '" + r.push_id + "' has no caption");
    }
    if (is_blank(categories[i])) {
      throw Error(ErrorCode::kExport, "push_id '" + r.push_id + "' has no control category");
    }
    rows.push_back({std::string(task_prompt), categories[i], *r.caption, r.text,
                    samples[i].confidence});
  }
  return rows;
}

inline std::string export_sft_dataset(std::span<const WeightedSample> samples,
                                      std::span<const std::string> categories,
                                      std::string_view task_prompt) {
  std::string out;
  for (const auto& row : make_sft_examples(samples, categories, task_prompt)) {
    out += sft_example_to_json(row).dump();
    out += '\n';
  }
  return out;
}

}  // namespace pushforge

#endif  // PUSHFORGE_DISTILL_HPP_
