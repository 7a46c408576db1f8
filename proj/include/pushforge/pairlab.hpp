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

#ifndef PUSHFORGE_PAIRLAB_HPP_
#define PUSHFORGE_PAIRLAB_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushforge/corpus.hpp"
#include "pushforge/error.hpp"
#include "pushforge/text.hpp"

namespace pushforge {

/// One arm of a small-traffic A/B test: a push text served for a video.
struct AbLogEntry {
  std::string video_id;
  std::string arm_id;
  std::string text;
  int64_t pv = 0;
  int64_t clicks = 0;

  double ctr() const { return static_cast<double>(clicks) / static_cast<double>(pv); }

  void validate() const {
    if (pv < 1) throw Error(ErrorCode::kValidation, "arm '" + arm_id + "' of video '" + video_id + "' has pv < 1");
    if (clicks < 0 || clicks > pv) {
      throw Error(ErrorCode::kValidation,
                  "arm '" + arm_id + "' of video '" + video_id + "' has clicks outside [0, pv]");
    }
  }
};

struct PairSample {
  std::string video_id;
  std::string text_a;
  std::string text_b;
  double ctr_a = 0.0;
  double ctr_b = 0.0;
  int64_t pv_a = 0;
  int64_t pv_b = 0;
  int label = 0;  // 1 iff ctr_a > ctr_b
  double gap = 0.0;

  bool operator==(const PairSample&) const = default;
};

struct PairConfig {
  int64_t min_pv_per_arm = 200;
  double max_exposure_ratio = 0.5;  // min(pv)/max(pv) must reach this
  double eval_fraction = 0.2;
  uint64_t seed = 0;

  void validate() const {
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
      throw Error(ErrorCode::kConfig, "eval_fraction must lie in (0, 1)");
    }
    if (!(max_exposure_ratio >= 0.0 && max_exposure_ratio <= 1.0)) {
      throw Error(ErrorCode::kConfig, "max_exposure_ratio must lie in [0, 1]");
    }
  }
};

struct SkipReport {
  std::size_t imbalance_count = 0;
  std::size_t low_pv_count = 0;
  std::size_t same_text_count = 0;
  std::size_t tie_count = 0;

  std::size_t total() const { return imbalance_count + low_pv_count + same_text_count + tie_count; }
};

struct PairBuild {
  std::vector<PairSample> pairs;
  SkipReport skipped;
};

/// Every unordered pair of arms of the same video that passes the exposure
/// balance, PV floor, distinct-text, and non-tie checks (in that order)
/// becomes one sample oriented by ascending arm_id. Output is ordered by
/// video_id, then arm ids.
inline PairBuild build_pairs(std::span<const AbLogEntry> entries, const PairConfig& cfg) {
  std::map<std::string, std::map<std::string, const AbLogEntry*>> by_video;
  for (const auto& e : entries) {
    e.validate();
    if (!by_video[e.video_id].emplace(e.arm_id, &e).second) {
      throw Error(ErrorCode::kDuplicate,
                  "arm '" + e.arm_id + "' appears twice for video '" + e.video_id + "'");
    }
  }
  PairBuild out;
  for (const auto& [video, arms] : by_video) {
    std::vector<const AbLogEntry*> ordered;
    for (const auto& [id, entry] : arms) ordered.push_back(entry);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      for (std::size_t j = i + 1; j < ordered.size(); ++j) {
        const AbLogEntry& a = *ordered[i];
        const AbLogEntry& b = *ordered[j];
        const double ratio = static_cast<double>(std::min(a.pv, b.pv)) /
                             static_cast<double>(std::max(a.pv, b.pv));
        if (ratio < cfg.max_exposure_ratio) {
          ++out.skipped.imbalance_count;
          continue;
        }
        if (a.pv < cfg.min_pv_per_arm || b.pv < cfg.min_pv_per_arm) {
          ++out.skipped.low_pv_count;
          continue;
        }
        if (normalize_text(a.text) == normalize_text(b.text)) {
          ++out.skipped.same_text_count;
          continue;
        }
        const double ctr_a = a.ctr();
        const double ctr_b = b.ctr();
        if (ctr_a == ctr_b) {
          ++out.skipped.tie_count;
          continue;
        }
        out.pairs.push_back({video, a.text, b.text, ctr_a, ctr_b, a.pv, b.pv,
                             ctr_a > ctr_b ? 1 : 0, std::abs(ctr_a - ctr_b)});
      }
    }
  }
  return out;
}

inline constexpr std::size_t kGapBuckets = 4;
using GapBuckets = std::array<std::vector<PairSample>, kGapBuckets>;

/// Rank quartiles by CTR gap: bucket 0 holds the smallest gaps (hardest),
/// bucket 3 the largest. Remainder pairs go to the earliest buckets.
inline GapBuckets stratify_by_gap(std::vector<PairSample> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kUsage, "cannot stratify an empty pair set");
  std::stable_sort(pairs.begin(), pairs.end(), [](const PairSample& x, const PairSample& y) {
    return std::tie(x.gap, x.video_id, x.text_a, x.text_b) <
           std::tie(y.gap, y.video_id, y.text_a, y.text_b);
  });
  GapBuckets buckets;
  const std::size_t base = pairs.size() / kGapBuckets;
  const std::size_t extra = pairs.size() % kGapBuckets;
  std::size_t at = 0;
  for (std::size_t b = 0; b < kGapBuckets; ++b) {
    const std::size_t n = base + (b < extra ? 1 : 0);
    buckets[b].assign(pairs.begin() + static_cast<std::ptrdiff_t>(at),
                      pairs.begin() + static_cast<std::ptrdiff_t>(at + n));
    at += n;
  }
  return buckets;
}

struct PairSplit {
  std::vector<PairSample> train;
  std::vector<PairSample> eval;
  std::vector<std::string> eval_videos;
};

/// Number of held-out videos: round-half-to-even of fraction * V, at least 1.
inline std::size_t eval_video_count(std::size_t videos, double fraction) {
  const double raw = std::nearbyint(fraction * static_cast<double>(videos));
  return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

/// Splits by video so no video contributes to both sides. The held-out
/// videos are the head of a seeded shuffle of the sorted distinct ids.
inline PairSplit split(std::span<const PairSample> pairs, const PairConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw Error(ErrorCode::kUsage, "cannot split an empty pair set");
  std::set<std::string> distinct;
  for (const auto& p : pairs) distinct.insert(p.video_id);
  std::vector<std::string> videos(distinct.begin(), distinct.end());
  const std::size_t n_eval = eval_video_count(videos.size(), cfg.eval_fraction);
  if (n_eval >= videos.size()) {
    throw Error(ErrorCode::kSplit, "cannot hold out " + std::to_string(n_eval) + " of " +
                                       std::to_string(videos.size()) +
                                       " videos and keep a training set");
  }
  SplitMix64 rng(cfg.seed);
  rng.shuffle(videos);
  PairSplit out;
  out.eval_videos.assign(videos.begin(), videos.begin() + static_cast<std::ptrdiff_t>(n_eval));
  std::sort(out.eval_videos.begin(), out.eval_videos.end());
  const std::set<std::string> held(out.eval_videos.begin(), out.eval_videos.end());
  for (const auto& p : pairs) (held.count(p.video_id) ? out.eval : out.train).push_back(p);
  return out;
}

inline nlohmann::json ab_entry_to_json(const AbLogEntry& e) {
  return {{"video_id", e.video_id}, {"arm_id", e.arm_id}, {"text", e.text},
          {"pv", e.pv}, {"clicks", e.clicks}};
}

inline std::vector<AbLogEntry> parse_ab_log(std::istream& in) {
  std::vector<AbLogEntry> out;
  for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line) {
    AbLogEntry e;
    try {
      e = {j.at("video_id").get<std::string>(), j.at("arm_id").get<std::string>(),
           j.at("text").get<std::string>(), j.at("pv").get<int64_t>(), j.at("clicks").get<int64_t>()};
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + ex.what());
    }
    e.validate();
    out.push_back(std::move(e));
  });
  return out;
}

inline nlohmann::json pair_to_json(const PairSample& p) {
  return {{"video_id", p.video_id}, {"text_a", p.text_a}, {"text_b", p.text_b},
          {"ctr_a", p.ctr_a},       {"ctr_b", p.ctr_b},   {"pv_a", p.pv_a},
          {"pv_b", p.pv_b},         {"label", p.label},   {"gap", p.gap}};
}

inline PairSample pair_from_json(const nlohmann::json& j) {
  PairSample p{j.at("video_id").get<std::string>(), j.at("text_a").get<std::string>(),
               j.at("text_b").get<std::string>(), j.at("ctr_a").get<double>(),
               j.at("ctr_b").get<double>(),       j.at("pv_a").get<int64_t>(),
               j.at("pv_b").get<int64_t>(),       j.at("label").get<int>(),
               j.at("gap").get<double>()};
  if (p.label != (p.ctr_a > p.ctr_b ? 1 : 0) || p.ctr_a == p.ctr_b) {
    throw Error(ErrorCode::kValidation, "pair for video '" + p.video_id + "' has an unsound label");
  }
  return p;
}

inline std::vector<PairSample> parse_pairs(std::istream& in) {
  std::vector<PairSample> out;
  for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line) {
    try {
      out.push_back(pair_from_json(j));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + ex.what());
    }
  });
  return out;
}

}  // namespace pushforge

#endif  // PUSHFORGE_PAIRLAB_HPP_
