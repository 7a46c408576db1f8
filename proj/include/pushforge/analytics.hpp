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

#ifndef PUSHFORGE_ANALYTICS_HPP_
#define PUSHFORGE_ANALYTICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushforge/error.hpp"
#include "pushforge/pairlab.hpp"
#include "pushforge/selector.hpp"
#include "pushforge/stylegen.hpp"
#include "pushforge/text.hpp"

namespace pushforge {

struct AccuracyRow {
  std::string label;
  std::size_t pair_count = 0;
  std::size_t correct_count = 0;
  std::optional<double> accuracy;  // absent for an empty bucket

  bool operator==(const AccuracyRow&) const = default;
};

/// Four gap buckets ("0%-25%" ... "75%-100%") followed by "Overall".
struct AccuracyTable {
  std::vector<AccuracyRow> rows;

  const AccuracyRow& overall() const { return rows.back(); }
};

inline const std::array<std::string_view, kGapBuckets>& bucket_labels() {
  static const std::array<std::string_view, kGapBuckets> labels = {"0%-25%", "25%-50%", "50%-75%",
                                                                   "75%-100%"};
  return labels;
}

/// Scores each held-out pair with r(text_a, text_b). r == 0.5 counts as wrong.
template <PairScorer Scorer>
AccuracyTable stratified_accuracy(Scorer& scorer, const GapBuckets& buckets) {
  AccuracyTable table;
  std::size_t total = 0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < kGapBuckets; ++b) {
    AccuracyRow row{std::string(bucket_labels()[b]), buckets[b].size(), 0, std::nullopt};
    for (const auto& p : buckets[b]) {
      const double r = static_cast<double>(scorer(p.text_a, p.text_b));
      if ((r > 0.5 && p.label == 1) || (r < 0.5 && p.label == 0)) ++row.correct_count;
    }
    if (row.pair_count > 0) {
      row.accuracy = static_cast<double>(row.correct_count) / static_cast<double>(row.pair_count);
    }
    total += row.pair_count;
    correct += row.correct_count;
    table.rows.push_back(std::move(row));
  }
  AccuracyRow overall{"Overall", total, correct, std::nullopt};
  if (total > 0) overall.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  table.rows.push_back(std::move(overall));
  return table;
}

/// One video of an Exp-vs-Base comparison. `x` is the model's probability
/// that the Exp push wins.
struct VideoOutcome {
  std::string video_id;
  double x = 0.5;
  int64_t clicks_exp = 0;
  int64_t clicks_base = 0;
  int64_t pv_exp = 0;
  int64_t pv_base = 0;
};

struct CurvePoint {
  double threshold = 0.0;
  double increment = 0.0;
  std::size_t n_videos = 0;

  bool operator==(const CurvePoint&) const = default;
};

inline double click_increment(const VideoOutcome& v, bool normalize_exposure) {
  if (!normalize_exposure) return static_cast<double>(v.clicks_exp - v.clicks_base);
  if (v.pv_base == 0) {
    throw Error(ErrorCode::kDomain, "video '" + v.video_id + "' has pv_base = 0");
  }
  return static_cast<double>(v.clicks_exp) -
         static_cast<double>(v.clicks_base) * (static_cast<double>(v.pv_exp) / static_cast<double>(v.pv_base));
}

/// 0 plus the sorted distinct x values.
inline std::vector<double> default_thresholds(std::span<const VideoOutcome> outcomes) {
  std::set<double> grid{0.0};
  for (const auto& v : outcomes) grid.insert(v.x);
  return {grid.begin(), grid.end()};
}

/// y(t) = sum of per-video click increments over videos with x > t.
inline std::vector<CurvePoint> click_increment_curve(std::span<const VideoOutcome> outcomes,
                                                     std::span<const double> thresholds,
                                                     bool normalize_exposure = false) {
  if (outcomes.empty()) throw Error(ErrorCode::kUsage, "no video outcomes");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorCode::kUsage, "thresholds must be sorted ascending");
  }
  std::vector<std::pair<double, double>> by_x;
  by_x.reserve(outcomes.size());
  for (const auto& v : outcomes) {
    if (!std::isfinite(v.x)) throw Error(ErrorCode::kDomain, "video '" + v.video_id + "' has non-finite x");
    by_x.emplace_back(v.x, click_increment(v, normalize_exposure));
  }
  std::sort(by_x.begin(), by_x.end());
  std::vector<CurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto first = std::upper_bound(by_x.begin(), by_x.end(), t,
                                        [](double value, const auto& e) { return value < e.first; });
    CurvePoint point{t, 0.0, static_cast<std::size_t>(by_x.end() - first)};
    for (auto it = first; it != by_x.end(); ++it) point.increment += it->second;
    curve.push_back(point);
  }
  return curve;
}

/// Trapezoidal area under y(threshold).
inline double curve_auc(std::span<const CurvePoint> curve) {
  if (curve.empty()) throw Error(ErrorCode::kUsage, "curve has no points");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dx = curve[i].threshold - curve[i - 1].threshold;
    if (dx < 0.0) throw Error(ErrorCode::kUsage, "curve thresholds are not sorted");
    area += 0.5 * dx * (curve[i].increment + curve[i - 1].increment);
  }
  return area;
}

struct StyleShare {
  std::string category;
  double share = 0.0;

  bool operator==(const StyleShare&) const = default;
};

struct StyleDistribution {
  std::size_t total = 0;
  double base_share = 0.0;
  std::vector<StyleShare> categories;  // taxonomy order

  double replacement_share() const { return 1.0 - base_share; }
};

inline StyleDistribution style_distribution(std::span<const SelectionDecision> decisions,
                                            const StyleTaxonomy& taxonomy) {
  if (decisions.empty()) throw Error(ErrorCode::kUsage, "no selection decisions");
  std::size_t keep = 0;
  std::map<std::string, std::size_t> wins;
  for (const auto& d : decisions) {
    if (d.decision == Decision::kKeepBase) {
      ++keep;
      continue;
    }
    if (!taxonomy.contains(d.chosen_category)) {
      throw Error(ErrorCode::kUsage, "decision for video '" + d.video_id + "' names unknown category '" +
                                         d.chosen_category + "'");
    }
    ++wins[d.chosen_category];
  }
  const auto total = static_cast<double>(decisions.size());
  StyleDistribution out;
  out.total = decisions.size();
  out.base_share = static_cast<double>(keep) / total;
  for (const auto& name : taxonomy.names()) {
    const auto it = wins.find(name);
    out.categories.push_back({name, it == wins.end() ? 0.0 : static_cast<double>(it->second) / total});
  }
  return out;
}

/// Builds Exp-vs-Base outcomes from an A/B log. For each video with an arm
/// named `base_arm`, Exp is the tournament winner among the other arms and
/// x = r(Exp, Base).
template <PairScorer Scorer>
std::vector<VideoOutcome> outcomes_from_ab_log(Scorer& scorer, std::span<const AbLogEntry> entries,
                                               std::string_view base_arm = "base") {
  std::map<std::string, std::vector<const AbLogEntry*>> by_video;
  for (const auto& e : entries) by_video[e.video_id].push_back(&e);
  std::vector<VideoOutcome> out;
  for (auto& [video, arms] : by_video) {
    std::sort(arms.begin(), arms.end(), [](auto* a, auto* b) { return a->arm_id < b->arm_id; });
    const AbLogEntry* base = nullptr;
    std::vector<const AbLogEntry*> rivals;
    std::set<std::string> seen;
    for (const auto* a : arms) {
      if (a->arm_id == base_arm) base = a;
    }
    if (!base) continue;
    seen.insert(normalize_text(base->text));
    for (const auto* a : arms) {
      if (a != base && seen.insert(normalize_text(a->text)).second) rivals.push_back(a);
    }
    if (rivals.empty()) continue;
    std::vector<std::string> texts;
    for (const auto* a : rivals) texts.push_back(a->text);
    const auto ranked = tournament_rank(scorer, texts);
    const AbLogEntry* exp = rivals[ranked.front().input_index];
    out.push_back({video, static_cast<double>(scorer(exp->text, base->text)), exp->clicks, base->clicks,
                   exp->pv, base->pv});
  }
  return out;
}

enum class ReportFormat { kCsv, kJson };

inline ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw Error(ErrorCode::kUsage, "unknown report format '" + std::string(name) + "' (expected csv or json)");
}

struct Report {
  std::optional<AccuracyTable> accuracy;
  std::optional<std::vector<CurvePoint>> curve;
  std::optional<StyleDistribution> styles;
};

namespace report_detail {

inline std::string csv_number(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string accuracy_csv(const AccuracyTable& t) {
  std::string out = "label,pair_count,correct_count,accuracy\n";
  for (const auto& r : t.rows) {
    out += r.label + "," + std::to_string(r.pair_count) + "," + std::to_string(r.correct_count) + "," +
           csv_number(r.accuracy) + "\n";
  }
  return out;
}

inline nlohmann::json accuracy_json(const AccuracyTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"label", r.label},
                    {"pair_count", r.pair_count},
                    {"correct_count", r.correct_count},
                    {"accuracy", r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr)}});
  }
  return {{"rows", std::move(rows)}};
}

inline std::string curve_csv(const std::vector<CurvePoint>& c) {
  std::string out = "threshold,increment,n_videos\n";
  for (const auto& p : c) {
    out += format_double(p.threshold) + "," + format_double(p.increment) + "," + std::to_string(p.n_videos) + "\n";
  }
  return out;
}

inline nlohmann::json curve_json(const std::vector<CurvePoint>& c) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : c) {
    points.push_back({{"threshold", p.threshold}, {"increment", p.increment}, {"n_videos", p.n_videos}});
  }
  return {{"auc", c.empty() ? nlohmann::json(nullptr) : nlohmann::json(curve_auc(c))},
          {"points", std::move(points)}};
}

inline std::string styles_csv(const StyleDistribution& s) {
  std::string out = "category,share\n";
  out += std::string(kBaseCategory) + "," + format_double(s.base_share) + "\n";
  for (const auto& c : s.categories) out += csv_field(c.category) + "," + format_double(c.share) + "\n";
  return out;
}

inline nlohmann::json styles_json(const StyleDistribution& s) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : s.categories) cats.push_back({{"category", c.category}, {"share", c.share}});
  return {{"total", s.total},
          {"base_share", s.base_share},
          {"replacement_share", s.replacement_share()},
          {"categories", std::move(cats)}};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << bytes;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace report_detail

/// Writes accuracy_table / increment_curve / style_distribution files for
/// whichever parts of `report` are present. Returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const Report& report, std::string_view format,
                                                      const std::filesystem::path& dir) {
  const ReportFormat fmt = parse_report_format(format);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  using namespace report_detail;
  const std::string ext = fmt == ReportFormat::kCsv ? ".csv" : ".json";
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& stem, const std::string& csv, auto make_json) {
    const auto path = dir / (stem + ext);
    write_file(path, fmt == ReportFormat::kCsv ? csv : make_json().dump(2) + "\n");
    written.push_back(path);
  };
  if (report.accuracy) {
    emit("accuracy_table", accuracy_csv(*report.accuracy), [&] { return accuracy_json(*report.accuracy); });
  }
  if (report.curve) {
    emit("increment_curve", curve_csv(*report.curve), [&] { return curve_json(*report.curve); });
  }
  if (report.styles) {
    emit("style_distribution", styles_csv(*report.styles), [&] { return styles_json(*report.styles); });
  }
  return written;
}

}  // namespace pushforge

#endif  // PUSHFORGE_ANALYTICS_HPP_
