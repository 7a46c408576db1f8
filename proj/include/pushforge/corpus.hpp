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

#ifndef PUSHFORGE_CORPUS_HPP_
#define PUSHFORGE_CORPUS_HPP_

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushforge/error.hpp"
#include "pushforge/text.hpp"

namespace pushforge {

struct EventCounts {
  int64_t clicks = 0;
  int64_t short_views = 0;
  int64_t long_views = 0;
  int64_t hates = 0;
};

/// Exposure plus engagement counts. Rates always use PV as the denominator
/// and are derived, never stored on disk.
struct EngagementStats {
  int64_t pv = 0;
  int64_t clicks = 0;
  int64_t short_views = 0;
  int64_t long_views = 0;
  int64_t hates = 0;
  double ctr = 0.0;
  double svr = 0.0;
  double lvtr = 0.0;
  double htr = 0.0;

  EventCounts counts() const { return {clicks, short_views, long_views, hates}; }
  bool operator==(const EngagementStats&) const = default;
};

inline EngagementStats derive_rates(const EventCounts& counts, int64_t pv) {
  const int64_t events[] = {counts.clicks, counts.short_views, counts.long_views,
                            counts.hates};
  if (pv < 0) throw Error(ErrorCode::kInvalidStats, "pv must be non-negative");
  for (int64_t n : events) {
    if (n < 0) throw Error(ErrorCode::kInvalidStats, "event counts must be non-negative");
    if (n > pv) {
      throw Error(ErrorCode::kInvalidStats,
                  "event count " + std::to_string(n) + " exceeds pv " + std::to_string(pv));
    }
  }
  EngagementStats s;
  s.pv = pv;
  s.clicks = counts.clicks;
  s.short_views = counts.short_views;
  s.long_views = counts.long_views;
  s.hates = counts.hates;
  if (pv > 0) {
    const auto denom = static_cast<double>(pv);
    s.ctr = static_cast<double>(counts.clicks) / denom;
    s.svr = static_cast<double>(counts.short_views) / denom;
    s.lvtr = static_cast<double>(counts.long_views) / denom;
    s.htr = static_cast<double>(counts.hates) / denom;
  }
  return s;
}

enum class Source { kHuman, kMachine, kBase };

inline std::string source_name(Source s) {
  switch (s) {
    case Source::kHuman: return "human";
    case Source::kMachine: return "machine";
    case Source::kBase: return "base";
  }
  return "human";
}

inline Source parse_source(const std::string& name) {
  if (name == "human") return Source::kHuman;
  if (name == "machine") return Source::kMachine;
  if (name == "base") return Source::kBase;
  throw Error(ErrorCode::kValidation, "unknown source '" + name + "'");
}

struct PushRecord {
  std::string video_id;
  std::string push_id;
  std::string text;
  std::optional<std::string> caption;
  std::string original_title;
  std::vector<std::string> topics;
  std::string platform_category;
  std::string tag_cluster;
  EngagementStats stats;
  Source source = Source::kHuman;
  int64_t timestamp = 0;

  bool operator==(const PushRecord&) const = default;
};

/// Throws kValidation naming the push_id when a record breaks a type invariant.
inline void validate_record(const PushRecord& r) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kValidation, "push_id '" + r.push_id + "': " + what);
  };
  if (r.push_id.empty()) fail("push_id is empty");
  if (is_blank(r.text)) fail("text is empty after normalization");
  if (r.tag_cluster.empty()) fail("tag_cluster is empty");
  try {
    EngagementStats rederived = derive_rates(r.stats.counts(), r.stats.pv);
    if (!(rederived == r.stats)) fail("rates inconsistent with counts");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInvalidStats) throw;
    fail(e.what());
  }
}

inline nlohmann::json record_to_json(const PushRecord& r) {
  nlohmann::json j;
  j["video_id"] = r.video_id;
  j["push_id"] = r.push_id;
  j["text"] = r.text;
  j["caption"] = r.caption ? nlohmann::json(*r.caption) : nlohmann::json(nullptr);
  j["original_title"] = r.original_title;
  j["topics"] = r.topics;
  j["platform_category"] = r.platform_category;
  j["tag_cluster"] = r.tag_cluster;
  j["pv"] = r.stats.pv;
  j["clicks"] = r.stats.clicks;
  j["short_views"] = r.stats.short_views;
  j["long_views"] = r.stats.long_views;
  j["hates"] = r.stats.hates;
  j["source"] = source_name(r.source);
  j["timestamp"] = r.timestamp;
  return j;
}

/// Builds a record from one JSON object. Unknown keys are ignored; missing or
/// mistyped keys raise nlohmann's exceptions, which callers map to kParse.
inline PushRecord record_from_json(const nlohmann::json& j) {
  PushRecord r;
  r.video_id = j.at("video_id").get<std::string>();
  r.push_id = j.at("push_id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  if (auto it = j.find("caption"); it != j.end() && !it->is_null()) {
    r.caption = it->get<std::string>();
  }
  r.original_title = j.value("original_title", std::string());
  r.topics = j.value("topics", std::vector<std::string>{});
  r.platform_category = j.value("platform_category", std::string());
  r.tag_cluster = j.at("tag_cluster").get<std::string>();
  EventCounts counts{j.at("clicks").get<int64_t>(), j.at("short_views").get<int64_t>(),
                     j.at("long_views").get<int64_t>(), j.at("hates").get<int64_t>()};
  const auto pv = j.at("pv").get<int64_t>();
  try {
    r.stats = derive_rates(counts, pv);
  } catch (const Error& e) {
    throw Error(ErrorCode::kValidation, "push_id '" + r.push_id + "': " + e.what());
  }
  r.source = parse_source(j.value("source", std::string("human")));
  r.timestamp = j.value("timestamp", int64_t{0});
  return r;
}

/// Reads line-delimited JSON objects, calling `handle(json, line_number)` for
/// each non-empty line. Malformed JSON raises kParse with the line number.
template <typename Handler>
void for_each_jsonl(std::istream& in, Handler&& handle) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_number) + ": " + e.what());
    }
    if (!j.is_object()) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_number) + ": expected a JSON object");
    }
    handle(j, line_number);
  }
}

inline std::vector<PushRecord> parse_corpus(std::istream& in) {
  std::vector<PushRecord> records;
  std::unordered_set<std::string> seen;
  for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line_number) {
    PushRecord r;
    try {
      r = record_from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_number) + ": " + e.what());
    }
    validate_record(r);
    if (!seen.insert(r.push_id).second) {
      throw Error(ErrorCode::kDuplicate, "push_id '" + r.push_id + "' appears more than once");
    }
    records.push_back(std::move(r));
  });
  return records;
}

/// Writes one JSON object per line, LF-terminated.
template <typename Range, typename ToJson>
void write_jsonl(std::ostream& out, const Range& items, ToJson&& to_json) {
  for (const auto& item : items) out << to_json(item).dump() << '\n';
}

inline void serialize_corpus(std::ostream& out, const std::vector<PushRecord>& records) {
  write_jsonl(out, records, record_to_json);
}

}  // namespace pushforge

#endif  // PUSHFORGE_CORPUS_HPP_
