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

#ifndef PUSHFORGE_STYLEGEN_HPP_
#define PUSHFORGE_STYLEGEN_HPP_

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushforge/corpus.hpp"
#include "pushforge/error.hpp"
#include "pushforge/llm_gateway.hpp"
#include "pushforge/text.hpp"

namespace pushforge {

inline constexpr std::string_view kFallbackCategory = "Other";
inline constexpr std::string_view kClassifyInstruction = "Answer with exactly one category name.";

struct StyleCategory {
  std::string name;
  std::string definition;
};

/// Ordered set of control categories. "Other" must always be present; it is
/// the classifier's fallback when the votes do not agree.
class StyleTaxonomy {
 public:
  StyleTaxonomy() : StyleTaxonomy(default_categories()) {}

  explicit StyleTaxonomy(std::vector<StyleCategory> categories)
      : categories_(std::move(categories)) {
    std::set<std::string> seen;
    bool has_fallback = false;
    for (const auto& c : categories_) {
      if (is_blank(c.name)) throw Error(ErrorCode::kConfig, "taxonomy has an empty category name");
      if (!seen.insert(fold(c.name)).second) {
        throw Error(ErrorCode::kConfig, "duplicate taxonomy category '" + c.name + "'");
      }
      has_fallback |= c.name == kFallbackCategory;
    }
    if (!has_fallback) throw Error(ErrorCode::kConfig, "taxonomy must contain 'Other'");
  }

  /// Builds a taxonomy from bare names, using the default definition when one
  /// is known.
  static StyleTaxonomy from_names(const std::vector<std::string>& names) {
    std::vector<StyleCategory> cats;
    for (const auto& n : names) {
      std::string def = "Notifications in the " + n + " style.";
      for (const auto& d : default_categories()) {
        if (d.name == n) def = d.definition;
      }
      cats.push_back({n, def});
    }
    return StyleTaxonomy(std::move(cats));
  }

  static std::vector<StyleCategory> default_categories() {
    return {
        {"Suspense", "Opens a curiosity gap or twist that the reader wants resolved."},
        {"Emotion", "Appeals to feelings such as warmth, surprise, nostalgia or awe."},
        {"Practical", "Promises useful know-how, tips or a concrete benefit."},
        {"Plot", "Summarizes the storyline or key events of the video."},
        {"General", "Plain description of the video without a distinctive hook."},
        {"Other", "Fits none of the categories above."},
    };
  }

  const std::vector<StyleCategory>& categories() const { return categories_; }
  std::size_t size() const { return categories_.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : categories_) out.push_back(c.name);
    return out;
  }

  bool contains(std::string_view name) const {
    return std::any_of(categories_.begin(), categories_.end(),
                       [&](const StyleCategory& c) { return c.name == name; });
  }

  /// Case-insensitive, whitespace-normalized lookup of a free-form answer.
  std::optional<std::string> match(std::string_view answer) const {
    const std::string key = fold(answer);
    for (const auto& c : categories_) {
      if (fold(c.name) == key) return c.name;
    }
    return std::nullopt;
  }

 private:
  static std::string fold(std::string_view s) {
    std::string out = normalize_text(s);
    for (char& ch : out) {
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
  }

  std::vector<StyleCategory> categories_;
};

struct SamplingParams {
  double temperature = 0.8;
  double top_p = 0.9;
  double repetition_penalty = 1.1;
  int max_tokens = 64;
  int n_per_category = 2;

  void validate() const {
    if (!(temperature >= 0.0)) throw Error(ErrorCode::kConfig, "temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kConfig, "top_p must lie in (0, 1]");
    if (n_per_category < 1) throw Error(ErrorCode::kConfig, "n_per_category must be >= 1");
  }
};

inline ChatRequest build_category_prompt(const StyleTaxonomy& taxonomy, std::string_view push_text) {
  const std::string text = normalize_text(push_text);
  if (text.empty()) throw Error(ErrorCode::kUsage, "cannot classify an empty push text");
  std::string body = "Classify the push notification into one of these content styles:\n";
  for (const auto& c : taxonomy.categories()) body += "- " + c.name + ": " + c.definition + "\n";
  body += "\nPush:\n" + text + "\n\n";
  body += kClassifyInstruction;

  ChatRequest req;
  req.messages = {{"system", "You label push notifications by content style."},
                  {"user", std::move(body)}};
  req.temperature = 0.2;
  req.top_p = 1.0;
  req.repetition_penalty = 1.0;
  req.max_tokens = 8;
  return req;
}

/// Asks the backend `k` times (distinct seeds) and returns the category with
/// a strict majority of the votes, else "Other". Answers that are not exactly
/// one taxonomy name abstain.
inline std::string classify_style(std::string_view push_text, const StyleTaxonomy& taxonomy,
                                  CompletionBackend& backend, int k = 3) {
  if (k < 1 || k % 2 == 0) throw Error(ErrorCode::kUsage, "query count k must be odd and >= 1");
  ChatRequest base = build_category_prompt(taxonomy, push_text);
  base.model_name = backend.model_name();
  const uint64_t text_hash = fnv1a64(normalize_text(push_text));
  std::vector<ChatRequest> queries;
  for (int i = 0; i < k; ++i) {
    ChatRequest q = base;
    q.seed = splitmix64(text_hash ^ static_cast<uint64_t>(i));
    queries.push_back(std::move(q));
  }
  std::map<std::string, int> votes;
  for (auto& outcome : complete_batch(backend, queries)) {
    if (outcome.error) throw *outcome.error;
    if (auto name = taxonomy.match(outcome.response->content)) ++votes[*name];
  }
  for (const auto& [name, count] : votes) {
    if (2 * count > k) return name;
  }
  return std::string(kFallbackCategory);
}

inline ChatRequest build_generation_prompt(const StyleTaxonomy& taxonomy,
                                           std::string_view task_prompt,
                                           std::string_view category, std::string_view caption,
                                           const SamplingParams& params = {}) {
  const std::string task = normalize_text(task_prompt).empty() ? std::string()
                                                                : std::string(task_prompt);
  const std::string content = normalize_text(caption);
  if (task.empty()) throw Error(ErrorCode::kUsage, "task prompt is empty");
  if (content.empty()) throw Error(ErrorCode::kUsage, "item caption is empty");
  if (!taxonomy.contains(category)) {
    throw Error(ErrorCode::kUsage, "category '" + std::string(category) + "' is not in the taxonomy");
  }
  ChatRequest req;
  req.messages = {{"user", "### TASK\n" + task + "\n### STYLE\n" + std::string(category) +
                               "\n### CONTENT\n" + content + "\n"}};
  req.temperature = params.temperature;
  req.top_p = params.top_p;
  req.repetition_penalty = params.repetition_penalty;
  req.max_tokens = params.max_tokens;
  return req;
}

struct Candidate {
  std::string category;
  std::string text;
  uint64_t seed = 0;
  std::string model;
  std::string finish_reason;
  /// FNV-1a 64 of the prompt body that produced this candidate.
  uint64_t prompt_hash = 0;

  bool operator==(const Candidate&) const = default;
};

struct CategoryError {
  std::string category;
  std::string message;

  bool operator==(const CategoryError&) const = default;
};

struct CandidateSet {
  std::string video_id;
  std::string base_text;
  std::vector<Candidate> candidates;
  std::vector<CategoryError> errors;

  bool operator==(const CandidateSet&) const = default;
};

inline uint64_t candidate_seed(std::string_view push_id, std::string_view category, int index) {
  std::string key(push_id);
  key += '\x1f';
  key += category;
  key += '\x1f';
  key += std::to_string(index);
  return splitmix64(fnv1a64(key));
}

/// Drops candidates that normalize equal to base_text or to an earlier
/// candidate. Order is otherwise kept.
inline CandidateSet dedup_candidates(CandidateSet set) {
  std::unordered_set<std::string> seen{normalize_text(set.base_text)};
  std::vector<Candidate> kept;
  for (auto& c : set.candidates) {
    if (seen.insert(normalize_text(c.text)).second) kept.push_back(std::move(c));
  }
  set.candidates = std::move(kept);
  return set;
}

inline CandidateSet generate_candidates(const PushRecord& record, const StyleTaxonomy& taxonomy,
                                        const SamplingParams& params, std::string_view task_prompt,
                                        CompletionBackend& backend,
                                        std::ostream* log = &std::cerr) {
  params.validate();
  if (!record.caption || is_blank(*record.caption)) {
    throw Error(ErrorCode::kUsage, "push_id '" + record.push_id + "' has no caption");
  }
  struct Slot {
    std::string category;
    uint64_t seed;
  };
  std::vector<Slot> slots;
  std::vector<ChatRequest> requests;
  for (const auto& cat : taxonomy.categories()) {
    const ChatRequest prompt =
        build_generation_prompt(taxonomy, task_prompt, cat.name, *record.caption, params);
    for (int i = 0; i < params.n_per_category; ++i) {
      ChatRequest req = prompt;
      req.model_name = backend.model_name();
      req.seed = candidate_seed(record.push_id, cat.name, i);
      slots.push_back({cat.name, *req.seed});
      requests.push_back(std::move(req));
    }
  }

  const auto outcomes = complete_batch(backend, requests);
  CandidateSet set{record.video_id, record.text, {}, {}};
  std::map<std::string, std::string> last_error;
  std::set<std::string> succeeded;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.error) {
      last_error[slots[i].category] = o.error->what();
      continue;
    }
    if (is_blank(o.response->content)) {
      last_error[slots[i].category] = "empty completion";
      continue;
    }
    succeeded.insert(slots[i].category);
    set.candidates.push_back({slots[i].category, normalize_text(o.response->content), slots[i].seed,
                              requests[i].model_name, o.response->finish_reason,
                              fnv1a64(requests[i].messages.back().content)});
  }
  for (const auto& cat : taxonomy.categories()) {
    if (succeeded.count(cat.name) == 0) {
      const std::string message = last_error.count(cat.name) ? last_error[cat.name] : "no attempts";
      set.errors.push_back({cat.name, message});
      if (log) *log << "generate: video " << record.video_id << " category " << cat.name
                    << " failed: " << message << '\n';
    }
  }
  if (succeeded.empty()) {
    throw Error(ErrorCode::kGeneration,
                "every category failed for push_id '" + record.push_id + "'");
  }
  return dedup_candidates(std::move(set));
}

inline nlohmann::json candidate_set_to_json(const CandidateSet& s) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : s.candidates) {
    cands.push_back({{"category", c.category},
                     {"text", c.text},
                     {"seed", c.seed},
                     {"model", c.model},
                     {"finish_reason", c.finish_reason},
                     {"prompt_hash", c.prompt_hash}});
  }
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : s.errors) errors.push_back({{"category", e.category}, {"message", e.message}});
  return {{"video_id", s.video_id},
          {"base_text", s.base_text},
          {"candidates", std::move(cands)},
          {"errors", std::move(errors)}};
}

inline CandidateSet candidate_set_from_json(const nlohmann::json& j) {
  CandidateSet s;
  s.video_id = j.at("video_id").get<std::string>();
  s.base_text = j.at("base_text").get<std::string>();
  for (const auto& c : j.at("candidates")) {
    s.candidates.push_back({c.at("category").get<std::string>(), c.at("text").get<std::string>(),
                            c.value("seed", uint64_t{0}), c.value("model", std::string()),
                            c.value("finish_reason", std::string()),
                            c.value("prompt_hash", uint64_t{0})});
  }
  if (auto it = j.find("errors"); it != j.end()) {
    for (const auto& e : *it) {
      s.errors.push_back({e.at("category").get<std::string>(), e.at("message").get<std::string>()});
    }
  }
  return s;
}

}  // namespace pushforge

#endif  // PUSHFORGE_STYLEGEN_HPP_
