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

#ifndef PUSHFORGE_SELECTOR_HPP_
#define PUSHFORGE_SELECTOR_HPP_

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushforge/error.hpp"
#include "pushforge/stylegen.hpp"
#include "pushforge/text.hpp"

namespace pushforge {

inline constexpr std::string_view kBaseCategory = "Base";

/// A pair scorer returns r(a, b), the probability that `a` beats `b`.
template <typename S>
concept PairScorer = requires(S& s, std::string_view a, std::string_view b) {
  { s(a, b) } -> std::convertible_to<double>;
};

/// Orientation-debiased win probability (r(a,b) + 1 - r(b,a)) / 2. Identical
/// texts short-circuit to exactly 0.5.
template <PairScorer Scorer>
double symmetrized_win_prob(Scorer& scorer, std::string_view a, std::string_view b) {
  if (normalize_text(a) == normalize_text(b)) return 0.5;
  const double forward = static_cast<double>(scorer(a, b));
  const double backward = static_cast<double>(scorer(b, a));
  return (forward + 1.0 - backward) / 2.0;
}

struct RankedText {
  std::string text;
  double score = 0.0;
  std::size_t input_index = 0;
};

/// Borda ranking: score(i) = sum over j != i of p(i, j), highest first; equal
/// scores fall back to ascending normalized text. Work happens in
/// normalized-text order and each score sums its terms in ascending order, so
/// the result does not depend on input order.
template <PairScorer Scorer>
std::vector<RankedText> tournament_rank(Scorer& scorer, const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorCode::kUsage, "cannot rank an empty candidate list");
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(normalize_text(t));
  std::vector<std::size_t> order(texts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (keys[order[k]] == keys[order[k - 1]]) {
      throw Error(ErrorCode::kUsage, "candidate texts must be distinct: '" + keys[order[k]] + "'");
    }
  }

  const std::size_t n = order.size();
  // r[i][j] = scorer(i, j) once per ordered pair; p~(i, j) is derived from it
  // directly in each direction so equal-strength items get identical terms.
  std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.5));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) r[i][j] = static_cast<double>(scorer(texts[order[i]], texts[order[j]]));
    }
  }
  std::vector<RankedText> ranked;
  ranked.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> terms;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) terms.push_back((r[i][j] + 1.0 - r[j][i]) / 2.0);
    }
    std::sort(terms.begin(), terms.end());
    double score = 0.0;
    for (double t : terms) score += t;
    ranked.push_back({texts[order[i]], score, order[i]});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedText& x, const RankedText& y) { return x.score > y.score; });
  return ranked;
}

enum class Decision { kKeepBase, kReplace };

inline std::string decision_name(Decision d) { return d == Decision::kReplace ? "Replace" : "KeepBase"; }

struct RankingEntry {
  std::string text;
  std::string category;
  double score = 0.0;

  bool operator==(const RankingEntry&) const = default;
};

struct SelectionDecision {
  std::string video_id;
  Decision decision = Decision::kKeepBase;
  std::string chosen_text;
  std::string chosen_category;
  /// p~(top candidate, base); absent when there were no candidates.
  std::optional<double> win_probability;
  std::vector<RankingEntry> ranking;

  bool operator==(const SelectionDecision&) const = default;
};

/// Ranks the candidates and replaces the base push only when the winner
/// beats it with symmetrized probability strictly above `tau`.
template <PairScorer Scorer>
SelectionDecision choose_push(Scorer& scorer, std::string_view base_text, const CandidateSet& set,
                              double tau = 0.5) {
  if (is_blank(base_text)) throw Error(ErrorCode::kUsage, "base text is empty");
  SelectionDecision out;
  out.video_id = set.video_id;
  out.chosen_text = std::string(base_text);
  out.chosen_category = std::string(kBaseCategory);
  if (set.candidates.empty()) return out;

  std::vector<std::string> texts;
  for (const auto& c : set.candidates) texts.push_back(c.text);
  const auto ranked = tournament_rank(scorer, texts);
  for (const auto& r : ranked) {
    out.ranking.push_back({r.text, set.candidates[r.input_index].category, r.score});
  }
  const auto& top = ranked.front();
  const double p = symmetrized_win_prob(scorer, top.text, base_text);
  out.win_probability = p;
  if (p > tau) {
    out.decision = Decision::kReplace;
    out.chosen_text = top.text;
    out.chosen_category = set.candidates[top.input_index].category;
  }
  return out;
}

inline nlohmann::json decision_to_json(const SelectionDecision& d) {
  nlohmann::json ranking = nlohmann::json::array();
  for (const auto& r : d.ranking) {
    ranking.push_back({{"text", r.text}, {"category", r.category}, {"score", r.score}});
  }
  return {{"video_id", d.video_id},
          {"decision", decision_name(d.decision)},
          {"chosen_text", d.chosen_text},
          {"chosen_category", d.chosen_category},
          {"win_probability", d.win_probability ? nlohmann::json(*d.win_probability) : nlohmann::json(nullptr)},
          {"ranking", std::move(ranking)}};
}

inline SelectionDecision decision_from_json(const nlohmann::json& j) {
  SelectionDecision d;
  d.video_id = j.at("video_id").get<std::string>();
  const auto name = j.at("decision").get<std::string>();
  if (name == "Replace") {
    d.decision = Decision::kReplace;
  } else if (name == "KeepBase") {
    d.decision = Decision::kKeepBase;
  } else {
    throw Error(ErrorCode::kParse, "unknown decision '" + name + "'");
  }
  d.chosen_text = j.at("chosen_text").get<std::string>();
  d.chosen_category = j.at("chosen_category").get<std::string>();
  if (const auto& w = j.at("win_probability"); !w.is_null()) d.win_probability = w.get<double>();
  for (const auto& r : j.at("ranking")) {
    d.ranking.push_back({r.at("text").get<std::string>(), r.at("category").get<std::string>(),
                         r.at("score").get<double>()});
  }
  return d;
}

}  // namespace pushforge

#endif  // PUSHFORGE_SELECTOR_HPP_
