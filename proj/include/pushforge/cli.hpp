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

#ifndef PUSHFORGE_CLI_HPP_
#define PUSHFORGE_CLI_HPP_

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pushforge/analytics.hpp"
#include "pushforge/corpus.hpp"
#include "pushforge/distill.hpp"
#include "pushforge/error.hpp"
#include "pushforge/llm_gateway.hpp"
#include "pushforge/pairlab.hpp"
#include "pushforge/reward.hpp"
#include "pushforge/selector.hpp"
#include "pushforge/stylegen.hpp"
#include "pushforge/text.hpp"

namespace pushforge::cli {

namespace fs = std::filesystem;

inline constexpr std::string_view kDefaultTaskPrompt =
    "Write one short, engaging push notification for the video described below, "
    "in the requested content style. Stay faithful to the video content.";

// Stage file names inside the output directory.
inline constexpr std::string_view kWeightedSamplesFile = "weighted_samples.jsonl";
inline constexpr std::string_view kClassifiedSamplesFile = "classified_samples.jsonl";
inline constexpr std::string_view kSftDatasetFile = "sft_dataset.jsonl";
inline constexpr std::string_view kCandidatesFile = "candidates.jsonl";
inline constexpr std::string_view kPairsFile = "pairs.jsonl";
inline constexpr std::string_view kTrainPairsFile = "pairs_train.jsonl";
inline constexpr std::string_view kEvalPairsFile = "pairs_eval.jsonl";
inline constexpr std::string_view kModelFile = "reward_model.json";
inline constexpr std::string_view kTraceFile = "train_trace.csv";
inline constexpr std::string_view kDecisionsFile = "decisions.jsonl";

/// Every knob of a run, read from one JSON config file.
struct RunConfig {
  fs::path corpus;
  fs::path ab_log;
  fs::path model_state;
  fs::path output_dir = "out";
  uint64_t seed = 42;
  std::string task_prompt = std::string(kDefaultTaskPrompt);
  DistillConfig distill;
  StyleTaxonomy taxonomy;
  int classify_queries = 3;
  SamplingParams sampling;
  PairConfig pairs;
  TrainConfig train;
  std::size_t hidden = 0;
  EncoderSpec encoder;
  std::string backend_kind = "mock";
  std::optional<uint64_t> mock_seed;
  BackendConfig backend;
  std::string scorer_kind = "local";
  BackendConfig scorer_backend;
  double tau = 0.5;
  bool normalize_exposure = false;
  std::optional<std::vector<double>> thresholds;
  std::string report_format = "csv";
  std::string base_arm = "base";
};

namespace detail {

template <typename T>
void read_into(const nlohmann::json& obj, const char* key, T& field) {
  if (auto it = obj.find(key); it != obj.end() && !it->is_null()) field = it->get<T>();
}

inline BackendConfig backend_from_json(const nlohmann::json& j, BackendConfig cfg) {
  read_into(j, "endpoint", cfg.endpoint);
  read_into(j, "model_name", cfg.model_name);
  read_into(j, "timeout_ms", cfg.timeout_ms);
  read_into(j, "max_in_flight", cfg.max_in_flight);
  if (auto it = j.find("retry"); it != j.end() && it->is_object()) {
    read_into(*it, "max_attempts", cfg.retry.max_attempts);
    read_into(*it, "backoff_base_ms", cfg.retry.backoff_base_ms);
    read_into(*it, "backoff_factor", cfg.retry.backoff_factor);
  }
  return cfg;
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Parses a config tree. Relative input paths resolve against `base_dir`
/// (the config file's directory); the output directory resolves against the
/// working directory.
inline RunConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  using detail::read_into;
  RunConfig c;
  try {
    read_into(j, "seed", c.seed);
    read_into(j, "task_prompt", c.task_prompt);
    if (auto p = j.find("paths"); p != j.end()) {
      std::string s;
      if (s.clear(), read_into(*p, "corpus", s), !s.empty()) c.corpus = detail::resolve(base_dir, s);
      if (s.clear(), read_into(*p, "ab_log", s), !s.empty()) c.ab_log = detail::resolve(base_dir, s);
      if (s.clear(), read_into(*p, "model_state", s), !s.empty()) c.model_state = detail::resolve(base_dir, s);
      if (s.clear(), read_into(*p, "output_dir", s), !s.empty()) c.output_dir = s;
    }
    if (auto d = j.find("distill"); d != j.end()) {
      read_into(*d, "ctr_min", c.distill.ctr_min);
      read_into(*d, "svr_max", c.distill.svr_max);
      read_into(*d, "lvtr_min", c.distill.lvtr_min);
      read_into(*d, "htr_max", c.distill.htr_max);
      read_into(*d, "pv_min", c.distill.pv_min);
      read_into(*d, "quantile", c.distill.quantile);
      read_into(*d, "min_cluster_size", c.distill.min_cluster_size);
      read_into(*d, "ctr_cap", c.distill.ctr_cap);
      read_into(*d, "pv_cap", c.distill.pv_cap);
      read_into(*d, "weight_base", c.distill.weight_base);
      read_into(*d, "ctr_coeff", c.distill.ctr_coeff);
      read_into(*d, "pv_coeff", c.distill.pv_coeff);
      read_into(*d, "literal_log_term", c.distill.literal_log_term);
    }
    if (auto t = j.find("taxonomy"); t != j.end()) {
      std::vector<StyleCategory> cats;
      for (const auto& item : *t) {
        if (item.is_string()) {
          cats = {};
          break;
        }
        cats.push_back({item.at("name").get<std::string>(), item.value("definition", std::string())});
      }
      c.taxonomy = cats.empty() ? StyleTaxonomy::from_names(t->get<std::vector<std::string>>())
                                : StyleTaxonomy(std::move(cats));
    }
    if (auto s = j.find("sampling"); s != j.end()) {
      read_into(*s, "temperature", c.sampling.temperature);
      read_into(*s, "top_p", c.sampling.top_p);
      read_into(*s, "repetition_penalty", c.sampling.repetition_penalty);
      read_into(*s, "max_tokens", c.sampling.max_tokens);
      read_into(*s, "n_per_category", c.sampling.n_per_category);
    }
    if (auto k = j.find("classify"); k != j.end()) read_into(*k, "queries", c.classify_queries);
    if (auto p = j.find("pairs"); p != j.end()) {
      read_into(*p, "min_pv_per_arm", c.pairs.min_pv_per_arm);
      read_into(*p, "max_exposure_ratio", c.pairs.max_exposure_ratio);
      read_into(*p, "eval_fraction", c.pairs.eval_fraction);
    }
    if (auto t = j.find("train"); t != j.end()) {
      read_into(*t, "learning_rate", c.train.learning_rate);
      read_into(*t, "epochs", c.train.epochs);
      read_into(*t, "batch_size", c.train.batch_size);
      read_into(*t, "l2", c.train.l2);
      read_into(*t, "order_augment", c.train.order_augment);
      read_into(*t, "early_stop_patience", c.train.early_stop_patience);
      read_into(*t, "hidden", c.hidden);
    }
    if (auto e = j.find("encoder"); e != j.end()) {
      read_into(*e, "n_min", c.encoder.n_min);
      read_into(*e, "n_max", c.encoder.n_max);
      read_into(*e, "dimension", c.encoder.dimension);
    }
    if (auto b = j.find("backend"); b != j.end()) {
      read_into(*b, "kind", c.backend_kind);
      if (auto ms = b->find("mock_seed"); ms != b->end() && !ms->is_null()) c.mock_seed = ms->get<uint64_t>();
      c.backend = detail::backend_from_json(*b, c.backend);
    }
    if (auto s = j.find("scorer"); s != j.end()) {
      read_into(*s, "kind", c.scorer_kind);
      c.scorer_backend = detail::backend_from_json(*s, c.scorer_backend);
    }
    if (auto s = j.find("selector"); s != j.end()) read_into(*s, "tau", c.tau);
    if (auto a = j.find("analytics"); a != j.end()) {
      read_into(*a, "normalize_exposure", c.normalize_exposure);
      if (auto t = a->find("thresholds"); t != a->end() && !t->is_null()) {
        c.thresholds = t->get<std::vector<double>>();
      }
      read_into(*a, "format", c.report_format);
      read_into(*a, "base_arm", c.base_arm);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad config value: ") + e.what());
  }
  if (c.backend_kind != "mock" && c.backend_kind != "http") {
    throw Error(ErrorCode::kConfig, "backend.kind must be 'mock' or 'http'");
  }
  if (c.scorer_kind != "local" && c.scorer_kind != "remote") {
    throw Error(ErrorCode::kConfig, "scorer.kind must be 'local' or 'remote'");
  }
  c.distill.validate();
  c.sampling.validate();
  c.pairs.validate();
  c.train.validate();
  c.encoder.validate();
  parse_report_format(c.report_format);
  return c;
}

/// Applies one `key.path=value` override. The value is parsed as JSON when
/// possible and kept as a string otherwise.
inline void apply_override(nlohmann::json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kUsage, "--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  nlohmann::json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::kUsage, "malformed --set key '" + key + "'");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// Reads the stage inputs and writes the stage outputs of one run.
class Pipeline {
 public:
  Pipeline(RunConfig cfg, std::ostream& out, std::ostream& log)
      : cfg_(std::move(cfg)), out_(out), log_(log) {}

  const RunConfig& config() const { return cfg_; }

  void run_stage(const std::string& stage) {
    std::error_code ec;
    fs::create_directories(cfg_.output_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create output dir " + cfg_.output_dir.string());
    if (stage == "distill") return distill_stage();
    if (stage == "classify") return classify_stage();
    if (stage == "export-sft") return export_sft_stage();
    if (stage == "generate") return generate_stage();
    if (stage == "pairs") return pairs_stage();
    if (stage == "train-rm") return train_stage();
    if (stage == "eval-rm") return eval_stage();
    if (stage == "select") return select_stage();
    if (stage == "analyze") return analyze_stage();
    if (stage == "e2e-mock") return e2e_stage();
    throw Error(ErrorCode::kUsage, "unknown subcommand '" + stage + "'");
  }

 private:
  fs::path out_path(std::string_view name) const { return cfg_.output_dir / std::string(name); }

  static std::ifstream open_input(const fs::path& path, std::string_view what) {
    if (path.empty()) throw Error(ErrorCode::kConfig, std::string(what) + " path is not configured");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + std::string(what) + " at " + path.string());
    return in;
  }

  static void write_text(const fs::path& path, const std::string& bytes) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    o << bytes;
    if (!o.flush()) throw Error(ErrorCode::kIo, "failed writing " + path.string());
  }

  template <typename T, typename ToJson>
  static void write_jsonl_file(const fs::path& path, const std::vector<T>& items, ToJson&& to_json) {
    std::ostringstream s;
    write_jsonl(s, items, to_json);
    write_text(path, s.str());
  }

  template <typename FromJson>
  static auto read_jsonl_file(const fs::path& path, std::string_view what, FromJson&& from_json) {
    auto in = open_input(path, what);
    std::vector<decltype(from_json(nlohmann::json()))> items;
    for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line) {
      try {
        items.push_back(from_json(j));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParse, path.string() + " line " + std::to_string(line) + ": " + e.what());
      }
    });
    return items;
  }

  void summary(const std::string& stage, nlohmann::json counts, const std::vector<fs::path>& files) {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& f : files) names.push_back(f.generic_string());
    out_ << nlohmann::json{{"stage", stage}, {"counts", std::move(counts)}, {"files", std::move(names)}}.dump()
         << std::endl;
  }

  CompletionBackend& backend() {
    if (!backend_) {
      if (force_mock_ || cfg_.backend_kind == "mock") {
        backend_ = std::make_unique<MockBackend>(cfg_.mock_seed.value_or(derive_seed(cfg_.seed, "mock")),
                                                 cfg_.backend.max_in_flight);
      } else {
        backend_ = std::make_unique<HttpChatBackend>(cfg_.backend);
      }
    }
    return *backend_;
  }

  fs::path model_path() const { return cfg_.model_state.empty() ? out_path(kModelFile) : cfg_.model_state; }

  const RewardModelState& model() {
    if (!model_) {
      auto in = open_input(model_path(), "model state");
      std::stringstream buffer;
      buffer << in.rdbuf();
      model_ = load_state(buffer.str());
    }
    return *model_;
  }

  /// Runs `fn(scorer)` with the configured pair scorer.
  template <typename Fn>
  auto with_scorer(Fn&& fn) {
    if (cfg_.scorer_kind == "remote" && !force_mock_) {
      RemoteScorer remote(cfg_.scorer_backend);
      return fn(remote);
    }
    LocalScorer local{&model()};
    return fn(local);
  }

  void distill_stage() {
    auto in = open_input(cfg_.corpus, "corpus");
    const auto records = parse_corpus(in);
    std::size_t hard = 0;
    for (const auto& r : records) hard += hard_filter(r.stats, cfg_.distill) ? 1 : 0;
    const auto samples = distill(records, cfg_.distill);
    write_jsonl_file(out_path(kWeightedSamplesFile), samples, weighted_sample_to_json);
    summary("distill", {{"input_records", records.size()}, {"hard_filter_passed", hard},
                        {"weighted_samples", samples.size()}},
            {out_path(kWeightedSamplesFile)});
  }

  void classify_stage() {
    const auto samples = read_jsonl_file(out_path(kWeightedSamplesFile), "weighted samples",
                                         weighted_sample_from_json);
    std::ostringstream rows;
    std::map<std::string, std::size_t> histogram;
    for (const auto& s : samples) {
      const auto category = classify_style(s.record.text, cfg_.taxonomy, backend(), cfg_.classify_queries);
      ++histogram[category];
      auto j = weighted_sample_to_json(s);
      j["control_category"] = category;
      rows << j.dump() << '\n';
    }
    write_text(out_path(kClassifiedSamplesFile), rows.str());
    summary("classify", {{"samples", samples.size()}, {"categories", histogram}},
            {out_path(kClassifiedSamplesFile)});
  }

  struct Classified {
    WeightedSample sample;
    std::string category;
  };

  std::vector<Classified> read_classified() {
    return read_jsonl_file(out_path(kClassifiedSamplesFile), "classified samples", [](const nlohmann::json& j) {
      return Classified{weighted_sample_from_json(j), j.at("control_category").get<std::string>()};
    });
  }

  void export_sft_stage() {
    const auto rows = read_classified();
    std::vector<WeightedSample> samples;
    std::vector<std::string> categories;
    std::size_t skipped = 0;
    for (const auto& r : rows) {
      if (!r.sample.record.caption || is_blank(*r.sample.record.caption)) {
        ++skipped;
        continue;
      }
      samples.push_back(r.sample);
      categories.push_back(r.category);
    }
    write_text(out_path(kSftDatasetFile), export_sft_dataset(samples, categories, cfg_.task_prompt));
    summary("export-sft", {{"rows", samples.size()}, {"skipped_without_caption", skipped}},
            {out_path(kSftDatasetFile)});
  }

  void generate_stage() {
    std::vector<PushRecord> records;
    if (fs::exists(out_path(kClassifiedSamplesFile))) {
      for (auto& r : read_classified()) records.push_back(std::move(r.sample.record));
    } else {
      for (auto& s : read_jsonl_file(out_path(kWeightedSamplesFile), "weighted samples", weighted_sample_from_json)) {
        records.push_back(std::move(s.record));
      }
    }
    std::set<std::string> videos;
    std::vector<CandidateSet> sets;
    std::size_t candidates = 0;
    std::size_t category_errors = 0;
    for (const auto& r : records) {
      if (!r.caption || is_blank(*r.caption) || !videos.insert(r.video_id).second) continue;
      sets.push_back(generate_candidates(r, cfg_.taxonomy, cfg_.sampling, cfg_.task_prompt, backend(), &log_));
      candidates += sets.back().candidates.size();
      category_errors += sets.back().errors.size();
    }
    write_jsonl_file(out_path(kCandidatesFile), sets, candidate_set_to_json);
    summary("generate", {{"videos", sets.size()}, {"candidates", candidates}, {"category_errors", category_errors}},
            {out_path(kCandidatesFile)});
  }

  PairConfig pair_config() const {
    PairConfig p = cfg_.pairs;
    p.seed = derive_seed(cfg_.seed, "pairs");
    return p;
  }

  void pairs_stage() {
    auto in = open_input(cfg_.ab_log, "A/B log");
    const auto entries = parse_ab_log(in);
    const PairConfig pc = pair_config();
    const auto built = build_pairs(entries, pc);
    const auto parts = split(built.pairs, pc);
    write_jsonl_file(out_path(kPairsFile), built.pairs, pair_to_json);
    write_jsonl_file(out_path(kTrainPairsFile), parts.train, pair_to_json);
    write_jsonl_file(out_path(kEvalPairsFile), parts.eval, pair_to_json);
    summary("pairs",
            {{"entries", entries.size()},
             {"pairs", built.pairs.size()},
             {"train_pairs", parts.train.size()},
             {"eval_pairs", parts.eval.size()},
             {"eval_videos", parts.eval_videos.size()},
             {"skipped", {{"imbalance", built.skipped.imbalance_count},
                          {"low_pv", built.skipped.low_pv_count},
                          {"same_text", built.skipped.same_text_count},
                          {"tie", built.skipped.tie_count}}}},
            {out_path(kPairsFile), out_path(kTrainPairsFile), out_path(kEvalPairsFile)});
  }

  void train_stage() {
    const auto train_pairs = read_jsonl_file(out_path(kTrainPairsFile), "training pairs", pair_from_json);
    const auto eval_pairs = read_jsonl_file(out_path(kEvalPairsFile), "eval pairs", pair_from_json);
    TrainConfig tc = cfg_.train;
    tc.seed = derive_seed(cfg_.seed, "train");
    auto init = init_state(cfg_.encoder, cfg_.hidden, derive_seed(cfg_.seed, "init"));
    const auto result = train(std::move(init), train_pairs, eval_pairs, tc);
    write_text(out_path(kModelFile), save_state(result.state));
    std::string trace = "epoch,train_loss,train_accuracy,eval_loss,eval_accuracy\n";
    for (const auto& e : result.trace) {
      trace += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
               format_double(e.train_accuracy) + "," + report_detail::csv_number(e.eval_loss) + "," +
               report_detail::csv_number(e.eval_accuracy) + "\n";
    }
    write_text(out_path(kTraceFile), trace);
    model_ = result.state;
    nlohmann::json counts = {{"train_pairs", train_pairs.size()}, {"eval_pairs", eval_pairs.size()},
                             {"epochs_run", result.state.metadata.epochs_run}};
    if (!result.trace.empty()) {
      counts["final_train_loss"] = result.trace.back().train_loss;
      if (result.trace.back().eval_accuracy) counts["final_eval_accuracy"] = *result.trace.back().eval_accuracy;
    }
    summary("train-rm", std::move(counts), {out_path(kModelFile), out_path(kTraceFile)});
  }

  AccuracyTable evaluate() {
    const auto eval_pairs = read_jsonl_file(out_path(kEvalPairsFile), "eval pairs", pair_from_json);
    if (eval_pairs.empty()) throw Error(ErrorCode::kUsage, "no eval pairs to score");
    const auto buckets = stratify_by_gap(eval_pairs);
    return with_scorer([&](auto& scorer) { return stratified_accuracy(scorer, buckets); });
  }

  void eval_stage() {
    Report report;
    report.accuracy = evaluate();
    const auto files = emit_report(report, cfg_.report_format, cfg_.output_dir);
    summary("eval-rm", {{"pairs", report.accuracy->overall().pair_count},
                        {"overall_accuracy", report.accuracy->overall().accuracy.value_or(0.0)}},
            files);
  }

  void select_stage() {
    const auto sets = read_jsonl_file(out_path(kCandidatesFile), "candidate sets", candidate_set_from_json);
    std::vector<SelectionDecision> decisions;
    std::size_t replaced = 0;
    with_scorer([&](auto& scorer) {
      for (const auto& s : sets) {
        decisions.push_back(choose_push(scorer, s.base_text, s, cfg_.tau));
        replaced += decisions.back().decision == Decision::kReplace ? 1 : 0;
      }
      return 0;
    });
    write_jsonl_file(out_path(kDecisionsFile), decisions, decision_to_json);
    summary("select", {{"videos", decisions.size()}, {"replaced", replaced}}, {out_path(kDecisionsFile)});
  }

  void analyze_stage() {
    Report report;
    nlohmann::json counts;
    if (fs::exists(out_path(kEvalPairsFile))) {
      report.accuracy = evaluate();
      counts["eval_pairs"] = report.accuracy->overall().pair_count;
    }
    if (!cfg_.ab_log.empty()) {
      auto in = open_input(cfg_.ab_log, "A/B log");
      auto entries = parse_ab_log(in);
      // Only held-out videos feed the curve once a split exists.
      if (fs::exists(out_path(kEvalPairsFile))) {
        std::set<std::string> held;
        for (const auto& p : read_jsonl_file(out_path(kEvalPairsFile), "eval pairs", pair_from_json)) {
          held.insert(p.video_id);
        }
        std::erase_if(entries, [&](const AbLogEntry& e) { return held.count(e.video_id) == 0; });
      }
      const auto outcomes = with_scorer([&](auto& scorer) {
        return outcomes_from_ab_log(scorer, entries, cfg_.base_arm);
      });
      if (!outcomes.empty()) {
        const auto grid = cfg_.thresholds ? *cfg_.thresholds : default_thresholds(outcomes);
        report.curve = click_increment_curve(outcomes, grid, cfg_.normalize_exposure);
        counts["curve_videos"] = outcomes.size();
        counts["curve_auc"] = curve_auc(*report.curve);
      }
    }
    if (fs::exists(out_path(kDecisionsFile))) {
      const auto decisions = read_jsonl_file(out_path(kDecisionsFile), "decisions", decision_from_json);
      if (!decisions.empty()) {
        report.styles = style_distribution(decisions, cfg_.taxonomy);
        counts["decisions"] = decisions.size();
        counts["replacement_share"] = report.styles->replacement_share();
      }
    }
    if (!report.accuracy && !report.curve && !report.styles) {
      throw Error(ErrorCode::kUsage, "analyze found no eval pairs, A/B log, or decisions to report on");
    }
    summary("analyze", std::move(counts), emit_report(report, cfg_.report_format, cfg_.output_dir));
  }

  void e2e_stage() {
    force_mock_ = true;
    for (const char* stage : {"distill", "classify", "export-sft", "generate", "pairs", "train-rm", "select",
                              "analyze"}) {
      run_stage(stage);
    }
  }

  RunConfig cfg_;
  std::ostream& out_;
  std::ostream& log_;
  bool force_mock_ = false;
  std::unique_ptr<CompletionBackend> backend_;
  std::optional<RewardModelState> model_;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"distill", "export-sft", "classify", "generate", "pairs",
                                                 "train-rm", "eval-rm",    "select",   "analyze",  "e2e-mock"};
  return names;
}

/// Entry point shared by the `pushforge` binary and the tests. Returns 0 on
/// success, 1 on runtime/config/data errors, 2 on usage errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"pushforge: push-notification distillation, generation, and pairwise reward pipeline"};
  app.set_version_flag("--version", "pushforge 0.1.0");
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run config");
  app.add_option("--out", out_dir, "Output directory (overrides paths.output_dir)");
  app.add_option("--seed", seed, "Global 64-bit seed");
  app.add_option("--set", overrides, "Dotted-path override key=value (repeatable)");
  app.require_subcommand(1, 1);
  app.fallthrough();
  for (const auto& name : subcommands()) app.add_subcommand(name, "Run the " + name + " stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  bool in_stage = false;
  try {
    nlohmann::json tree = nlohmann::json::object();
    fs::path base_dir = fs::current_path();
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw Error(ErrorCode::kConfig, "cannot read config file " + config_path);
      try {
        tree = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, "config file " + config_path + " is not valid JSON: " + e.what());
      }
      base_dir = fs::absolute(config_path).parent_path();
    }
    for (const auto& o : overrides) apply_override(tree, o);
    RunConfig cfg = config_from_json(tree, base_dir);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.seed = *seed;
    Pipeline pipeline(std::move(cfg), out, err);
    in_stage = true;
    pipeline.run_stage(stage);
    return 0;
  } catch (const Error& e) {
    err << "pushforge " << stage << ": " << e.what() << '\n';
    return e.code() == ErrorCode::kUsage && !in_stage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "pushforge " << stage << ": " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pushforge::cli

#endif  // PUSHFORGE_CLI_HPP_
