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

#ifndef PUSHFORGE_REWARD_HPP_
#define PUSHFORGE_REWARD_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushforge/error.hpp"
#include "pushforge/llm_gateway.hpp"
#include "pushforge/pairlab.hpp"
#include "pushforge/text.hpp"

namespace pushforge {

inline constexpr std::string_view kRewardStateVersion = "pushforge-reward/1";
/// Logits are clamped to this magnitude before the sigmoid and the loss.
inline constexpr double kLogitClamp = 30.0;

enum class EncoderKind { kHashedNgram, kRemote };

/// Pair encoder configuration. The hashed encoder turns
/// "[CLS] text_a [SEP] text_b [SEP]" into signed character n-gram counts,
/// with the segment id mixed into every hash so the two positions stay
/// distinguishable, and L2-normalizes the result.
struct EncoderSpec {
  EncoderKind kind = EncoderKind::kHashedNgram;
  int n_min = 1;
  int n_max = 3;
  std::size_t dimension = std::size_t{1} << 18;

  bool operator==(const EncoderSpec&) const = default;

  void validate() const {
    if (kind != EncoderKind::kHashedNgram) return;
    if (dimension == 0 || (dimension & (dimension - 1)) != 0) {
      throw Error(ErrorCode::kConfig, "encoder dimension must be a power of two");
    }
    if (dimension > (std::size_t{1} << 31)) throw Error(ErrorCode::kConfig, "encoder dimension too large");
    if (n_min < 1 || n_min > n_max) throw Error(ErrorCode::kConfig, "need 1 <= n_min <= n_max");
  }
};

/// Sorted-index sparse vector of logical length `dimension`.
struct SparseVector {
  std::size_t dimension = 0;
  std::vector<uint32_t> indices;
  std::vector<double> values;

  std::vector<double> to_dense() const {
    std::vector<double> dense(dimension, 0.0);
    for (std::size_t k = 0; k < indices.size(); ++k) dense[indices[k]] = values[k];
    return dense;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }
};

inline SparseVector encode_pair(const EncoderSpec& spec, std::string_view text_a,
                                std::string_view text_b) {
  if (spec.kind != EncoderKind::kHashedNgram) {
    throw Error(ErrorCode::kUsage, "encode_pair requires the hashed n-gram encoder");
  }
  spec.validate();
  const uint64_t mask = spec.dimension - 1;
  std::map<uint32_t, double> acc;
  const std::string_view segments[2] = {text_a, text_b};
  for (int s = 0; s < 2; ++s) {
    const auto chars = utf8_code_points(normalize_text(segments[s]));
    const char segment_id = static_cast<char>(s);
    const uint64_t prefix = fnv1a64(std::string_view(&segment_id, 1));
    for (int n = spec.n_min; n <= spec.n_max; ++n) {
      const auto width = static_cast<std::size_t>(n);
      for (std::size_t i = 0; i + width <= chars.size(); ++i) {
        uint64_t h = prefix;
        for (std::size_t k = 0; k < width; ++k) h = fnv1a64(chars[i + k], h);
        acc[static_cast<uint32_t>(h & mask)] += (h >> 63) ? -1.0 : 1.0;
      }
    }
  }
  SparseVector out;
  out.dimension = spec.dimension;
  double norm = 0.0;
  for (const auto& [index, value] : acc) {
    if (value == 0.0) continue;
    out.indices.push_back(index);
    out.values.push_back(value);
    norm += value * value;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : out.values) v /= norm;
  }
  return out;
}

/// Scoring head over the encoder output. With hidden == 0 it is affine,
/// z = w.x + b; otherwise z = w2.relu(W1 x + b1) + b2.
///
/// Parameters live in one flat vector:
///   hidden == 0: [w (d), b]
///   hidden  > 0: [W1 (hidden x d, row-major), b1 (hidden), w2 (hidden), b2]
struct RewardHead {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::vector<double> params;

  static std::size_t param_count(std::size_t input_dim, std::size_t hidden) {
    return hidden == 0 ? input_dim + 1 : hidden * input_dim + 2 * hidden + 1;
  }

  void validate() const {
    if (params.size() != param_count(input_dim, hidden)) {
      throw Error(ErrorCode::kState, "head has " + std::to_string(params.size()) +
                                         " parameters, expected " +
                                         std::to_string(param_count(input_dim, hidden)));
    }
  }

  std::size_t hidden_bias_offset() const { return hidden * input_dim; }
  std::size_t out_weight_offset() const { return hidden * input_dim + hidden; }
  std::size_t out_bias_offset() const { return params.size() - 1; }

  bool operator==(const RewardHead&) const = default;
};

struct TrainMetadata {
  uint64_t seed = 0;
  int epochs_run = 0;
  std::optional<double> final_train_loss;
  std::optional<double> final_eval_loss;
  std::string version = std::string(kRewardStateVersion);

  bool operator==(const TrainMetadata&) const = default;
};

struct RewardModelState {
  EncoderSpec encoder;
  RewardHead head;
  TrainMetadata metadata;

  bool operator==(const RewardModelState&) const = default;
};

/// Zero affine head (hidden == 0) or a seeded small-uniform MLP head.
inline RewardModelState init_state(const EncoderSpec& encoder, std::size_t hidden = 0,
                                   uint64_t seed = 0, double init_scale = 0.1) {
  encoder.validate();
  RewardModelState state;
  state.encoder = encoder;
  state.head.input_dim = encoder.dimension;
  state.head.hidden = hidden;
  state.head.params.assign(RewardHead::param_count(encoder.dimension, hidden), 0.0);
  if (hidden > 0) {
    SplitMix64 rng(seed);
    for (double& p : state.head.params) p = rng.uniform(-init_scale, init_scale);
  }
  state.metadata.seed = seed;
  return state;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double clamp_logit(double z) { return std::clamp(z, -kLogitClamp, kLogitClamp); }

/// BCE of sigmoid(z) against `label`, written as softplus(z) - label * z.
/// `z` is clamped first.
inline double bce_with_logit(double z, int label) {
  const double zc = clamp_logit(z);
  const double softplus = std::max(zc, 0.0) + std::log1p(std::exp(-std::abs(zc)));
  return softplus - static_cast<double>(label) * zc;
}

/// d BCE / dz; zero outside the clamp range.
inline double bce_logit_gradient(double z, int label) {
  if (z < -kLogitClamp || z > kLogitClamp) return 0.0;
  return sigmoid(z) - static_cast<double>(label);
}

namespace reward_detail {

struct Forward {
  double logit = 0.0;
  std::vector<double> pre;  // hidden pre-activations (empty for the affine head)
};

inline Forward forward(const RewardHead& head, const SparseVector& x) {
  Forward f;
  const auto& p = head.params;
  if (head.hidden == 0) {
    double z = p[head.out_bias_offset()];
    for (std::size_t k = 0; k < x.indices.size(); ++k) z += x.values[k] * p[x.indices[k]];
    f.logit = z;
    return f;
  }
  f.pre.resize(head.hidden);
  double z = p[head.out_bias_offset()];
  for (std::size_t h = 0; h < head.hidden; ++h) {
    const std::size_t row = h * head.input_dim;
    double a = p[head.hidden_bias_offset() + h];
    for (std::size_t k = 0; k < x.indices.size(); ++k) a += x.values[k] * p[row + x.indices[k]];
    f.pre[h] = a;
    z += p[head.out_weight_offset() + h] * std::max(a, 0.0);
  }
  f.logit = z;
  return f;
}

/// Adds scale * dLoss/dparams for one example into `grad`, recording each
/// touched coordinate once in `touched` (guarded by `mark`).
inline void accumulate_gradient(const RewardHead& head, const SparseVector& x, int label,
                                double scale, std::vector<double>& grad,
                                std::vector<uint32_t>& touched, std::vector<char>& mark) {
  const Forward f = forward(head, x);
  const double dz = scale * bce_logit_gradient(f.logit, label);
  auto add = [&](std::size_t i, double g) {
    if (!mark[i]) {
      mark[i] = 1;
      touched.push_back(static_cast<uint32_t>(i));
    }
    grad[i] += g;
  };
  const auto& p = head.params;
  add(head.out_bias_offset(), dz);
  if (head.hidden == 0) {
    for (std::size_t k = 0; k < x.indices.size(); ++k) add(x.indices[k], dz * x.values[k]);
    return;
  }
  for (std::size_t h = 0; h < head.hidden; ++h) {
    const double act = std::max(f.pre[h], 0.0);
    add(head.out_weight_offset() + h, dz * act);
    if (f.pre[h] <= 0.0) continue;
    const double dpre = dz * p[head.out_weight_offset() + h];
    add(head.hidden_bias_offset() + h, dpre);
    const std::size_t row = h * head.input_dim;
    for (std::size_t k = 0; k < x.indices.size(); ++k) add(row + x.indices[k], dpre * x.values[k]);
  }
}

}  // namespace reward_detail

inline void check_compatible(const RewardModelState& state) {
  state.head.validate();
  if (state.encoder.kind == EncoderKind::kHashedNgram &&
      state.head.input_dim != state.encoder.dimension) {
    throw Error(ErrorCode::kState, "head input dimension " + std::to_string(state.head.input_dim) +
                                       " does not match encoder dimension " +
                                       std::to_string(state.encoder.dimension));
  }
}

inline double predict_logit(const RewardModelState& state, const SparseVector& features) {
  if (features.dimension != state.head.input_dim) {
    throw Error(ErrorCode::kState, "feature dimension does not match the head");
  }
  return reward_detail::forward(state.head, features).logit;
}

/// Probability that text_a earns the higher CTR than text_b.
inline double predict(const RewardModelState& state, std::string_view text_a,
                      std::string_view text_b) {
  check_compatible(state);
  return sigmoid(clamp_logit(predict_logit(state, encode_pair(state.encoder, text_a, text_b))));
}

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  std::size_t batch_size = 32;
  double l2 = 0.0;
  uint64_t seed = 0;
  bool order_augment = true;
  int early_stop_patience = 0;  // 0 disables

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::kConfig, "learning_rate must be positive");
    if (epochs < 0) throw Error(ErrorCode::kConfig, "epochs must be >= 0");
    if (batch_size == 0) throw Error(ErrorCode::kConfig, "batch_size must be positive");
    if (l2 < 0.0) throw Error(ErrorCode::kConfig, "l2 must be non-negative");
    if (early_stop_patience < 0) throw Error(ErrorCode::kConfig, "early_stop_patience must be >= 0");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean BCE + l2/2 * |params|^2 over the (augmented) training set
  double train_accuracy = 0.0;
  std::optional<double> eval_loss;
  std::optional<double> eval_accuracy;
};

struct TrainResult {
  RewardModelState state;
  std::vector<EpochStats> trace;
};

struct EncodedPair {
  SparseVector features;
  int label = 0;
};

/// r > 0.5 with label 1, or r < 0.5 with label 0. r == 0.5 is never correct.
inline bool prediction_correct(double r, int label) {
  return (r > 0.5 && label == 1) || (r < 0.5 && label == 0);
}

inline double l2_penalty(const std::vector<double>& params, double l2) {
  if (l2 == 0.0) return 0.0;
  double s = 0.0;
  for (double p : params) s += p * p;
  return 0.5 * l2 * s;
}

inline double mean_bce(const RewardHead& head, std::span<const EncodedPair> data) {
  double total = 0.0;
  for (const auto& e : data) total += bce_with_logit(reward_detail::forward(head, e.features).logit, e.label);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

inline double accuracy_on(const RewardHead& head, std::span<const EncodedPair> data) {
  std::size_t correct = 0;
  for (const auto& e : data) {
    const double r = sigmoid(clamp_logit(reward_detail::forward(head, e.features).logit));
    correct += prediction_correct(r, e.label) ? 1 : 0;
  }
  return data.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.size());
}

inline std::vector<EncodedPair> encode_pairs(const EncoderSpec& spec,
                                             std::span<const PairSample> pairs, bool augment) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size() * (augment ? 2 : 1));
  for (const auto& p : pairs) {
    out.push_back({encode_pair(spec, p.text_a, p.text_b), p.label});
    if (augment) out.push_back({encode_pair(spec, p.text_b, p.text_a), 1 - p.label});
  }
  return out;
}

/// Mini-batch gradient descent on mean BCE + l2/2 * |params|^2. Fully
/// deterministic for a fixed seed: one splitmix64 stream drives the per-epoch
/// shuffles and gradients accumulate in batch order.
inline TrainResult train(RewardModelState init, std::span<const PairSample> train_pairs,
                         std::span<const PairSample> eval_pairs, const TrainConfig& cfg) {
  cfg.validate();
  check_compatible(init);
  if (train_pairs.empty()) throw Error(ErrorCode::kUsage, "training set is empty");
  if (init.encoder.kind != EncoderKind::kHashedNgram) {
    throw Error(ErrorCode::kUsage, "only the hashed n-gram encoder is trainable locally");
  }

  TrainResult result{std::move(init), {}};
  RewardHead& head = result.state.head;
  const auto train_set = encode_pairs(result.state.encoder, train_pairs, cfg.order_augment);
  const auto train_plain = encode_pairs(result.state.encoder, train_pairs, false);
  const auto eval_set = encode_pairs(result.state.encoder, eval_pairs, false);

  std::vector<double> grad(head.params.size(), 0.0);
  std::vector<char> mark(head.params.size(), 0);
  std::vector<uint32_t> touched;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 rng(cfg.seed);

  std::optional<double> best_eval;
  std::vector<double> best_params;
  int stale_epochs = 0;
  const double decay = 1.0 - cfg.learning_rate * cfg.l2;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& e = train_set[order[k]];
        reward_detail::accumulate_gradient(head, e.features, e.label, scale, grad, touched, mark);
      }
      if (cfg.l2 != 0.0) {
        for (double& p : head.params) p *= decay;
      }
      for (uint32_t i : touched) {
        head.params[i] -= cfg.learning_rate * grad[i];
        grad[i] = 0.0;
        mark[i] = 0;
      }
      touched.clear();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = mean_bce(head, train_set) + l2_penalty(head.params, cfg.l2);
    if (!std::isfinite(stats.train_loss)) {
      throw Error(ErrorCode::kDivergence, "non-finite training loss at epoch " + std::to_string(epoch));
    }
    stats.train_accuracy = accuracy_on(head, train_plain);
    if (!eval_set.empty()) {
      stats.eval_loss = mean_bce(head, eval_set);
      stats.eval_accuracy = accuracy_on(head, eval_set);
    }
    result.trace.push_back(stats);
    result.state.metadata.epochs_run = epoch;
    result.state.metadata.final_train_loss = stats.train_loss;
    result.state.metadata.final_eval_loss = stats.eval_loss;

    if (cfg.early_stop_patience > 0 && stats.eval_loss) {
      if (!best_eval || *stats.eval_loss < *best_eval) {
        best_eval = stats.eval_loss;
        best_params = head.params;
        stale_epochs = 0;
      } else if (++stale_epochs >= cfg.early_stop_patience) {
        head.params = best_params;
        result.state.metadata.final_train_loss =
            mean_bce(head, train_set) + l2_penalty(head.params, cfg.l2);
        result.state.metadata.final_eval_loss = best_eval;
        break;
      }
    }
  }
  result.state.metadata.seed = cfg.seed;
  return result;
}

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  /// Smallest |pre-activation| of the hidden layer at this state; finite
  /// differences are only trustworthy when it exceeds epsilon.
  double min_abs_preactivation = std::numeric_limits<double>::infinity();
};

/// Compares the analytic gradient of the single-pair BCE loss with central
/// finite differences on every parameter the pair touches plus a seeded
/// random sample, at least 200 coordinates in total (or all of them).
/// Gradients below 1e-10 in magnitude on both sides compare as equal.
inline GradientCheckResult gradient_check(const RewardModelState& state, const PairSample& pair,
                                          double epsilon = 1e-5, uint64_t seed = 0,
                                          std::size_t min_checked = 200) {
  check_compatible(state);
  const SparseVector x = encode_pair(state.encoder, pair.text_a, pair.text_b);
  RewardHead head = state.head;
  const double loss0 = bce_with_logit(reward_detail::forward(head, x).logit, pair.label);
  if (!std::isfinite(loss0)) throw Error(ErrorCode::kDomain, "loss is not finite at this state");

  std::vector<double> grad(head.params.size(), 0.0);
  std::vector<char> mark(head.params.size(), 0);
  std::vector<uint32_t> touched;
  reward_detail::accumulate_gradient(head, x, pair.label, 1.0, grad, touched, mark);

  std::vector<std::size_t> coords(touched.begin(), touched.end());
  std::vector<char> chosen(head.params.size(), 0);
  for (auto c : coords) chosen[c] = 1;
  const std::size_t target = std::min(head.params.size(), std::max(min_checked, coords.size()));
  SplitMix64 rng(seed);
  while (coords.size() < target) {
    const auto c = static_cast<std::size_t>(rng.below(head.params.size()));
    if (!chosen[c]) {
      chosen[c] = 1;
      coords.push_back(c);
    }
  }

  GradientCheckResult out;
  out.parameters_checked = coords.size();
  for (double a : reward_detail::forward(head, x).pre) {
    out.min_abs_preactivation = std::min(out.min_abs_preactivation, std::abs(a));
  }
  for (std::size_t c : coords) {
    const double saved = head.params[c];
    head.params[c] = saved + epsilon;
    const double up = bce_with_logit(reward_detail::forward(head, x).logit, pair.label);
    head.params[c] = saved - epsilon;
    const double down = bce_with_logit(reward_detail::forward(head, x).logit, pair.label);
    head.params[c] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = grad[c];
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < 1e-10) continue;
    out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic - numeric) / scale);
  }
  return out;
}

inline std::string encoder_kind_name(EncoderKind k) {
  return k == EncoderKind::kHashedNgram ? "hashed_ngram" : "remote";
}

inline EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "hashed_ngram") return EncoderKind::kHashedNgram;
  if (s == "remote") return EncoderKind::kRemote;
  throw Error(ErrorCode::kFormat, "unknown encoder kind '" + s + "'");
}

inline nlohmann::json encoder_to_json(const EncoderSpec& e) {
  return {{"kind", encoder_kind_name(e.kind)}, {"n_min", e.n_min}, {"n_max", e.n_max},
          {"dimension", e.dimension}, {"hash", "fnv1a64"}};
}

inline EncoderSpec encoder_from_json(const nlohmann::json& j) {
  EncoderSpec e;
  e.kind = parse_encoder_kind(j.at("kind").get<std::string>());
  e.n_min = j.at("n_min").get<int>();
  e.n_max = j.at("n_max").get<int>();
  e.dimension = j.at("dimension").get<std::size_t>();
  return e;
}

/// Versioned JSON, one parameter per line. Only nonzero parameters are
/// written (as parallel index/value arrays).
inline std::string save_state(const RewardModelState& state) {
  check_compatible(state);
  nlohmann::json indices = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (std::size_t i = 0; i < state.head.params.size(); ++i) {
    if (state.head.params[i] != 0.0 || std::signbit(state.head.params[i])) {
      indices.push_back(i);
      values.push_back(state.head.params[i]);
    }
  }
  auto optional_number = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["version"] = state.metadata.version;
  j["encoder"] = encoder_to_json(state.encoder);
  j["head"] = {{"input_dim", state.head.input_dim},
               {"hidden", state.head.hidden},
               {"parameter_count", state.head.params.size()},
               {"indices", std::move(indices)},
               {"values", std::move(values)}};
  j["metadata"] = {{"seed", state.metadata.seed},
                   {"epochs_run", state.metadata.epochs_run},
                   {"final_train_loss", optional_number(state.metadata.final_train_loss)},
                   {"final_eval_loss", optional_number(state.metadata.final_eval_loss)}};
  return j.dump(1) + "\n";
}

inline RewardModelState load_state(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("model state is not valid JSON: ") + e.what());
  }
  try {
    RewardModelState state;
    const auto version = j.at("version").get<std::string>();
    if (version != kRewardStateVersion) {
      throw Error(ErrorCode::kVersion, "unsupported model state version '" + version + "'");
    }
    state.metadata.version = version;
    state.encoder = encoder_from_json(j.at("encoder"));
    state.encoder.validate();
    const auto& head = j.at("head");
    state.head.input_dim = head.at("input_dim").get<std::size_t>();
    state.head.hidden = head.at("hidden").get<std::size_t>();
    const auto count = head.at("parameter_count").get<std::size_t>();
    if (count != RewardHead::param_count(state.head.input_dim, state.head.hidden)) {
      throw Error(ErrorCode::kFormat, "parameter_count inconsistent with head shape");
    }
    state.head.params.assign(count, 0.0);
    const auto& indices = head.at("indices");
    const auto& values = head.at("values");
    if (!indices.is_array() || !values.is_array() || indices.size() != values.size()) {
      throw Error(ErrorCode::kFormat, "head indices/values arrays are malformed");
    }
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const auto i = indices[k].get<std::size_t>();
      if (i >= count) throw Error(ErrorCode::kFormat, "parameter index out of range");
      state.head.params[i] = values[k].get<double>();
    }
    const auto& meta = j.at("metadata");
    state.metadata.seed = meta.at("seed").get<uint64_t>();
    state.metadata.epochs_run = meta.at("epochs_run").get<int>();
    if (!meta.at("final_train_loss").is_null()) state.metadata.final_train_loss = meta["final_train_loss"].get<double>();
    if (!meta.at("final_eval_loss").is_null()) state.metadata.final_eval_loss = meta["final_eval_loss"].get<double>();
    check_compatible(state);
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("model state is malformed: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kVersion || e.code() == ErrorCode::kFormat) throw;
    throw Error(ErrorCode::kFormat, e.what());
  }
}

/// Client for a remote pair scorer: POST {endpoint}/score_pair with
/// {text_a, text_b}, reply {r}.
class RemoteScorer {
 public:
  explicit RemoteScorer(BackendConfig cfg, HttpTransport::Sleeper sleeper = {})
      : transport_(std::move(cfg), std::move(sleeper)) {}

  double score(std::string_view text_a, std::string_view text_b) {
    const nlohmann::json reply = transport_.post_json(
        "/score_pair", {{"text_a", std::string(text_a)}, {"text_b", std::string(text_b)}});
    const auto it = reply.find("r");
    if (!reply.is_object() || it == reply.end() || !it->is_number()) {
      throw Error(ErrorCode::kProtocol, "score_pair reply lacks a numeric 'r'");
    }
    const double r = it->get<double>();
    if (!(r > 0.0 && r < 1.0)) {
      throw Error(ErrorCode::kProtocol, "score_pair returned r = " + format_double(r) + " outside (0, 1)");
    }
    return r;
  }

  double operator()(std::string_view a, std::string_view b) { return score(a, b); }
  std::size_t attempts() const { return transport_.attempts(); }

 private:
  HttpTransport transport_;
};

inline double remote_score(const BackendConfig& cfg, std::string_view text_a, std::string_view text_b) {
  RemoteScorer scorer(cfg);
  return scorer.score(text_a, text_b);
}

/// Adapts a local model state to the pair-scorer call shape.
struct LocalScorer {
  const RewardModelState* state;
  double operator()(std::string_view a, std::string_view b) const { return predict(*state, a, b); }
};

}  // namespace pushforge

#endif  // PUSHFORGE_REWARD_HPP_
