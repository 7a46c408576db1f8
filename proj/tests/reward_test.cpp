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

#include "pushforge/reward.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <thread>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace pushforge {
namespace {

using testing::FakeServer;

EncoderSpec small_encoder(std::size_t dim = std::size_t{1} << 12) {
  EncoderSpec e;
  e.dimension = dim;
  return e;
}

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "amazing", "secret",  "watch",  "now",    "cat",     "dog",    "chef",   "twist",  "ending", "wild",
      "tips",    "hack",    "minute", "share",  "village", "ocean",  "storm",  "laugh",  "tears",  "hero",
      "finally", "revealed", "simple", "trick", "giant",   "tiny",   "lost",   "found",  "dance",  "music"};
  return words;
}

std::string random_text(SplitMix64& rng) {
  const auto& v = vocabulary();
  const std::size_t n = 3 + rng.below(5);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += v[rng.below(v.size())];
  }
  return s;
}

PairSample make_pair(std::string a, std::string b, int label) {
  const double hi = 0.02, lo = 0.01;
  return {"v", std::move(a), std::move(b), label ? hi : lo, label ? lo : hi, 1000, 1000, label, hi - lo};
}

/// Encoder written from the published description: FNV-1a 64 over
/// [segment byte] + n-gram bytes, index = h mod d, sign = bit 63, L2 norm.
/// ASCII inputs only, so code points are bytes.
std::vector<double> oracle_encode(std::size_t d, const std::string& a, const std::string& b) {
  std::vector<double> x(d, 0.0);
  const std::string segs[2] = {normalize_text(a), normalize_text(b)};
  for (int s = 0; s < 2; ++s) {
    for (std::size_t n = 1; n <= 3; ++n) {
      for (std::size_t i = 0; i + n <= segs[s].size(); ++i) {
        uint64_t h = 0xcbf29ce484222325ULL;
        std::string bytes(1, static_cast<char>(s));
        bytes += segs[s].substr(i, n);
        for (unsigned char c : bytes) {
          h ^= c;
          h *= 0x100000001b3ULL;
        }
        x[h % d] += (h >> 63) ? -1.0 : 1.0;
      }
    }
  }
  double norm = 0.0;
  for (double v : x) norm += v * v;
  if (norm > 0) {
    for (double& v : x) v /= std::sqrt(norm);
  }
  return x;
}

TEST(Encoder, EmptyPairIsZero) {
  const auto x = encode_pair(small_encoder(), "", "");
  EXPECT_EQ(x.dimension, 4096u);
  EXPECT_TRUE(x.indices.empty());
  EXPECT_EQ(x.to_dense(), std::vector<double>(4096, 0.0));
}

TEST(Encoder, MatchesReferenceDescription) {
  SplitMix64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_text(rng), b = random_text(rng);
    const auto expected = oracle_encode(4096, a, b);
    const auto actual = encode_pair(small_encoder(), a, b).to_dense();
    for (std::size_t k = 0; k < expected.size(); ++k) ASSERT_NEAR(actual[k], expected[k], 1e-12) << a << " | " << b;
  }
}

TEST(Encoder, SegmentIdDistinguishesOrder) {
  const auto ab = encode_pair(small_encoder(), "a", "b").to_dense();
  const auto ba = encode_pair(small_encoder(), "b", "a").to_dense();
  EXPECT_NE(ab, ba);
  EXPECT_EQ(ab, oracle_encode(4096, "a", "b"));
  EXPECT_EQ(ba, oracle_encode(4096, "b", "a"));
}

TEST(Encoder, UnitNormAndDefaultDimension) {
  SplitMix64 rng(6);
  EncoderSpec spec;
  EXPECT_EQ(spec.dimension, std::size_t{1} << 18);
  for (int i = 0; i < 100; ++i) {
    const auto x = encode_pair(spec, random_text(rng), random_text(rng));
    EXPECT_EQ(x.dimension, spec.dimension);
    ASSERT_NEAR(x.squared_norm(), 1.0, 1e-9);
  }
  EXPECT_NEAR(encode_pair(spec, "héllo wörld", "ü").squared_norm(), 1.0, 1e-9);
}

TEST(Encoder, RejectsBadSpec) {
  EncoderSpec e;
  e.dimension = 1000;
  EXPECT_THROW(e.validate(), Error);
  e = {};
  e.n_min = 3;
  e.n_max = 2;
  EXPECT_THROW(e.validate(), Error);
}

TEST(Predict, ZeroHeadIsHalf) {
  const auto state = init_state(small_encoder());
  SplitMix64 rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(predict(state, random_text(rng), random_text(rng)), 0.5);
}

/// Sets w = target * x so that w.x = target for this pair.
RewardModelState contrived(double target) {
  auto state = init_state(small_encoder());
  const auto x = encode_pair(state.encoder, "first push", "second push");
  for (std::size_t k = 0; k < x.indices.size(); ++k) state.head.params[x.indices[k]] = target * x.values[k];
  return state;
}

TEST(Predict, LogitLn3GivesThreeQuarters) {
  EXPECT_NEAR(predict(contrived(std::log(3.0)), "first push", "second push"), 0.75, 1e-12);
}

TEST(Predict, LogitLn9GivesNineTenths) {
  EXPECT_NEAR(predict(contrived(std::log(9.0)), "first push", "second push"), 0.9, 1e-12);
}

TEST(Predict, DimensionMismatchIsStateError) {
  auto state = init_state(small_encoder());
  state.encoder.dimension = 8192;
  try {
    predict(state, "a", "b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
}

TEST(Loss, LogisticDerivativeAtZero) {
  EXPECT_EQ(bce_logit_gradient(0.0, 1), -0.5);
  EXPECT_EQ(bce_logit_gradient(0.0, 0), 0.5);
  EXPECT_NEAR(bce_with_logit(0.0, 1), std::log(2.0), 1e-15);
}

TEST(Loss, SymmetricSumBoundedBelow) {
  const double two_ln2 = 2.0 * std::log(2.0);
  EXPECT_NEAR(bce_with_logit(0.0, 1) + bce_with_logit(0.0, 0), two_ln2, 1e-15);
  for (double z = -40.0; z <= 40.0; z += 0.37) {
    const double sum = bce_with_logit(z, 1) + bce_with_logit(z, 0);
    ASSERT_GE(sum, two_ln2 - 1e-15);
    if (std::abs(z) > 0.1) ASSERT_GT(sum, two_ln2 + 1e-4);
    // Independent closed form -ln r - ln(1 - r), away from saturation.
    if (std::abs(z) < 20) {
      const double r = 1.0 / (1.0 + std::exp(-z));
      const double one_minus_r = 1.0 / (1.0 + std::exp(z));
      ASSERT_NEAR(sum, -std::log(r) - std::log(one_minus_r), 1e-9);
    }
  }
}

TEST(Loss, ClampKeepsLossFinite) {
  EXPECT_TRUE(std::isfinite(bce_with_logit(1e6, 0)));
  EXPECT_NEAR(bce_with_logit(1e6, 0), bce_with_logit(30.0, 0), 1e-12);
}

TEST(Train, ZeroEpochsLeavesStateUnchanged) {
  const auto init = init_state(small_encoder());
  TrainConfig cfg;
  cfg.epochs = 0;
  std::vector<PairSample> pairs = {make_pair("a b c", "d e f", 1)};
  const auto result = train(init, pairs, {}, cfg);
  EXPECT_EQ(result.state.head, init.head);
  EXPECT_TRUE(result.trace.empty());
}

TEST(Train, EmptyTrainSetIsUsageError) {
  try {
    train(init_state(small_encoder()), {}, {}, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUsage);
  }
}

TEST(Train, SinglePairLossStrictlyDecreases) {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 10;
  std::vector<PairSample> pairs = {make_pair("watch the twist now", "simple tips", 1)};
  const auto result = train(init_state(small_encoder()), pairs, {}, cfg);
  ASSERT_EQ(result.trace.size(), 10u);
  double prev = std::log(2.0) + 1e-12;
  for (const auto& e : result.trace) {
    EXPECT_LT(e.train_loss, prev);
    prev = e.train_loss;
  }
}

TEST(Train, SeparablePairsReachHighAccuracy) {
  const auto spec = small_encoder();
  SplitMix64 rng(99);
  std::vector<double> w_star(spec.dimension);
  for (double& w : w_star) w = rng.uniform(-1.0, 1.0);
  std::vector<PairSample> pairs;
  while (pairs.size() < 200) {
    auto a = random_text(rng), b = random_text(rng);
    if (normalize_text(a) == normalize_text(b)) continue;
    const auto x = encode_pair(spec, a, b);
    double margin = 0.0;
    for (std::size_t k = 0; k < x.indices.size(); ++k) margin += w_star[x.indices[k]] * x.values[k];
    if (std::abs(margin) < 0.2) continue;
    pairs.push_back(make_pair(a, b, margin > 0 ? 1 : 0));
  }
  TrainConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  cfg.order_augment = false;
  const auto result = train(init_state(spec), pairs, {}, cfg);
  EXPECT_GE(result.trace.back().train_accuracy, 0.99);
}

TEST(Train, DeterministicBytes) {
  SplitMix64 rng(5);
  std::vector<PairSample> pairs;
  for (int i = 0; i < 60; ++i) pairs.push_back(make_pair(random_text(rng), random_text(rng), i % 2));
  TrainConfig cfg;
  cfg.seed = 77;
  cfg.epochs = 5;
  cfg.l2 = 1e-3;
  const auto x = train(init_state(small_encoder(), 4, 3), pairs, pairs, cfg);
  const auto y = train(init_state(small_encoder(), 4, 3), pairs, pairs, cfg);
  EXPECT_EQ(save_state(x.state), save_state(y.state));
  cfg.seed = 78;
  const auto z = train(init_state(small_encoder(), 4, 3), pairs, pairs, cfg);
  EXPECT_NE(save_state(x.state), save_state(z.state));
}

TEST(Train, NonFiniteLossIsDivergence) {
  auto state = init_state(small_encoder());
  state.head.params.back() = std::numeric_limits<double>::quiet_NaN();
  std::vector<PairSample> pairs = {make_pair("a", "b", 1)};
  try {
    train(state, pairs, {}, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Train, EarlyStoppingRestoresBestEpoch) {
  SplitMix64 rng(12);
  std::vector<PairSample> train_pairs, eval_pairs;
  for (int i = 0; i < 40; ++i) {
    auto a = random_text(rng), b = random_text(rng);
    train_pairs.push_back(make_pair(a, b, 1));
    eval_pairs.push_back(make_pair(a, b, 0));  // contradicts training
  }
  TrainConfig cfg;
  cfg.order_augment = false;
  cfg.epochs = 10;
  cfg.early_stop_patience = 1;
  cfg.seed = 4;
  const auto stopped = train(init_state(small_encoder()), train_pairs, eval_pairs, cfg);
  EXPECT_EQ(stopped.trace.size(), 2u);
  cfg.epochs = 1;
  cfg.early_stop_patience = 0;
  const auto one = train(init_state(small_encoder()), train_pairs, eval_pairs, cfg);
  EXPECT_EQ(stopped.state.head, one.state.head);
  EXPECT_EQ(stopped.state.metadata.final_eval_loss, one.trace[0].eval_loss);
}

/// Full-batch gradient descent on a dense copy of the problem, written
/// without the library's training loop.
double oracle_full_batch_loss(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys, double lr,
                              double l2, int epochs) {
  const std::size_t d = xs[0].size();
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  const double n = static_cast<double>(xs.size());
  std::vector<std::vector<std::size_t>> nz(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      if (xs[i][k] != 0.0) nz[i].push_back(k);
    }
  }
  auto logit = [&](std::size_t i) {
    double z = b;
    for (auto k : nz[i]) z += w[k] * xs[i][k];
    return z;
  };
  std::vector<double> gw(d);
  for (int e = 0; e < epochs; ++e) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = 1.0 / (1.0 + std::exp(-logit(i)));
      const double dz = (r - ys[i]) / n;
      gb += dz;
      for (auto k : nz[i]) gw[k] += dz * xs[i][k];
    }
    for (std::size_t k = 0; k < d; ++k) w[k] -= lr * (gw[k] + l2 * w[k]);
    b -= lr * (gb + l2 * b);
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z = logit(i);
    loss += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - ys[i] * z;
  }
  double sq = b * b;
  for (double v : w) sq += v * v;
  return loss / n + 0.5 * l2 * sq;
}

TEST(Train, ConvexOptimumMatchesFullBatchOracle) {
  const auto spec = small_encoder(1024);
  SplitMix64 rng(31);
  std::vector<PairSample> pairs;
  for (int i = 0; i < 20; ++i) pairs.push_back(make_pair(random_text(rng), random_text(rng), static_cast<int>(rng.below(2))));
  TrainConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.epochs = 3000;
  cfg.batch_size = 1000;
  cfg.l2 = 0.01;
  const auto result = train(init_state(spec), pairs, {}, cfg);

  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  for (const auto& p : pairs) {
    xs.push_back(oracle_encode(spec.dimension, p.text_a, p.text_b));
    ys.push_back(p.label);
    xs.push_back(oracle_encode(spec.dimension, p.text_b, p.text_a));
    ys.push_back(1 - p.label);
  }
  const double oracle = oracle_full_batch_loss(xs, ys, 0.1, cfg.l2, 30000);
  EXPECT_NEAR(result.trace.back().train_loss, oracle, 1e-6);
}

RewardModelState random_state(std::size_t hidden, uint64_t seed) {
  auto state = init_state(small_encoder(), hidden, seed, 0.5);
  if (hidden == 0) {
    SplitMix64 rng(seed);
    for (double& p : state.head.params) p = rng.uniform(-0.5, 0.5);
  }
  return state;
}

TEST(GradientCheck, AffineHeadAcrossSeeds) {
  SplitMix64 rng(8);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto pair = make_pair(random_text(rng), random_text(rng), static_cast<int>(seed % 2));
    const auto r = gradient_check(random_state(0, seed), pair, 1e-5, seed);
    ASSERT_GE(r.parameters_checked, 200u);
    ASSERT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(GradientCheck, HiddenLayerAwayFromKinks) {
  SplitMix64 rng(9);
  int checked = 0;
  for (uint64_t seed = 0; checked < 20; ++seed) {
    const auto pair = make_pair(random_text(rng), random_text(rng), static_cast<int>(seed % 2));
    const auto state = random_state(4, seed);
    const auto r = gradient_check(state, pair, 1e-5, seed);
    if (r.min_abs_preactivation < 1e-4) continue;  // resample near a ReLU kink
    ++checked;
    ASSERT_GE(r.parameters_checked, 200u);
    ASSERT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(GradientCheck, DetectsWrongGradient) {
  // checker sanity: a very coarse step has to show up as disagreement
  const auto state = random_state(0, 1);
  const auto pair = make_pair("watch now", "simple tips", 1);
  const auto ok = gradient_check(state, pair);
  EXPECT_LT(ok.max_relative_error, 1e-6);
  const auto coarse = gradient_check(state, pair, 5.0);
  EXPECT_GT(coarse.max_relative_error, 1e-4);
}

std::vector<std::pair<std::string, std::string>> probe_set(uint64_t seed, int n) {
  SplitMix64 rng(seed);
  std::vector<std::pair<std::string, std::string>> out;
  for (int i = 0; i < n; ++i) out.emplace_back(random_text(rng), random_text(rng));
  return out;
}

RewardModelState trained_state(std::size_t hidden) {
  SplitMix64 rng(21);
  std::vector<PairSample> pairs;
  for (int i = 0; i < 80; ++i) pairs.push_back(make_pair(random_text(rng), random_text(rng), i % 2));
  TrainConfig cfg;
  cfg.epochs = 3;
  return train(init_state(small_encoder(), hidden, 2), pairs, pairs, cfg).state;
}

TEST(Serialization, RoundTripIsBitIdentical) {
  for (std::size_t hidden : {0u, 4u}) {
    const auto state = trained_state(hidden);
    const auto bytes = save_state(state);
    const auto loaded = load_state(bytes);
    EXPECT_EQ(loaded, state);
    for (const auto& [a, b] : probe_set(3, 50)) {
      const double before = predict(state, a, b);
      const double after = predict(loaded, a, b);
      ASSERT_EQ(std::memcmp(&before, &after, sizeof(double)), 0);
    }
    EXPECT_EQ(save_state(loaded), bytes);
  }
}

TEST(Serialization, UnknownVersionRejected) {
  auto bytes = save_state(trained_state(0));
  const auto at = bytes.find("pushforge-reward/1");
  ASSERT_NE(at, std::string::npos);
  bytes.replace(at, 18, "pushforge-reward/9");
  try {
    load_state(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersion);
  }
}

TEST(Serialization, TruncatedInputRejected) {
  auto bytes = save_state(trained_state(0));
  bytes.pop_back();  // trailing newline
  bytes = bytes.substr(0, bytes.rfind('\n'));
  try {
    load_state(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(Serialization, ShapeMismatchRejected) {
  auto j = nlohmann::json::parse(save_state(trained_state(0)));
  j["head"]["hidden"] = 3;
  EXPECT_THROW(load_state(j.dump()), Error);
}

TEST(OrderAugmentation, ApproximatelyAntisymmetric) {
  // Label follows a hidden per-word quality; texts differ in content.
  const auto& vocab = vocabulary();
  std::map<std::string, double> quality;
  SplitMix64 q(40);
  for (const auto& w : vocab) quality[w] = q.uniform(-1.0, 1.0);
  auto score = [&](const std::string& s) {
    double total = 0.0;
    std::size_t start = 0;
    while (start <= s.size()) {
      auto end = s.find(' ', start);
      if (end == std::string::npos) end = s.size();
      total += quality[s.substr(start, end - start)];
      start = end + 1;
    }
    return total;
  };
  SplitMix64 rng(41);
  std::vector<PairSample> pairs;
  while (pairs.size() < 300) {
    auto a = random_text(rng), b = random_text(rng);
    const double sa = score(a), sb = score(b);
    if (sa == sb) continue;
    pairs.push_back(make_pair(a, b, sa > sb ? 1 : 0));
  }
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.l2 = 1e-4;
  const auto state = train(init_state(small_encoder()), pairs, {}, cfg).state;
  double total = 0.0;
  const auto probes = probe_set(42, 200);
  for (const auto& [a, b] : probes) total += std::abs(predict(state, a, b) + predict(state, b, a) - 1.0);
  EXPECT_LE(total / static_cast<double>(probes.size()), 0.1);
}

TEST(RemoteScorer, EchoesScore) {
  FakeServer server;
  nlohmann::json seen;
  server.server().Post("/v1/score_pair", [&](const httplib::Request& rq, httplib::Response& rs) {
    seen = nlohmann::json::parse(rq.body);
    rs.set_content(R"({"r": 0.7})", "application/json");
  });
  BackendConfig cfg;
  cfg.endpoint = server.endpoint();
  EXPECT_EQ(remote_score(cfg, "x", "y"), 0.7);
  EXPECT_EQ(seen, (nlohmann::json{{"text_a", "x"}, {"text_b", "y"}}));
}

TEST(RemoteScorer, OutOfRangeIsProtocolError) {
  FakeServer server;
  server.server().Post("/v1/score_pair", [&](const httplib::Request&, httplib::Response& rs) {
    rs.set_content(R"({"r": 1.5})", "application/json");
  });
  BackendConfig cfg;
  cfg.endpoint = server.endpoint();
  try {
    remote_score(cfg, "x", "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(RemoteScorer, TimeoutIsUnavailable) {
  FakeServer server;
  server.server().Post("/v1/score_pair", [&](const httplib::Request&, httplib::Response& rs) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    rs.set_content(R"({"r": 0.5})", "application/json");
  });
  BackendConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.timeout_ms = 100;
  cfg.retry.max_attempts = 2;
  RemoteScorer scorer(cfg, [](std::chrono::milliseconds) {});
  try {
    scorer("x", "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnavailable);
  }
  EXPECT_EQ(scorer.attempts(), 2u);
}

}  // namespace
}  // namespace pushforge
