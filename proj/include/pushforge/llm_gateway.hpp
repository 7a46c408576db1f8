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

#ifndef PUSHFORGE_LLM_GATEWAY_HPP_
#define PUSHFORGE_LLM_GATEWAY_HPP_

#include <atomic>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pushforge/error.hpp"
#include "pushforge/text.hpp"

namespace pushforge {

inline constexpr std::string_view kApiKeyEnv = "PUSHFORGE_API_KEY";

struct RetryPolicy {
  int max_attempts = 3;
  int64_t backoff_base_ms = 200;
  double backoff_factor = 2.0;
};

struct BackendConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1";
  std::string model_name = "push-writer";
  int64_t timeout_ms = 30000;
  std::size_t max_in_flight = 4;
  RetryPolicy retry;

  void validate() const {
    if (retry.max_attempts < 1) throw Error(ErrorCode::kConfig, "retry.max_attempts must be >= 1");
    if (timeout_ms <= 0) throw Error(ErrorCode::kConfig, "timeout must be positive");
    if (max_in_flight == 0) throw Error(ErrorCode::kConfig, "max_in_flight must be positive");
    if (retry.backoff_base_ms < 0 || retry.backoff_factor < 0.0) {
      throw Error(ErrorCode::kConfig, "backoff parameters must be non-negative");
    }
  }
};

/// Wait before attempt `attempt + 1`, after `attempt` (1-based) failed.
inline std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
  const double ms = static_cast<double>(policy.backoff_base_ms) *
                    std::pow(policy.backoff_factor, static_cast<double>(attempt - 1));
  return std::chrono::milliseconds(static_cast<int64_t>(std::llround(ms)));
}

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model_name;
  std::vector<ChatMessage> messages;
  double temperature = 0.8;
  double top_p = 0.9;
  double repetition_penalty = 1.1;
  int max_tokens = 64;
  std::optional<uint64_t> seed;

  bool operator==(const ChatRequest&) const = default;

  void validate() const {
    if (messages.empty()) throw Error(ErrorCode::kUsage, "chat request has no messages");
    for (const auto& m : messages) {
      if (m.role != "system" && m.role != "user") {
        throw Error(ErrorCode::kUsage, "unsupported message role '" + m.role + "'");
      }
    }
    if (!(temperature >= 0.0)) throw Error(ErrorCode::kUsage, "temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kUsage, "top_p must lie in (0, 1]");
  }
};

struct ChatResponse {
  std::string content;
  std::string finish_reason;

  bool operator==(const ChatResponse&) const = default;
};

/// Wire body for POST {endpoint}/chat/completions.
inline nlohmann::json request_to_json(const ChatRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json j = {{"model", req.model_name},
                      {"messages", std::move(messages)},
                      {"temperature", req.temperature},
                      {"top_p", req.top_p},
                      {"repetition_penalty", req.repetition_penalty},
                      {"max_tokens", req.max_tokens}};
  j["seed"] = req.seed ? nlohmann::json(*req.seed) : nlohmann::json(nullptr);
  return j;
}

inline ChatRequest request_from_json(const nlohmann::json& j) {
  ChatRequest req;
  req.model_name = j.at("model").get<std::string>();
  for (const auto& m : j.at("messages")) {
    req.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  }
  req.temperature = j.value("temperature", req.temperature);
  req.top_p = j.value("top_p", req.top_p);
  req.repetition_penalty = j.value("repetition_penalty", req.repetition_penalty);
  req.max_tokens = j.value("max_tokens", req.max_tokens);
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) req.seed = it->get<uint64_t>();
  return req;
}

inline ChatResponse response_from_json(const nlohmann::json& body) {
  try {
    const auto& choice = body.at("choices").at(0);
    ChatResponse resp;
    resp.content = choice.at("message").at("content").get<std::string>();
    if (auto it = choice.find("finish_reason"); it != choice.end() && it->is_string()) {
      resp.finish_reason = it->get<std::string>();
    }
    return resp;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocol, std::string("malformed chat completion: ") + e.what());
  }
}

/// Anything that answers chat requests. Implementations must be safe to call
/// from several threads at once.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  /// Upper bound on concurrent calls the batch helper issues.
  virtual std::size_t max_in_flight() const { return 1; }
  /// Model name used for requests that leave `model_name` empty.
  virtual std::string model_name() const { return {}; }
};

/// JSON-over-HTTP POST with bounded concurrency and exponential-backoff retry.
/// Connection failures and 5xx responses are retried; 4xx never is.
class HttpTransport {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpTransport(BackendConfig cfg, Sleeper sleeper = {})
      : cfg_(std::move(cfg)),
        sleeper_(sleeper ? std::move(sleeper)
                         : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
        slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(cfg_.max_in_flight, 1))) {
    cfg_.validate();
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, kUrl)) {
      throw Error(ErrorCode::kConfig, "endpoint is not an http(s) URL: " + cfg_.endpoint);
    }
    origin_ = m[1].str();
    prefix_ = m[2].matched ? m[2].str() : std::string();
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (const char* key = std::getenv(std::string(kApiKeyEnv).c_str()); key && *key) {
      api_key_ = key;
    }
  }

  const BackendConfig& config() const { return cfg_; }

  /// Total HTTP attempts issued so far, retries included.
  std::size_t attempts() const { return attempts_.load(); }

  nlohmann::json post_json(std::string_view route, const nlohmann::json& body) {
    const std::string path = prefix_ + std::string(route);
    const std::string payload = body.dump();
    std::string last_failure = "no attempt made";
    for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
      if (attempt > 1) sleeper_(backoff_delay(cfg_.retry, attempt - 1));
      std::optional<httplib::Result> result;
      {
        slots_.acquire();
        struct Release {
          std::counting_semaphore<INT_MAX>& s;
          ~Release() { s.release(); }
        } release{slots_};
        attempts_.fetch_add(1);
        result.emplace(client().Post(path, headers(), payload, "application/json"));
      }
      const auto& res = *result;
      if (!res) {
        last_failure = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      const int status = res->status;
      if (status >= 500) {
        last_failure = "server returned HTTP " + std::to_string(status);
        continue;
      }
      if (status >= 400) {
        throw Error(ErrorCode::kRequest,
                    "HTTP " + std::to_string(status) + " from " + path + ": " + res->body);
      }
      if (status < 200 || status >= 300) {
        throw Error(ErrorCode::kProtocol, "unexpected HTTP status " + std::to_string(status));
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::kProtocol, "response body from " + path + " is not JSON");
      }
    }
    throw Error(ErrorCode::kUnavailable, cfg_.endpoint + std::string(route) + " after " +
                                             std::to_string(cfg_.retry.max_attempts) +
                                             " attempts: " + last_failure);
  }

 private:
  httplib::Client client() const {
    httplib::Client c(origin_);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    c.set_connection_timeout(timeout);
    c.set_read_timeout(timeout);
    c.set_write_timeout(timeout);
    return c;
  }

  httplib::Headers headers() const {
    httplib::Headers h;
    if (!api_key_.empty()) h.emplace("Authorization", "Bearer " + api_key_);
    return h;
  }

  BackendConfig cfg_;
  Sleeper sleeper_;
  std::counting_semaphore<INT_MAX> slots_;
  std::atomic<std::size_t> attempts_{0};
  std::string origin_;
  std::string prefix_;
  std::string api_key_;
};

/// Client for OpenAI-compatible chat-completion servers.
class HttpChatBackend final : public CompletionBackend {
 public:
  explicit HttpChatBackend(BackendConfig cfg, HttpTransport::Sleeper sleeper = {})
      : transport_(std::move(cfg), std::move(sleeper)) {}

  ChatResponse complete(const ChatRequest& req) override {
    req.validate();
    ChatRequest wire = req;
    if (wire.model_name.empty()) wire.model_name = transport_.config().model_name;
    return response_from_json(transport_.post_json("/chat/completions", request_to_json(wire)));
  }

  std::size_t max_in_flight() const override { return transport_.config().max_in_flight; }
  std::string model_name() const override { return transport_.config().model_name; }
  std::size_t attempts() const { return transport_.attempts(); }

 private:
  HttpTransport transport_;
};

inline ChatResponse complete(const BackendConfig& cfg, const ChatRequest& req) {
  HttpChatBackend backend(cfg);
  return backend.complete(req);
}

namespace mock_detail {

inline constexpr std::string_view kClassifyTrailer = "Answer with exactly one category name.";

inline std::optional<std::string> block_after(std::string_view content, std::string_view header) {
  const auto at = content.find(header);
  if (at == std::string_view::npos) return std::nullopt;
  auto rest = content.substr(at + header.size());
  const auto end = rest.find('\n');
  return std::string(rest.substr(0, end));
}

inline std::vector<std::string> listed_categories(std::string_view content) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    if (line.starts_with("- ")) {
      auto colon = line.find(':');
      names.emplace_back(line.substr(2, colon == std::string_view::npos ? line.npos : colon - 2));
    }
    pos = end + 1;
  }
  return names;
}

inline const std::vector<std::string_view>& openers() {
  static const std::vector<std::string_view> v = {
      "You won't believe", "Everyone is talking about", "Don't miss", "Just in:",
      "Here's why", "Wait until you see", "The secret behind", "Finally revealed:"};
  return v;
}

inline const std::vector<std::string_view>& closers() {
  static const std::vector<std::string_view> v = {
      "tap to watch", "see it now", "watch before it's gone", "the ending is wild",
      "you'll want to share this", "find out more", "it only takes a minute",
      "worth every second"};
  return v;
}

inline std::string caption_subject(std::string_view caption, std::size_t max_words) {
  const std::string norm = normalize_text(caption);
  std::string out;
  std::size_t words = 0;
  for (std::size_t i = 0; i < norm.size() && words < max_words;) {
    auto end = norm.find(' ', i);
    if (end == std::string::npos) end = norm.size();
    if (!out.empty()) out += ' ';
    out += norm.substr(i, end - i);
    ++words;
    i = end + 1;
  }
  return out;
}

}  // namespace mock_detail

/// Deterministic offline stand-in for a chat backend. The reply is a pure
/// function of (seed, serialized request): the stream is splitmix64 seeded
/// with FNV-1a 64 of the request body XOR `seed`.
///
/// Classification prompts (ending in "Answer with exactly one category
/// name.") are answered with one listed category: two times in three the
/// category keyed by the push text's hash, otherwise a stream draw.
/// Generation prompts echo their `### STYLE` category as a `[Category]`
/// marker followed by a templated sentence built from the caption.
inline ChatResponse mock_complete(uint64_t seed, const ChatRequest& req) {
  const std::string body = request_to_json(req).dump();
  SplitMix64 stream(fnv1a64(body) ^ seed);
  const std::string_view content =
      req.messages.empty() ? std::string_view() : std::string_view(req.messages.back().content);

  if (content.find(mock_detail::kClassifyTrailer) != std::string_view::npos) {
    const auto names = mock_detail::listed_categories(content);
    if (names.empty()) return {"Other", "stop"};
    const std::string subject = [&] {
      const auto at = content.find("Push:\n");
      if (at == std::string_view::npos) return std::string();
      auto rest = content.substr(at + 6);
      return std::string(rest.substr(0, rest.find('\n')));
    }();
    const uint64_t preferred = fnv1a64(normalize_text(subject)) % names.size();
    const bool follow = stream.below(3) < 2;
    const uint64_t pick = follow ? preferred : stream.below(names.size());
    return {names[pick], "stop"};
  }

  if (auto style = mock_detail::block_after(content, "### STYLE\n")) {
    const auto caption = mock_detail::block_after(content, "### CONTENT\n").value_or("");
    const auto& open = mock_detail::openers();
    const auto& close = mock_detail::closers();
    std::string text = "[" + *style + "] ";
    text += open[stream.below(open.size())];
    text += ' ';
    text += mock_detail::caption_subject(caption, 3 + stream.below(4));
    text += " - ";
    text += close[stream.below(close.size())];
    return {text, "stop"};
  }

  return {"mock reply " + std::to_string(stream.next() % 100000), "stop"};
}

class MockBackend final : public CompletionBackend {
 public:
  explicit MockBackend(uint64_t seed, std::size_t max_in_flight = 4)
      : seed_(seed), max_in_flight_(max_in_flight) {}

  ChatResponse complete(const ChatRequest& req) override {
    req.validate();
    return mock_complete(seed_, req);
  }
  std::size_t max_in_flight() const override { return max_in_flight_; }
  std::string model_name() const override { return "mock"; }

 private:
  uint64_t seed_;
  std::size_t max_in_flight_;
};

struct BatchOutcome {
  std::optional<ChatResponse> response;
  std::optional<Error> error;

  bool ok() const { return response.has_value(); }
};

/// Issues every request through `backend` with at most
/// `backend.max_in_flight()` outstanding; outcomes come back in submission
/// order whatever the completion order.
inline std::vector<BatchOutcome> complete_batch(CompletionBackend& backend,
                                                std::span<const ChatRequest> requests) {
  std::vector<BatchOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
      try {
        outcomes[i].response = backend.complete(requests[i]);
      } catch (const Error& e) {
        outcomes[i].error = e;
      } catch (const std::exception& e) {
        outcomes[i].error = Error(ErrorCode::kUnavailable, e.what());
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(std::max<std::size_t>(backend.max_in_flight(), 1), requests.size());
  if (workers <= 1) {
    worker();
    return outcomes;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  return outcomes;
}

}  // namespace pushforge

#endif  // PUSHFORGE_LLM_GATEWAY_HPP_
