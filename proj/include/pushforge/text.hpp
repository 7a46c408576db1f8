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

#ifndef PUSHFORGE_TEXT_HPP_
#define PUSHFORGE_TEXT_HPP_

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "pushforge/error.hpp"

namespace pushforge {

/// Canonical text form used for every equality check in the pipeline:
/// Unicode NFC, leading/trailing whitespace trimmed, internal whitespace runs
/// collapsed to a single ASCII space.
inline std::string normalize_text(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kDomain, "ICU NFC normalizer unavailable");
  }
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString composed = nfc->normalize(source, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kDomain, "NFC normalization failed");
  }

  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < composed.length();) {
    UChar32 cp = composed.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) {
      collapsed.append(static_cast<UChar>(u' '));
      pending_space = false;
    }
    collapsed.append(cp);
  }
  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

/// Splits UTF-8 text into code points, each kept as its UTF-8 byte sequence.
/// Ill-formed bytes become U+FFFD.
inline std::vector<std::string> utf8_code_points(std::string_view text) {
  std::vector<std::string> out;
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  for (int32_t i = 0; i < length;) {
    UChar32 cp = 0;
    U8_NEXT_OR_FFFD(bytes, i, length, cp);
    char buffer[U8_MAX_LENGTH];
    int32_t n = 0;
    U8_APPEND_UNSAFE(buffer, n, cp);
    out.emplace_back(buffer, static_cast<std::size_t>(n));
  }
  return out;
}

inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

/// FNV-1a 64-bit. `state` lets callers hash a message in several pieces.
constexpr uint64_t fnv1a64(std::string_view bytes, uint64_t state = kFnvOffsetBasis) {
  for (char c : bytes) {
    state ^= static_cast<uint8_t>(c);
    state *= kFnvPrime;
  }
  return state;
}

/// One splitmix64 output step applied to `x` (the generator's finalizer with
/// the golden-gamma increment already added).
constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic stream generator. Every shuffle and random draw in the
/// pipeline goes through this so results do not depend on the standard
/// library's distribution implementations.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(uint64_t seed) : state_(seed) {}

  constexpr uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound) by rejection; bound must be positive.
  uint64_t below(uint64_t bound) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t draw = next();
    while (draw >= limit) draw = next();
    return draw % bound;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  uint64_t state_;
};

/// Seed for a named sub-stream of a global seed.
inline uint64_t derive_seed(uint64_t seed, std::string_view name) {
  return splitmix64(seed ^ fnv1a64(name));
}

/// Shortest decimal string that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw Error(ErrorCode::kFormat, "cannot format number");
  return std::string(buffer, end);
}

inline bool is_blank(std::string_view text) { return normalize_text(text).empty(); }

}  // namespace pushforge

#endif  // PUSHFORGE_TEXT_HPP_
