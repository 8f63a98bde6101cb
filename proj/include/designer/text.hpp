#pragma once

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace designer::text {

inline bool is_valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto n = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

/// Calls fn(codepoint) for each scalar value; malformed bytes become U+FFFD.
template <typename Fn>
void for_each_codepoint(std::string_view s, Fn&& fn) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto n = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    fn(c < 0 ? UChar32{0xFFFD} : c);
  }
}

inline void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  std::int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<std::uint8_t*>(buf), len, U8_MAX_LENGTH, c, error);
  if (!error) out.append(buf, static_cast<std::size_t>(len));
}

/// Length in Unicode scalar values.
inline std::size_t char_count(std::string_view s) {
  std::size_t n = 0;
  for_each_codepoint(s, [&](UChar32) { ++n; });
  return n;
}

/// Whitespace-delimited tokens (Unicode White_Space property).
inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::string current;
  for_each_codepoint(s, [&](UChar32 c) {
    if (u_isUWhiteSpace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      append_utf8(current, c);
    }
  });
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

struct Span {
  std::size_t begin;
  std::size_t end;
};

/// Byte ranges of the words returned by split_words.
inline std::vector<Span> word_spans(std::string_view s) {
  std::vector<Span> spans;
  const auto* p = reinterpret_cast<const std::uint8_t*>(s.data());
  const auto n = static_cast<std::int32_t>(s.size());
  std::int32_t i = 0;
  bool in_word = false;
  while (i < n) {
    const auto start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    const bool ws = c >= 0 && u_isUWhiteSpace(c);
    if (!ws && !in_word) spans.push_back({static_cast<std::size_t>(start), 0});
    if (ws && in_word) spans.back().end = static_cast<std::size_t>(start);
    in_word = !ws;
  }
  if (in_word) spans.back().end = s.size();
  return spans;
}

inline std::size_t count_words(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for_each_codepoint(s, [&](UChar32 c) {
    const bool ws = u_isUWhiteSpace(c);
    if (!ws && !in_word) ++n;
    in_word = !ws;
  });
  return n;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep,
                        std::size_t begin = 0, std::size_t end = std::string::npos) {
  std::string out;
  end = std::min(end, parts.size());
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for_each_codepoint(s, [&](UChar32 c) { append_utf8(out, u_tolower(c)); });
  return out;
}

inline bool is_punctuation(UChar32 c) {
  switch (u_charType(c)) {
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_CONNECTOR_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
      return true;
    default:
      return false;
  }
}

inline bool is_symbol(UChar32 c) {
  switch (u_charType(c)) {
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

struct NormalizeOptions {
  /// Strip symbols (Unicode S*) as well as punctuation (P*). With this on,
  /// "x=2" normalizes to "x2".
  bool strip_symbols = true;
  /// Replace stripped characters with a space instead of deleting them.
  bool replace_with_space = false;
};

/// Lowercase, strip punctuation, split on whitespace, drop empties.
inline std::vector<std::string> normalize_tokens(std::string_view s, const NormalizeOptions& opts = {}) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for_each_codepoint(s, [&](UChar32 c) {
    if (is_punctuation(c) || (opts.strip_symbols && is_symbol(c))) {
      if (opts.replace_with_space) cleaned.push_back(' ');
      return;
    }
    append_utf8(cleaned, u_tolower(c));
  });
  return split_words(cleaned);
}

}  // namespace designer::text
