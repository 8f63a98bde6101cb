#pragma once

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

namespace designer {

using json = nlohmann::json;

namespace detail {

/// End (one past the closing brace) of the balanced object starting at
/// text[open], honouring JSON string quoting; npos if unbalanced.
inline std::size_t balanced_object_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

inline bool is_hex4(std::string_view s, std::size_t at) {
  if (at + 4 > s.size()) return false;
  for (std::size_t i = at; i < at + 4; ++i) {
    if (!std::isxdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

/// LaTeX commands whose first letter is also a JSON escape character.
inline const std::set<std::string, std::less<>>& latex_commands() {
  static const std::set<std::string, std::less<>> kCommands = {
      "b",         "backslash", "bar",     "beta",      "begin",   "big",      "bigg",     "bigl",    "bigr",
      "binom",     "bmatrix",   "bmod",    "bf",        "bot",     "boxed",    "bullet",   "f",       "fbox",
      "flat",      "forall",    "frac",    "frown",     "dfrac",   "nabla",    "ne",       "neg",     "neq",
      "newline",   "nmid",      "nolimits", "nonumber", "not",     "notin",    "nu",       "r",       "rangle",
      "rceil",     "rfloor",    "rho",     "right",     "rightarrow", "rm",    "t",        "tan",     "tanh",
      "tau",       "text",      "textbf",  "textit",    "textrm",  "tfrac",    "theta",    "tilde",   "times",
      "to",        "top",       "triangle", "u",        "underbrace", "underline", "up",    "uparrow", "upsilon"};
  return kCommands;
}

/// Doubles backslashes that start LaTeX commands or invalid escapes inside
/// JSON string literals, so model output like "\boxed{2}" or "\frac" keeps
/// its backslash instead of turning into a control character.
inline std::string repair_latex_escapes(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 16);
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (!in_string) {
      if (c == '"') in_string = true;
      out.push_back(c);
      continue;
    }
    if (c == '"') {
      in_string = false;
      out.push_back(c);
      continue;
    }
    if (c != '\\') {
      out.push_back(c);
      continue;
    }
    if (i + 1 >= s.size()) {
      out += "\\\\";
      continue;
    }
    const char e = s[i + 1];
    if (e == '\\' || e == '"' || e == '/') {
      out.push_back(c);
      out.push_back(e);
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
    const auto word = s.substr(i + 1, j - i - 1);
    const bool json_escape = std::string_view("bfnrt").find(e) != std::string_view::npos ||
                             (e == 'u' && is_hex4(s, i + 2));
    const bool latex = word.size() > 1 && latex_commands().count(word) > 0;
    if (!json_escape || latex) {
      out += "\\\\";
    } else {
      out.push_back(c);
      out.push_back(e);
      ++i;
    }
  }
  return out;
}

inline std::optional<json> parse_object(std::string_view candidate) {
  try {
    auto j = json::parse(candidate);
    if (j.is_object()) return j;
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

}  // namespace detail

/// Last balanced top-level JSON object in free text (fenced or not).
/// LaTeX backslashes are repaired before parsing; the raw form is the
/// fallback.
inline std::optional<json> extract_last_json_object(std::string_view text) {
  std::optional<json> last;
  std::size_t i = 0;
  while ((i = text.find('{', i)) != std::string_view::npos) {
    const auto end = detail::balanced_object_end(text, i);
    if (end == std::string_view::npos) {
      ++i;
      continue;
    }
    const auto candidate = text.substr(i, end - i);
    auto parsed = detail::parse_object(detail::repair_latex_escapes(candidate));
    if (!parsed) parsed = detail::parse_object(candidate);
    if (parsed) {
      last = std::move(parsed);
      i = end;
    } else {
      ++i;
    }
  }
  return last;
}

}  // namespace designer
