#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace designer {

/// Structural Mermaid check: a graph/flowchart header on the first
/// non-empty line, at least one edge arrow, balanced brackets. Returns the
/// first violated rule, or nullopt when the text passes.
inline std::optional<std::string> validate_mermaid(std::string_view text) {
  std::size_t pos = 0;
  std::string_view first;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const auto b = line.find_first_not_of(" \t\r");
    if (b != std::string_view::npos) {
      first = line.substr(b);
      break;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (first.empty()) return "empty diagram";

  auto starts_with_keyword = [&](std::string_view kw) {
    if (first.size() < kw.size() || first.substr(0, kw.size()) != kw) return false;
    if (first.size() == kw.size()) return true;
    const char next = first[kw.size()];
    return next == ' ' || next == '\t' || next == ';' || next == '\r';
  };
  if (!starts_with_keyword("graph") && !starts_with_keyword("flowchart")) {
    return "missing diagram keyword";
  }

  static constexpr std::string_view kArrows[] = {"-->", "---", "-.->", "-.-", "==>", "===", "--o", "--x", "<-->"};
  bool has_edge = false;
  for (auto a : kArrows) {
    if (text.find(a) != std::string_view::npos) {
      has_edge = true;
      break;
    }
  }
  // Labeled edges such as A -- text --> B contain "-->" as well.
  if (!has_edge) return "no edge arrow";

  // Quoted label text may contain anything, so brackets inside "..." are skipped.
  std::vector<char> stack;
  bool in_quote = false;
  for (char c : text) {
    if (c == '"') {
      in_quote = !in_quote;
      continue;
    }
    if (in_quote) continue;
    switch (c) {
      case '(': case '[': case '{':
        stack.push_back(c);
        break;
      case ')': case ']': case '}': {
        const char open = c == ')' ? '(' : c == ']' ? '[' : '{';
        if (stack.empty() || stack.back() != open) return "unbalanced brackets";
        stack.pop_back();
        break;
      }
      default:
        break;
    }
  }
  if (!stack.empty() || in_quote) return "unbalanced brackets";
  return std::nullopt;
}

}  // namespace designer
