#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "designer/error.hpp"
#include "designer/gateway.hpp"
#include "designer/json_extract.hpp"
#include "designer/model.hpp"
#include "designer/prompts.hpp"
#include "designer/util.hpp"

namespace designer {

/// Content of the last \boxed{...}, brace-balanced. nullopt when absent or
/// unbalanced (the latter also warns).
inline std::optional<std::string> extract_boxed_answer(std::string_view text, Warnings* warnings = nullptr) {
  static constexpr std::string_view kOpen = "\\boxed{";
  const auto pos = text.rfind(kOpen);
  if (pos == std::string_view::npos) return std::nullopt;
  int depth = 1;
  for (std::size_t i = pos + kOpen.size(); i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}' && --depth == 0) {
      return std::string(text.substr(pos + kOpen.size(), i - pos - kOpen.size()));
    }
  }
  warn(warnings, "unbalanced_boxed_answer");
  return std::nullopt;
}

struct SynthesisResult {
  std::string exam_question;
  std::string reference_answer;
  std::string chosen_logic_id;
  std::optional<std::string> boxed_answer;
};

/// Parses the trailing JSON object of a synthesis completion. candidate_ids
/// are the logic ids offered as 1..m in the prompt.
inline SynthesisResult parse_synthesis_output(std::string_view completion, const std::vector<std::string>& candidate_ids,
                                              Warnings* warnings = nullptr) {
  const std::string raw(completion);
  const auto j = extract_last_json_object(completion);
  if (!j) throw Error(ErrorCode::parse_failure, "no JSON object in synthesis output", raw);
  auto field = [&](const char* key) -> std::string {
    const auto it = j->find(key);
    if (it == j->end() || !it->is_string() || it->get<std::string>().empty()) {
      throw Error(ErrorCode::parse_failure, std::string("missing or empty '") + key + "'", raw);
    }
    return it->get<std::string>();
  };
  SynthesisResult r;
  r.exam_question = field("exam_question");
  r.reference_answer = field("reference_answer");

  const auto it = j->find("id");
  if (it == j->end()) throw Error(ErrorCode::parse_failure, "missing 'id'", raw);
  long id = -1;
  if (it->is_number_integer()) {
    id = it->get<long>();
  } else if (it->is_string()) {
    const auto s = it->get<std::string>();
    std::string digits;
    for (char c : s) {
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits.push_back(c);
      } else if (!digits.empty()) {
        break;
      }
    }
    if (digits.empty() || digits.size() > 9) throw Error(ErrorCode::parse_failure, "'id' is not a number: " + s, raw);
    id = std::stol(digits);
  } else {
    throw Error(ErrorCode::parse_failure, "'id' must be a string or integer", raw);
  }
  if (id < 1 || id > static_cast<long>(candidate_ids.size())) {
    throw Error(ErrorCode::id_out_of_range,
                "id " + std::to_string(id) + " not in 1.." + std::to_string(candidate_ids.size()), raw);
  }
  r.chosen_logic_id = candidate_ids[static_cast<std::size_t>(id - 1)];
  r.boxed_answer = extract_boxed_answer(r.reference_answer, warnings);
  return r;
}

/// Fine selection and generation over the retrieved candidates, numbered
/// 1..m in the given order.
inline SynthesisResult synthesize_question(Gateway& gw, const Document& doc, const std::vector<DesignLogic>& candidates,
                                           Warnings* warnings = nullptr) {
  if (candidates.empty()) throw Error(ErrorCode::empty_index, "no candidate logics for " + doc.id);
  std::vector<std::string> bodies, ids;
  for (const auto& l : candidates) {
    bodies.push_back(l.mermaid_text);
    ids.push_back(l.id);
  }
  const auto completion = gw.chat(Role::synthesizer, prompts::synthesis_prompt(doc.text, bodies));
  return parse_synthesis_output(completion, ids, warnings);
}

/// Long reasoning response from the responder role, stored verbatim.
inline std::string synthesize_response(Gateway& gw, const std::string& exam_question) {
  try {
    return gw.chat(Role::responder, exam_question);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::content_refusal) {
      throw Error(ErrorCode::empty_response, std::string("responder returned nothing: ") + e.what(), e.raw());
    }
    throw;
  }
}

}  // namespace designer
