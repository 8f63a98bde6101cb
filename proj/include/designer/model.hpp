#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "designer/error.hpp"
#include "designer/mermaid.hpp"
#include "designer/taxonomy.hpp"
#include "designer/text.hpp"

namespace designer {

using json = nlohmann::json;

inline constexpr std::size_t kDefaultMaxBookWords = 5000;

// ---------------------------------------------------------------------------
// Label vocabularies

enum class Difficulty { easy, medium, hard, very_hard };

inline constexpr Difficulty kAllDifficulties[] = {Difficulty::easy, Difficulty::medium, Difficulty::hard,
                                                  Difficulty::very_hard};

constexpr std::string_view to_string(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::easy: return "Easy";
    case Difficulty::medium: return "Medium";
    case Difficulty::hard: return "Hard";
    case Difficulty::very_hard: return "Very Hard";
  }
  return "";
}

inline std::optional<Difficulty> parse_difficulty(std::string_view s) {
  for (auto d : kAllDifficulties) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

enum class QuestionType { problem_solving, multiple_choice, proof, other };

inline constexpr QuestionType kAllQuestionTypes[] = {QuestionType::problem_solving, QuestionType::multiple_choice,
                                                     QuestionType::proof, QuestionType::other};

constexpr std::string_view to_string(QuestionType q) noexcept {
  switch (q) {
    case QuestionType::problem_solving: return "Problem-solving";
    case QuestionType::multiple_choice: return "Multiple-choice";
    case QuestionType::proof: return "Proof";
    case QuestionType::other: return "Other";
  }
  return "";
}

/// Strict: only the four record-level spellings.
inline std::optional<QuestionType> parse_question_type(std::string_view s) {
  for (auto q : kAllQuestionTypes) {
    if (to_string(q) == s) return q;
  }
  return std::nullopt;
}

/// Lenient mapping for model output: accepts "Multiple-choice question",
/// "Other question types", etc. Anything unknown maps to Other.
inline QuestionType question_type_from_label(std::string_view s) {
  auto lower = text::to_lower(s);
  if (lower.find("problem-solving") != std::string::npos || lower.find("problem solving") != std::string::npos)
    return QuestionType::problem_solving;
  if (lower.find("multiple-choice") != std::string::npos || lower.find("multiple choice") != std::string::npos)
    return QuestionType::multiple_choice;
  if (lower.find("proof") != std::string::npos) return QuestionType::proof;
  return QuestionType::other;
}

enum class Source { book, web };
enum class Readability { positive, negative };
enum class RecordStatus { active, dropped_duplicate, dropped_contaminated };
enum class LogicStatus { active, dropped_duplicate };

constexpr std::string_view to_string(Source s) noexcept { return s == Source::book ? "book" : "web"; }
constexpr std::string_view to_string(Readability r) noexcept {
  return r == Readability::positive ? "positive" : "negative";
}
constexpr std::string_view to_string(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::active: return "active";
    case RecordStatus::dropped_duplicate: return "dropped_duplicate";
    case RecordStatus::dropped_contaminated: return "dropped_contaminated";
  }
  return "";
}
constexpr std::string_view to_string(LogicStatus s) noexcept {
  return s == LogicStatus::active ? "active" : "dropped_duplicate";
}

// ---------------------------------------------------------------------------
// Records

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

struct Document {
  std::string id;
  Source source = Source::book;
  std::string text;
  std::size_t word_count = 0;
  std::optional<Discipline> discipline;
  std::optional<Readability> readability;
  std::optional<int> helpfulness;
  std::optional<int> reasoning_score;

  static Document make(std::string id, Source source, std::string text) {
    Document d;
    d.id = std::move(id);
    d.source = source;
    d.word_count = text::count_words(text);
    d.text = std::move(text);
    return d;
  }
};

struct Provenance {
  enum class Kind { bank, synthesized };
  Kind kind = Kind::bank;
  std::optional<std::string> document_id;
  std::optional<std::string> logic_id;

  static Provenance bank() { return {}; }
  static Provenance synthesized(std::string document_id, std::string logic_id) {
    return {Kind::synthesized, std::move(document_id), std::move(logic_id)};
  }
};

struct QuestionRecord {
  std::string id;
  std::string text;
  Discipline discipline;
  std::optional<Difficulty> difficulty;
  std::optional<QuestionType> qtype;
  std::optional<EmbeddingVector> embedding;
  Provenance provenance;
  RecordStatus status = RecordStatus::active;

  // Synthesized records only.
  std::optional<std::string> reference_answer;
  std::optional<std::string> boxed_answer;
  std::optional<std::string> response;

  bool active() const noexcept { return status == RecordStatus::active; }

  /// Status only moves active -> dropped_*.
  void drop(RecordStatus to) {
    if (to == RecordStatus::active) throw Error(ErrorCode::invalid_argument, "cannot reactivate record " + id);
    if (status != RecordStatus::active) {
      throw Error(ErrorCode::invalid_argument,
                  "record " + id + " already " + std::string(to_string(status)));
    }
    status = to;
  }
};

struct DesignLogic {
  std::string id;
  Discipline discipline;
  std::string mermaid_text;
  std::string source_question_id;
  std::optional<EmbeddingVector> embedding;
  LogicStatus status = LogicStatus::active;
};

// ---------------------------------------------------------------------------
// JSON (de)serialization. Field names are lower_snake_case; absent optionals
// are omitted.

namespace detail {

inline const json& require(const json& j, const char* key) {
  if (!j.is_object()) throw Error(ErrorCode::malformed_field, "record is not a JSON object");
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw Error(ErrorCode::malformed_field, std::string("missing ") + key);
  return *it;
}

inline std::string require_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw Error(ErrorCode::malformed_field, std::string(key) + " is not a string");
  auto s = v.get<std::string>();
  if (!text::is_valid_utf8(s)) throw Error(ErrorCode::malformed_field, std::string(key) + " is not valid UTF-8");
  return s;
}

inline std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return require_string(j, key);
}

inline std::optional<int> optional_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw Error(ErrorCode::malformed_field, std::string(key) + " is not an integer");
  return it->get<int>();
}

inline std::optional<EmbeddingVector> optional_embedding(const json& j) {
  auto it = j.find("embedding");
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) throw Error(ErrorCode::malformed_field, "embedding is not an array");
  EmbeddingVector e;
  e.values.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw Error(ErrorCode::malformed_field, "embedding value is not a number");
    e.values.push_back(v.get<double>());
  }
  return e;
}

template <typename Enum, typename Parse>
Enum require_enum(const json& j, const char* key, Parse parse) {
  auto s = require_string(j, key);
  auto v = parse(s);
  if (!v) throw Error(ErrorCode::malformed_field, std::string("out-of-vocabulary ") + key + " '" + s + "'");
  return *v;
}

inline std::optional<Source> parse_source(std::string_view s) {
  if (s == "book") return Source::book;
  if (s == "web") return Source::web;
  return std::nullopt;
}
inline std::optional<Readability> parse_readability(std::string_view s) {
  if (s == "positive") return Readability::positive;
  if (s == "negative") return Readability::negative;
  return std::nullopt;
}
inline std::optional<RecordStatus> parse_record_status(std::string_view s) {
  for (auto v : {RecordStatus::active, RecordStatus::dropped_duplicate, RecordStatus::dropped_contaminated}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}
inline std::optional<LogicStatus> parse_logic_status(std::string_view s) {
  if (s == "active") return LogicStatus::active;
  if (s == "dropped_duplicate") return LogicStatus::dropped_duplicate;
  return std::nullopt;
}

}  // namespace detail

inline json to_json(const EmbeddingVector& e) { return json(e.values); }

inline json to_json(const Document& d) {
  json j = {{"id", d.id}, {"source", to_string(d.source)}, {"text", d.text}, {"word_count", d.word_count}};
  if (d.discipline) j["discipline"] = d.discipline->name;
  if (d.readability) j["readability"] = to_string(*d.readability);
  if (d.helpfulness) j["helpfulness"] = *d.helpfulness;
  if (d.reasoning_score) j["reasoning_score"] = *d.reasoning_score;
  return j;
}

inline Document document_from_json(const json& j) {
  using namespace detail;
  Document d;
  d.id = require_string(j, "id");
  d.source = require_enum<Source>(j, "source", parse_source);
  d.text = require_string(j, "text");
  const auto& wc = require(j, "word_count");
  if (!wc.is_number_unsigned() && !(wc.is_number_integer() && wc.get<long long>() >= 0))
    throw Error(ErrorCode::malformed_field, "word_count is not a count");
  d.word_count = wc.get<std::size_t>();
  if (auto s = optional_string(j, "discipline")) d.discipline = Discipline{*s};
  if (j.contains("readability") && !j["readability"].is_null())
    d.readability = require_enum<Readability>(j, "readability", parse_readability);
  d.helpfulness = optional_int(j, "helpfulness");
  d.reasoning_score = optional_int(j, "reasoning_score");
  return d;
}

inline json to_json(const QuestionRecord& q) {
  json j = {{"id", q.id}, {"text", q.text}, {"discipline", q.discipline.name}, {"status", to_string(q.status)}};
  if (q.difficulty) j["difficulty"] = to_string(*q.difficulty);
  if (q.qtype) j["qtype"] = to_string(*q.qtype);
  if (q.embedding) j["embedding"] = to_json(*q.embedding);
  json prov = {{"kind", q.provenance.kind == Provenance::Kind::bank ? "bank" : "synthesized"}};
  if (q.provenance.document_id) prov["document_id"] = *q.provenance.document_id;
  if (q.provenance.logic_id) prov["logic_id"] = *q.provenance.logic_id;
  j["provenance"] = std::move(prov);
  if (q.provenance.kind == Provenance::Kind::synthesized) j["exam_question"] = q.text;
  if (q.reference_answer) j["reference_answer"] = *q.reference_answer;
  if (q.boxed_answer) j["boxed_answer"] = *q.boxed_answer;
  if (q.response) j["response"] = *q.response;
  return j;
}

inline QuestionRecord question_from_json(const json& j) {
  using namespace detail;
  QuestionRecord q;
  q.id = require_string(j, "id");
  if (j.contains("text") || !j.contains("exam_question")) {
    q.text = require_string(j, "text");
  } else {
    q.text = require_string(j, "exam_question");
  }
  q.discipline = Discipline{require_string(j, "discipline")};
  if (j.contains("difficulty") && !j["difficulty"].is_null())
    q.difficulty = require_enum<Difficulty>(j, "difficulty", parse_difficulty);
  if (j.contains("qtype") && !j["qtype"].is_null())
    q.qtype = require_enum<QuestionType>(j, "qtype", parse_question_type);
  q.embedding = optional_embedding(j);
  const auto& prov = require(j, "provenance");
  auto kind = require_string(prov, "kind");
  if (kind == "bank") {
    q.provenance.kind = Provenance::Kind::bank;
  } else if (kind == "synthesized") {
    q.provenance.kind = Provenance::Kind::synthesized;
  } else {
    throw Error(ErrorCode::malformed_field, "out-of-vocabulary provenance kind '" + kind + "'");
  }
  q.provenance.document_id = optional_string(prov, "document_id");
  q.provenance.logic_id = optional_string(prov, "logic_id");
  q.status = require_enum<RecordStatus>(j, "status", parse_record_status);
  q.reference_answer = optional_string(j, "reference_answer");
  q.boxed_answer = optional_string(j, "boxed_answer");
  q.response = optional_string(j, "response");
  return q;
}

inline json to_json(const DesignLogic& l) {
  json j = {{"id", l.id},
            {"discipline", l.discipline.name},
            {"mermaid_text", l.mermaid_text},
            {"source_question_id", l.source_question_id},
            {"status", to_string(l.status)}};
  if (l.embedding) j["embedding"] = to_json(*l.embedding);
  return j;
}

inline DesignLogic logic_from_json(const json& j) {
  using namespace detail;
  DesignLogic l;
  l.id = require_string(j, "id");
  l.discipline = Discipline{require_string(j, "discipline")};
  l.mermaid_text = require_string(j, "mermaid_text");
  l.source_question_id = require_string(j, "source_question_id");
  l.embedding = optional_embedding(j);
  l.status = require_enum<LogicStatus>(j, "status", parse_logic_status);
  return l;
}

// ---------------------------------------------------------------------------
// Validation

using Violations = std::vector<std::string>;

namespace detail {

inline std::string with_thousands(std::size_t n) {
  auto s = std::to_string(n);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

inline void check_discipline(Violations& out, const Discipline& d, const Taxonomy& taxonomy) {
  if (!taxonomy.contains(d.name)) out.push_back("out-of-vocabulary discipline '" + d.name + "'");
}

inline void check_embedding(Violations& out, const std::optional<EmbeddingVector>& e) {
  if (!e) return;
  if (e->values.empty()) out.push_back("embedding is empty");
  for (double v : e->values) {
    if (!std::isfinite(v)) {
      out.push_back("embedding has non-finite value");
      break;
    }
  }
}

}  // namespace detail

inline Violations validate_record(const Document& d, const Taxonomy& taxonomy,
                                  std::size_t max_book_words = kDefaultMaxBookWords) {
  Violations out;
  if (d.id.empty()) out.push_back("missing id");
  if (!text::is_valid_utf8(d.text)) out.push_back("text is not valid UTF-8");
  const auto counted = text::count_words(d.text);
  if (counted != d.word_count) {
    out.push_back("word_count " + std::to_string(d.word_count) + " does not match text (" + std::to_string(counted) +
                  " words)");
  }
  if (d.source == Source::book && d.word_count > max_book_words) {
    out.push_back("word_count exceeds " + detail::with_thousands(max_book_words));
  }
  if (d.discipline) detail::check_discipline(out, *d.discipline, taxonomy);
  if (d.helpfulness && (*d.helpfulness < 0 || *d.helpfulness > 5)) out.push_back("helpfulness outside 0..5");
  if (d.reasoning_score) {
    if (*d.reasoning_score < 0 || *d.reasoning_score > 5) out.push_back("reasoning_score outside 0..5");
    if (d.source != Source::web) out.push_back("reasoning_score on a non-web document");
  }
  return out;
}

inline Violations validate_record(const QuestionRecord& q, const Taxonomy& taxonomy) {
  Violations out;
  if (q.id.empty()) out.push_back("missing id");
  if (q.text.empty()) out.push_back("empty text");
  detail::check_discipline(out, q.discipline, taxonomy);
  detail::check_embedding(out, q.embedding);
  if (q.provenance.kind == Provenance::Kind::synthesized) {
    if (!q.provenance.document_id || q.provenance.document_id->empty()) out.push_back("missing document_id");
    if (!q.provenance.logic_id || q.provenance.logic_id->empty()) out.push_back("missing logic_id");
  }
  return out;
}

inline Violations validate_record(const DesignLogic& l, const Taxonomy& taxonomy) {
  Violations out;
  if (l.id.empty()) out.push_back("missing id");
  if (l.source_question_id.empty()) out.push_back("missing source_question_id");
  detail::check_discipline(out, l.discipline, taxonomy);
  detail::check_embedding(out, l.embedding);
  if (auto err = validate_mermaid(l.mermaid_text)) out.push_back("invalid mermaid: " + *err);
  return out;
}

enum class RecordKind { document, question, logic };

/// Deserializes one JSONL line and validates it. Parse failures (bad JSON,
/// missing fields, out-of-vocabulary enums) are reported as violations.
inline Violations validate_line(RecordKind kind, std::string_view line, const Taxonomy& taxonomy) {
  try {
    if (!text::is_valid_utf8(line)) return {"malformed-field: line is not valid UTF-8"};
    auto j = json::parse(line);
    switch (kind) {
      case RecordKind::document: return validate_record(document_from_json(j), taxonomy);
      case RecordKind::question: return validate_record(question_from_json(j), taxonomy);
      case RecordKind::logic: return validate_record(logic_from_json(j), taxonomy);
    }
  } catch (const Error& e) {
    return {e.what()};
  } catch (const json::exception& e) {
    return {std::string("malformed-field: ") + e.what()};
  }
  return {};
}

}  // namespace designer
