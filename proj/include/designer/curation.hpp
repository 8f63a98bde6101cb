#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "designer/error.hpp"
#include "designer/gateway.hpp"
#include "designer/hash.hpp"
#include "designer/json_extract.hpp"
#include "designer/model.hpp"
#include "designer/prompts.hpp"
#include "designer/taxonomy.hpp"
#include "designer/text.hpp"
#include "designer/util.hpp"

namespace designer {

// ---------------------------------------------------------------------------
// Book segmentation

struct Chapter {
  std::string book_id;
  int chapter_index = 0;
  std::string text;
};

struct SegmentResult {
  std::vector<Document> segments;
  std::size_t empty_chapters = 0;
};

inline std::string segment_id(const Chapter& c, std::size_t block, std::string_view text) {
  return content_id("seg-", c.book_id + "\x1f" + std::to_string(c.chapter_index) + "\x1f" + std::to_string(block) +
                                "\x1f" + std::string(text));
}

/// Chapters within max_words stay whole; longer ones are cut at word
/// boundaries into consecutive blocks of max_words (the last may be
/// shorter). Block text is the original byte range, whitespace included.
inline SegmentResult segment_book(const std::vector<Chapter>& chapters, std::size_t max_words = kDefaultMaxBookWords) {
  if (max_words < 1) throw Error(ErrorCode::invalid_argument, "max_words must be >= 1");
  SegmentResult out;
  for (const auto& ch : chapters) {
    const auto spans = text::word_spans(ch.text);
    if (spans.empty()) {
      ++out.empty_chapters;
      continue;
    }
    if (spans.size() <= max_words) {
      out.segments.push_back(Document::make(segment_id(ch, 0, ch.text), Source::book, ch.text));
      continue;
    }
    for (std::size_t b = 0, block = 0; b < spans.size(); b += max_words, ++block) {
      const auto e = std::min(spans.size(), b + max_words) - 1;
      auto piece = ch.text.substr(spans[b].begin, spans[e].end - spans[b].begin);
      auto id = segment_id(ch, block, piece);
      out.segments.push_back(Document::make(std::move(id), Source::book, std::move(piece)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label parsing

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\"'*");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"'*.");
  return std::string(s.substr(b, e - b + 1));
}

/// Parses `"labels": "<label>"`. Unknown or missing labels map to the
/// unknown-discipline sentinel with a warning.
inline Discipline parse_discipline_output(std::string_view completion, const Taxonomy& taxonomy,
                                          Warnings* warnings = nullptr) {
  static const std::regex kLabel(R"rx("?labels"?\s*:\s*"([^"]*)")rx");
  std::match_results<std::string_view::const_iterator> m;
  std::string candidate;
  if (std::regex_search(completion.begin(), completion.end(), m, kLabel)) {
    candidate = trim(m[1].str());
  } else {
    candidate = trim(completion);
  }
  if (auto d = taxonomy.parse(candidate)) return *d;
  warn(warnings, candidate.empty() ? "discipline_unparseable" : "discipline_out_of_vocabulary");
  return Discipline{std::string(kUnknownDiscipline)};
}

inline Discipline label_discipline(Gateway& gw, const std::string& text, const Taxonomy& taxonomy,
                                   Warnings* warnings = nullptr) {
  return parse_discipline_output(gw.chat(Role::labeler, prompts::discipline_prompt(text, taxonomy)), taxonomy,
                                 warnings);
}

// ---------------------------------------------------------------------------
// Web reasoning rubric

/// Integer under the last "## Final score" heading; must lie in 0..5.
inline int parse_web_score(std::string_view completion) {
  static constexpr std::string_view kHeading = "## Final score";
  const auto pos = completion.rfind(kHeading);
  if (pos == std::string_view::npos) {
    throw Error(ErrorCode::unparseable_score, "no final-score section", std::string(completion));
  }
  auto section = completion.substr(pos + kHeading.size());
  if (const auto next = section.find("\n#"); next != std::string_view::npos) section = section.substr(0, next);
  static const std::regex kNumber(R"(-?\d+(\.\d+)?)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(section.begin(), section.end(), m, kNumber) || m[1].matched) {
    throw Error(ErrorCode::unparseable_score, "final score is not an integer", std::string(completion));
  }
  const int score = std::stoi(m[0].str());
  if (score < 0 || score > 5) {
    throw Error(ErrorCode::unparseable_score, "final score " + std::to_string(score) + " outside 0..5",
                std::string(completion));
  }
  return score;
}

inline int score_web_reasoning(Gateway& gw, Document& doc) {
  if (doc.source != Source::web) throw Error(ErrorCode::invalid_argument, "reasoning rubric applies to web documents");
  const int score = parse_web_score(gw.chat(Role::classifier, prompts::web_rubric_prompt(doc.text)));
  doc.reasoning_score = score;
  return score;
}

/// Keeps documents with reasoning_score >= min_score, in input order.
inline std::vector<Document> filter_web(const std::vector<Document>& docs, int min_score = 3) {
  std::vector<Document> kept;
  for (const auto& d : docs) {
    if (!d.reasoning_score) throw Error(ErrorCode::unscored_document, "document " + d.id + " has no reasoning score");
    if (*d.reasoning_score >= min_score) kept.push_back(d);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Readability and helpfulness

struct QualityAssessment {
  Readability readability = Readability::positive;
  int helpfulness = 0;
};

inline QualityAssessment parse_quality_output(std::string_view completion) {
  const auto j = extract_last_json_object(completion);
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::unparseable_classifier_output, why, std::string(completion));
  };
  if (!j) throw fail("no JSON object in classifier output");
  const auto r = j->find("readability");
  const auto h = j->find("helpfulness");
  if (r == j->end() || !r->is_string()) throw fail("missing readability");
  if (h == j->end()) throw fail("missing helpfulness");
  QualityAssessment q;
  const auto readability = detail::parse_readability(text::to_lower(r->get<std::string>()));
  if (!readability) throw fail("readability must be positive or negative");
  q.readability = *readability;
  if (h->is_number_integer()) {
    q.helpfulness = h->get<int>();
  } else if (h->is_string() && std::regex_match(h->get<std::string>(), std::regex(R"(\s*-?\d+\s*)"))) {
    q.helpfulness = std::stoi(h->get<std::string>());
  } else {
    throw fail("helpfulness must be an integer");
  }
  if (q.helpfulness < 0 || q.helpfulness > 5) throw fail("helpfulness outside 0..5");
  return q;
}

inline QualityAssessment assess_quality(Gateway& gw, Document& doc) {
  if (doc.source != Source::book) throw Error(ErrorCode::invalid_argument, "quality assessment applies to book segments");
  const auto q = parse_quality_output(gw.chat(Role::classifier, prompts::quality_prompt(doc.text)));
  doc.readability = q.readability;
  doc.helpfulness = q.helpfulness;
  return q;
}

// ---------------------------------------------------------------------------
// Quotas

/// Rounds weights * total to integers summing to total: floors first, then
/// one extra unit each to the largest fractional parts (earlier index wins
/// ties). Weights must be non-negative with a positive sum.
inline std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t total) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::invalid_argument, "weights must be finite and >= 0");
    sum += w;
  }
  if (sum <= 0.0) throw Error(ErrorCode::invalid_argument, "weights are all zero");
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] / sum * static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    rema.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++out[rema[r % rema.size()].second];
  return out;
}

struct QuotaPlan {
  std::map<std::string, std::size_t> per_discipline;
  std::size_t total = 0;
};

inline std::map<std::string, double> normalize_frequencies(const std::map<std::string, std::size_t>& freq) {
  double sum = 0.0;
  for (const auto& [_, c] : freq) sum += static_cast<double>(c);
  if (sum <= 0.0) throw Error(ErrorCode::invalid_argument, "frequency map is all zero");
  std::map<std::string, double> out;
  for (const auto& [k, c] : freq) out[k] = static_cast<double>(c) / sum;
  return out;
}

inline QuotaPlan plan_from_weights(const std::map<std::string, double>& weights, std::size_t total) {
  std::vector<double> w;
  for (const auto& [_, x] : weights) w.push_back(x);
  const auto counts = largest_remainder(w, total);
  QuotaPlan plan;
  plan.total = total;
  std::size_t i = 0;
  for (const auto& [k, _] : weights) plan.per_discipline[k] = counts[i++];
  return plan;
}

/// Weight per discipline = mean of the two normalized frequencies;
/// disciplines missing from one map count as zero there.
inline QuotaPlan allocate_quotas(const std::map<std::string, std::size_t>& corpus_freq,
                                 const std::map<std::string, std::size_t>& bank_freq, std::size_t total) {
  const auto c = normalize_frequencies(corpus_freq);
  const auto b = normalize_frequencies(bank_freq);
  std::map<std::string, double> weights;
  for (const auto& [k, x] : c) weights[k] += 0.5 * x;
  for (const auto& [k, x] : b) weights[k] += 0.5 * x;
  return plan_from_weights(weights, total);
}

/// Quotas proportional to a single frequency map.
inline QuotaPlan allocate_proportional(const std::map<std::string, std::size_t>& freq, std::size_t total) {
  return plan_from_weights(normalize_frequencies(freq), total);
}

struct QualitySample {
  std::vector<Document> selected;
  std::map<std::string, std::size_t> shortfall;  // disciplines whose pool fell short
};

/// Per discipline: drop readability-negative documents, order by
/// helpfulness descending (ties by id), take the quota.
inline QualitySample quality_prioritized_sample(const std::vector<Document>& docs, const QuotaPlan& plan) {
  std::map<std::string, std::vector<const Document*>> pools;
  for (const auto& d : docs) {
    if (!d.readability || !d.helpfulness) {
      throw Error(ErrorCode::invalid_argument, "document " + d.id + " lacks a quality assessment");
    }
    if (!d.discipline || *d.readability == Readability::negative) continue;
    pools[d.discipline->name].push_back(&d);
  }
  QualitySample out;
  for (const auto& [disc, quota] : plan.per_discipline) {
    auto& pool = pools[disc];
    std::stable_sort(pool.begin(), pool.end(), [](const Document* a, const Document* b) {
      if (*a->helpfulness != *b->helpfulness) return *a->helpfulness > *b->helpfulness;
      return a->id < b->id;
    });
    const auto take = std::min(quota, pool.size());
    for (std::size_t i = 0; i < take; ++i) out.selected.push_back(*pool[i]);
    if (take < quota) out.shortfall[disc] = quota - take;
  }
  return out;
}

}  // namespace designer
