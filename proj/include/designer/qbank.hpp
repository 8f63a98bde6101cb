#pragma once

#include <array>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "designer/clustering.hpp"
#include "designer/curation.hpp"
#include "designer/gateway.hpp"
#include "designer/model.hpp"
#include "designer/prompts.hpp"
#include "designer/taxonomy.hpp"
#include "designer/util.hpp"

namespace designer {

// ---------------------------------------------------------------------------
// Labeling

/// Parses "Difficulty: <label>"; nullopt (plus a warning) when the label is
/// outside the four levels.
inline std::optional<Difficulty> parse_difficulty_output(std::string_view completion, Warnings* warnings = nullptr) {
  static const std::regex kLine(R"(Difficulty\s*:\s*\**\s*([A-Za-z ]+))", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(completion.begin(), completion.end(), m, kLine)) {
    if (auto d = parse_difficulty(trim(m[1].str()))) return d;
  }
  warn(warnings, "difficulty_unparseable");
  return std::nullopt;
}

/// Parses "Question type: <label>"; anything unrecognized is Other.
inline QuestionType parse_question_type_output(std::string_view completion, Warnings* warnings = nullptr) {
  static const std::regex kLine(R"(Question type\s*:\s*\**\s*([A-Za-z \-]+))", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(completion.begin(), completion.end(), m, kLine)) {
    const auto label = trim(m[1].str());
    const auto q = question_type_from_label(label);
    if (q != QuestionType::other || label.rfind("Other", 0) == 0) return q;
  }
  warn(warnings, "qtype_unparseable");
  return QuestionType::other;
}

/// Three calls: discipline, difficulty, question type.
inline QuestionRecord label_question(Gateway& gw, QuestionRecord q, const Taxonomy& taxonomy,
                                     Warnings* warnings = nullptr) {
  if (q.text.empty()) throw Error(ErrorCode::invalid_argument, "question " + q.id + " has empty text");
  q.discipline = label_discipline(gw, q.text, taxonomy, warnings);
  q.difficulty = parse_difficulty_output(gw.chat(Role::labeler, prompts::difficulty_prompt(q.text)), warnings);
  q.qtype = parse_question_type_output(gw.chat(Role::labeler, prompts::question_type_prompt(q.text)), warnings);
  return q;
}

// ---------------------------------------------------------------------------
// Stratified sampling

/// Very Hard : Hard : Medium.
using DifficultyRatio = std::array<std::size_t, 3>;
inline constexpr DifficultyRatio kDefaultRatio = {3, 2, 1};

inline DifficultyRatio parse_ratio(std::string_view s) {
  static const std::regex kRatio(R"(\s*(\d+)\s*:\s*(\d+)\s*:\s*(\d+)\s*)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(s.begin(), s.end(), m, kRatio)) {
    throw Error(ErrorCode::invalid_argument, "ratio must look like 3:2:1, got '" + std::string(s) + "'");
  }
  DifficultyRatio r = {std::stoul(m[1].str()), std::stoul(m[2].str()), std::stoul(m[3].str())};
  if (r[0] + r[1] + r[2] == 0) throw Error(ErrorCode::invalid_argument, "ratio must not be all zero");
  return r;
}

inline std::string format_ratio(const DifficultyRatio& r) {
  return std::to_string(r[0]) + ":" + std::to_string(r[1]) + ":" + std::to_string(r[2]);
}

/// Splits `quota` equally across clusters (largest remainder, earlier
/// clusters first); a cluster smaller than its share gives the excess back
/// to the others.
inline std::vector<std::size_t> equal_shares(const std::vector<std::size_t>& capacity, std::size_t quota) {
  std::vector<std::size_t> share(capacity.size(), 0);
  std::vector<bool> fixed(capacity.size(), false);
  for (std::size_t i = 0; i < capacity.size(); ++i) fixed[i] = capacity[i] == 0;
  std::size_t remaining = quota;
  for (;;) {
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < capacity.size(); ++i) {
      if (!fixed[i]) open.push_back(i);
    }
    if (open.empty() || remaining == 0) break;
    const auto base = remaining / open.size();
    const auto extra = remaining % open.size();
    bool capped = false;
    for (std::size_t r = 0; r < open.size(); ++r) {
      const auto i = open[r];
      if (capacity[i] < base + (r < extra ? 1 : 0)) {
        share[i] = capacity[i];
        fixed[i] = true;
        remaining -= capacity[i];
        capped = true;
      }
    }
    if (!capped) {
      for (std::size_t r = 0; r < open.size(); ++r) share[open[r]] = base + (r < extra ? 1 : 0);
      break;
    }
  }
  return share;
}

/// Stratum index: 0 Very Hard, 1 Hard, 2 Medium, 3 Easy, 4 unlabeled.
inline std::size_t stratum_of(const QuestionRecord& q) {
  if (!q.difficulty) return 4;
  switch (*q.difficulty) {
    case Difficulty::very_hard: return 0;
    case Difficulty::hard: return 1;
    case Difficulty::medium: return 2;
    case Difficulty::easy: return 3;
  }
  return 4;
}

/// Per-stratum counts for one cluster: ratio targets by largest remainder,
/// deficits backfilled from the nearest stratum with spare items (harder
/// before easier at equal distance), then Easy, then unlabeled.
inline std::array<std::size_t, 5> stratum_counts(std::size_t share, const DifficultyRatio& ratio,
                                                 const std::array<std::size_t, 5>& available) {
  const auto targets = largest_remainder({double(ratio[0]), double(ratio[1]), double(ratio[2])}, share);
  std::array<std::size_t, 5> take{};
  std::array<std::size_t, 5> spare = available;
  std::array<std::size_t, 3> deficit{};
  for (std::size_t s = 0; s < 3; ++s) {
    take[s] = std::min(targets[s], available[s]);
    spare[s] -= take[s];
    deficit[s] = targets[s] - take[s];
  }
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t dist = 1; dist < 3 && deficit[s] > 0; ++dist) {
      for (int dir : {-1, +1}) {
        const auto t = static_cast<long>(s) + dir * static_cast<long>(dist);
        if (t < 0 || t > 2 || deficit[s] == 0) continue;
        const auto moved = std::min(deficit[s], spare[t]);
        take[t] += moved;
        spare[t] -= moved;
        deficit[s] -= moved;
      }
    }
    for (std::size_t t = 3; t < 5 && deficit[s] > 0; ++t) {
      const auto moved = std::min(deficit[s], spare[t]);
      take[t] += moved;
      spare[t] -= moved;
      deficit[s] -= moved;
    }
  }
  return take;
}

struct StratifiedSample {
  std::vector<QuestionRecord> selected;
  std::size_t shortfall = 0;
  /// Selected count per difficulty label ("unlabeled" for none).
  std::map<std::string, std::size_t> by_difficulty;
};

/// Equal share per non-empty cluster, then a ratio split by difficulty
/// within each cluster, drawing uniformly at random within each stratum.
/// Output order: cluster, then stratum, then draw order.
inline StratifiedSample stratified_sample(const std::vector<std::vector<QuestionRecord>>& clusters, std::size_t quota,
                                          const DifficultyRatio& ratio, std::uint64_t seed) {
  if (ratio[0] + ratio[1] + ratio[2] == 0) throw Error(ErrorCode::invalid_argument, "ratio must not be all zero");
  std::vector<std::size_t> capacity;
  for (const auto& c : clusters) capacity.push_back(c.size());
  const auto shares = equal_shares(capacity, quota);

  StratifiedSample out;
  std::size_t total = 0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (shares[c] == 0) continue;
    std::array<std::vector<const QuestionRecord*>, 5> strata;
    for (const auto& q : clusters[c]) strata[stratum_of(q)].push_back(&q);
    std::array<std::size_t, 5> available{};
    for (std::size_t s = 0; s < 5; ++s) available[s] = strata[s].size();
    const auto take = stratum_counts(shares[c], ratio, available);
    std::mt19937_64 rng(mix64(seed ^ mix64(c + 1)));
    for (std::size_t s = 0; s < 5; ++s) {
      auto pool = strata[s];
      seeded_shuffle(pool, rng);
      for (std::size_t i = 0; i < take[s]; ++i) {
        out.selected.push_back(*pool[i]);
        const auto& d = pool[i]->difficulty;
        ++out.by_difficulty[d ? std::string(to_string(*d)) : "unlabeled"];
      }
      total += take[s];
    }
  }
  out.shortfall = quota - std::min(quota, total);
  return out;
}

}  // namespace designer
