#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "designer/gateway.hpp"
#include "designer/hash.hpp"
#include "designer/text.hpp"

namespace designer::mock {

// ---------------------------------------------------------------------------
// Helpers for reading rendered prompts back

inline bool contains(std::string_view hay, std::string_view needle) { return hay.find(needle) != std::string_view::npos; }

/// Few-shot pairs ("# Example N" / Input: "..." / Output: ...) in prompt order.
inline std::vector<std::pair<std::string, std::string>> few_shot_examples(std::string_view prompt) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  while ((pos = prompt.find("# Example ", pos)) != std::string_view::npos) {
    const auto in = prompt.find("Input: \"", pos);
    const auto outp = prompt.find("\"\nOutput: ", in == std::string_view::npos ? pos : in);
    if (in == std::string_view::npos || outp == std::string_view::npos) break;
    const auto value_start = outp + 10;
    const auto value_end = prompt.find('\n', value_start);
    out.emplace_back(std::string(prompt.substr(in + 8, outp - in - 8)),
                     std::string(prompt.substr(value_start, value_end - value_start)));
    pos = value_end == std::string_view::npos ? prompt.size() : value_end;
  }
  return out;
}

/// The text under classification: the last Input: "..." before the final Output:.
inline std::string classified_input(std::string_view prompt) {
  const auto in = prompt.rfind("Input: \"");
  const auto out = prompt.rfind("\"\nOutput:");
  if (in == std::string_view::npos || out == std::string_view::npos || out < in) return {};
  return std::string(prompt.substr(in + 8, out - in - 8));
}

inline std::string section_after(std::string_view prompt, std::string_view marker) {
  const auto pos = prompt.rfind(marker);
  if (pos == std::string_view::npos) return {};
  auto body = prompt.substr(pos + marker.size());
  while (!body.empty() && (body.front() == '\n' || body.front() == ' ')) body.remove_prefix(1);
  return std::string(body);
}

inline std::string strip_quotes_and_brackets(std::string s) {
  std::string out;
  for (char c : s) {
    if (std::string_view("\"[](){}<>|`;").find(c) == std::string_view::npos) out.push_back(c);
  }
  return out;
}

inline std::vector<std::string> content_words(std::string_view s) {
  static const std::set<std::string, std::less<>> kStop = {
      "the", "and", "for", "that", "with", "this", "from", "which", "what", "when", "where", "into", "are",
      "was", "were", "its", "their", "they", "have", "has", "been", "will", "would", "there", "these", "those",
      "than", "then", "such", "each", "also", "between", "about", "under", "over", "your", "you", "how", "why"};
  std::vector<std::string> out;
  for (auto& t : text::normalize_tokens(s)) {
    if (t.size() >= 4 && !kStop.count(t)) out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rubric-faithful responder

/// Deterministic stand-in for every chat role. It recognizes each prompt
/// template by its wording, applies the template's own rubric with simple
/// lexical rules, and answers in the requested output format. Few-shot
/// prompts whose input equals one of their examples return that example's
/// output verbatim.
struct MockResponder {
  std::string operator()(const ChatRequest& req) const {
    const std::string& prompt = req.messages.back().content;
    if (contains(prompt, "# List of Discipline Labels")) return discipline(prompt);
    if (contains(prompt, "classifying the difficulty levels")) return difficulty(prompt);
    if (contains(prompt, "classifying question types")) return question_type(prompt);
    if (contains(prompt, "potential usefulness for studying reasoning process")) return web_rubric(prompt);
    if (contains(prompt, "text quality assessor")) return quality(prompt);
    if (contains(prompt, "deduce the thought process of the question designer")) return extract_logic(prompt);
    if (contains(prompt, "--- Question-Design Logic 1 ---")) return synthesize(prompt);
    return respond(prompt);
  }

  static std::optional<std::string> echo_example(std::string_view prompt, const std::string& input) {
    for (const auto& [in, out] : few_shot_examples(prompt)) {
      if (in == input) return out;
    }
    return std::nullopt;
  }

  static std::string discipline(std::string_view prompt) {
    const auto input = classified_input(prompt);
    if (auto hit = echo_example(prompt, input)) return *hit;
    // Labels come from the prompt's own list so custom taxonomies work.
    const auto list_start = prompt.find("# List of Discipline Labels:");
    const auto list_open = prompt.find('[', list_start);
    const auto list_close = prompt.find(']', list_open);
    // Whole-word match on normalized tokens.
    const auto padded = " " + text::join(text::normalize_tokens(input), " ") + " ";
    std::string best;
    std::size_t best_pos = std::string::npos;
    std::size_t p = list_open;
    while (p < list_close) {
      const auto a = prompt.find('\'', p);
      if (a == std::string_view::npos || a > list_close) break;
      const auto b = prompt.find('\'', a + 1);
      const std::string label(prompt.substr(a + 1, b - a - 1));
      p = b + 1;
      if (Taxonomy::is_sentinel(label)) continue;
      const auto at = padded.find(" " + text::join(text::normalize_tokens(label), " ") + " ");
      if (at == std::string::npos) continue;
      if (best.empty() || label.size() > best.size() || (label.size() == best.size() && at < best_pos)) {
        best = label;
        best_pos = at;
      }
    }
    if (best.empty()) best = std::string(kUnknownDiscipline);
    return "\"labels\": \"" + best + "\"";
  }

  static std::string difficulty(std::string_view prompt) {
    const auto input = classified_input(prompt);
    if (auto hit = echo_example(prompt, input)) return *hit;
    const auto words = text::count_words(input);
    int level = words < 15 ? 0 : words < 40 ? 1 : words < 80 ? 2 : 3;
    const auto lower = text::to_lower(input);
    if (level < 3 && (contains(lower, "prove") || contains(lower, "derive"))) ++level;
    static constexpr const char* kNames[] = {"Easy", "Medium", "Hard", "Very Hard"};
    return std::string("Difficulty: ") + kNames[level];
  }

  static std::string question_type(std::string_view prompt) {
    const auto input = classified_input(prompt);
    if (auto hit = echo_example(prompt, input)) return *hit;
    const auto lower = text::to_lower(input);
    const bool has_options = (contains(input, "A:") || contains(input, "A.") || contains(input, "(A)")) &&
                             (contains(input, "B:") || contains(input, "B.") || contains(input, "(B)"));
    std::string label = "Problem-solving question";
    if (has_options) {
      label = "Multiple-choice question";
    } else if (contains(lower, "prove") || contains(lower, "show that")) {
      label = "Proof question";
    } else if (contains(input, "___")) {
      label = "Other question types";
    }
    return "Question type: " + label;
  }

  /// Applies the additive five-criterion reasoning rubric.
  static int rubric_score(std::string_view raw) {
    const auto t = text::to_lower(raw);
    auto any = [&](std::initializer_list<std::string_view> cues) {
      return std::any_of(cues.begin(), cues.end(), [&](std::string_view c) { return contains(t, c); });
    };
    const bool subgoal = any({"first, we need", "let's first", "let us first", "i'll first", "in three parts",
                              "first, we", "first we need"});
    const bool verification = any({"let's check", "let us check", "to verify", "let's test", "to ensure this",
                                   "we can verify", "double-check"});
    const bool backtracking = any({"let me try again", "wait,", "i made a mistake", "try a different"});
    const bool backward = any({"work backward", "working backward", "start with the desired result",
                               "start with what we want"});
    const bool reasoning = subgoal || verification || backtracking || backward ||
                           any({"because", "therefore", "thus", "hence", "it follows", "implies"});
    return int(reasoning) + int(subgoal) + int(verification) + int(backtracking) + int(backward);
  }

  static std::string web_rubric(std::string_view prompt) {
    const auto body = section_after(prompt, "# Text to evaluate for reasoning degree\n");
    const auto end = body.rfind("\n\n# Response");
    const auto doc = body.substr(0, end);
    const int score = rubric_score(doc);
    return "## Thoughts\nThe extract was checked for reasoning, subgoal setting, verification, backtracking and "
           "backward chaining cues.\n\n## Final score\n" +
           std::to_string(score);
  }

  static std::string quality(std::string_view prompt) {
    const auto body = section_after(prompt, "# Text Segment\n");
    const auto doc = body.substr(0, body.rfind("\n\n# Output"));
    const auto words = text::split_words(doc);
    std::size_t wordlike = 0;
    for (const auto& w : words) {
      auto cleaned = text::normalize_tokens(w);
      bool alpha = !cleaned.empty() && cleaned[0].size() <= 20;
      if (alpha) {
        for (unsigned char c : cleaned[0]) {
          if (c < 0x80 && !std::isalpha(c)) {
            alpha = false;
            break;
          }
        }
      }
      wordlike += alpha ? 1 : 0;
    }
    const double ratio = words.empty() ? 0.0 : double(wordlike) / double(words.size());
    const bool readable = ratio >= 0.7 && words.size() >= 5;
    static const std::set<std::string, std::less<>> kCues = {
        "theorem",  "definition", "example",   "principle", "equation", "therefore", "because", "law",
        "process",  "analysis",   "method",    "energy",    "function", "structure", "theory",  "model",
        "evidence", "experiment", "mechanism", "derive",    "explain",  "concept",   "system",  "proof"};
    std::set<std::string> seen;
    for (const auto& t : text::normalize_tokens(doc)) {
      if (kCues.count(t)) seen.insert(t);
    }
    int helpfulness = readable ? std::min(5, 1 + static_cast<int>(seen.size()) / 2) : 0;
    json out = {{"readability", readable ? "positive" : "negative"}, {"helpfulness", helpfulness}};
    return out.dump();
  }

  static std::string extract_logic(std::string_view prompt) {
    const auto question = section_after(prompt, "**Question:**\n");
    auto words = content_words(question);
    std::vector<std::string> keys;
    for (const auto& w : words) {
      if (std::find(keys.begin(), keys.end(), w) == keys.end()) keys.push_back(w);
      if (keys.size() == 3) break;
    }
    while (keys.size() < 3) keys.push_back("concept");
    const auto h = fnv1a64(question);
    static constexpr const char* kScenario[] = {"Embed the concepts in a realistic applied scenario",
                                                "Pose a quantitative setting with given parameters",
                                                "Contrast two competing explanations"};
    static constexpr const char* kTrap[] = {"Add a distractor based on a common misconception",
                                            "Include an irrelevant quantity as a trap",
                                            "Require checking a boundary condition"};
    std::string m = "graph TD\n";
    m += "    A[\"Identify core knowledge points: " + strip_quotes_and_brackets(keys[0]) + ", " +
         strip_quotes_and_brackets(keys[1]) + "\"] --> B[\"" + kScenario[h % 3] + "\"]\n";
    m += "    B --> C[\"Design a multi-step reasoning path through " + strip_quotes_and_brackets(keys[2]) + "\"]\n";
    m += "    C --> D[\"" + std::string(kTrap[(h >> 8) % 3]) + "\"]\n";
    m += "    D --> E[\"Formulate a single verifiable answer\"]\n";
    return "The designer starts from the central knowledge points and builds a scenario that forces multi-step "
           "reasoning.\n\n```mermaid\n" +
           m + "```\n";
  }

  static std::string synthesize(std::string_view prompt) {
    const auto source = section_after(prompt, "**--- Source Text for Question Creation ---**\n");
    std::vector<std::string> logics;
    for (int n = 1;; ++n) {
      const auto marker = "**--- Question-Design Logic " + std::to_string(n) + " ---**\n```Mermaid\n";
      const auto at = prompt.find(marker);
      if (at == std::string_view::npos) break;
      const auto begin = at + marker.size();
      const auto end = prompt.find("\n```", begin);
      logics.emplace_back(prompt.substr(begin, end - begin));
    }
    // Fine selection: most content-word overlap with the source text.
    const auto source_words = content_words(source);
    const std::set<std::string> source_set(source_words.begin(), source_words.end());
    std::size_t best = 0, best_overlap = 0;
    for (std::size_t i = 0; i < logics.size(); ++i) {
      std::size_t overlap = 0;
      const auto logic_words = content_words(logics[i]);
      for (const auto& w : std::set<std::string>(logic_words.begin(), logic_words.end())) {
        overlap += source_set.count(w);
      }
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best = i;
      }
    }
    const auto words = text::split_words(source);
    const auto excerpt = text::join(words, " ", 0, 60);
    const std::string focus = source_words.empty() ? "the material" : source_words[fnv1a64(source) % source_words.size()];
    const auto answer = std::to_string(words.size() % 97 + 3);
    json out = {
        {"exam_question", "Consider the following material: " + excerpt +
                              " Using this material, construct a multi-step argument about " + focus +
                              " and determine the resulting quantity."},
        {"reference_answer", "Working through the material step by step, the argument centres on " + focus +
                                 ". The final answer is: \\boxed{" + answer + "}."},
        {"id", std::to_string(best + 1)}};
    return "I compared the candidate logics against the source text and selected logic " + std::to_string(best + 1) +
           ".\n\n```json\n" + out.dump(2) + "\n```\n";
  }

  static std::string respond(std::string_view prompt) {
    const auto words = text::split_words(prompt);
    return "<think>\nRestating the problem: " + text::join(words, " ", 0, 20) +
           "\nBreaking it into subgoals and checking each intermediate result.\n</think>\nThe question reduces to " +
           std::to_string(words.size()) + " stated facts; combining them gives the answer.";
  }
};

// ---------------------------------------------------------------------------
// Embeddings

/// Unit vector from hashed tokens: every normalized token contributes a
/// pseudo-random direction seeded by its hash, so texts sharing words point
/// in similar directions.
inline EmbeddingVector hashed_embedding(std::string_view text_in, std::size_t dim, std::uint64_t seed = 0) {
  std::vector<double> v(dim, 0.0);
  auto add = [&](std::uint64_t h) {
    std::uint64_t state = mix64(h ^ seed);
    for (std::size_t i = 0; i < dim; ++i) {
      state = mix64(state + i);
      v[i] += (double(state >> 11) * 0x1.0p-53) * 2.0 - 1.0;
    }
  };
  const auto tokens = text::normalize_tokens(text_in);
  if (tokens.empty()) {
    add(fnv1a64(text_in));
  } else {
    for (const auto& t : tokens) add(fnv1a64(t));
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    v.assign(dim, 0.0);
    v[0] = 1.0;
    return {std::move(v)};
  }
  for (double& x : v) x /= norm;
  return {std::move(v)};
}

// ---------------------------------------------------------------------------
// Transport

/// In-process OpenAI-compatible server. Chat requests are answered from the
/// fixture map (keyed by request_hash) or the responder; embeddings come
/// from hashed_embedding. A script hook can inject HTTP failures.
class MockTransport final : public Transport {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;
  /// Called before normal handling with (path, body, call index); returning a
  /// response short-circuits it.
  using Script = std::function<std::optional<HttpResponse>(const std::string&, const json&, std::uint64_t)>;

  explicit MockTransport(std::size_t dimension = 64, Responder responder = MockResponder{})
      : dimension_(dimension), responder_(std::move(responder)) {}

  void set_fixture(const std::string& request_hash, std::string completion) {
    std::lock_guard lock(mu_);
    fixtures_[request_hash] = std::move(completion);
  }
  void set_script(Script s) { script_ = std::move(s); }
  void set_latency(std::chrono::milliseconds d) { latency_ = d; }

  std::uint64_t calls() const { return calls_.load(); }
  std::uint64_t chat_calls() const { return chat_calls_.load(); }
  std::uint64_t embed_calls() const { return embed_calls_.load(); }
  int peak_in_flight() const { return peak_.load(); }
  void reset_counters() {
    calls_ = 0;
    chat_calls_ = 0;
    embed_calls_ = 0;
    peak_ = 0;
  }

  HttpResponse post(const std::string& path, const std::string& body) override {
    const auto index = calls_++;
    const int now = ++in_flight_;
    int prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    struct Leave {
      std::atomic<int>& c;
      ~Leave() { --c; }
    } leave{in_flight_};
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

    json req;
    try {
      req = json::parse(body);
    } catch (const json::exception&) {
      return {400, R"({"error":"bad json"})"};
    }
    const bool chat = path.ends_with("/chat/completions");
    const bool embeddings = path.ends_with("/embeddings");
    if (chat) ++chat_calls_;
    if (embeddings) ++embed_calls_;
    if (script_) {
      if (auto r = script_(path, req, index)) return *r;
    }
    if (chat) return handle_chat(req);
    if (embeddings) return handle_embeddings(req);
    return {404, R"({"error":"not found"})"};
  }

  static std::string chat_body(const std::string& content, std::string_view finish_reason = "stop") {
    json j = {{"id", "mock"},
              {"object", "chat.completion"},
              {"choices", json::array({{{"index", 0},
                                        {"message", {{"role", "assistant"}, {"content", content}}},
                                        {"finish_reason", finish_reason}}})}};
    return j.dump();
  }

 private:
  HttpResponse handle_chat(const json& body) {
    const auto req = ChatRequest::from_wire(body);
    std::optional<std::string> fixture;
    {
      std::lock_guard lock(mu_);
      if (auto it = fixtures_.find(request_hash(req)); it != fixtures_.end()) fixture = it->second;
    }
    return {200, chat_body(fixture ? *fixture : responder_(req))};
  }

  HttpResponse handle_embeddings(const json& body) const {
    static constexpr std::string_view kInstructPrefix = "Instruct: ";
    static constexpr std::string_view kQuery = "\nQuery: ";
    json data = json::array();
    std::size_t i = 0;
    for (const auto& item : body.at("input")) {
      // Queries and documents share one space, so the instruction is dropped.
      std::string t = item.get<std::string>();
      if (t.starts_with(kInstructPrefix)) {
        if (auto q = t.find(kQuery); q != std::string::npos) t = t.substr(q + kQuery.size());
      }
      data.push_back({{"object", "embedding"}, {"index", i++}, {"embedding", hashed_embedding(t, dimension_).values}});
    }
    return {200, json{{"object", "list"}, {"data", std::move(data)}}.dump()};
  }

  std::size_t dimension_;
  Responder responder_;
  Script script_;
  std::chrono::milliseconds latency_{0};
  std::mutex mu_;
  std::map<std::string, std::string> fixtures_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> chat_calls_{0};
  std::atomic<std::uint64_t> embed_calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

}  // namespace designer::mock
