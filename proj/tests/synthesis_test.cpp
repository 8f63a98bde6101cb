#include <gtest/gtest.h>

#include "designer/mock_provider.hpp"
#include "designer/retrieval.hpp"
#include "designer/synthesis.hpp"
#include "oracles.hpp"

using namespace designer;
using designer::mock::MockTransport;

namespace {

const std::vector<std::string> kIds = {"logic-a", "logic-b", "logic-c", "logic-d", "logic-e"};

LogicIndex random_index(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  LogicIndex idx("Physics");
  for (std::size_t i = 0; i < n; ++i) idx.add("l" + std::to_string(i), EmbeddingVector{oracle::random_points(1, d, rng)[0]});
  return idx;
}

/// Full sort by (score desc, id asc).
std::vector<std::string> oracle_top_k(const EmbeddingVector& q, const LogicIndex& idx, std::size_t k) {
  std::vector<std::pair<double, std::string>> all;
  for (std::size_t i = 0; i < idx.size(); ++i) all.emplace_back(oracle::cos_sim(q.values, idx.vector(i).values), idx.id(i));
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::string> ids(const std::vector<ScoredLogic>& r) {
  std::vector<std::string> out;
  for (const auto& s : r) out.push_back(s.logic_id);
  return out;
}

}  // namespace

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine(EmbeddingVector{{0.6, 0.8}}, EmbeddingVector{{0.6, 0.8}}), 1.0);
  EXPECT_EQ(cosine(EmbeddingVector{{1, 0}}, EmbeddingVector{{0, 1}}), 0.0);
  EXPECT_NEAR(cosine(EmbeddingVector{{1, 2, 3}}, EmbeddingVector{{3, 2, 1}}), 10.0 / 14.0, 1e-15);
}

TEST(Cosine, Errors) {
  try {
    cosine(EmbeddingVector{{0, 0}}, EmbeddingVector{{1, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_vector);
  }
  try {
    cosine(EmbeddingVector{{1}}, EmbeddingVector{{1, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(TopK, KExceedsSize) {
  std::mt19937_64 rng(1);
  const auto idx = random_index(3, 4, rng);
  EXPECT_EQ(retrieve_top_k(EmbeddingVector{{1, 0, 0, 0}}, idx, 5).size(), 3u);
}

TEST(TopK, SelfQueryFirst) {
  std::mt19937_64 rng(2);
  const auto idx = random_index(50, 8, rng);
  const auto r = retrieve_top_k(idx.vector(17), idx, 5);
  EXPECT_EQ(r[0].logic_id, "l17");
  EXPECT_NEAR(r[0].score, 1.0, 1e-9);
}

TEST(TopK, MatchesFullSort) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto idx = random_index(100, 16, rng);
    const EmbeddingVector q{oracle::random_points(1, 16, rng)[0]};
    EXPECT_EQ(ids(retrieve_top_k(q, idx, 5)), oracle_top_k(q, idx, 5));
  }
}

TEST(TopK, TiesByLogicId) {
  LogicIndex idx("Physics");
  idx.add("z", EmbeddingVector{{1, 0}});
  idx.add("a", EmbeddingVector{{2, 0}});
  idx.add("m", EmbeddingVector{{0, 1}});
  EXPECT_EQ(ids(retrieve_top_k(EmbeddingVector{{1, 0}}, idx, 2)), (std::vector<std::string>{"a", "z"}));
}

TEST(TopK, EmptyIndex) {
  try {
    retrieve_top_k(EmbeddingVector{{1.0}}, LogicIndex("Physics"), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_index);
  }
}

TEST(LogicIndexFile, RoundTrip) {
  TempDir dir;
  std::mt19937_64 rng(4);
  const auto idx = random_index(20, 5, rng);
  idx.save(dir.path / "Physics.jsonl");
  const auto back = LogicIndex::load(dir.path / "Physics.jsonl");
  EXPECT_EQ(back.serialize(), idx.serialize());
  EXPECT_EQ(back.dimension(), 5u);
}

TEST(LogicIndexFile, RejectsMixedDimensions) {
  LogicIndex idx("Physics");
  idx.add("a", EmbeddingVector{{1, 0}});
  EXPECT_THROW(idx.add("b", EmbeddingVector{{1, 0, 0}}), Error);
  EXPECT_THROW(idx.add("a", EmbeddingVector{{0, 1}}), Error);
}

TEST(Boxed, Examples) {
  EXPECT_EQ(extract_boxed_answer("so x = 42. The final answer is: \\boxed{42}."), "42");
  EXPECT_FALSE(extract_boxed_answer("no box here").has_value());
  EXPECT_EQ(extract_boxed_answer("\\boxed{\\frac{1}{2}}"), "\\frac{1}{2}");
  EXPECT_EQ(extract_boxed_answer("\\boxed{1} then \\boxed{2}"), "2");
}

TEST(Boxed, UnbalancedWarns) {
  Warnings w;
  EXPECT_FALSE(extract_boxed_answer("\\boxed{\\frac{1}{2}", &w).has_value());
  EXPECT_EQ(w.count("unbalanced_boxed_answer"), 1u);
}

TEST(Boxed, RoundTripBalancedStrings) {
  std::mt19937_64 rng(8);
  const std::string alphabet = "ab1 +\\^_";
  for (int t = 0; t < 500; ++t) {
    std::string s;
    int depth = 0;
    const int len = static_cast<int>(rng() % 30);
    for (int i = 0; i < len; ++i) {
      const auto r = rng() % 10;
      if (r == 0) {
        s += '{';
        ++depth;
      } else if (r == 1 && depth > 0) {
        s += '}';
        --depth;
      } else {
        s += alphabet[rng() % alphabet.size()];
      }
    }
    s.append(static_cast<std::size_t>(depth), '}');
    EXPECT_EQ(extract_boxed_answer("\\boxed{" + s + "}"), s);
  }
}

TEST(SynthesisParse, TrailingJson) {
  const auto r = parse_synthesis_output(
      R"(Step 1... Step 4.
{"exam_question": "Q", "reference_answer": "A. The final answer is: \boxed{42}", "id": "2"})",
      kIds);
  EXPECT_EQ(r.exam_question, "Q");
  EXPECT_EQ(r.reference_answer, "A. The final answer is: \\boxed{42}");
  EXPECT_EQ(r.chosen_logic_id, "logic-b");
  EXPECT_EQ(r.boxed_answer, "42");
}

TEST(SynthesisParse, FencedJsonIdentical) {
  const std::string body = R"({"exam_question": "Q", "reference_answer": "A. The final answer is: \boxed{42}", "id": "2"})";
  const auto plain = parse_synthesis_output("text\n" + body, kIds);
  const auto fenced = parse_synthesis_output("text\n```json\n" + body + "\n```\n", kIds);
  EXPECT_EQ(fenced.exam_question, plain.exam_question);
  EXPECT_EQ(fenced.reference_answer, plain.reference_answer);
  EXPECT_EQ(fenced.chosen_logic_id, plain.chosen_logic_id);
  EXPECT_EQ(fenced.boxed_answer, plain.boxed_answer);
}

TEST(SynthesisParse, IdOutOfRange) {
  try {
    parse_synthesis_output(R"({"exam_question": "Q", "reference_answer": "A", "id": "7"})", kIds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::id_out_of_range);
    EXPECT_FALSE(e.raw().empty());
  }
}

TEST(SynthesisParse, MissingFields) {
  EXPECT_THROW(parse_synthesis_output("no json", kIds), Error);
  EXPECT_THROW(parse_synthesis_output(R"({"exam_question": "", "reference_answer": "A", "id": 1})", kIds), Error);
}

TEST(Synthesize, MockChoosesACandidateDeterministically) {
  auto gw = Gateway(ProviderConfig{}, std::make_shared<MockTransport>());
  auto doc = Document::make("d", Source::book, "Energy is conserved when a pendulum swings without friction.");
  std::vector<DesignLogic> cands;
  for (const auto& id : kIds) {
    DesignLogic l;
    l.id = id;
    l.discipline = Discipline{"Physics"};
    l.mermaid_text = "graph TD; A[" + id + " energy]-->B[answer];";
    l.source_question_id = "q";
    cands.push_back(l);
  }
  const auto a = synthesize_question(gw, doc, cands);
  const auto b = synthesize_question(gw, doc, cands);
  EXPECT_NE(std::find(kIds.begin(), kIds.end(), a.chosen_logic_id), kIds.end());
  EXPECT_FALSE(a.exam_question.empty());
  EXPECT_EQ(a.exam_question, b.exam_question);
  EXPECT_EQ(a.chosen_logic_id, b.chosen_logic_id);
  cands.resize(2);
  const auto fewer = synthesize_question(gw, doc, cands);
  EXPECT_TRUE(fewer.chosen_logic_id == kIds[0] || fewer.chosen_logic_id == kIds[1]);
}

TEST(Respond, PassthroughEmptyAndCache) {
  TempDir dir;
  auto t = std::make_shared<MockTransport>();
  t->set_script([](const std::string&, const json& body, std::uint64_t) -> std::optional<HttpResponse> {
    const auto q = body.at("messages").back().at("content").get<std::string>();
    if (q == "blank") return HttpResponse{200, MockTransport::chat_body("")};
    return HttpResponse{200, MockTransport::chat_body("<think>work</think> 42")};
  });
  ProviderConfig c;
  c.cache_dir = dir.path;
  Gateway gw(c, t);
  EXPECT_EQ(synthesize_response(gw, "What is 6*7?"), "<think>work</think> 42");
  EXPECT_EQ(synthesize_response(gw, "What is 6*7?"), "<think>work</think> 42");
  EXPECT_EQ(t->chat_calls(), 1u);
  try {
    synthesize_response(gw, "blank");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_response);
  }
}
