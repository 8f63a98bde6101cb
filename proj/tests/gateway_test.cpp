#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "designer/http_transport.hpp"
#include "designer/mock_provider.hpp"
#include "designer/util.hpp"
#include "oracles.hpp"

using namespace designer;
using designer::mock::MockTransport;

namespace {

ProviderConfig no_cache() {
  ProviderConfig c;
  c.retry.backoff = {std::chrono::milliseconds(0)};
  return c;
}

std::unique_ptr<Gateway> make_gateway(std::shared_ptr<Transport> t, ProviderConfig c = no_cache()) {
  auto g = std::make_unique<Gateway>(std::move(c), std::move(t));
  g->set_sleeper([](std::chrono::milliseconds) {});
  return g;
}


}  // namespace

TEST(Gateway, FixtureEcho) {
  auto t = std::make_shared<MockTransport>();
  auto gw = make_gateway(t);
  const auto req = gw->make_chat(Role::labeler, "classify this");
  t->set_fixture(request_hash(req), "Difficulty: Easy");
  EXPECT_EQ(gw->chat_complete(req), "Difficulty: Easy");
}

TEST(Gateway, CacheServesRepeatWithoutNetwork) {
  TempDir dir;
  auto t = std::make_shared<MockTransport>();
  auto c = no_cache();
  c.cache_dir = dir.path / "cache";
  auto gw = make_gateway(t, c);
  const auto a = gw->chat(Role::responder, "What is 2+2?");
  EXPECT_EQ(t->calls(), 1u);
  const auto b = gw->chat(Role::responder, "What is 2+2?");
  EXPECT_EQ(a, b);
  EXPECT_EQ(t->calls(), 1u);
  EXPECT_EQ(gw->stats().cache_hits, 1u);

  // A fresh gateway over the same directory also hits.
  auto gw2 = make_gateway(t, c);
  EXPECT_EQ(gw2->chat(Role::responder, "What is 2+2?"), a);
  EXPECT_EQ(t->calls(), 1u);
}

TEST(Gateway, RetriesThrough429) {
  auto t = std::make_shared<MockTransport>();
  t->set_script([](const std::string&, const json&, std::uint64_t i) -> std::optional<HttpResponse> {
    if (i < 2) return HttpResponse{429, "slow down"};
    return std::nullopt;
  });
  auto gw = make_gateway(t);
  std::vector<std::chrono::milliseconds> slept;
  gw->set_sleeper([&](std::chrono::milliseconds d) { slept.push_back(d); });
  EXPECT_FALSE(gw->chat(Role::labeler, "x").empty());
  EXPECT_EQ(t->calls(), 3u);
  EXPECT_EQ(gw->stats().retries, 2u);
  EXPECT_EQ(slept.size(), 2u);
}

TEST(Gateway, GivesUpAfterMaxAttempts) {
  auto t = std::make_shared<MockTransport>();
  t->set_script([](const std::string&, const json&, std::uint64_t) -> std::optional<HttpResponse> {
    return HttpResponse{503, "down"};
  });
  auto gw = make_gateway(t);
  try {
    gw->chat(Role::labeler, "x");
    FAIL() << "expected provider_unavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provider_unavailable);
    EXPECT_EQ(e.raw(), "down");
  }
  EXPECT_EQ(t->calls(), 3u);
}

TEST(Gateway, NonRetryableStatusFailsFast) {
  auto t = std::make_shared<MockTransport>();
  t->set_script([](const std::string&, const json&, std::uint64_t) -> std::optional<HttpResponse> {
    return HttpResponse{400, "bad"};
  });
  auto gw = make_gateway(t);
  EXPECT_THROW(gw->chat(Role::labeler, "x"), Error);
  EXPECT_EQ(t->calls(), 1u);
}

TEST(Gateway, ContentFilterIsRefusal) {
  auto t = std::make_shared<MockTransport>();
  t->set_script([](const std::string&, const json&, std::uint64_t) -> std::optional<HttpResponse> {
    return HttpResponse{200, MockTransport::chat_body("", "content_filter")};
  });
  auto gw = make_gateway(t);
  try {
    gw->chat(Role::labeler, "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::content_refusal);
  }
}

TEST(Gateway, BudgetCapIsHard) {
  auto t = std::make_shared<MockTransport>();
  auto c = no_cache();
  c.max_requests = 2;
  auto gw = make_gateway(t, c);
  gw->chat(Role::labeler, "a");
  gw->chat(Role::labeler, "b");
  try {
    gw->chat(Role::labeler, "c");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::budget_exceeded);
  }
  EXPECT_EQ(t->calls(), 2u);
}

TEST(Gateway, InFlightBound) {
  auto t = std::make_shared<MockTransport>();
  t->set_latency(std::chrono::milliseconds(5));
  auto c = no_cache();
  c.max_in_flight = 3;
  auto gw = make_gateway(t, c);
  std::vector<std::thread> threads;
  for (int i = 0; i < 12; ++i) {
    threads.emplace_back([&, i] { gw->chat(Role::labeler, "q" + std::to_string(i)); });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(t->calls(), 12u);
  EXPECT_LE(t->peak_in_flight(), 3);
  EXPECT_GE(t->peak_in_flight(), 2);
}

TEST(Gateway, ParallelMapPreservesOrder) {
  auto t = std::make_shared<MockTransport>();
  t->set_latency(std::chrono::milliseconds(1));
  auto gw = make_gateway(t);
  std::vector<std::string> prompts;
  for (int i = 0; i < 40; ++i) prompts.push_back("Question " + std::to_string(i) + " asks about item " + std::to_string(i));
  std::vector<std::string> expected;
  for (const auto& p : prompts) expected.push_back(mock::MockResponder{}(gw->make_chat(Role::responder, p)));
  std::vector<std::string> got;
  ordered_parallel_map<std::string>(
      prompts.size(), 6, [&](std::size_t i) { return gw->chat(Role::responder, prompts[i]); },
      [&](std::size_t, std::string&& s) { got.push_back(std::move(s)); });
  EXPECT_EQ(got, expected);
}

TEST(Embed, UnitNorm) {
  auto gw = make_gateway(std::make_shared<MockTransport>(32));
  const auto v = gw->embed({"a"});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].dimension(), 32u);
  EXPECT_NEAR(std::sqrt(oracle::dot(v[0].values, v[0].values)), 1.0, 1e-9);
}

TEST(Embed, Deterministic) {
  auto gw = make_gateway(std::make_shared<MockTransport>());
  const auto v = gw->embed({"same text", "same text"});
  EXPECT_EQ(v[0].values, v[1].values);
}

TEST(Embed, BatchOrderMatchesSingleCalls) {
  auto t = std::make_shared<MockTransport>();
  auto c = no_cache();
  c.embed_batch_size = 2;
  auto gw = make_gateway(t, c);
  const std::vector<std::string> texts = {"first text", "second one", "third"};
  const auto batch = gw->embed(texts);
  ASSERT_EQ(batch.size(), 3u);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(batch[i].values, gw->embed({texts[i]})[0].values);
  EXPECT_EQ(t->embed_calls(), 2u + 3u);
}

TEST(Embed, InstructionTemplateApplied) {
  auto t = std::make_shared<MockTransport>();
  std::vector<std::string> seen;
  t->set_script([&](const std::string&, const json& body, std::uint64_t) -> std::optional<HttpResponse> {
    for (const auto& s : body.at("input")) seen.push_back(s.get<std::string>());
    return std::nullopt;
  });
  auto gw = make_gateway(t);
  gw->embed({"doc"}, std::string("Find logic"));
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0], "Instruct: Find logic\nQuery: doc");
}

TEST(Embed, DimensionMismatchAcrossCalls) {
  auto t = std::make_shared<MockTransport>(8);
  bool wide = false;
  t->set_script([&](const std::string&, const json& body, std::uint64_t) -> std::optional<HttpResponse> {
    if (!wide) return std::nullopt;
    json data = json::array();
    for (std::size_t i = 0; i < body.at("input").size(); ++i) {
      data.push_back({{"index", i}, {"embedding", std::vector<double>(9, 0.1)}});
    }
    return HttpResponse{200, json{{"data", data}}.dump()};
  });
  auto gw = make_gateway(t);
  gw->embed({"a"});
  wide = true;
  try {
    gw->embed({"b"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(HttpTransport, RetriesAgainstLocalServer) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    if (hits++ < 2) {
      res.status = 429;
      res.set_content("rate limited", "text/plain");
      return;
    }
    res.set_content(MockTransport::chat_body("Difficulty: Hard"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("DESIGNER_TEST_KEY", "secret", 1);
  auto c = no_cache();
  c.kind = "openai";
  c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
  c.api_key_env_name = "DESIGNER_TEST_KEY";
  c.timeout_seconds = 10;
  auto transport = std::make_shared<HttpTransport>(c);
  auto gw = make_gateway(transport, c);
  const auto out = gw->chat(Role::labeler, "how hard?");
  server.stop();
  th.join();
  EXPECT_EQ(out, "Difficulty: Hard");
  EXPECT_EQ(hits.load(), 3);
  EXPECT_EQ(auth, "Bearer secret");
}

TEST(HttpTransport, ConnectionRefusedIsUnavailable) {
  auto c = no_cache();
  c.base_url = "http://127.0.0.1:1/v1";
  c.timeout_seconds = 2;
  auto gw = make_gateway(std::make_shared<HttpTransport>(c), c);
  try {
    gw->chat(Role::labeler, "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::provider_unavailable);
  }
}
