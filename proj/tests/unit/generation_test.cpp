#include "nbrag/generation.hpp"

#include <gtest/gtest.h>

#include "fake_server.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace nbrag {
namespace {

const std::string kTitle = "House Prices - Advanced Regression Techniques";
const std::string kDescription =
    "Predict the final sale price of residential homes in Ames, Iowa from 79 explanatory "
    "variables.";

RetrievedSource source(const std::string& id, const std::string& text, int rank) {
  RetrievedSource s;
  s.chunk.chunk_id = id;
  s.chunk.rendered_text = text;
  s.meta = testing::make_meta(id);
  s.rank_position = rank;
  return s;
}

TEST(Prompt, EmptyContextMatchesGolden) {
  auto p = assemble_prompt("How should I handle skewed numeric features?", {}, kTitle,
                           kDescription, {});
  EXPECT_EQ(p.system_text, read_file(testing::golden_dir() / "prompt_empty_context.txt"));
  EXPECT_TRUE(p.context.empty());
  EXPECT_NE(p.system_text.find("You are an expert in data science"), std::string::npos);
  EXPECT_NE(p.system_text.find("If the context is empty, state \"There is no relevant "
                               "information in previous notebooks\""),
            std::string::npos);
  EXPECT_NE(p.system_text.find(kNoContextNotice), std::string::npos);
}

TEST(Prompt, SourcesInRankOrder) {
  std::vector<RetrievedSource> sources = {source("A", "alpha text\n", 1),
                                          source("B", "beta text\n", 2)};
  auto p = assemble_prompt("q", sources, kTitle, kDescription, {});
  EXPECT_EQ(p.context, "\n--- Source 1 ---\nalpha text\n--- Source 2 ---\nbeta text");
  EXPECT_EQ(p.source_ids, (std::vector<std::string>{"A", "B"}));
  const auto a = p.system_text.find("alpha text");
  const auto b = p.system_text.find("beta text");
  ASSERT_NE(a, std::string::npos);
  EXPECT_LT(a, b);
  EXPECT_NE(p.system_text.find("User Query: q\n"), std::string::npos);
}

TEST(Prompt, SlotTextIsNotReinterpreted) {
  std::vector<RetrievedSource> sources = {source("A", "uses {question} literally", 1)};
  auto p = assemble_prompt("real question", sources, kTitle, kDescription, {});
  EXPECT_NE(p.system_text.find("uses {question} literally"), std::string::npos);
}

TEST(Prompt, HistoryCappedAtSixTurns) {
  std::vector<ChatTurn> history;
  for (int i = 0; i < 7; ++i) {
    history.push_back({i % 2 == 0 ? Role::kUser : Role::kAssistant, "t" + std::to_string(i)});
  }
  auto p = assemble_prompt("q", {}, kTitle, kDescription, history);
  ASSERT_EQ(p.history.size(), 6u);
  EXPECT_EQ(p.history.front().text, "t1");
  EXPECT_EQ(p.history.back().text, "t6");
}

TEST(Prompt, Deterministic) {
  std::vector<RetrievedSource> sources = {source("A", "x", 1)};
  EXPECT_EQ(assemble_prompt("q", sources, kTitle, kDescription, {}).system_text,
            assemble_prompt("q", sources, kTitle, kDescription, {}).system_text);
}

TEST(Prompt, SourceBudgetTruncates) {
  PromptOptions opts;
  opts.source_char_budget = 5;
  std::vector<RetrievedSource> sources = {source("A", "abcdefghij", 1)};
  auto p = assemble_prompt("q", sources, kTitle, kDescription, {}, opts);
  EXPECT_EQ(p.context, "\n--- Source 1 ---\nabcde…[truncated]");
}

TEST(TruncateChars, CountsCodePoints) {
  EXPECT_EQ(truncate_chars("héllo", 5), "héllo");
  EXPECT_EQ(truncate_chars("héllo", 2), "hé…[truncated]");
  EXPECT_EQ(truncate_chars("", 0), "");
}

TEST(SplitFragments, RespectsUtf8) {
  auto parts = split_fragments("ab€€€", 4);
  std::string joined;
  for (const auto& p : parts) {
    EXPECT_LE(p.size(), 4u);
    joined += p;
  }
  EXPECT_EQ(joined, "ab€€€");
  EXPECT_EQ(parts.front(), "ab");
}

TEST(MockLlm, EchoesQueryAndSources) {
  std::vector<RetrievedSource> sources = {source("c2", "x", 1), source("c7", "y", 2)};
  auto p = assemble_prompt("q1", sources, kTitle, kDescription, {});
  std::vector<std::string> seen;
  auto r = MockLlm().generate(p, [&](std::string_view f) { seen.emplace_back(f); });
  const auto q = r.text.find("q1");
  const auto c2 = r.text.find("c2");
  const auto c7 = r.text.find("c7");
  ASSERT_NE(q, std::string::npos);
  EXPECT_LT(q, c2);
  EXPECT_LT(c2, c7);
  EXPECT_EQ(r.text.rfind("MOCK-ANSWER", 0), 0u);
  EXPECT_EQ(r.finish_reason, FinishReason::kStop);

  std::string joined;
  for (const auto& f : seen) {
    EXPECT_LE(f.size(), MockLlm::kFragmentBytes);
    joined += f;
  }
  EXPECT_EQ(joined, r.text);
  EXPECT_EQ(seen, r.token_events);
}

TEST(RemoteLlm, UnreachableReportsError) {
  LlmSpec spec;
  spec.kind = LlmKind::kRemote;
  spec.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  spec.timeout = std::chrono::milliseconds(1000);
  auto p = assemble_prompt("q", {}, kTitle, kDescription, {});
  std::string streamed;
  auto r = generate(p, spec, [&](std::string_view f) { streamed += f; });
  EXPECT_EQ(r.finish_reason, FinishReason::kError);
  EXPECT_FALSE(r.error.empty());
  EXPECT_EQ(streamed, r.text);
}

TEST(RemoteLlm, StreamsDeltas) {
  testing::FakeServer fake;
  nlohmann::json seen;
  fake.server().Post("/v1/chat/completions",
                     [&](const httplib::Request& req, httplib::Response& res) {
                       seen = nlohmann::json::parse(req.body);
                       std::string body;
                       for (const char* piece : {"Use ", "np.log1p", "."}) {
                         nlohmann::json chunk = {
                             {"choices", {{{"delta", {{"content", piece}}}}}}};
                         body += "data: " + chunk.dump() + "\n\n";
                       }
                       body += "data: {\"choices\":[{\"delta\":{},\"finish_reason\":\"stop\"}]}\n\n";
                       body += "data: [DONE]\n\n";
                       res.set_content(body, "text/event-stream");
                     });
  fake.start();

  LlmSpec spec;
  spec.kind = LlmKind::kRemote;
  spec.endpoint_url = fake.url("/v1/chat/completions");
  std::vector<ChatTurn> history = {{Role::kUser, "hi"}, {Role::kAssistant, "hello"}};
  auto p = assemble_prompt("q", {}, kTitle, kDescription, history);
  std::vector<std::string> frags;
  auto r = generate(p, spec, [&](std::string_view f) { frags.emplace_back(f); });

  EXPECT_EQ(r.finish_reason, FinishReason::kStop);
  EXPECT_EQ(r.text, "Use np.log1p.");
  EXPECT_EQ(frags.size(), 3u);
  EXPECT_EQ(seen["model"], "gpt-4o");
  EXPECT_EQ(seen["stream"], true);
  ASSERT_EQ(seen["messages"].size(), 3u);
  EXPECT_EQ(seen["messages"][0]["role"], "user");
  EXPECT_EQ(seen["messages"][1]["role"], "assistant");
  EXPECT_EQ(seen["messages"][2]["content"], p.system_text);
}

TEST(RemoteLlm, HttpErrorStatus) {
  testing::FakeServer fake;
  fake.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
    res.set_content("{\"error\":\"bad key\"}", "application/json");
  });
  fake.start();
  LlmSpec spec;
  spec.kind = LlmKind::kRemote;
  spec.endpoint_url = fake.url("/v1/chat/completions");
  auto r = generate(assemble_prompt("q", {}, kTitle, kDescription, {}), spec, nullptr);
  EXPECT_EQ(r.finish_reason, FinishReason::kError);
  EXPECT_NE(r.error.find("401"), std::string::npos);
}

}  // namespace
}  // namespace nbrag
