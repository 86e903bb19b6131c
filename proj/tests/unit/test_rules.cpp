#include "graft/hashing.hpp"
#include "graft/rules.hpp"
#include "mock_endpoint.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>


using namespace graft;
using nlohmann::json;

namespace {

RuleRequest reward_policy_request() {
  RuleRequest r;
  r.class_id = 4;
  r.class_name = "Reinforcement_Learning";
  r.dataset_context = "This is the Cora citation network of machine learning papers.";
  r.features = {{"reward", 0.82}, {"policy", 0.79}};
  return r;
}

ClassProfile profile_over(Index d, int class_id) {
  ClassProfile p;
  p.class_id = class_id;
  p.aggregate = Vector(d);
  for (Index i = 0; i < d; ++i) p.aggregate(i) = static_cast<double>(d - i) / static_cast<double>(d);
  p.top_k = top_k(p.aggregate, 20);
  return p;
}

using test::MockEndpoint;

bool is_refinement(const std::string& prompt) { return test::is_refinement_prompt(prompt); }

}  // namespace

TEST(RulePrompts, GenerationMatchesGolden) {
  EXPECT_EQ(build_generation_prompt(reward_policy_request()), test::read_file(test::golden("generation_prompt.txt")));
}

TEST(RulePrompts, RefinementMatchesGolden) {
  EXPECT_EQ(build_refinement_prompt("{current_rule}", reward_policy_request()),
            test::read_file(test::golden("refinement_prompt.txt")));
}

TEST(RulePrompts, SystemPromptMatchesGolden) {
  EXPECT_EQ(rule_system_prompt(), test::read_file(test::golden("system_prompt.txt")));
}

TEST(RulePrompts, FeatureLinesUseFourDecimals) {
  const std::vector<ScoredFeature> f{{"reward", 0.82}, {"policy", 0.79}, {"tiny", 0.000049}};
  EXPECT_EQ(format_feature_list(f),
            "  1. reward (importance: 0.8200)\n  2. policy (importance: 0.7900)\n  3. tiny (importance: 0.0000)");
}

TEST(RulePrompts, RequestTruncatesAndNamesFeatures) {
  const Dataset toy = load_dataset(test::fixture("toy"));
  const ClassProfile small = profile_over(4, 1);
  const auto named = make_rule_request(small, toy, "B", "ctx");
  ASSERT_EQ(named.features.size(), 4u);
  EXPECT_EQ(named.features[0].name, "alpha");
  EXPECT_EQ(named.class_id, 1);

  const auto pd = generate_planted({});
  const auto wide = make_rule_request(profile_over(60, 0), pd.dataset, "A", "ctx");
  ASSERT_EQ(wide.features.size(), kRuleFeatureCount);
  EXPECT_EQ(wide.features[0].name, "word_0");
  EXPECT_EQ(wide.features[14].name, "word_14");
  EXPECT_EQ(wide.temperature, 0.2);
  EXPECT_EQ(wide.max_tokens, 256);
}

TEST(RulePrompts, InvalidRequestsRejected) {
  RuleRequest r = reward_policy_request();
  EXPECT_THROW(build_refinement_prompt("", r), std::invalid_argument);
  r.features = {{"a", 0.1}, {"b", 0.2}};
  EXPECT_THROW(build_generation_prompt(r), std::invalid_argument);
  r.features.clear();
  EXPECT_THROW(build_generation_prompt(r), std::invalid_argument);
  r.features.assign(16, ScoredFeature{"x", 0.5});
  EXPECT_THROW(validate(r), std::invalid_argument);
}

TEST(RuleGeneration, TwoCallsPerClassAgainstMock) {
  MockEndpoint mock([](const std::string& prompt) {
    return is_refinement(prompt) ? std::string("  Refined text.\n") : std::string("Initial text.");
  });
  HttpLlmClient client(mock.config());
  const auto request = reward_policy_request();
  const Rule rule = generate_rule(client, request);
  EXPECT_EQ(mock.requests(), 2);
  EXPECT_EQ(rule.initial, "Initial text.");
  EXPECT_EQ(rule.refined, "Refined text.");
  EXPECT_TRUE(rule.changed);
  EXPECT_FALSE(rule.pending);
  EXPECT_EQ(rule.generate_sha256, sha256_hex(build_generation_prompt(request)));
  EXPECT_EQ(rule.refine_sha256, sha256_hex(build_refinement_prompt("Initial text.", request)));

  const auto bodies = mock.bodies();
  ASSERT_EQ(bodies.size(), 2u);
  EXPECT_EQ(bodies[0].at("system"), std::string(rule_system_prompt()));
  EXPECT_EQ(bodies[0].at("temperature"), 0.2);
  EXPECT_EQ(bodies[0].at("max_tokens"), 256);
  EXPECT_EQ(bodies[1].at("prompt"), build_refinement_prompt("Initial text.", request));
}

TEST(RuleGeneration, EchoedRuleIsUnchanged) {
  MockEndpoint mock([](const std::string&) { return std::string("Same rule."); });
  HttpLlmClient client(mock.config());
  const Rule rule = generate_rule(client, reward_policy_request());
  EXPECT_FALSE(rule.changed);
  EXPECT_EQ(rule.initial, rule.refined);
}

TEST(RuleGeneration, ManyClassesConcurrently) {
  MockEndpoint mock([](const std::string& prompt) { return is_refinement(prompt) ? "r" : "g"; });
  HttpLlmClient client(mock.config());
  std::vector<RuleRequest> requests;
  for (int c = 0; c < 7; ++c) {
    auto r = reward_policy_request();
    r.class_id = c;
    r.class_name = "class" + std::to_string(c);
    requests.push_back(r);
  }
  const auto rules = generate_rules(client, requests, 3);
  ASSERT_EQ(rules.size(), 7u);
  for (int c = 0; c < 7; ++c) EXPECT_EQ(rules[c].class_id, c);
  EXPECT_EQ(mock.requests(), 14);
  EXPECT_EQ(client.calls_made(), 14);
}

TEST(RuleGeneration, EmptyResponseIsAnError) {
  MockEndpoint mock([](const std::string&) { return std::string("   "); });
  HttpLlmClient client(mock.config());
  EXPECT_THROW(generate_rule(client, reward_policy_request()), LlmError);
}

TEST(LlmClient, RetriesServerErrors) {
  MockEndpoint mock([](const std::string&) { return std::string("ok"); }, 2);
  HttpLlmClient client(mock.config());
  EXPECT_EQ(client.complete({"s", "u"}).text, "ok");
  EXPECT_EQ(mock.requests(), 3);
}

TEST(LlmClient, GivesUpAfterRetries) {
  MockEndpoint mock([](const std::string&) { return std::string("ok"); }, 100);
  HttpLlmClient client(mock.config());
  EXPECT_THROW(client.complete({"s", "u"}), LlmError);
  EXPECT_EQ(mock.requests(), 4);
}

TEST(LlmClient, OfflineOrUnconfiguredRefuses) {
  EndpointConfig c;
  EXPECT_THROW(HttpLlmClient{c}, LlmError);
  c.base_url = "http://127.0.0.1:1";
  c.offline = true;
  EXPECT_THROW(HttpLlmClient{c}, LlmError);
}

TEST(LlmClient, ProviderAdapters) {
  EndpointConfig c;
  c.model = "m";
  const CompletionRequest req{"sys", "usr", 0.2, 256};
  c.provider = Provider::OPENAI;
  auto spec = build_http_request(c, req, "tok");
  EXPECT_EQ(spec.path, "/v1/chat/completions");
  EXPECT_EQ(spec.body["messages"][0]["content"], "sys");
  EXPECT_EQ(spec.headers.find("Authorization")->second, "Bearer tok");
  c.provider = Provider::ANTHROPIC;
  spec = build_http_request(c, req, "tok");
  EXPECT_EQ(spec.path, "/v1/messages");
  EXPECT_EQ(spec.body["system"], "sys");
  EXPECT_EQ(spec.headers.find("x-api-key")->second, "tok");
  c.provider = Provider::OLLAMA;
  c.path = "/custom";
  spec = build_http_request(c, req, "");
  EXPECT_EQ(spec.path, "/custom");
  EXPECT_EQ(spec.body["options"]["num_predict"], 256);

  EXPECT_EQ(parse_http_response(Provider::GENERIC, json{{"text", "a"}}).text, "a");
  const auto oa = parse_http_response(
      Provider::OPENAI, json{{"choices", json::array({{{"message", {{"content", "b"}}}, {"finish_reason", "length"}}})}});
  EXPECT_EQ(oa.text, "b");
  EXPECT_TRUE(oa.truncated);
  const auto an = parse_http_response(
      Provider::ANTHROPIC,
      json{{"content", json::array({{{"type", "text"}, {"text", "c"}}})}, {"stop_reason", "end_turn"}});
  EXPECT_EQ(an.text, "c");
  EXPECT_FALSE(an.truncated);
  EXPECT_EQ(parse_http_response(Provider::OLLAMA, json{{"message", {{"content", "d"}}}}).text, "d");
  EXPECT_THROW(parse_http_response(Provider::OPENAI, json{{"text", "a"}}), LlmError);
  EXPECT_EQ(parse_provider("Anthropic"), Provider::ANTHROPIC);
  EXPECT_THROW(parse_provider("bard"), std::invalid_argument);
}

TEST(OfflineRules, WritesPromptFilesWithoutCalls) {
  const auto dir = test::scratch_dir("offline_rules");
  const auto request = reward_policy_request();
  const Rule rule = write_rule_prompts(request, dir);
  EXPECT_TRUE(rule.pending);
  EXPECT_TRUE(rule.initial.empty());
  EXPECT_EQ(test::read_file(dir / "class_4_generate.txt"), test::read_file(test::golden("generation_prompt.txt")));
  EXPECT_EQ(test::read_file(dir / "class_4_refine.txt"), test::read_file(test::golden("refinement_prompt.txt")));
  EXPECT_EQ(rule.generate_sha256, sha256_hex(test::read_file(dir / "class_4_generate.txt")));
}

TEST(Hashing, KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
