#pragma once

#include "graft/dataset.hpp"
#include "graft/llm_client.hpp"
#include "graft/profiles.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace graft {

inline constexpr std::size_t kRuleFeatureCount = 15;
inline constexpr double kRuleTemperature = 0.2;
inline constexpr int kRuleMaxTokens = 256;

struct ScoredFeature {
  std::string name;
  double score = 0.0;
};

struct RuleRequest {
  int class_id = 0;
  std::string class_name;
  std::string dataset_context;
  std::vector<ScoredFeature> features;  // descending score, at most 15
  double temperature = kRuleTemperature;
  int max_tokens = kRuleMaxTokens;
};

/// Top features of a profile, named through the dataset (falling back to
/// `word_<index>`), sorted and truncated.
RuleRequest make_rule_request(const ClassProfile& profile, const Dataset& dataset, std::string class_name,
                              std::string dataset_context);

/// Throws std::invalid_argument on an empty or unsorted feature list, or more than 15 features.
void validate(const RuleRequest& request);

std::string_view rule_system_prompt();
std::string build_generation_prompt(const RuleRequest& request);
/// Throws std::invalid_argument when `current_rule` is empty.
std::string build_refinement_prompt(std::string_view current_rule, const RuleRequest& request);

/// `  N. name (importance: 0.XXXX)` lines joined by newlines.
std::string format_feature_list(std::span<const ScoredFeature> features);

struct Rule {
  int class_id = 0;
  std::string class_name;
  std::string initial;
  std::string refined;
  bool changed = false;
  bool pending = false;    // offline: prompts written, no texts
  bool truncated = false;  // either response hit the token limit
  std::string generate_sha256;
  std::string refine_sha256;
};

/// Two sequential calls: generation, then one refinement pass.
Rule generate_rule(LlmClient& client, const RuleRequest& request);

/// Offline mode: writes class_<id>_generate.txt and class_<id>_refine.txt
/// into `directory` and returns a pending rule. The refinement prompt keeps
/// the `{current_rule}` placeholder.
Rule write_rule_prompts(const RuleRequest& request, const std::filesystem::path& directory);

/// Classes run concurrently on up to `concurrency` threads; results are in request order.
std::vector<Rule> generate_rules(LlmClient& client, std::span<const RuleRequest> requests, int concurrency = 1);

}  // namespace graft
