#include "graft/rules.hpp"

#include "graft/hashing.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace graft {

namespace {

constexpr std::string_view kSystemPrompt =
    "You are an expert in graph neural networks and scientific literature\n"
    "analysis. Your task is to generate concise, accurate natural language\n"
    "rules that describe what characterises a class of nodes in a citation\n"
    "network, based on the most discriminative input features identified\n"
    "by a GNN explainer.";

constexpr std::string_view kCurrentRulePlaceholder = "{current_rule}";

std::string trim(std::string_view text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

RuleRequest make_rule_request(const ClassProfile& profile, const Dataset& dataset, std::string class_name,
                              std::string dataset_context) {
  RuleRequest request;
  request.class_id = profile.class_id;
  request.class_name = std::move(class_name);
  request.dataset_context = std::move(dataset_context);
  // top_k is already ordered by descending score with ties by index.
  for (const auto& f : profile.top_k) {
    if (request.features.size() == kRuleFeatureCount) break;
    request.features.push_back({dataset.feature_name(f.index), f.score});
  }
  validate(request);
  return request;
}

void validate(const RuleRequest& request) {
  if (request.features.empty()) throw std::invalid_argument("rule request: empty feature list");
  if (request.features.size() > kRuleFeatureCount) {
    throw std::invalid_argument("rule request: more than 15 features");
  }
  for (std::size_t i = 1; i < request.features.size(); ++i) {
    if (request.features[i].score > request.features[i - 1].score) {
      throw std::invalid_argument("rule request: features not sorted by descending score");
    }
  }
}

std::string_view rule_system_prompt() { return kSystemPrompt; }

std::string format_feature_list(std::span<const ScoredFeature> features) {
  std::string out;
  char score[64];
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::snprintf(score, sizeof score, "%.4f", features[i].score);
    if (i > 0) out += '\n';
    out += "  " + std::to_string(i + 1) + ". " + features[i].name + " (importance: " + score + ")";
  }
  return out;
}

std::string build_generation_prompt(const RuleRequest& request) {
  validate(request);
  const std::string quoted = "\"" + request.class_name + "\"";
  std::string out;
  out += request.dataset_context;
  out += "\n\n";
  out += "Using Integrated Gradients, the following features (words) are the\n";
  out += "most important for classifying nodes into class " + quoted + ":\n";
  out += "\n";
  out += format_feature_list(request.features);
  out += "\n\n";
  out += "Generate a concise natural language rule (2-3 sentences) describing\n";
  out += "what characterises papers in the " + quoted + " class. Mention the\n";
  out += "key themes suggested by the top features. Write a global description\n";
  out += "of the class, not of a single paper.\n";
  out += "\n";
  out += "Rule:";
  return out;
}

std::string build_refinement_prompt(std::string_view current_rule, const RuleRequest& request) {
  if (current_rule.empty()) throw std::invalid_argument("refinement prompt: empty rule text");
  validate(request);
  std::string out;
  out += "Here is a natural language rule describing the \"" + request.class_name + "\" class:\n";
  out += "\n";
  out += "\"" + std::string(current_rule) + "\"\n";
  out += "\n";
  out += "Review it against the top discriminative features:\n";
  out += format_feature_list(request.features);
  out += "\n\n";
  out += "If it is already accurate and complete, return it unchanged.\n";
  out += "Otherwise, improve it to better reflect the features (2-3 sentences).\n";
  out += "\n";
  out += "Refined rule:";
  return out;
}

Rule generate_rule(LlmClient& client, const RuleRequest& request) {
  Rule rule;
  rule.class_id = request.class_id;
  rule.class_name = request.class_name;

  const std::string generate_prompt = build_generation_prompt(request);
  rule.generate_sha256 = sha256_hex(generate_prompt);
  const Completion first =
      client.complete({std::string(kSystemPrompt), generate_prompt, request.temperature, request.max_tokens});
  rule.initial = trim(first.text);
  if (rule.initial.empty()) throw LlmError("empty rule returned for class " + request.class_name);

  const std::string refine_prompt = build_refinement_prompt(rule.initial, request);
  rule.refine_sha256 = sha256_hex(refine_prompt);
  const Completion second =
      client.complete({std::string(kSystemPrompt), refine_prompt, request.temperature, request.max_tokens});
  rule.refined = trim(second.text);
  if (rule.refined.empty()) throw LlmError("empty refined rule returned for class " + request.class_name);

  rule.changed = rule.refined != rule.initial;
  rule.truncated = first.truncated || second.truncated;
  return rule;
}

Rule write_rule_prompts(const RuleRequest& request, const std::filesystem::path& directory) {
  Rule rule;
  rule.class_id = request.class_id;
  rule.class_name = request.class_name;
  rule.pending = true;
  const std::string generate_prompt = build_generation_prompt(request);
  const std::string refine_prompt = build_refinement_prompt(kCurrentRulePlaceholder, request);
  rule.generate_sha256 = sha256_hex(generate_prompt);
  rule.refine_sha256 = sha256_hex(refine_prompt);
  std::filesystem::create_directories(directory);
  const std::string stem = "class_" + std::to_string(request.class_id);
  write_text(directory / (stem + "_generate.txt"), generate_prompt);
  write_text(directory / (stem + "_refine.txt"), refine_prompt);
  return rule;
}

std::vector<Rule> generate_rules(LlmClient& client, std::span<const RuleRequest> requests, int concurrency) {
  std::vector<Rule> rules(requests.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        rules[i] = generate_rule(client, requests[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, concurrency));
  if (threads == 1 || requests.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, requests.size()); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rules;
}

}  // namespace graft
