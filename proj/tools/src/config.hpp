#pragma once

#include "graft/attribution.hpp"
#include "graft/dataset.hpp"
#include "graft/exemplars.hpp"
#include "graft/gnn.hpp"
#include "graft/llm_client.hpp"
#include "graft/pipeline.hpp"
#include "graft/profiles.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace graft::cli {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RulesConfig {
  EndpointConfig endpoint;
  std::string context;                   // dataset_context paragraph; empty means "Dataset: <name>."
  std::vector<std::string> class_names;  // empty, or one per class
  int concurrency = 2;
};

struct RunConfig {
  std::string dataset = "planted";  // "planted" or a bundle directory
  PlantedSpec planted;
  std::vector<Architecture> arch{Architecture::GCN};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t k = kDefaultExemplars;
  std::size_t top_k = kDefaultTopK;
  int steps = kDefaultIgSteps;
  Quadrature quadrature = Quadrature::GAUSS_LEGENDRE;
  Aggregation aggregation = Aggregation::MEAN;
  SelectionMode exemplar_mode = SelectionMode::FPS;
  AttributionMethod method = AttributionMethod::IG;
  Index hidden = 64;
  int epochs = 500;
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::vector<double> sigma{0.05};
  std::vector<int> target_class{0};
  int tau = 3;
  bool fidelity = true;
  bool stability = true;
  bool consensus = true;
  bool transfer = true;
  bool offline_rules = false;
  RulesConfig rules;
  std::string out = "out";
  int workers = 1;
};

/// Reads a JSON config; unknown keys and bad values raise ConfigError.
RunConfig parse_config(const nlohmann::json& document);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form (sorted keys). Round-trips through parse_config.
nlohmann::json config_to_json(const RunConfig& config);

/// Checks cross-field invariants (distinct seeds, positive counts, ...).
void validate(const RunConfig& config);

/// SHA-256 over the canonical JSON minus keys that do not affect results
/// (`out`, `workers`, and the rules endpoint).
std::string config_hash(const RunConfig& config);

Hyperparams hyperparams(const RunConfig& config, std::uint64_t seed);
ExplainSettings explain_settings(const RunConfig& config);

}  // namespace graft::cli
