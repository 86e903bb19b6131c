#pragma once

#include "graft/audit.hpp"
#include "graft/evaluation.hpp"
#include "graft/profiles.hpp"
#include "graft/rules.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace graft {

using nlohmann::json;

struct RunInfo {
  std::string dataset;
  std::string arch;
  std::uint64_t seed = 0;
  std::string config_hash;
};

json profile_to_json(const ClassProfile& profile, const Dataset& dataset, const RunInfo& run);

/// Array of per-class profile objects, ordered by class id.
json profiles_to_json(std::span<const ClassProfile> profiles, const Dataset& dataset, const RunInfo& run);

/// Ranked top-K indices per class, indexed by class id.
std::vector<FeatureSet> top_k_sets_from_json(const json& profiles);

json fidelity_to_json(const FidelityReport& report, const RunInfo& run);
json stability_to_json(const StabilityReport& report, const RunInfo& run);
json consensus_to_json(const ConsensusReport& report, const RunInfo& run);
json transfer_to_json(const TransferReport& report, const RunInfo& run);
json bias_to_json(const BiasReport& report, const std::string& config_hash);
json rule_to_json(const Rule& rule, const std::string& config_hash);
json training_to_json(const TrainingSummary& summary, const RunInfo& run);

/// Two-space indented JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const json& value);
json read_json(const std::filesystem::path& path);

struct SummaryRow {
  std::string dataset;
  std::string arch;
  std::uint64_t seed = 0;
  std::optional<double> fid_minus, fid_plus, jaccard, consensus, transfer_graft, transfer_freq, transfer_full,
      compression;
};

/// Tab-separated run summary; the first line is `# config_hash=<hex>`, then
/// the column header. Missing values are written as `NA`.
void write_summary_tsv(const std::filesystem::path& path, std::span<const SummaryRow> rows,
                       const std::string& config_hash);

/// Shortest round-trip decimal text for a double.
std::string format_double(double value);

}  // namespace graft
