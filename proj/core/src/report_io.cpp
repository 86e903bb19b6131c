#include "graft/report_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace graft {

namespace {

json optional_number(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

json run_header(const RunInfo& run) {
  return {{"dataset", run.dataset}, {"arch", run.arch}, {"seed", run.seed}, {"config_hash", run.config_hash}};
}

json index_list(std::span<const Index> indices) {
  json out = json::array();
  for (Index i : indices) out.push_back(i);
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

json profile_to_json(const ClassProfile& profile, const Dataset& dataset, const RunInfo& run) {
  json top = json::array();
  for (const auto& f : profile.top_k) {
    json entry = {{"index", f.index}};
    if (!dataset.feature_names.empty()) entry["name"] = dataset.feature_name(f.index);
    entry["score"] = f.score;
    top.push_back(std::move(entry));
  }
  json out = run_header(run);
  out["class_id"] = profile.class_id;
  out["aggregation"] = to_string(profile.aggregation);
  out["attribution"] = {{"method", to_string(profile.method)},
                        {"steps", profile.steps},
                        {"quadrature", to_string(profile.quadrature)}};
  out["exemplar_mode"] = to_string(profile.exemplars.mode);
  out["exemplars"] = index_list(profile.exemplars.nodes);
  out["top_k"] = std::move(top);
  out["aggregate_l1"] = profile.aggregate.lpNorm<1>();
  out["signed_mean_sum"] = profile.signed_mean.sum();
  return out;
}

json profiles_to_json(std::span<const ClassProfile> profiles, const Dataset& dataset, const RunInfo& run) {
  json out = json::array();
  for (const auto& p : profiles) out.push_back(profile_to_json(p, dataset, run));
  return out;
}

std::vector<FeatureSet> top_k_sets_from_json(const json& profiles) {
  if (!profiles.is_array()) throw std::invalid_argument("profile JSON: expected an array of class profiles");
  std::vector<FeatureSet> sets(profiles.size());
  std::vector<char> seen(profiles.size(), 0);
  for (const auto& p : profiles) {
    const auto c = p.at("class_id").get<std::size_t>();
    if (c >= sets.size() || seen[c]) throw std::invalid_argument("profile JSON: class ids are not 0..C-1");
    seen[c] = 1;
    for (const auto& entry : p.at("top_k")) sets[c].push_back(entry.at("index").get<Index>());
  }
  return sets;
}

json fidelity_to_json(const FidelityReport& report, const RunInfo& run) {
  json classes = json::array();
  for (const auto& c : report.classes) {
    classes.push_back({{"class_id", c.class_id},
                       {"test_nodes", c.test_nodes},
                       {"unmasked_accuracy", c.unmasked_accuracy},
                       {"kept_accuracy", c.kept_accuracy},
                       {"removed_accuracy", c.removed_accuracy},
                       {"fid_minus", optional_number(c.fid_minus)},
                       {"fid_plus", optional_number(c.fid_plus)}});
  }
  json out = run_header(run);
  out["K"] = report.K;
  out["gnn_accuracy"] = report.gnn_accuracy;
  out["masking_policy"] = report.masking_policy;
  out["fid_minus"] = report.fid_minus;
  out["fid_plus"] = report.fid_plus;
  out["classes"] = std::move(classes);
  return out;
}

json stability_to_json(const StabilityReport& report, const RunInfo& run) {
  json out = run_header(run);
  out.erase("seed");
  out["seeds"] = report.seeds;
  out["per_class"] = report.per_class;
  out["mean"] = report.mean;
  return out;
}

json consensus_to_json(const ConsensusReport& report, const RunInfo& run) {
  json out = run_header(run);
  out.erase("arch");
  out["architectures"] = report.architectures;
  out["tau"] = report.tau;
  out["K"] = report.K;
  out["per_class"] = report.per_class;
  out["mean"] = report.mean;
  return out;
}

json transfer_to_json(const TransferReport& report, const RunInfo& run) {
  json out = run_header(run);
  out["K"] = report.K;
  out["graft_lr"] = report.graft_lr;
  out["freq_lr"] = report.freq_lr;
  out["full_lr"] = report.full_lr;
  out["random_lr"] = report.random_lr;
  out["gnn_accuracy"] = report.gnn_accuracy;
  out["compression"] = report.compression;
  out["union_size"] = report.union_size;
  out["freq_union_size"] = report.freq_union_size;
  out["graft_union"] = index_list(report.graft_union);
  out["random_features"] = index_list(report.random_features);
  out["random_seed"] = report.seed;
  return out;
}

json bias_to_json(const BiasReport& report, const std::string& config_hash) {
  return {{"dataset", report.dataset},
          {"arch", to_string(report.arch)},
          {"sigma", report.spec.noise},
          {"target_class", report.spec.target_class},
          {"seed", report.spec.seed},
          {"model_seed", report.model_seed},
          {"injected_feature", report.injected_feature},
          {"detected", report.detected},
          {"rank", report.rank ? json(*report.rank) : json(nullptr)},
          {"other_class_hits", report.other_class_hits},
          {"retrain_test_accuracy", report.retrain_test_accuracy},
          {"config_hash", config_hash}};
}

json rule_to_json(const Rule& rule, const std::string& config_hash) {
  return {{"class_id", rule.class_id},
          {"class_name", rule.class_name},
          {"initial", rule.initial},
          {"refined", rule.refined},
          {"changed", rule.changed},
          {"pending", rule.pending},
          {"truncated", rule.truncated},
          {"prompts", {{"generate_sha256", rule.generate_sha256}, {"refine_sha256", rule.refine_sha256}}},
          {"config_hash", config_hash}};
}

json training_to_json(const TrainingSummary& summary, const RunInfo& run) {
  json out = run_header(run);
  out["initial_train_accuracy"] = summary.initial_train_accuracy;
  out["train_accuracy"] = summary.train_accuracy;
  out["val_accuracy"] = summary.val_accuracy;
  out["test_accuracy"] = summary.test_accuracy;
  out["final_loss"] = summary.final_loss;
  return out;
}

void write_json(const std::filesystem::path& path, const json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing file: " + path.string());
  json value = json::parse(in, nullptr, false);
  if (value.is_discarded()) throw std::runtime_error("malformed JSON: " + path.string());
  return value;
}

void write_summary_tsv(const std::filesystem::path& path, std::span<const SummaryRow> rows,
                       const std::string& config_hash) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  out << "# config_hash=" << config_hash << '\n';
  out << "dataset\tarch\tseed\tfid_minus\tfid_plus\tjaccard\tconsensus\ttransfer_graft\ttransfer_freq\t"
         "transfer_full\tcompression\n";
  for (const auto& r : rows) {
    out << r.dataset << '\t' << r.arch << '\t' << r.seed << '\t' << cell(r.fid_minus) << '\t' << cell(r.fid_plus)
        << '\t' << cell(r.jaccard) << '\t' << cell(r.consensus) << '\t' << cell(r.transfer_graft) << '\t'
        << cell(r.transfer_freq) << '\t' << cell(r.transfer_full) << '\t' << cell(r.compression) << '\n';
  }
}

}  // namespace graft
