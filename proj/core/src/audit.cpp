#include "graft/audit.hpp"

#include "graft/report_io.hpp"

#include <algorithm>

namespace graft {

Hyperparams audit_hyperparams(Hyperparams hp) {
  hp.epochs = kAuditEpochs;
  return hp;
}

BiasReport run_bias_audit(const Dataset& dataset, Architecture arch, const BiasSpec& spec, const Hyperparams& hp,
                          const ExplainSettings& settings) {
  const Dataset injected = inject_bias(dataset, spec);
  const TrainedModel model = train(injected, arch, hp);

  ExplainSettings audit_settings = settings;
  audit_settings.top_k = std::max(audit_settings.top_k, kDetectionTopK);
  const auto profiles = explain(model, injected, audit_settings);
  const RunInfo run{injected.name, std::string(to_string(arch)), hp.seed, {}};
  const auto sets = top_k_sets_from_json(profiles_to_json(profiles, injected, run));

  BiasReport report;
  report.dataset = dataset.name;
  report.arch = arch;
  report.spec = spec;
  report.model_seed = hp.seed;
  report.injected_feature = dataset.feature_dim();
  report.retrain_test_accuracy = model.summary().test_accuracy;
  for (int c = 0; c < injected.class_count; ++c) {
    const auto& ranking = sets[c];
    const auto limit = std::min(ranking.size(), kDetectionTopK);
    const auto it = std::find(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(limit),
                              report.injected_feature);
    const bool hit = it != ranking.begin() + static_cast<std::ptrdiff_t>(limit);
    if (c == spec.target_class) {
      if (hit) report.rank = static_cast<std::size_t>(it - ranking.begin()) + 1;
    } else if (hit) {
      ++report.other_class_hits;
    }
  }
  report.detected = report.rank.has_value();
  return report;
}

std::vector<BiasReport> noise_sweep(const Dataset& dataset, Architecture arch, int target_class,
                                    std::span<const double> sigmas, std::uint64_t seed, const Hyperparams& hp) {
  std::vector<BiasReport> out;
  for (double sigma : sigmas) out.push_back(run_bias_audit(dataset, arch, {target_class, sigma, seed}, hp));
  return out;
}

std::vector<BiasReport> multiclass_sweep(const Dataset& dataset, Architecture arch, double sigma, std::uint64_t seed,
                                         const Hyperparams& hp, std::span<const int> targets) {
  std::vector<int> classes(targets.begin(), targets.end());
  if (classes.empty()) {
    for (int c = 0; c < dataset.class_count; ++c) classes.push_back(c);
  }
  std::vector<BiasReport> out;
  for (int c : classes) out.push_back(run_bias_audit(dataset, arch, {c, sigma, seed}, hp));
  return out;
}

}  // namespace graft
