#pragma once

#include "graft/dataset.hpp"
#include "graft/gnn.hpp"
#include "graft/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace graft {

inline constexpr int kAuditEpochs = 300;
inline constexpr std::size_t kDetectionTopK = 20;
inline constexpr double kNoiseSweep[] = {0.05, 0.10, 0.20, 0.30, 0.40};

struct BiasReport {
  std::string dataset;
  Architecture arch = Architecture::GCN;
  BiasSpec spec;
  std::uint64_t model_seed = 0;
  Index injected_feature = 0;
  bool detected = false;
  std::optional<std::size_t> rank;  // 1-based, within the target class's top-20
  int other_class_hits = 0;
  double retrain_test_accuracy = 0.0;
};

/// `hp` with epochs replaced by the retraining budget.
Hyperparams audit_hyperparams(Hyperparams hp);

/// Injects the spurious column into a copy of `dataset`, retrains from scratch
/// with `hp`, runs FPS/IG/MEAN explanation, and locates the injected column in
/// each class's top-20 as read back from the emitted profile JSON.
BiasReport run_bias_audit(const Dataset& dataset, Architecture arch, const BiasSpec& spec, const Hyperparams& hp,
                          const ExplainSettings& settings = {});

/// One audit per noise level, sharing the injection seed.
std::vector<BiasReport> noise_sweep(const Dataset& dataset, Architecture arch, int target_class,
                                    std::span<const double> sigmas, std::uint64_t seed, const Hyperparams& hp);

/// One audit per target class; all classes when `targets` is empty.
std::vector<BiasReport> multiclass_sweep(const Dataset& dataset, Architecture arch, double sigma, std::uint64_t seed,
                                         const Hyperparams& hp, std::span<const int> targets = {});

}  // namespace graft
