#pragma once

#include "graft/attribution.hpp"
#include "graft/dataset.hpp"
#include "graft/exemplars.hpp"
#include "graft/gnn.hpp"
#include "graft/profiles.hpp"

#include <cstdint>
#include <vector>

namespace graft {

/// Stage 1-3 settings. Defaults: FPS with k=10, IG with 50 Gauss-Legendre
/// steps, mean |IG| aggregation, top-20 features.
struct ExplainSettings {
  std::size_t exemplars = kDefaultExemplars;
  std::size_t top_k = kDefaultTopK;
  int steps = kDefaultIgSteps;
  Quadrature quadrature = Quadrature::GAUSS_LEGENDRE;
  AttributionMethod method = AttributionMethod::IG;
  Aggregation aggregation = Aggregation::MEAN;
  SelectionMode selection = SelectionMode::FPS;
  std::uint64_t selection_seed = 0;  // RANDOM selection only
};

/// Picks exemplars for one class. Class nodes are taken from ground-truth labels over all splits.
ExemplarSet select_exemplars(const Matrix& embeddings, const Matrix& probabilities, const Dataset& dataset, int class_id,
                             const ExplainSettings& settings);

AttributionVector attribute(const DifferentiableClassifier& model, const FeatureMatrix& features, Index node,
                            int class_id, const ExplainSettings& settings);

/// One ClassProfile per class, indexed by class id.
std::vector<ClassProfile> explain(const TrainedModel& model, const Dataset& dataset, const ExplainSettings& settings);

/// Profiles from already-chosen exemplars (used by the ablation and convergence checks).
ClassProfile profile_from_exemplars(const DifferentiableClassifier& model, const Dataset& dataset,
                                    const ExemplarSet& exemplars, const Matrix& probabilities,
                                    const ExplainSettings& settings);

}  // namespace graft
