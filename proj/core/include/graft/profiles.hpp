#pragma once

#include "graft/attribution.hpp"
#include "graft/dataset.hpp"
#include "graft/exemplars.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace graft {

enum class Aggregation { MEAN, CONF_WEIGHTED, MEDIAN, MAX };

std::string_view to_string(Aggregation aggregation);
Aggregation parse_aggregation(std::string_view text);

inline constexpr std::size_t kDefaultTopK = 20;

struct RankedFeature {
  Index index = 0;
  double score = 0.0;
  bool operator==(const RankedFeature&) const = default;
};

struct ClassProfile {
  int class_id = 0;
  Aggregation aggregation = Aggregation::MEAN;
  Eigen::VectorXd aggregate;    // non-negative, built from |IG|
  Eigen::VectorXd signed_mean;  // unweighted mean of signed attributions
  std::vector<RankedFeature> top_k;
  // provenance
  ExemplarSet exemplars;
  AttributionMethod method = AttributionMethod::IG;
  int steps = 0;
  Quadrature quadrature = Quadrature::GAUSS_LEGENDRE;

  std::vector<Index> top_indices() const;
};

struct ContrastiveProfile {
  int class_id = 0;
  Eigen::VectorXd delta;
  std::vector<RankedFeature> top_k;
};

enum class BaselineMethod { FREQUENCY, RANDOM };

struct BaselineProfile {
  int class_id = 0;
  BaselineMethod method = BaselineMethod::FREQUENCY;
  std::vector<Index> top_k;
  std::optional<std::uint64_t> seed;
};

/// Ranks scores descending, ties by ascending index; K is clipped to the length.
std::vector<RankedFeature> top_k(const Eigen::VectorXd& scores, std::size_t K);

/// Combines per-exemplar attributions into a class profile. `confidences`
/// (aligned with `attributions`) are required for CONF_WEIGHTED and ignored
/// otherwise. The class id and provenance come from the attributions.
ClassProfile aggregate(std::span<const AttributionVector> attributions, Aggregation mode,
                       std::span<const double> confidences = {}, std::size_t K = kDefaultTopK);

/// delta_c[i] = aggregate_c[i] - max_{c' != c} aggregate_c'[i]; profiles are
/// indexed by class and must share one aggregation mode.
std::vector<ContrastiveProfile> contrastive(std::span<const ClassProfile> profiles, std::size_t K = kDefaultTopK);

/// Top-K features by mean value over the class's training nodes.
BaselineProfile frequency_profile(const Dataset& dataset, int class_id, std::size_t K = kDefaultTopK);

/// K uniformly random distinct features.
BaselineProfile random_profile(Index feature_dim, std::size_t K, std::uint64_t seed, int class_id = 0);

}  // namespace graft
