#pragma once

#include "graft/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace graft {

enum class SelectionMode { FPS, CS_FPS, RANDOM };

std::string_view to_string(SelectionMode mode);
SelectionMode parse_selection_mode(std::string_view text);

inline constexpr std::size_t kDefaultExemplars = 10;

struct ExemplarSet {
  int class_id = 0;
  std::vector<Index> nodes;  // selection order
  SelectionMode mode = SelectionMode::FPS;
  std::optional<std::uint64_t> seed;  // RANDOM only
};

/// Farthest point sampling in embedding space. The first exemplar is the
/// class node nearest the class centroid; each further exemplar maximises its
/// minimum distance to those already chosen. Ties go to the lowest node id.
ExemplarSet fps_select(const Eigen::MatrixXd& embeddings, std::span<const Index> class_nodes, std::size_t k,
                       int class_id = 0);

/// Confidence-stratified FPS: nodes with p_c >= median form the high stratum
/// (ceil(k/2) exemplars), the rest the low stratum (floor(k/2)); each stratum
/// runs FPS around its own centroid and the high stratum is listed first. A
/// stratum that cannot fill its share hands the remainder to the other.
/// `confidences` is aligned with `class_nodes`.
ExemplarSet cs_fps_select(const Eigen::MatrixXd& embeddings, std::span<const Index> class_nodes,
                          std::span<const double> confidences, std::size_t k, int class_id = 0);

/// Uniform sample without replacement, in draw order.
ExemplarSet random_select(std::span<const Index> class_nodes, std::size_t k, std::uint64_t seed, int class_id = 0);

/// max over points of the distance to the nearest centre (rows of `points`).
double coverage_radius(const Eigen::MatrixXd& points, std::span<const Index> centres);

}  // namespace graft
