#pragma once

#include "graft/dataset.hpp"
#include "graft/gnn.hpp"
#include "graft/random.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace graft::test {

std::filesystem::path fixture(const std::string& name);
std::filesystem::path golden(const std::string& name);
std::string read_file(const std::filesystem::path& path);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

/// Erdos-Renyi graph with dense-ish random real features; node v has label v % C
/// and the first 2C nodes are training nodes.
Dataset random_dataset(Index nodes, Index feature_dim, int class_count, double edge_prob, double density,
                       std::uint64_t seed);

/// Central differences of f_class(node) in the features of `wrt`, evaluated
/// through full-graph logits.
Vector finite_difference_gradient(const DifferentiableClassifier& model, const FeatureMatrix& features, Index node,
                                  int class_id, Index wrt, double step);

/// Dense copy of one feature row.
Vector feature_row(const FeatureMatrix& features, Index row);

/// Copy of `features` with row `row` replaced by `values` (zeros dropped).
FeatureMatrix replace_row(const FeatureMatrix& features, Index row, const Vector& values);

/// Optimal k-centre radius over all size-k subsets of the rows of `points`.
double brute_force_k_center(const Eigen::MatrixXd& points, std::size_t k);

}  // namespace graft::test
