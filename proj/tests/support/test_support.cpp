#include "test_support.hpp"

#include "graft/exemplars.hpp"
#include "graft/random.hpp"

#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace graft::test {

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(GRAFT_FIXTURE_DIR) / name; }

std::filesystem::path golden(const std::string& name) { return std::filesystem::path(GRAFT_GOLDEN_DIR) / name; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("graft_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Dataset random_dataset(Index nodes, Index feature_dim, int class_count, double edge_prob, double density,
                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<Index, Index>> edges;
  for (Index u = 0; u < nodes; ++u) {
    for (Index v = u + 1; v < nodes; ++v) {
      if (rng.bernoulli(edge_prob)) edges.emplace_back(u, v);
    }
  }
  std::vector<FeatureEntry> entries;
  for (Index v = 0; v < nodes; ++v) {
    for (Index i = 0; i < feature_dim; ++i) {
      if (rng.bernoulli(density)) entries.push_back({v, i, rng.uniform(-1.0, 1.0)});
    }
  }
  std::vector<int> labels(static_cast<std::size_t>(nodes));
  std::vector<Split> split(static_cast<std::size_t>(nodes), Split::Test);
  for (Index v = 0; v < nodes; ++v) {
    labels[v] = static_cast<int>(v % class_count);
    if (v < 2 * class_count) split[v] = Split::Train;
  }
  return make_dataset("random", nodes, feature_dim, std::move(edges), entries, std::move(labels), std::move(split));
}

Vector feature_row(const FeatureMatrix& features, Index row) {
  Vector out = Vector::Zero(features.cols());
  for (FeatureMatrix::InnerIterator it(features, row); it; ++it) out(it.col()) = it.value();
  return out;
}

FeatureMatrix replace_row(const FeatureMatrix& features, Index row, const Vector& values) {
  std::vector<Eigen::Triplet<double, Index>> triplets;
  for (Index r = 0; r < features.outerSize(); ++r) {
    if (r == row) continue;
    for (FeatureMatrix::InnerIterator it(features, r); it; ++it) triplets.emplace_back(r, it.col(), it.value());
  }
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) != 0.0) triplets.emplace_back(row, i, values(i));
  }
  FeatureMatrix out(features.rows(), features.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

Vector finite_difference_gradient(const DifferentiableClassifier& model, const FeatureMatrix& features, Index node,
                                  int class_id, Index wrt, double step) {
  const Vector base = feature_row(features, wrt);
  Vector grad(base.size());
  for (Index i = 0; i < base.size(); ++i) {
    Vector up = base, down = base;
    up(i) += step;
    down(i) -= step;
    const double f_up = model.logits(replace_row(features, wrt, up))(node, class_id);
    const double f_down = model.logits(replace_row(features, wrt, down))(node, class_id);
    grad(i) = (f_up - f_down) / (2.0 * step);
  }
  return grad;
}

double brute_force_k_center(const Eigen::MatrixXd& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> chosen;
  const std::function<void(std::size_t)> recurse = [&](std::size_t start) {
    if (chosen.size() == k) {
      best = std::min(best, coverage_radius(points, chosen));
      return;
    }
    for (std::size_t i = start; i + (k - chosen.size()) <= n; ++i) {
      chosen.push_back(static_cast<Index>(i));
      recurse(i + 1);
      chosen.pop_back();
    }
  };
  recurse(0);
  return best;
}

}  // namespace graft::test
