#include "graft/exemplars.hpp"

#include "graft/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace graft {

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::FPS:
      return "FPS";
    case SelectionMode::CS_FPS:
      return "CS-FPS";
    case SelectionMode::RANDOM:
      return "RANDOM";
  }
  return "FPS";
}

SelectionMode parse_selection_mode(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(upper.begin(), upper.end(), '_', '-');
  if (upper == "FPS") return SelectionMode::FPS;
  if (upper == "CS-FPS") return SelectionMode::CS_FPS;
  if (upper == "RANDOM") return SelectionMode::RANDOM;
  throw std::invalid_argument("unknown exemplar selection mode '" + std::string(text) + "'");
}

namespace {

void check_class(std::span<const Index> class_nodes, const Eigen::MatrixXd* embeddings) {
  if (class_nodes.empty()) throw std::invalid_argument("exemplar selection: empty class");
  if (!embeddings) return;
  for (Index v : class_nodes) {
    if (v < 0 || v >= embeddings->rows()) throw std::out_of_range("exemplar selection: node out of range");
    if (!embeddings->row(v).allFinite()) throw std::invalid_argument("exemplar selection: non-finite embedding");
  }
}

double squared_distance(const Eigen::MatrixXd& x, Index a, Index b) { return (x.row(a) - x.row(b)).squaredNorm(); }

// Strictly better, or equal with a lower node id.
bool prefer(double score, Index node, double best_score, Index best_node, bool maximise) {
  if (score == best_score) return node < best_node;
  return maximise ? score > best_score : score < best_score;
}

std::vector<Index> fps_order(const Eigen::MatrixXd& embeddings, std::span<const Index> nodes, std::size_t k) {
  k = std::min(k, nodes.size());
  std::vector<Index> chosen;
  if (k == 0) return chosen;

  Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(embeddings.cols());
  for (Index v : nodes) centroid += embeddings.row(v);
  centroid /= static_cast<double>(nodes.size());

  std::size_t first = 0;
  double first_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double dist = (embeddings.row(nodes[i]) - centroid).squaredNorm();
    if (i == 0 || prefer(dist, nodes[i], first_score, nodes[first], false)) {
      first = i;
      first_score = dist;
    }
  }
  chosen.push_back(nodes[first]);

  std::vector<double> nearest(nodes.size(), std::numeric_limits<double>::infinity());
  std::vector<char> taken(nodes.size(), 0);
  taken[first] = 1;
  std::size_t last = first;
  while (chosen.size() < k) {
    std::size_t best = nodes.size();
    double best_score = -1.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (taken[i]) continue;
      nearest[i] = std::min(nearest[i], squared_distance(embeddings, nodes[i], nodes[last]));
      if (best == nodes.size() || prefer(nearest[i], nodes[i], best_score, nodes[best], true)) {
        best = i;
        best_score = nearest[i];
      }
    }
    taken[best] = 1;
    chosen.push_back(nodes[best]);
    last = best;
  }
  return chosen;
}

}  // namespace

ExemplarSet fps_select(const Eigen::MatrixXd& embeddings, std::span<const Index> class_nodes, std::size_t k,
                       int class_id) {
  check_class(class_nodes, &embeddings);
  return {class_id, fps_order(embeddings, class_nodes, k), SelectionMode::FPS, std::nullopt};
}

ExemplarSet cs_fps_select(const Eigen::MatrixXd& embeddings, std::span<const Index> class_nodes,
                          std::span<const double> confidences, std::size_t k, int class_id) {
  check_class(class_nodes, &embeddings);
  if (confidences.size() != class_nodes.size()) {
    throw std::invalid_argument("cs_fps_select: one confidence per class node required");
  }
  for (double p : confidences) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("cs_fps_select: confidence outside [0, 1]");
  }
  std::vector<double> sorted(confidences.begin(), confidences.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);

  std::vector<Index> high, low;
  for (std::size_t i = 0; i < class_nodes.size(); ++i) {
    (confidences[i] >= median ? high : low).push_back(class_nodes[i]);
  }
  k = std::min(k, class_nodes.size());
  std::size_t high_budget = (k + 1) / 2;
  std::size_t low_budget = k / 2;
  if (high_budget > high.size()) {
    low_budget += high_budget - high.size();
    high_budget = high.size();
  }
  if (low_budget > low.size()) {
    high_budget += low_budget - low.size();
    low_budget = low.size();
  }

  ExemplarSet out{class_id, fps_order(embeddings, high, high_budget), SelectionMode::CS_FPS, std::nullopt};
  const auto low_part = fps_order(embeddings, low, low_budget);
  out.nodes.insert(out.nodes.end(), low_part.begin(), low_part.end());
  return out;
}

ExemplarSet random_select(std::span<const Index> class_nodes, std::size_t k, std::uint64_t seed, int class_id) {
  check_class(class_nodes, nullptr);
  Rng rng(seed);
  ExemplarSet out{class_id, {}, SelectionMode::RANDOM, seed};
  for (std::size_t i : sample_without_replacement(class_nodes.size(), k, rng)) out.nodes.push_back(class_nodes[i]);
  return out;
}

double coverage_radius(const Eigen::MatrixXd& points, std::span<const Index> centres) {
  if (centres.empty()) throw std::invalid_argument("coverage_radius: no centres");
  double radius = 0.0;
  for (Index p = 0; p < points.rows(); ++p) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Index c : centres) nearest = std::min(nearest, squared_distance(points, p, c));
    radius = std::max(radius, nearest);
  }
  return std::sqrt(radius);
}

}  // namespace graft
