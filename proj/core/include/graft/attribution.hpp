#pragma once

#include "graft/gnn.hpp"

#include <stdexcept>
#include <string_view>
#include <vector>

namespace graft {

enum class AttributionMethod { IG, GRAD_X_INPUT };
enum class Quadrature { RIEMANN_MID, GAUSS_LEGENDRE };

std::string_view to_string(AttributionMethod method);
std::string_view to_string(Quadrature quadrature);
AttributionMethod parse_attribution_method(std::string_view text);
Quadrature parse_quadrature(std::string_view text);

inline constexpr int kDefaultIgSteps = 50;

/// Nodes and weights on [0, 1]; weights sum to 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

QuadratureRule quadrature_rule(Quadrature quadrature, int steps);

struct AttributionVector {
  Index node = 0;
  int class_id = 0;
  Vector values;
  AttributionMethod method = AttributionMethod::IG;
  int steps = 0;
  Quadrature quadrature = Quadrature::GAUSS_LEGENDRE;
};

class AttributionError : public std::runtime_error {
 public:
  AttributionError(const std::string& what, double alpha) : std::runtime_error(what), alpha_(alpha) {}
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

/// Integrated Gradients from the zero baseline along the straight path
/// alpha * x_node, scaling only the attributed node's own feature row.
AttributionVector integrated_gradients(const DifferentiableClassifier& model, const FeatureMatrix& features,
                                       Index node, int class_id, int steps = kDefaultIgSteps,
                                       Quadrature quadrature = Quadrature::GAUSS_LEGENDRE);

/// Same, reusing an existing probe of the node.
AttributionVector integrated_gradients(NodeProbe& probe, Index node, int class_id, int steps, Quadrature quadrature);

/// x_node[i] * d f_c / d x_node[i] at the unscaled input.
AttributionVector grad_times_input(const DifferentiableClassifier& model, const FeatureMatrix& features, Index node,
                                   int class_id);

}  // namespace graft
