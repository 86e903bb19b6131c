#include "graft/attribution.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <string>

namespace graft {

std::string_view to_string(AttributionMethod method) {
  return method == AttributionMethod::IG ? "IG" : "GRAD_X_INPUT";
}

std::string_view to_string(Quadrature quadrature) {
  return quadrature == Quadrature::GAUSS_LEGENDRE ? "GAUSS_LEGENDRE" : "RIEMANN_MID";
}

namespace {

std::string normalised(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

}  // namespace

AttributionMethod parse_attribution_method(std::string_view text) {
  const auto key = normalised(text);
  if (key == "IG") return AttributionMethod::IG;
  if (key == "GRAD_X_INPUT" || key == "GXI" || key == "GRADXINPUT") return AttributionMethod::GRAD_X_INPUT;
  throw std::invalid_argument("unknown attribution method '" + std::string(text) + "'");
}

Quadrature parse_quadrature(std::string_view text) {
  const auto key = normalised(text);
  if (key == "GAUSS_LEGENDRE" || key == "GL") return Quadrature::GAUSS_LEGENDRE;
  if (key == "RIEMANN_MID" || key == "RIEMANN" || key == "MIDPOINT") return Quadrature::RIEMANN_MID;
  throw std::invalid_argument("unknown quadrature '" + std::string(text) + "'");
}

QuadratureRule quadrature_rule(Quadrature quadrature, int steps) {
  if (steps < 1) throw std::invalid_argument("quadrature: steps must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(steps));
  rule.weights.resize(static_cast<std::size_t>(steps));
  if (quadrature == Quadrature::RIEMANN_MID) {
    for (int q = 0; q < steps; ++q) {
      rule.nodes[q] = (q + 0.5) / steps;
      rule.weights[q] = 1.0 / steps;
    }
    return rule;
  }
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(steps)), &gsl_integration_glfixed_table_free);
  if (!table) throw std::runtime_error("quadrature: Gauss-Legendre table allocation failed");
  // GSL's large-n tables are only good to ~1e-11; polish each root of P_n with
  // Newton steps and recompute its weight from P_n'.
  const auto n = static_cast<unsigned>(steps);
  for (int q = 0; q < steps; ++q) {
    double t = 0.0, w = 0.0;
    gsl_integration_glfixed_point(0.0, 1.0, static_cast<std::size_t>(q), &t, &w, table.get());
    double x = 2.0 * t - 1.0;
    double derivative = 1.0;
    for (int it = 0; it < 3; ++it) {
      const double p = std::legendre(n, x);
      derivative = n * (x * p - (n > 0 ? std::legendre(n - 1, x) : 0.0)) / (x * x - 1.0);
      x -= p / derivative;
    }
    derivative = n * (x * std::legendre(n, x) - std::legendre(n - 1, x)) / (x * x - 1.0);
    rule.nodes[q] = 0.5 * (x + 1.0);
    rule.weights[q] = 1.0 / ((1.0 - x * x) * derivative * derivative);
  }
  return rule;
}

AttributionVector integrated_gradients(NodeProbe& probe, Index node, int class_id, int steps, Quadrature quadrature) {
  const auto rule = quadrature_rule(quadrature, steps);
  const Vector& x = probe.features();
  Vector path_integral = Vector::Zero(x.size());
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const auto eval = probe.logit_and_gradient(class_id, rule.nodes[q]);
    if (!eval.gradient.allFinite()) {
      throw AttributionError("non-finite gradient at alpha=" + std::to_string(rule.nodes[q]), rule.nodes[q]);
    }
    path_integral += rule.weights[q] * eval.gradient;
  }
  AttributionVector out{node, class_id, Vector::Zero(x.size()), AttributionMethod::IG, steps, quadrature};
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) != 0.0) out.values(i) = x(i) * path_integral(i);
  }
  return out;
}

AttributionVector integrated_gradients(const DifferentiableClassifier& model, const FeatureMatrix& features,
                                       Index node, int class_id, int steps, Quadrature quadrature) {
  auto probe = model.probe(features, node);
  return integrated_gradients(*probe, node, class_id, steps, quadrature);
}

AttributionVector grad_times_input(const DifferentiableClassifier& model, const FeatureMatrix& features, Index node,
                                   int class_id) {
  auto probe = model.probe(features, node);
  const auto eval = probe->logit_and_gradient(class_id, 1.0);
  if (!eval.gradient.allFinite()) throw AttributionError("non-finite gradient at alpha=1", 1.0);
  const Vector& x = probe->features();
  AttributionVector out{node, class_id, Vector::Zero(x.size()), AttributionMethod::GRAD_X_INPUT, 1,
                        Quadrature::RIEMANN_MID};
  for (Index i = 0; i < x.size(); ++i) {
    if (x(i) != 0.0) out.values(i) = x(i) * eval.gradient(i);
  }
  return out;
}

}  // namespace graft
