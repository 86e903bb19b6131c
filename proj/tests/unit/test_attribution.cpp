#include "graft/attribution.hpp"
#include "graft/profiles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace graft;

namespace {

LinearDecoderModel random_linear(Index d, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a(classes, d);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-2.0, 2.0);
  Vector b(classes);
  for (Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-1.0, 1.0);
  return LinearDecoderModel::direct(a, b);
}

// Logit gap f_c(x) - f_c(0) for the node, other rows fixed.
double logit_gap(const DifferentiableClassifier& model, const FeatureMatrix& x, Index node, int c) {
  auto probe = model.probe(x, node);
  return probe->logit(c, 1.0) - probe->logit(c, 0.0);
}

class NanProbe final : public NodeProbe {
 public:
  double logit(int, double) override { return 0.0; }
  LogitGradient logit_and_gradient(int, double alpha) override {
    LogitGradient out{0.0, Vector::Ones(2)};
    if (alpha > 0.5) out.gradient(0) = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const Vector& features() const override { return x_; }

 private:
  Vector x_ = Vector::Ones(2);
};

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  for (int n : {1, 2, 5, 50}) {
    const auto rule = quadrature_rule(Quadrature::GAUSS_LEGENDRE, n);
    ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(n));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double sum = 0.0;
      for (int q = 0; q < n; ++q) sum += rule.weights[q] * std::pow(rule.nodes[q], p);
      EXPECT_NEAR(sum, 1.0 / (p + 1), 1e-13) << "n=" << n << " p=" << p;
    }
    for (double t : rule.nodes) {
      EXPECT_GT(t, 0.0);
      EXPECT_LT(t, 1.0);
    }
  }
}

TEST(Quadrature, MidpointRule) {
  const auto rule = quadrature_rule(Quadrature::RIEMANN_MID, 4);
  EXPECT_EQ(rule.nodes, (std::vector<double>{0.125, 0.375, 0.625, 0.875}));
  for (double w : rule.weights) EXPECT_EQ(w, 0.25);
  EXPECT_THROW(quadrature_rule(Quadrature::RIEMANN_MID, 0), std::invalid_argument);
}

TEST(IntegratedGradients, LinearModelIsExact) {
  const Dataset ds = test::random_dataset(20, 8, 3, 0.2, 0.7, 4);
  const auto model = random_linear(8, 3, 9);
  for (Quadrature q : {Quadrature::GAUSS_LEGENDRE, Quadrature::RIEMANN_MID}) {
    for (int steps : {1, 7, 50}) {
      for (Index node : {0, 5, 19}) {
        const auto ig = integrated_gradients(model, ds.features, node, 2, steps, q);
        const Vector expected = model.class_weight(2).cwiseProduct(test::feature_row(ds.features, node));
        EXPECT_LE((ig.values - expected).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(ig.steps, steps);
        EXPECT_EQ(ig.quadrature, q);
      }
    }
  }
  const auto gxi = grad_times_input(model, ds.features, 3, 1);
  const Vector expected = model.class_weight(1).cwiseProduct(test::feature_row(ds.features, 3));
  EXPECT_LE((gxi.values - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(gxi.method, AttributionMethod::GRAD_X_INPUT);
}

TEST(IntegratedGradients, ZeroFeatureNodeGivesZero) {
  std::vector<FeatureEntry> features{{0, 0, 1.0}, {2, 1, 1.0}};
  const Dataset ds = make_dataset("z", 3, 2, {{0, 1}, {1, 2}}, features, {0, 1, 0},
                                  {Split::Train, Split::Train, Split::Test});
  Hyperparams hp;
  hp.hidden_dim = 4;
  hp.epochs = 5;
  const TrainedModel model = train(ds, Architecture::GCN, hp);
  EXPECT_EQ(integrated_gradients(model, ds.features, 1, 0).values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grad_times_input(model, ds.features, 1, 0).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(IntegratedGradients, CompletenessOnTrainedGcn) {
  const auto pd = generate_planted({});
  Hyperparams hp;
  hp.epochs = 100;
  const TrainedModel model = train(pd.dataset, Architecture::GCN, hp);
  for (Index node = 0; node < 30; node += 3) {
    const int c = pd.dataset.labels[node];
    const auto ig = integrated_gradients(model, pd.dataset.features, node, c, 50, Quadrature::GAUSS_LEGENDRE);
    const double gap = logit_gap(model, pd.dataset.features, node, c);
    EXPECT_LE(std::abs(ig.values.sum() - gap), 1e-3 * std::abs(gap) + 1e-6) << "node " << node;
  }
}

TEST(IntegratedGradients, CompletenessImprovesWithSteps) {
  const auto pd = generate_planted({});
  Hyperparams hp;
  hp.epochs = 100;
  const TrainedModel model = train(pd.dataset, Architecture::SAGE, hp);
  for (Quadrature q : {Quadrature::RIEMANN_MID, Quadrature::GAUSS_LEGENDRE}) {
    double previous = std::numeric_limits<double>::infinity();
    for (int steps : {5, 10, 20, 50}) {
      double error = 0.0;
      for (Index node = 0; node < 40; node += 4) {
        const int c = pd.dataset.labels[node];
        const auto ig = integrated_gradients(model, pd.dataset.features, node, c, steps, q);
        error += std::abs(ig.values.sum() - logit_gap(model, pd.dataset.features, node, c));
      }
      EXPECT_LE(error, 1.1 * previous + 1e-12) << to_string(q) << " steps " << steps;
      previous = error;
    }
  }
}

TEST(IntegratedGradients, SupportWithinFeatureSupport) {
  const Dataset ds = test::random_dataset(30, 10, 2, 0.15, 0.3, 5);
  Hyperparams hp;
  hp.hidden_dim = 8;
  hp.epochs = 20;
  for (Architecture arch : kAllArchitectures) {
    const TrainedModel model = train(ds, arch, hp);
    for (Index node = 0; node < 30; node += 5) {
      const Vector x = test::feature_row(ds.features, node);
      const auto ig = integrated_gradients(model, ds.features, node, 0);
      for (Index i = 0; i < x.size(); ++i) {
        if (x(i) == 0.0) EXPECT_EQ(ig.values(i), 0.0);
      }
      EXPECT_TRUE(ig.values.allFinite());
    }
  }
}

TEST(IntegratedGradients, QuadraturesAgreeOnTopFeatures) {
  const auto pd = generate_planted({});
  Hyperparams hp;
  hp.epochs = 200;
  const TrainedModel model = train(pd.dataset, Architecture::GCN, hp);
  for (int c = 0; c < pd.dataset.class_count; ++c) {
    std::vector<AttributionVector> gl, mid;
    for (Index node : pd.dataset.class_nodes(c)) {
      if (gl.size() == 10) break;
      gl.push_back(integrated_gradients(model, pd.dataset.features, node, c, 50, Quadrature::GAUSS_LEGENDRE));
      mid.push_back(integrated_gradients(model, pd.dataset.features, node, c, 50, Quadrature::RIEMANN_MID));
    }
    const auto a = aggregate(gl, Aggregation::MEAN).top_indices();
    const auto b = aggregate(mid, Aggregation::MEAN).top_indices();
    EXPECT_EQ(std::set<Index>(a.begin(), a.end()), std::set<Index>(b.begin(), b.end())) << "class " << c;
  }
}

TEST(IntegratedGradients, NonFiniteGradientReportsAlpha) {
  NanProbe probe;
  try {
    integrated_gradients(probe, 0, 0, 4, Quadrature::RIEMANN_MID);
    FAIL() << "expected AttributionError";
  } catch (const AttributionError& e) {
    EXPECT_DOUBLE_EQ(e.alpha(), 0.625);
  }
}

TEST(Attribution, ParseNames) {
  EXPECT_EQ(parse_quadrature("gauss-legendre"), Quadrature::GAUSS_LEGENDRE);
  EXPECT_EQ(parse_quadrature("RIEMANN_MID"), Quadrature::RIEMANN_MID);
  EXPECT_EQ(parse_attribution_method("IG"), AttributionMethod::IG);
  EXPECT_EQ(parse_attribution_method("grad_x_input"), AttributionMethod::GRAD_X_INPUT);
  EXPECT_THROW(parse_quadrature("simpson"), std::invalid_argument);
}
