#include "graft/evaluation.hpp"
#include "graft/exemplars.hpp"
#include "graft/random.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <set>

using namespace graft;

namespace {

double dist(const Eigen::MatrixXd& e, Index a, Index b) { return (e.row(a) - e.row(b)).norm(); }

Eigen::MatrixXd random_points(Index n, Index dim, Rng& rng) {
  Eigen::MatrixXd p(n, dim);
  for (Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(-1.0, 1.0);
  return p;
}

std::vector<Index> iota_nodes(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

}  // namespace

TEST(Fps, OneDimensionalWorkedExample) {
  // Class nodes a..d = 10..13 at 0, 1, 2, 10; centroid 3.25 is nearest to c.
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(14, 1);
  e(10, 0) = 0;
  e(11, 0) = 1;
  e(12, 0) = 2;
  e(13, 0) = 10;
  const std::vector<Index> nodes{10, 11, 12, 13};
  EXPECT_EQ(fps_select(e, nodes, 3).nodes, (std::vector<Index>{12, 13, 10}));
  EXPECT_EQ(fps_select(e, nodes, 1).nodes, (std::vector<Index>{12}));
}

TEST(Fps, ExhaustionReturnsEveryNodeOnce) {
  Rng rng(1);
  const auto e = random_points(12, 3, rng);
  const auto nodes = iota_nodes(12);
  const auto set = fps_select(e, nodes, 50, 4);
  EXPECT_EQ(set.class_id, 4);
  EXPECT_EQ(set.mode, SelectionMode::FPS);
  std::set<Index> unique(set.nodes.begin(), set.nodes.end());
  EXPECT_EQ(unique.size(), 12u);
  EXPECT_EQ(set.nodes.size(), 12u);
}

TEST(Fps, TiesGoToLowestNodeId) {
  // Symmetric square: every corner ties with another at each step.
  Eigen::MatrixXd e(5, 2);
  e << 0, 0, 1, 1, -1, 1, 1, -1, -1, -1;
  const auto set = fps_select(e, iota_nodes(5), 3);
  EXPECT_EQ(set.nodes[0], 0);
  EXPECT_EQ(set.nodes[1], 1);
  EXPECT_EQ(set.nodes[2], 2);
}

TEST(Fps, MaxMinPropertyAndTwoApproximation) {
  Rng rng(2024);
  for (int instance = 0; instance < 100; ++instance) {
    const auto n = static_cast<Index>(2 + rng.below(9));
    const auto dim = static_cast<Index>(1 + rng.below(3));
    const auto points = random_points(n, dim, rng);
    const std::size_t k = 1 + rng.below(static_cast<std::uint64_t>(n));
    const auto sel = fps_select(points, iota_nodes(n), k).nodes;
    ASSERT_EQ(sel.size(), k);

    for (std::size_t j = 1; j < sel.size(); ++j) {
      const auto min_to_prefix = [&](Index p) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < j; ++q) best = std::min(best, dist(points, p, sel[q]));
        return best;
      };
      const double chosen = min_to_prefix(sel[j]);
      for (Index p = 0; p < n; ++p) EXPECT_LE(min_to_prefix(p), chosen + 1e-12) << "instance " << instance;
    }
    const double r_fps = coverage_radius(points, sel);
    const double r_opt = test::brute_force_k_center(points, k);
    EXPECT_LE(r_fps, 2.0 * r_opt + 1e-12) << "instance " << instance;
  }
}

TEST(Fps, RepeatedCallsAreIdentical) {
  Rng rng(5);
  const auto e = random_points(200, 16, rng);
  std::vector<Index> nodes;
  for (Index v = 0; v < 200; v += 2) nodes.push_back(v);
  const auto first = fps_select(e, nodes, 10);
  for (int rep = 0; rep < 5; ++rep) {
    const auto again = fps_select(e, nodes, 10);
    EXPECT_EQ(again.nodes, first.nodes);
    EXPECT_EQ(jaccard(again.nodes, first.nodes), 1.0);
  }
}

TEST(Fps, EmptyClassRejected) {
  const Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, 2);
  EXPECT_THROW(fps_select(e, {}, 2), std::invalid_argument);
  EXPECT_THROW(random_select({}, 2, 0), std::invalid_argument);
}

TEST(CsFps, MedianSplitFourAndFour) {
  Rng rng(8);
  const auto e = random_points(8, 2, rng);
  const auto nodes = iota_nodes(8);
  const std::vector<double> conf{0.95, 0.15, 0.85, 0.05, 0.75, 0.35, 0.65, 0.25};
  // Median 0.5: high = {0, 2, 4, 6}, low = {1, 3, 5, 7}.
  const auto set = cs_fps_select(e, nodes, conf, 8);
  ASSERT_EQ(set.nodes.size(), 8u);
  const std::set<Index> high(set.nodes.begin(), set.nodes.begin() + 4);
  const std::set<Index> low(set.nodes.begin() + 4, set.nodes.end());
  EXPECT_EQ(high, (std::set<Index>{0, 2, 4, 6}));
  EXPECT_EQ(low, (std::set<Index>{1, 3, 5, 7}));
  EXPECT_EQ(set.mode, SelectionMode::CS_FPS);

  // Each stratum is plain FPS over its own members.
  const std::vector<Index> high_nodes{0, 2, 4, 6};
  EXPECT_EQ(std::vector<Index>(set.nodes.begin(), set.nodes.begin() + 4), fps_select(e, high_nodes, 4).nodes);
}

TEST(CsFps, BudgetSplitAcrossStrata) {
  Rng rng(9);
  const auto e = random_points(4, 2, rng);
  const std::vector<double> conf{0.0, 1.0, 0.0, 1.0};
  const auto set = cs_fps_select(e, iota_nodes(4), conf, 2);
  ASSERT_EQ(set.nodes.size(), 2u);
  EXPECT_EQ(conf[set.nodes[0]], 1.0);
  EXPECT_EQ(conf[set.nodes[1]], 0.0);

  const auto odd = cs_fps_select(e, iota_nodes(4), conf, 3);
  EXPECT_EQ(conf[odd.nodes[0]], 1.0);
  EXPECT_EQ(conf[odd.nodes[1]], 1.0);
  EXPECT_EQ(conf[odd.nodes[2]], 0.0);
}

TEST(CsFps, UniformConfidencesAreDeterministic) {
  Rng rng(10);
  const auto e = random_points(30, 4, rng);
  const std::vector<double> conf(30, 0.7);
  const auto a = cs_fps_select(e, iota_nodes(30), conf, 10);
  const auto b = cs_fps_select(e, iota_nodes(30), conf, 10);
  EXPECT_EQ(a.nodes, b.nodes);
  EXPECT_EQ(a.nodes.size(), 10u);
}

TEST(RandomSelect, SeededAndExhaustive) {
  const auto nodes = iota_nodes(100);
  EXPECT_EQ(random_select(nodes, 10, 3).nodes, random_select(nodes, 10, 3).nodes);
  EXPECT_EQ(random_select(nodes, 10, 3).seed, std::optional<std::uint64_t>(3));
  const auto all = random_select(nodes, 500, 1);
  EXPECT_EQ(std::set<Index>(all.nodes.begin(), all.nodes.end()).size(), 100u);
}

TEST(RandomSelect, LowOverlapAcrossSeeds) {
  const auto nodes = iota_nodes(100);
  std::vector<FeatureSet> draws;
  for (std::uint64_t s = 0; s < 5; ++s) draws.push_back(random_select(nodes, 10, s).nodes);
  EXPECT_LT(jaccard_stability(draws), 0.2);
}
