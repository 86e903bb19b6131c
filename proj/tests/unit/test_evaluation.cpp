#include "graft/attribution.hpp"
#include "graft/evaluation.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace graft;

namespace {

FeatureSet range(Index first, Index last) {
  FeatureSet out;
  for (Index i = first; i <= last; ++i) out.push_back(i);
  return out;
}

LinearDecoderModel toy_perfect_model() {
  Matrix a = Matrix::Zero(2, 4);
  a(0, 0) = a(0, 1) = 1.0;
  a(1, 3) = 1.0;
  return LinearDecoderModel::direct(a, Vector::Zero(2));
}

}  // namespace

TEST(Jaccard, Basics) {
  EXPECT_EQ(jaccard(range(1, 20), range(1, 20)), 1.0);
  EXPECT_EQ(jaccard(range(1, 20), range(21, 40)), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(range(1, 20), range(11, 30)), 10.0 / 30.0);
  EXPECT_EQ(jaccard(FeatureSet{}, FeatureSet{}), 1.0);
}

TEST(Jaccard, StabilityIsMeanPairwise) {
  const std::vector<FeatureSet> sets{range(1, 20), range(11, 30), range(1, 20)};
  const double expected = (10.0 / 30.0 + 1.0 + 10.0 / 30.0) / 3.0;
  EXPECT_DOUBLE_EQ(jaccard_stability(sets), expected);
  EXPECT_THROW(jaccard_stability(std::vector<FeatureSet>{range(1, 3)}), std::invalid_argument);
}

TEST(Jaccard, SymmetricAndRelabellingInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FeatureSet> sets(4);
    for (auto& s : sets) {
      for (std::size_t i : sample_without_replacement(60, 20, rng)) s.push_back(static_cast<Index>(i));
    }
    auto reversed = sets;
    std::reverse(reversed.begin(), reversed.end());
    EXPECT_DOUBLE_EQ(jaccard_stability(sets), jaccard_stability(reversed));
    EXPECT_DOUBLE_EQ(consensus(sets, 3, 20), consensus(reversed, 3, 20));

    std::vector<std::size_t> perm = sample_without_replacement(60, 60, rng);
    auto relabelled = sets;
    for (auto& s : relabelled) {
      for (auto& i : s) i = static_cast<Index>(perm[i]);
    }
    EXPECT_DOUBLE_EQ(jaccard_stability(sets), jaccard_stability(relabelled));
    EXPECT_DOUBLE_EQ(consensus(sets, 3, 20), consensus(relabelled, 3, 20));
  }
}

TEST(Consensus, Basics) {
  const std::vector<FeatureSet> same(4, range(0, 19));
  EXPECT_EQ(consensus(same, 3, 20), 1.0);
  const std::vector<FeatureSet> disjoint{range(0, 19), range(20, 39), range(40, 59), range(60, 79)};
  EXPECT_EQ(consensus(disjoint, 3, 20), 0.0);
  // Features 0..9 chosen by three of four, 10..19 by two.
  const std::vector<FeatureSet> mixed{range(0, 19), range(0, 19), range(0, 9), range(30, 49)};
  EXPECT_DOUBLE_EQ(consensus(mixed, 3, 20), 0.5);
  EXPECT_THROW(consensus(std::vector<FeatureSet>{range(0, 1), range(0, 1)}, 3, 2), std::invalid_argument);
}

TEST(Reports, StabilityAndConsensusPerClass) {
  const std::vector<std::vector<FeatureSet>> per_seed{{range(1, 20), range(0, 4)}, {range(11, 30), range(0, 4)}};
  const std::vector<std::uint64_t> seeds{0, 1};
  const auto st = stability_report(per_seed, seeds);
  ASSERT_EQ(st.per_class.size(), 2u);
  EXPECT_DOUBLE_EQ(st.per_class[0], 10.0 / 30.0);
  EXPECT_DOUBLE_EQ(st.per_class[1], 1.0);
  EXPECT_DOUBLE_EQ(st.mean, (10.0 / 30.0 + 1.0) / 2.0);

  const std::vector<std::vector<FeatureSet>> per_arch(4, std::vector<FeatureSet>{range(0, 4), range(5, 9)});
  const std::vector<std::string> names{"GCN", "GAT", "SAGE", "GIN"};
  const auto cr = consensus_report(per_arch, names, 3, 5);
  EXPECT_EQ(cr.per_class, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(cr.tau, 3);
}

TEST(Fidelity, HandComputedOnToy) {
  const Dataset ds = load_dataset(test::fixture("toy"));
  const auto model = toy_perfect_model();
  const std::vector<FeatureSet> sets{{0, 1}, {3}};
  const auto report = fidelity(model, ds, sets, 20);
  EXPECT_EQ(report.masking_policy, "per-true-class");
  EXPECT_DOUBLE_EQ(report.gnn_accuracy, 1.0);
  ASSERT_EQ(report.classes.size(), 2u);
  EXPECT_EQ(report.classes[0].fid_minus, 1.0);
  EXPECT_EQ(report.classes[0].fid_plus, 0.0);  // node 2 keeps a tie, resolved to class 0
  EXPECT_EQ(report.classes[1].fid_minus, 1.0);
  EXPECT_EQ(report.classes[1].fid_plus, 1.0);
  EXPECT_DOUBLE_EQ(report.fid_minus, 1.0);
  EXPECT_DOUBLE_EQ(report.fid_plus, 0.5);
}

TEST(Fidelity, FullAndEmptyProfiles) {
  const auto pd = generate_planted({});
  Hyperparams hp;
  hp.epochs = 100;
  const TrainedModel model = train(pd.dataset, Architecture::GCN, hp);
  const Index d = pd.dataset.feature_dim();
  std::vector<FeatureSet> all(3, range(0, d - 1));
  const auto full = fidelity(model, pd.dataset, all, static_cast<std::size_t>(d));
  // Keeping every feature reproduces the unmasked prediction.
  EXPECT_EQ(full.fid_minus, 1.0);
  for (const auto& c : full.classes) EXPECT_EQ(c.kept_accuracy, c.unmasked_accuracy);
  const auto none = fidelity(model, pd.dataset, all, 0);
  EXPECT_EQ(none.fid_plus, 0.0);
  for (const auto& c : none.classes) EXPECT_EQ(*c.fid_plus, 0.0);
}

TEST(Fidelity, UndefinedRatioExcludedFromMean) {
  const Dataset ds = load_dataset(test::fixture("toy"));
  Vector bias(2);
  bias << 1.0, 0.0;
  const auto constant = LinearDecoderModel::direct(Matrix::Zero(2, 4), bias);
  const std::vector<FeatureSet> sets{{0}, {3}};
  const auto report = fidelity(constant, ds, sets, 1);
  EXPECT_FALSE(report.classes[1].fid_minus.has_value());
  EXPECT_TRUE(report.classes[0].fid_minus.has_value());
  EXPECT_DOUBLE_EQ(report.fid_minus, 1.0);
}

TEST(Fidelity, LinearDecoderLogitIdentities) {
  const Dataset ds = test::random_dataset(30, 12, 3, 0.1, 0.6, 7);
  Rng rng(2);
  Matrix a(3, 12);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1, 1);
  Vector b(3);
  b << 0.1, -0.2, 0.3;
  const auto model = LinearDecoderModel::direct(a, b);
  for (Index node = 0; node < 30; node += 7) {
    const int c = static_cast<int>(node % 3);
    const auto ig = integrated_gradients(model, ds.features, node, c);
    const auto ranked = top_k(ig.values.cwiseAbs(), 5);
    const Vector x = test::feature_row(ds.features, node);
    Vector kept = Vector::Zero(12), removed = x;
    double sum_t = 0.0;
    for (const auto& f : ranked) {
      kept(f.index) = x(f.index);
      removed(f.index) = 0.0;
      sum_t += ig.values(f.index);
    }
    const double f_x = model.logit(x, c), f_zero = model.logit(Vector::Zero(12), c);
    const double surplus = model.logit(kept, c) - f_zero;
    const double drop = f_x - model.logit(removed, c);
    EXPECT_NEAR(surplus, sum_t, 1e-9);
    EXPECT_NEAR(drop, sum_t, 1e-9);
    EXPECT_NEAR(surplus, drop, 1e-9);
  }
}

TEST(Transfer, FeatureUnionAndCompression) {
  const std::vector<FeatureSet> sets{{5, 1, 9}, {1, 2}, {7}};
  EXPECT_EQ(feature_union(sets, 2), (FeatureSet{1, 2, 5, 7}));
  EXPECT_EQ(feature_union(sets, 10), (FeatureSet{1, 2, 5, 7, 9}));

  const auto pd = generate_planted({});
  const Index d = pd.dataset.feature_dim();
  const std::vector<FeatureSet> all(3, range(0, d - 1));
  const auto report = transfer_eval(pd.dataset, all, all, static_cast<std::size_t>(d), 0, 0.0);
  EXPECT_EQ(report.compression, 1.0);
  EXPECT_EQ(report.graft_lr, report.full_lr);
  EXPECT_EQ(report.random_features.size(), static_cast<std::size_t>(d));
}

TEST(Transfer, PlantedUnionBeatsRandom) {
  PlantedSpec spec;
  spec.feature_dim = 1000;
  spec.seed = 3;
  const auto pd = generate_planted(spec);
  std::vector<FeatureSet> graft_sets, freq_sets;
  for (const auto& planted : pd.planted) graft_sets.push_back(planted);
  for (int c = 0; c < 3; ++c) freq_sets.push_back(frequency_profile(pd.dataset, c, 5).top_k);
  const auto report = transfer_eval(pd.dataset, graft_sets, freq_sets, 5, 0, 0.0);
  EXPECT_EQ(report.union_size, 15u);
  EXPECT_DOUBLE_EQ(report.compression, 0.015);
  EXPECT_GE(report.graft_lr, 0.95);
  EXPECT_GE(report.graft_lr, report.random_lr + 0.2);
}
