#include "graft/audit.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace graft;

TEST(Audit, HyperparamsUseRetrainingBudget) {
  Hyperparams hp;
  hp.epochs = 17;
  hp.seed = 9;
  const auto out = audit_hyperparams(hp);
  EXPECT_EQ(out.epochs, 300);
  EXPECT_EQ(out.seed, 9u);
  EXPECT_EQ(out.hidden_dim, hp.hidden_dim);
}

class NoiselessAudit : public ::testing::TestWithParam<Architecture> {};

TEST_P(NoiselessAudit, PerfectCorrelateIsDetected) {
  const auto pd = generate_planted({});
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Hyperparams hp;
    hp.seed = seed;
    const auto report = run_bias_audit(pd.dataset, GetParam(), {0, 0.0, seed}, audit_hyperparams(hp));
    EXPECT_TRUE(report.detected) << "seed " << seed;
    ASSERT_TRUE(report.rank.has_value());
    EXPECT_GE(*report.rank, 1u);
    EXPECT_LE(*report.rank, kDetectionTopK);
    EXPECT_EQ(report.injected_feature, pd.dataset.feature_dim());
    EXPECT_EQ(report.model_seed, seed);
  }
}

INSTANTIATE_TEST_SUITE_P(Archs, NoiselessAudit,
                         ::testing::Values(Architecture::GCN, Architecture::SAGE, Architecture::GIN),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Audit, InputDatasetIsUntouched) {
  const auto pd = generate_planted({});
  const Dataset before = pd.dataset;
  Hyperparams hp;
  hp.epochs = 20;
  run_bias_audit(pd.dataset, Architecture::GCN, {1, 0.1, 4}, hp);
  EXPECT_EQ(pd.dataset.feature_dim(), before.feature_dim());
  EXPECT_EQ((pd.dataset.features - before.features).norm(), 0.0);
  EXPECT_EQ(pd.dataset.labels, before.labels);
}

TEST(Audit, SweepsProduceOneReportPerSetting) {
  const auto pd = generate_planted({});
  Hyperparams hp;
  hp.epochs = 20;
  const auto noise = noise_sweep(pd.dataset, Architecture::GCN, 2, kNoiseSweep, 5, hp);
  ASSERT_EQ(noise.size(), 5u);
  for (std::size_t i = 0; i < noise.size(); ++i) {
    EXPECT_EQ(noise[i].spec.noise, kNoiseSweep[i]);
    EXPECT_EQ(noise[i].spec.target_class, 2);
    EXPECT_EQ(noise[i].spec.seed, 5u);
  }
  const auto multi = multiclass_sweep(pd.dataset, Architecture::GCN, 0.05, 5, hp);
  ASSERT_EQ(multi.size(), 3u);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(multi[c].spec.target_class, c);
  const std::vector<int> only{1};
  EXPECT_EQ(multiclass_sweep(pd.dataset, Architecture::GCN, 0.05, 5, hp, only).size(), 1u);
}

TEST(Audit, NoiselessCorrelateTopsMeanAggregatorProfiles) {
  const auto pd = generate_planted({});
  const auto reports = multiclass_sweep(pd.dataset, Architecture::SAGE, 0.0, 0, audit_hyperparams({}));
  for (const auto& r : reports) {
    EXPECT_EQ(r.rank, std::optional<std::size_t>(1)) << "target " << r.spec.target_class;
    EXPECT_GT(r.retrain_test_accuracy, 0.9);
  }
}

TEST(Audit, TwoClassBothTargetsRankFirst) {
  PlantedSpec spec;
  spec.class_count = 2;
  spec.node_count = 200;
  const auto pd = generate_planted(spec);
  const auto reports = multiclass_sweep(pd.dataset, Architecture::SAGE, 0.0, 0, audit_hyperparams({}));
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.rank, std::optional<std::size_t>(1)) << "target " << r.spec.target_class;
    // The column is zero on every non-target node, so it carries no attribution there.
    EXPECT_EQ(r.other_class_hits, 0);
  }
}
