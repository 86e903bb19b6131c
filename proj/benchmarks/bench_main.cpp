#include "graft/attribution.hpp"
#include "graft/dataset.hpp"
#include "graft/evaluation.hpp"
#include "graft/exemplars.hpp"
#include "graft/gnn.hpp"
#include "graft/pipeline.hpp"
#include "graft/random.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <numeric>

using namespace graft;

namespace {

const PlantedDataset& planted() {
  static const PlantedDataset pd = [] {
    PlantedSpec spec;
    spec.node_count = 1000;
    spec.feature_dim = 500;
    return generate_planted(spec);
  }();
  return pd;
}

const TrainedModel& model(Architecture arch) {
  static std::map<Architecture, TrainedModel> cache;
  auto it = cache.find(arch);
  if (it == cache.end()) {
    Hyperparams hp;
    hp.epochs = 50;
    it = cache.emplace(arch, train(planted().dataset, arch, hp)).first;
  }
  return it->second;
}

void BM_IntegratedGradients(benchmark::State& state) {
  const auto arch = static_cast<Architecture>(state.range(0));
  const auto& m = model(arch);
  const auto& ds = planted().dataset;
  Index node = 0;
  for (auto _ : state) {
    auto ig = integrated_gradients(m, ds.features, node, ds.labels[node], static_cast<int>(state.range(1)));
    benchmark::DoNotOptimize(ig.values.data());
    node = (node + 37) % ds.node_count();
  }
  state.SetLabel(std::string(to_string(arch)));
}
BENCHMARK(BM_IntegratedGradients)
    ->ArgsProduct({{static_cast<long>(Architecture::GCN), static_cast<long>(Architecture::GAT),
                    static_cast<long>(Architecture::SAGE), static_cast<long>(Architecture::GIN)},
                   {20, 50}})
    ->Unit(benchmark::kMillisecond);

void BM_FarthestPointSampling(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  Rng rng(1);
  Eigen::MatrixXd e(n, 64);
  for (Index i = 0; i < e.size(); ++i) e.data()[i] = rng.uniform(-1.0, 1.0);
  std::vector<Index> nodes(static_cast<std::size_t>(n));
  std::iota(nodes.begin(), nodes.end(), Index{0});
  for (auto _ : state) benchmark::DoNotOptimize(fps_select(e, nodes, 10).nodes.data());
  state.SetComplexityN(n);
}
BENCHMARK(BM_FarthestPointSampling)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oN);

void BM_TrainEpochs(benchmark::State& state) {
  const auto arch = static_cast<Architecture>(state.range(0));
  Hyperparams hp;
  hp.epochs = 20;
  for (auto _ : state) benchmark::DoNotOptimize(train(planted().dataset, arch, hp).summary().test_accuracy);
  state.SetLabel(std::string(to_string(arch)));
}
BENCHMARK(BM_TrainEpochs)
    ->DenseRange(0, 3)
    ->Unit(benchmark::kMillisecond);

void BM_ExplainAllClasses(benchmark::State& state) {
  const auto& m = model(Architecture::GCN);
  for (auto _ : state) benchmark::DoNotOptimize(explain(m, planted().dataset, ExplainSettings{}).size());
}
BENCHMARK(BM_ExplainAllClasses)->Unit(benchmark::kMillisecond);

void BM_Fidelity(benchmark::State& state) {
  const auto& m = model(Architecture::GCN);
  const auto profiles = explain(m, planted().dataset, ExplainSettings{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(fidelity(m, planted().dataset, std::span<const ClassProfile>(profiles), 20).fid_plus);
  }
}
BENCHMARK(BM_Fidelity)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
