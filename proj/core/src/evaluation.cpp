#include "graft/evaluation.hpp"

#include "graft/random.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace graft {

namespace {

// Keeps (keep=true) or zeroes (keep=false) the listed columns in the rows of `rows`.
FeatureMatrix mask_rows(const FeatureMatrix& features, std::span<const Index> rows, std::span<const Index> columns,
                        bool keep) {
  std::vector<char> in_set(static_cast<std::size_t>(features.cols()), 0);
  for (Index i : columns) in_set[i] = 1;
  std::vector<char> masked(static_cast<std::size_t>(features.rows()), 0);
  for (Index v : rows) masked[v] = 1;

  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(static_cast<std::size_t>(features.nonZeros()));
  for (Index r = 0; r < features.outerSize(); ++r) {
    for (FeatureMatrix::InnerIterator it(features, r); it; ++it) {
      if (masked[r] && (in_set[it.col()] != 0) != keep) continue;
      triplets.emplace_back(r, it.col(), it.value());
    }
  }
  FeatureMatrix out(features.rows(), features.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

double mean_of_defined(const std::vector<ClassFidelity>& classes, std::optional<double> ClassFidelity::*field) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& c : classes) {
    if (c.*field) {
      sum += *(c.*field);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

FidelityReport fidelity(const DifferentiableClassifier& model, const Dataset& dataset,
                        std::span<const FeatureSet> class_sets, std::size_t K) {
  if (static_cast<int>(class_sets.size()) != dataset.class_count) {
    throw std::invalid_argument("fidelity: need one feature set per class");
  }
  FidelityReport report;
  report.K = K;
  const Matrix base_logits = model.logits(dataset.features);
  const auto test_nodes = dataset.nodes_in(Split::Test);
  report.gnn_accuracy = accuracy(base_logits, dataset.labels, test_nodes);

  for (int c = 0; c < dataset.class_count; ++c) {
    ClassFidelity cf;
    cf.class_id = c;
    const auto nodes = dataset.class_nodes(c, Split::Test);
    cf.test_nodes = nodes.size();
    if (!nodes.empty()) {
      const auto& set = class_sets[c];
      const std::span<const Index> chosen(set.data(), std::min(set.size(), K));
      cf.unmasked_accuracy = accuracy(base_logits, dataset.labels, nodes);
      const FeatureMatrix kept = mask_rows(dataset.features, nodes, chosen, true);
      cf.kept_accuracy = accuracy(model.logits(kept), dataset.labels, nodes);
      const FeatureMatrix removed = mask_rows(dataset.features, nodes, chosen, false);
      cf.removed_accuracy = accuracy(model.logits(removed), dataset.labels, nodes);
      if (cf.unmasked_accuracy > 0.0) cf.fid_minus = cf.kept_accuracy / cf.unmasked_accuracy;
      cf.fid_plus = cf.unmasked_accuracy - cf.removed_accuracy;
    }
    report.classes.push_back(cf);
  }
  report.fid_minus = mean_of_defined(report.classes, &ClassFidelity::fid_minus);
  report.fid_plus = mean_of_defined(report.classes, &ClassFidelity::fid_plus);
  return report;
}

FidelityReport fidelity(const DifferentiableClassifier& model, const Dataset& dataset,
                        std::span<const ClassProfile> profiles, std::size_t K) {
  std::vector<FeatureSet> sets;
  for (const auto& p : profiles) sets.push_back(p.top_indices());
  return fidelity(model, dataset, sets, K);
}

double jaccard(std::span<const Index> a, std::span<const Index> b) {
  std::vector<Index> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  x.erase(std::unique(x.begin(), x.end()), x.end());
  std::sort(y.begin(), y.end());
  y.erase(std::unique(y.begin(), y.end()), y.end());
  if (x.empty() && y.empty()) return 1.0;
  std::vector<Index> common;
  std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
  const std::size_t uni = x.size() + y.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

double jaccard_stability(std::span<const FeatureSet> sets) {
  if (sets.size() < 2) throw std::invalid_argument("jaccard_stability: need at least 2 seeds");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      sum += jaccard(sets[i], sets[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double consensus(std::span<const FeatureSet> sets, int tau, std::size_t K) {
  if (tau < 1) throw std::invalid_argument("consensus: tau must be positive");
  if (sets.size() < static_cast<std::size_t>(tau)) {
    throw std::invalid_argument("consensus: need at least tau architectures");
  }
  if (K == 0) throw std::invalid_argument("consensus: K must be positive");
  std::map<Index, int> votes;
  for (const auto& set : sets) {
    FeatureSet unique(set.begin(), set.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (Index i : unique) ++votes[i];
  }
  std::size_t agreed = 0;
  for (const auto& [feature, count] : votes) agreed += count >= tau ? 1 : 0;
  return std::min(1.0, static_cast<double>(agreed) / static_cast<double>(K));
}

StabilityReport stability_report(std::span<const std::vector<FeatureSet>> per_seed,
                                 std::span<const std::uint64_t> seeds) {
  if (per_seed.size() < 2) throw std::invalid_argument("stability: need at least 2 seeds");
  StabilityReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  const std::size_t classes = per_seed.front().size();
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<FeatureSet> sets;
    for (const auto& run : per_seed) sets.push_back(run.at(c));
    report.per_class.push_back(jaccard_stability(sets));
  }
  for (double j : report.per_class) report.mean += j;
  if (classes > 0) report.mean /= static_cast<double>(classes);
  return report;
}

ConsensusReport consensus_report(std::span<const std::vector<FeatureSet>> per_arch,
                                 std::span<const std::string> architectures, int tau, std::size_t K) {
  ConsensusReport report;
  report.architectures.assign(architectures.begin(), architectures.end());
  report.tau = tau;
  report.K = K;
  if (per_arch.size() < static_cast<std::size_t>(std::max(tau, 1))) {
    throw std::invalid_argument("consensus: need at least tau architectures");
  }
  const std::size_t classes = per_arch.front().size();
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<FeatureSet> sets;
    for (const auto& run : per_arch) sets.push_back(run.at(c));
    report.per_class.push_back(consensus(sets, tau, K));
  }
  for (double v : report.per_class) report.mean += v;
  if (classes > 0) report.mean /= static_cast<double>(classes);
  return report;
}

FeatureSet feature_union(std::span<const FeatureSet> sets, std::size_t K) {
  FeatureSet out;
  for (const auto& set : sets) out.insert(out.end(), set.begin(), set.begin() + std::min(K, set.size()));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TransferReport transfer_eval(const Dataset& dataset, std::span<const FeatureSet> graft_sets,
                             std::span<const FeatureSet> freq_sets, std::size_t K, std::uint64_t seed,
                             double gnn_accuracy, const LogRegOptions& options) {
  TransferReport report;
  report.K = K;
  report.seed = seed;
  report.gnn_accuracy = gnn_accuracy;
  const Index d = dataset.feature_dim();

  report.graft_union = feature_union(graft_sets, K);
  const FeatureSet freq_union = feature_union(freq_sets, K);
  report.union_size = report.graft_union.size();
  report.freq_union_size = freq_union.size();
  report.compression = static_cast<double>(report.union_size) / static_cast<double>(d);

  Rng rng(seed);
  for (std::size_t i : sample_without_replacement(static_cast<std::size_t>(d), report.union_size, rng)) {
    report.random_features.push_back(static_cast<Index>(i));
  }
  std::sort(report.random_features.begin(), report.random_features.end());

  FeatureSet all(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) all[i] = i;

  const auto fit = [&](const FeatureSet& columns) {
    return train_logreg(select_columns(dataset.features, columns), dataset.labels, dataset.split,
                        dataset.class_count, seed, options)
        .test_accuracy;
  };
  report.graft_lr = fit(report.graft_union);
  report.freq_lr = fit(freq_union);
  report.full_lr = fit(all);
  report.random_lr = fit(report.random_features);
  return report;
}

}  // namespace graft
