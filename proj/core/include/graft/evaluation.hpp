#pragma once

#include "graft/dataset.hpp"
#include "graft/gnn.hpp"
#include "graft/logreg.hpp"
#include "graft/profiles.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace graft {

using FeatureSet = std::vector<Index>;

inline constexpr std::string_view kPerTrueClassMasking = "per-true-class";

struct ClassFidelity {
  int class_id = 0;
  std::size_t test_nodes = 0;
  double unmasked_accuracy = 0.0;
  double kept_accuracy = 0.0;     // only T_c retained
  double removed_accuracy = 0.0;  // T_c zeroed
  std::optional<double> fid_minus;  // kept / unmasked; absent when unmasked accuracy is 0
  std::optional<double> fid_plus;   // unmasked - removed; absent without test nodes
};

struct FidelityReport {
  std::size_t K = 0;
  double gnn_accuracy = 0.0;  // test split, unmasked
  std::string masking_policy{kPerTrueClassMasking};
  std::vector<ClassFidelity> classes;
  double fid_minus = 0.0;  // mean over classes with a defined value
  double fid_plus = 0.0;
};

/// Fid- and Fid+ for per-class feature sets (indexed by class). Masking
/// touches only the feature rows of class-c test nodes; everything else keeps
/// its original features.
FidelityReport fidelity(const DifferentiableClassifier& model, const Dataset& dataset,
                        std::span<const FeatureSet> class_sets, std::size_t K);

/// Uses the first K entries of each profile's ranking.
FidelityReport fidelity(const DifferentiableClassifier& model, const Dataset& dataset,
                        std::span<const ClassProfile> profiles, std::size_t K);

/// |a ∩ b| / |a ∪ b|; two empty sets count as identical.
double jaccard(std::span<const Index> a, std::span<const Index> b);

/// Mean pairwise Jaccard over all seed pairs. Throws with fewer than 2 sets.
double jaccard_stability(std::span<const FeatureSet> sets);

inline constexpr int kDefaultConsensusThreshold = 3;

/// Fraction of K slots taken by features that at least `tau` architectures select.
double consensus(std::span<const FeatureSet> sets, int tau, std::size_t K);

struct StabilityReport {
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_class;
  double mean = 0.0;
};

/// per_seed[s][c] is the top-K set of class c under seed s.
StabilityReport stability_report(std::span<const std::vector<FeatureSet>> per_seed, std::span<const std::uint64_t> seeds);

struct ConsensusReport {
  std::vector<std::string> architectures;
  int tau = kDefaultConsensusThreshold;
  std::size_t K = 0;
  std::vector<double> per_class;
  double mean = 0.0;
};

/// per_arch[m][c] is the top-K set of class c under architecture m.
ConsensusReport consensus_report(std::span<const std::vector<FeatureSet>> per_arch,
                                 std::span<const std::string> architectures, int tau, std::size_t K);

struct TransferReport {
  std::size_t K = 0;
  double graft_lr = 0.0;
  double freq_lr = 0.0;
  double full_lr = 0.0;
  double random_lr = 0.0;
  double gnn_accuracy = 0.0;
  double compression = 0.0;  // |GRAFT union| / d
  std::size_t union_size = 0;
  std::size_t freq_union_size = 0;
  FeatureSet graft_union;
  FeatureSet random_features;
  std::uint64_t seed = 0;
};

/// Sorted union of the first K entries of each set.
FeatureSet feature_union(std::span<const FeatureSet> sets, std::size_t K);

/// Trains four logistic regressions on the GRAFT union, the frequency union,
/// all features, and a random feature set of the GRAFT union's size.
TransferReport transfer_eval(const Dataset& dataset, std::span<const FeatureSet> graft_sets,
                             std::span<const FeatureSet> freq_sets, std::size_t K, std::uint64_t seed,
                             double gnn_accuracy, const LogRegOptions& options = {});

}  // namespace graft
