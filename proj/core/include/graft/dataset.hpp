#pragma once

#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace graft {

using Index = Eigen::Index;

/// Node feature matrix, node_count x feature_dim, compressed row storage.
using FeatureMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

enum class Split : std::uint8_t { Train, Val, Test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric adjacency in compressed sparse row form, self-loops excluded.
class AdjacencyCsr {
 public:
  AdjacencyCsr() = default;

  /// Builds from canonical (min, max) pairs; each pair is mirrored.
  static AdjacencyCsr from_undirected(Index node_count, std::span<const std::pair<Index, Index>> edges);

  Index node_count() const { return static_cast<Index>(offsets_.empty() ? 0 : offsets_.size() - 1); }
  std::size_t directed_edge_count() const { return neighbors_.size(); }
  std::size_t undirected_edge_count() const { return neighbors_.size() / 2; }

  std::span<const Index> neighbors(Index node) const {
    return {neighbors_.data() + offsets_[node], static_cast<std::size_t>(offsets_[node + 1] - offsets_[node])};
  }
  Index degree(Index node) const { return offsets_[node + 1] - offsets_[node]; }

  /// Canonical (min, max) pairs in ascending order.
  std::vector<std::pair<Index, Index>> undirected_edges() const;

  const std::vector<Index>& offsets() const { return offsets_; }
  const std::vector<Index>& indices() const { return neighbors_; }

  bool operator==(const AdjacencyCsr&) const = default;

 private:
  std::vector<Index> offsets_;
  std::vector<Index> neighbors_;
};

/// A node-classification graph. Immutable once built by make_dataset or a loader.
struct Dataset {
  std::string name;
  AdjacencyCsr adjacency;
  FeatureMatrix features;
  std::vector<int> labels;
  int class_count = 0;
  std::vector<Split> split;
  std::vector<std::string> feature_names;  // empty, or one per feature

  Index node_count() const { return static_cast<Index>(labels.size()); }
  Index feature_dim() const { return features.cols(); }

  std::vector<Index> nodes_in(Split which) const;
  std::vector<Index> class_nodes(int class_id) const;
  std::vector<Index> class_nodes(int class_id, Split which) const;

  /// Stored name, or the fallback `word_<index>` for anonymous features.
  std::string feature_name(Index feature) const;
};

struct FeatureEntry {
  Index node;
  Index feature;
  double value;
};

/// Validating constructor: canonicalises and de-duplicates edges, drops
/// explicit zeros, and checks every Dataset invariant.
Dataset make_dataset(std::string name, Index node_count, Index feature_dim,
                     std::vector<std::pair<Index, Index>> edges, std::span<const FeatureEntry> features,
                     std::vector<int> labels, std::vector<Split> split, std::vector<std::string> feature_names = {});

/// Throws DatasetError naming the first violated invariant.
void validate(const Dataset& dataset);

/// Reads graph.edges, features.tsv, labels.tsv, splits.tsv and the optional
/// feature_names.tsv from a bundle directory.
Dataset load_dataset(const std::filesystem::path& root);

/// Writes a bundle that load_dataset reads back bit-exactly.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

struct PlantedSpec {
  Index node_count = 300;
  int class_count = 3;
  Index feature_dim = 60;
  Index planted_per_class = 5;
  double intra_edge_prob = 0.05;
  double inter_edge_prob = 0.005;
  double feature_flip_noise = 0.1;
  std::uint64_t seed = 0;
  double train_fraction = 0.3;
  double val_fraction = 0.2;
};

struct PlantedDataset {
  Dataset dataset;
  /// planted[c] lists the ground-truth discriminative feature indices of class c.
  std::vector<std::vector<Index>> planted;
};

/// Homophilic block-model graph whose classes are marked by planted binary features.
PlantedDataset generate_planted(const PlantedSpec& spec);

struct BiasSpec {
  int target_class = 0;
  double noise = 0.05;
  std::uint64_t seed = 42;
};

/// Copy of `dataset` with one extra binary column at index feature_dim():
/// P(z=1 | y=target) = 1 - noise, P(z=1 | y!=target) = noise.
Dataset inject_bias(const Dataset& dataset, const BiasSpec& spec);

}  // namespace graft
