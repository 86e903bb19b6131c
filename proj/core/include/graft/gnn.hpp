#pragma once

#include "graft/autodiff.hpp"
#include "graft/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graft {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Architecture : std::uint32_t { GCN = 0, GAT = 1, SAGE = 2, GIN = 3 };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view text);
inline constexpr Architecture kAllArchitectures[] = {Architecture::GCN, Architecture::GAT, Architecture::SAGE,
                                                     Architecture::GIN};

struct Hyperparams {
  int layers = 2;
  Index hidden_dim = 64;
  int epochs = 500;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument unless every field is positive and layers == 2.
void validate(const Hyperparams& hp);

inline constexpr double kGatNegativeSlope = 0.2;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class GradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Propagation matrices derived from the adjacency, shared by every model
/// trained on the same graph.
struct GraphOperators {
  ad::SparseOperator gcn;       // D^-1/2 (A + I) D^-1/2
  ad::SparseOperator mean;      // row-normalised A (zero rows for isolated nodes)
  ad::SparseOperator sum_self;  // A + I
  ad::AttentionGraph attention;  // in-neighbours plus self

  static GraphOperators build(const AdjacencyCsr& adjacency);

  /// Principal sub-operators on `nodes` (sorted ascending). Rows whose full
  /// neighbourhood lies inside `nodes` keep their exact values.
  GraphOperators restrict_to(std::span<const Index> nodes) const;

  Index node_count() const { return gcn.rows(); }
};

/// Nodes within `hops` edges of `center`, sorted ascending.
std::vector<Index> k_hop_ball(const AdjacencyCsr& adjacency, Index center, int hops);

struct LogitGradient {
  double logit = 0.0;
  Vector gradient;  // w.r.t. the probed node's own feature row
};

/// Evaluates one node's logits as a function of that node's own feature row
/// scaled by alpha, all other rows held fixed.
class NodeProbe {
 public:
  virtual ~NodeProbe() = default;
  virtual double logit(int class_id, double alpha) = 0;
  virtual LogitGradient logit_and_gradient(int class_id, double alpha) = 0;
  /// Unscaled feature row of the probed node.
  virtual const Vector& features() const = 0;
};

/// A node classifier whose class logits are differentiable in the input features.
class DifferentiableClassifier {
 public:
  virtual ~DifferentiableClassifier() = default;
  virtual Index feature_dim() const = 0;
  virtual int class_count() const = 0;
  virtual std::unique_ptr<NodeProbe> probe(const FeatureMatrix& features, Index node) const = 0;
  /// node x class logits for the whole graph.
  virtual Matrix logits(const FeatureMatrix& features) const = 0;
};

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct TrainingSummary {
  double initial_train_accuracy = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Canonical tensor names and shapes for an architecture; the first tensor is
/// always the input projection applied to the raw features.
std::vector<NamedTensor> initial_weights(Architecture arch, Index feature_dim, Index hidden_dim, int class_count,
                                         std::uint64_t seed);

class TrainedModel final : public DifferentiableClassifier {
 public:
  TrainedModel(Architecture arch, Hyperparams hp, Index feature_dim, int class_count,
               std::vector<NamedTensor> weights, std::shared_ptr<const GraphOperators> operators,
               std::shared_ptr<const AdjacencyCsr> adjacency);

  Architecture arch() const { return arch_; }
  const Hyperparams& hyperparams() const { return hp_; }
  Index feature_dim() const override { return feature_dim_; }
  int class_count() const override { return class_count_; }
  Index hidden_dim() const { return hp_.hidden_dim; }
  const std::vector<NamedTensor>& weights() const { return weights_; }
  const Matrix& weight(std::string_view name) const;
  const GraphOperators& operators() const { return *operators_; }
  const AdjacencyCsr& adjacency() const { return *adjacency_; }

  const TrainingSummary& summary() const { return summary_; }
  void set_summary(const TrainingSummary& summary) { summary_ = summary; }

  Matrix logits(const FeatureMatrix& features) const override;
  /// Layer-1 post-activation output, node x hidden_dim.
  Matrix embeddings(const FeatureMatrix& features) const;

  /// d f_class(node) / d x_node over the full graph.
  Vector input_gradient(const FeatureMatrix& features, Index node, int class_id) const;
  /// d f_class(node) / d x_wrt_node over the full graph.
  Vector input_gradient(const FeatureMatrix& features, Index node, int class_id, Index wrt_node) const;

  /// Evaluates on the 2-hop receptive field of `node` only.
  std::unique_ptr<NodeProbe> probe(const FeatureMatrix& features, Index node) const override;

 private:
  void check_features(const FeatureMatrix& features) const;

  Architecture arch_;
  Hyperparams hp_;
  Index feature_dim_;
  int class_count_;
  std::vector<NamedTensor> weights_;
  std::shared_ptr<const GraphOperators> operators_;
  std::shared_ptr<const AdjacencyCsr> adjacency_;
  TrainingSummary summary_;
};

/// f_c(x) = a_c . x + b_c with a_c = B^T w_c, evaluated on a node's own features.
class LinearDecoderModel final : public DifferentiableClassifier {
 public:
  /// decoder: h x d (B), readout: C x h (rows w_c), bias: C.
  LinearDecoderModel(Matrix decoder, Matrix readout, Vector bias);
  /// a: C x d class weights used directly (B = identity).
  static LinearDecoderModel direct(Matrix class_weights, Vector bias);

  Index feature_dim() const override { return class_weights_.cols(); }
  int class_count() const override { return static_cast<int>(class_weights_.rows()); }
  Vector class_weight(int class_id) const { return class_weights_.row(class_id).transpose(); }
  double bias(int class_id) const { return bias_(class_id); }
  double logit(const Vector& x, int class_id) const { return class_weights_.row(class_id).dot(x) + bias_(class_id); }

  Matrix logits(const FeatureMatrix& features) const override;
  std::unique_ptr<NodeProbe> probe(const FeatureMatrix& features, Index node) const override;

 private:
  Matrix class_weights_;  // C x d
  Vector bias_;
};

TrainedModel train(const Dataset& dataset, Architecture arch, const Hyperparams& hp);

/// Fraction of `which`-split nodes whose argmax logit equals the label,
/// evaluated on `features_override` when given.
double accuracy(const DifferentiableClassifier& model, const Dataset& dataset, Split which,
                const FeatureMatrix* features_override = nullptr);

/// Accuracy over an explicit node list given precomputed logits.
double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> nodes);

/// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

/// Argmax with ties to the lowest class id.
int argmax_row(const Matrix& logits, Index row);

}  // namespace graft
