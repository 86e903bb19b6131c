#include "graft/gnn.hpp"

#include "graft/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

namespace graft {

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::GCN:
      return "GCN";
    case Architecture::GAT:
      return "GAT";
    case Architecture::SAGE:
      return "SAGE";
    case Architecture::GIN:
      return "GIN";
  }
  return "GCN";
}

Architecture parse_architecture(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "GCN") return Architecture::GCN;
  if (upper == "GAT") return Architecture::GAT;
  if (upper == "SAGE" || upper == "GRAPHSAGE") return Architecture::SAGE;
  if (upper == "GIN") return Architecture::GIN;
  throw std::invalid_argument("unknown architecture '" + std::string(text) + "'");
}

void validate(const Hyperparams& hp) {
  if (hp.layers != 2) throw std::invalid_argument("hyperparams: only 2-layer models are supported");
  if (hp.hidden_dim <= 0) throw std::invalid_argument("hyperparams: hidden_dim must be positive");
  if (hp.epochs <= 0) throw std::invalid_argument("hyperparams: epochs must be positive");
  if (!(hp.learning_rate > 0.0)) throw std::invalid_argument("hyperparams: learning_rate must be positive");
  if (!(hp.weight_decay >= 0.0)) throw std::invalid_argument("hyperparams: weight_decay must be non-negative");
}

// ---------------------------------------------------------------------------
// Graph operators

namespace {

ad::SparseOperator from_triplets(Index n, std::vector<Eigen::Triplet<double, Index>>& triplets) {
  ad::SparseOperator op(n, n);
  op.setFromTriplets(triplets.begin(), triplets.end());
  op.makeCompressed();
  return op;
}

}  // namespace

GraphOperators GraphOperators::build(const AdjacencyCsr& adjacency) {
  const Index n = adjacency.node_count();
  GraphOperators ops;
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(adjacency.degree(v) + 1));

  std::vector<Eigen::Triplet<double, Index>> gcn, mean, sum;
  ops.attention.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (Index v = 0; v < n; ++v) {
    const auto nb = adjacency.neighbors(v);
    gcn.emplace_back(v, v, inv_sqrt[v] * inv_sqrt[v]);
    sum.emplace_back(v, v, 1.0);
    const double inv_deg = nb.empty() ? 0.0 : 1.0 / static_cast<double>(nb.size());
    bool self_added = false;
    for (Index u : nb) {
      gcn.emplace_back(v, u, inv_sqrt[v] * inv_sqrt[u]);
      mean.emplace_back(v, u, inv_deg);
      sum.emplace_back(v, u, 1.0);
      if (!self_added && u > v) {
        ops.attention.sources.push_back(v);
        self_added = true;
      }
      ops.attention.sources.push_back(u);
    }
    if (!self_added) ops.attention.sources.push_back(v);
    ops.attention.offsets[v + 1] = static_cast<Index>(ops.attention.sources.size());
  }
  ops.gcn = from_triplets(n, gcn);
  ops.mean = from_triplets(n, mean);
  ops.sum_self = from_triplets(n, sum);
  return ops;
}

GraphOperators GraphOperators::restrict_to(std::span<const Index> nodes) const {
  const auto m = static_cast<Index>(nodes.size());
  std::unordered_map<Index, Index> local;
  local.reserve(nodes.size());
  for (Index i = 0; i < m; ++i) local.emplace(nodes[i], i);

  auto restrict_op = [&](const ad::SparseOperator& op) {
    std::vector<Eigen::Triplet<double, Index>> triplets;
    for (Index i = 0; i < m; ++i) {
      for (ad::SparseOperator::InnerIterator it(op, nodes[i]); it; ++it) {
        const auto found = local.find(it.col());
        if (found != local.end()) triplets.emplace_back(i, found->second, it.value());
      }
    }
    ad::SparseOperator out(m, m);
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
  };

  GraphOperators sub;
  sub.gcn = restrict_op(gcn);
  sub.mean = restrict_op(mean);
  sub.sum_self = restrict_op(sum_self);
  sub.attention.offsets.assign(static_cast<std::size_t>(m) + 1, 0);
  for (Index i = 0; i < m; ++i) {
    for (auto k = attention.offsets[nodes[i]]; k < attention.offsets[nodes[i] + 1]; ++k) {
      const auto found = local.find(attention.sources[k]);
      if (found != local.end()) sub.attention.sources.push_back(found->second);
    }
    sub.attention.offsets[i + 1] = static_cast<Index>(sub.attention.sources.size());
  }
  return sub;
}

std::vector<Index> k_hop_ball(const AdjacencyCsr& adjacency, Index center, int hops) {
  std::vector<char> seen(static_cast<std::size_t>(adjacency.node_count()), 0);
  std::vector<Index> frontier{center};
  std::vector<Index> ball{center};
  seen[center] = 1;
  for (int h = 0; h < hops; ++h) {
    std::vector<Index> next;
    for (Index v : frontier) {
      for (Index u : adjacency.neighbors(v)) {
        if (!seen[u]) {
          seen[u] = 1;
          next.push_back(u);
          ball.push_back(u);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(ball.begin(), ball.end());
  return ball;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

struct TensorSpec {
  const char* name;
  Index rows;
  Index cols;
  bool bias;
};

std::vector<TensorSpec> tensor_layout(Architecture arch, Index d, Index h, Index c) {
  switch (arch) {
    case Architecture::GCN:
      return {{"W1", d, h, false}, {"b1", 1, h, true}, {"W2", h, c, false}, {"b2", 1, c, true}};
    case Architecture::SAGE:
      return {{"W1", d, 2 * h, false},
              {"b1", 1, h, true},
              {"W2_self", h, c, false},
              {"W2_neigh", h, c, false},
              {"b2", 1, c, true}};
    case Architecture::GIN:
      return {{"W1a", d, h, false}, {"b1a", 1, h, true}, {"W1b", h, h, false}, {"b1b", 1, h, true},
              {"W2a", h, h, false}, {"b2a", 1, h, true}, {"W2b", h, c, false}, {"b2b", 1, c, true}};
    case Architecture::GAT:
      return {{"W1", d, h, false},       {"att1_src", h, 1, false}, {"att1_dst", h, 1, false},
              {"b1", 1, h, true},        {"W2", h, c, false},       {"att2_src", c, 1, false},
              {"att2_dst", c, 1, false}, {"b2", 1, c, true}};
  }
  return {};
}

// Head parameters on a tape, in canonical order, excluding the input projection.
struct HeadParams {
  std::vector<ad::Var> vars;  // vars[i] corresponds to weights[i + 1]
  const ad::Var& operator[](std::size_t i) const { return vars[i - 1]; }
};

HeadParams head_params(ad::Tape& tape, const std::vector<NamedTensor>& weights, bool requires_grad) {
  HeadParams out;
  for (std::size_t i = 1; i < weights.size(); ++i) out.vars.push_back(tape.leaf(weights[i].value, requires_grad));
  return out;
}

struct Forward {
  ad::Var embedding;
  ad::Var logits;
};

Forward forward_head(Architecture arch, const GraphOperators& ops, const HeadParams& p, ad::Var projection,
                     Index hidden) {
  using namespace ad;
  Forward f;
  switch (arch) {
    case Architecture::GCN: {
      f.embedding = relu(add_row(spmm(ops.gcn, projection), p[1]));
      f.logits = add_row(spmm(ops.gcn, matmul(f.embedding, p[2])), p[3]);
      break;
    }
    case Architecture::SAGE: {
      const Var self = col_block(projection, 0, hidden);
      const Var neigh = col_block(projection, hidden, hidden);
      f.embedding = relu(add_row(add(self, spmm(ops.mean, neigh)), p[1]));
      f.logits = add_row(add(matmul(f.embedding, p[2]), spmm(ops.mean, matmul(f.embedding, p[3]))), p[4]);
      break;
    }
    case Architecture::GIN: {
      const Var u = relu(add_row(spmm(ops.sum_self, projection), p[1]));
      f.embedding = relu(add_row(matmul(u, p[2]), p[3]));
      const Var v = relu(add_row(matmul(spmm(ops.sum_self, f.embedding), p[4]), p[5]));
      f.logits = add_row(matmul(v, p[6]), p[7]);
      break;
    }
    case Architecture::GAT: {
      f.embedding = relu(add_row(graph_attention(projection, p[1], p[2], ops.attention, kGatNegativeSlope), p[3]));
      f.logits = add_row(graph_attention(matmul(f.embedding, p[4]), p[5], p[6], ops.attention, kGatNegativeSlope),
                         p[7]);
      break;
    }
  }
  return f;
}

Matrix row_subset(const FeatureMatrix& features, std::span<const Index> rows, const Matrix& projection_weight) {
  Matrix out = Matrix::Zero(static_cast<Index>(rows.size()), projection_weight.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (FeatureMatrix::InnerIterator it(features, rows[r]); it; ++it) {
      out.row(static_cast<Index>(r)) += it.value() * projection_weight.row(it.col());
    }
  }
  return out;
}

Vector dense_row(const FeatureMatrix& features, Index row) {
  Vector x = Vector::Zero(features.cols());
  for (FeatureMatrix::InnerIterator it(features, row); it; ++it) x(it.col()) = it.value();
  return x;
}

}  // namespace

std::vector<NamedTensor> initial_weights(Architecture arch, Index feature_dim, Index hidden_dim, int class_count,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<NamedTensor> out;
  for (const auto& spec : tensor_layout(arch, feature_dim, hidden_dim, class_count)) {
    Matrix value = Matrix::Zero(spec.rows, spec.cols);
    if (!spec.bias) {
      // SAGE's stacked self|neighbour projection is two d x h blocks.
      const Index fan_out = (arch == Architecture::SAGE && std::string_view(spec.name) == "W1") ? spec.cols / 2
                                                                                               : spec.cols;
      const double limit = std::sqrt(6.0 / static_cast<double>(spec.rows + fan_out));
      for (Index r = 0; r < spec.rows; ++r) {
        for (Index c = 0; c < spec.cols; ++c) value(r, c) = rng.uniform(-limit, limit);
      }
    }
    out.push_back({spec.name, std::move(value)});
  }
  return out;
}

TrainedModel::TrainedModel(Architecture arch, Hyperparams hp, Index feature_dim, int class_count,
                           std::vector<NamedTensor> weights, std::shared_ptr<const GraphOperators> operators,
                           std::shared_ptr<const AdjacencyCsr> adjacency)
    : arch_(arch),
      hp_(hp),
      feature_dim_(feature_dim),
      class_count_(class_count),
      weights_(std::move(weights)),
      operators_(std::move(operators)),
      adjacency_(std::move(adjacency)) {
  const auto layout = tensor_layout(arch_, feature_dim_, hp_.hidden_dim, class_count_);
  if (layout.size() != weights_.size()) throw std::invalid_argument("model: wrong tensor count for architecture");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (weights_[i].name != layout[i].name || weights_[i].value.rows() != layout[i].rows ||
        weights_[i].value.cols() != layout[i].cols) {
      throw std::invalid_argument("model: tensor '" + weights_[i].name + "' does not match the architecture layout");
    }
    if (!weights_[i].value.allFinite()) throw std::invalid_argument("model: non-finite weights");
  }
  if (!operators_ || !adjacency_ || operators_->node_count() != adjacency_->node_count()) {
    throw std::invalid_argument("model: graph operators missing or inconsistent");
  }
}

const Matrix& TrainedModel::weight(std::string_view name) const {
  for (const auto& t : weights_) {
    if (t.name == name) return t.value;
  }
  throw std::out_of_range("model has no tensor '" + std::string(name) + "'");
}

void TrainedModel::check_features(const FeatureMatrix& features) const {
  if (features.cols() != feature_dim_) {
    throw std::invalid_argument("feature dimension mismatch: model expects " + std::to_string(feature_dim_) +
                                ", got " + std::to_string(features.cols()));
  }
  if (features.rows() != operators_->node_count()) {
    throw std::invalid_argument("feature rows differ from the model's graph size");
  }
}

Matrix TrainedModel::logits(const FeatureMatrix& features) const {
  check_features(features);
  ad::Tape tape;
  const auto params = head_params(tape, weights_, false);
  const ad::Var projection = tape.constant(features * weights_.front().value);
  return forward_head(arch_, *operators_, params, projection, hp_.hidden_dim).logits.value();
}

Matrix TrainedModel::embeddings(const FeatureMatrix& features) const {
  check_features(features);
  ad::Tape tape;
  const auto params = head_params(tape, weights_, false);
  const ad::Var projection = tape.constant(features * weights_.front().value);
  return forward_head(arch_, *operators_, params, projection, hp_.hidden_dim).embedding.value();
}

Vector TrainedModel::input_gradient(const FeatureMatrix& features, Index node, int class_id) const {
  return input_gradient(features, node, class_id, node);
}

Vector TrainedModel::input_gradient(const FeatureMatrix& features, Index node, int class_id, Index wrt_node) const {
  check_features(features);
  if (node < 0 || node >= features.rows() || wrt_node < 0 || wrt_node >= features.rows()) {
    throw std::out_of_range("input_gradient: node out of range");
  }
  if (class_id < 0 || class_id >= class_count_) throw std::out_of_range("input_gradient: class out of range");
  ad::Tape tape;
  const auto params = head_params(tape, weights_, false);
  const ad::Var projection = tape.leaf(features * weights_.front().value, true);
  const auto f = forward_head(arch_, *operators_, params, projection, hp_.hidden_dim);
  tape.backward(ad::element(f.logits, node, class_id));
  Vector grad = weights_.front().value * projection.grad().row(wrt_node).transpose();
  if (!grad.allFinite()) throw GradientError("non-finite input gradient");
  return grad;
}

namespace {

class GnnProbe final : public NodeProbe {
 public:
  GnnProbe(const TrainedModel& model, const FeatureMatrix& features, Index node)
      : model_(model),
        ball_(k_hop_ball(model.adjacency(), node, 2)),
        ops_(model.operators().restrict_to(ball_)),
        self_(std::lower_bound(ball_.begin(), ball_.end(), node) - ball_.begin()),
        x_(dense_row(features, node)) {
    base_ = row_subset(features, ball_, model.weights().front().value);
    own_projection_ = base_.row(self_);
  }

  double logit(int class_id, double alpha) override {
    check_class(class_id);
    ad::Tape tape;
    const auto params = head_params(tape, model_.weights(), false);
    Matrix p = base_;
    p.row(self_) = alpha * own_projection_;
    const auto f = forward_head(model_.arch(), ops_, params, tape.constant(std::move(p)), model_.hidden_dim());
    return f.logits.value()(self_, class_id);
  }

  LogitGradient logit_and_gradient(int class_id, double alpha) override {
    check_class(class_id);
    ad::Tape tape;
    const auto params = head_params(tape, model_.weights(), false);
    Matrix p = base_;
    p.row(self_) = alpha * own_projection_;
    const ad::Var projection = tape.leaf(std::move(p), true);
    const auto f = forward_head(model_.arch(), ops_, params, projection, model_.hidden_dim());
    const ad::Var target = ad::element(f.logits, self_, class_id);
    tape.backward(target);
    LogitGradient out;
    out.logit = target.value()(0, 0);
    out.gradient = model_.weights().front().value * projection.grad().row(self_).transpose();
    return out;
  }

  const Vector& features() const override { return x_; }

 private:
  void check_class(int class_id) const {
    if (class_id < 0 || class_id >= model_.class_count()) throw std::out_of_range("probe: class out of range");
  }

  const TrainedModel& model_;
  std::vector<Index> ball_;
  GraphOperators ops_;
  Index self_;
  Vector x_;
  Matrix base_;
  Eigen::RowVectorXd own_projection_;
};

class LinearProbe final : public NodeProbe {
 public:
  LinearProbe(const LinearDecoderModel& model, Vector x) : model_(model), x_(std::move(x)) {}

  double logit(int class_id, double alpha) override { return model_.logit(alpha * x_, class_id); }

  LogitGradient logit_and_gradient(int class_id, double alpha) override {
    return {model_.logit(alpha * x_, class_id), model_.class_weight(class_id)};
  }

  const Vector& features() const override { return x_; }

 private:
  const LinearDecoderModel& model_;
  Vector x_;
};

}  // namespace

std::unique_ptr<NodeProbe> TrainedModel::probe(const FeatureMatrix& features, Index node) const {
  check_features(features);
  if (node < 0 || node >= features.rows()) throw std::out_of_range("probe: node out of range");
  return std::make_unique<GnnProbe>(*this, features, node);
}

LinearDecoderModel::LinearDecoderModel(Matrix decoder, Matrix readout, Vector bias) : bias_(std::move(bias)) {
  if (readout.cols() != decoder.rows()) throw std::invalid_argument("linear decoder: readout/decoder mismatch");
  if (bias_.size() != readout.rows()) throw std::invalid_argument("linear decoder: bias length mismatch");
  class_weights_ = readout * decoder;
}

LinearDecoderModel LinearDecoderModel::direct(Matrix class_weights, Vector bias) {
  const Index d = class_weights.cols();
  return LinearDecoderModel(Matrix::Identity(d, d), std::move(class_weights), std::move(bias));
}

Matrix LinearDecoderModel::logits(const FeatureMatrix& features) const {
  if (features.cols() != feature_dim()) throw std::invalid_argument("feature dimension mismatch");
  Matrix out = features * class_weights_.transpose();
  out.rowwise() += bias_.transpose();
  return out;
}

std::unique_ptr<NodeProbe> LinearDecoderModel::probe(const FeatureMatrix& features, Index node) const {
  if (features.cols() != feature_dim()) throw std::invalid_argument("feature dimension mismatch");
  return std::make_unique<LinearProbe>(*this, dense_row(features, node));
}

// ---------------------------------------------------------------------------
// Training

TrainedModel train(const Dataset& dataset, Architecture arch, const Hyperparams& hp) {
  validate(hp);
  const auto train_nodes = dataset.nodes_in(Split::Train);
  if (train_nodes.empty()) throw std::invalid_argument("train: empty training split");

  auto adjacency = std::make_shared<const AdjacencyCsr>(dataset.adjacency);
  auto operators = std::make_shared<const GraphOperators>(GraphOperators::build(dataset.adjacency));
  std::vector<NamedTensor> weights =
      initial_weights(arch, dataset.feature_dim(), hp.hidden_dim, dataset.class_count, hp.seed);

  std::vector<Matrix> first_moment, second_moment;
  for (const auto& w : weights) {
    first_moment.push_back(Matrix::Zero(w.value.rows(), w.value.cols()));
    second_moment.push_back(Matrix::Zero(w.value.rows(), w.value.cols()));
  }

  TrainingSummary summary;
  double beta1_power = 1.0;
  double beta2_power = 1.0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const auto& w : weights) leaves.push_back(tape.leaf(w.value, true));
    HeadParams params;
    params.vars.assign(leaves.begin() + 1, leaves.end());
    const ad::Var projection = ad::spmm(dataset.features, leaves.front());
    const auto f = forward_head(arch, *operators, params, projection, hp.hidden_dim);
    const ad::Var loss = ad::softmax_cross_entropy(f.logits, dataset.labels, train_nodes);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw TrainingError("training diverged: non-finite loss at epoch " + std::to_string(epoch), epoch);
    }
    if (epoch == 0) summary.initial_train_accuracy = accuracy(f.logits.value(), dataset.labels, train_nodes);
    summary.final_loss = loss_value;
    tape.backward(loss);

    beta1_power *= kAdamBeta1;
    beta2_power *= kAdamBeta2;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      Matrix g = leaves[i].grad();
      if (g.size() == 0) continue;
      if (hp.weight_decay > 0.0) g += hp.weight_decay * weights[i].value;
      first_moment[i] = kAdamBeta1 * first_moment[i] + (1.0 - kAdamBeta1) * g;
      second_moment[i] = kAdamBeta2 * second_moment[i] + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
      const double step = hp.learning_rate / (1.0 - beta1_power);
      const double v_scale = 1.0 / std::sqrt(1.0 - beta2_power);
      weights[i].value.array() -=
          step * first_moment[i].array() / ((second_moment[i].array().sqrt() * v_scale) + kAdamEpsilon);
    }
    for (const auto& w : weights) {
      if (!w.value.allFinite()) {
        throw TrainingError("training diverged: non-finite weights after epoch " + std::to_string(epoch), epoch);
      }
    }
  }

  TrainedModel model(arch, hp, dataset.feature_dim(), dataset.class_count, std::move(weights), std::move(operators),
                     std::move(adjacency));
  const Matrix logits = model.logits(dataset.features);
  summary.train_accuracy = accuracy(logits, dataset.labels, train_nodes);
  const auto val_nodes = dataset.nodes_in(Split::Val);
  const auto test_nodes = dataset.nodes_in(Split::Test);
  summary.val_accuracy = val_nodes.empty() ? 0.0 : accuracy(logits, dataset.labels, val_nodes);
  summary.test_accuracy = test_nodes.empty() ? 0.0 : accuracy(logits, dataset.labels, test_nodes);
  model.set_summary(summary);
  return model;
}

int argmax_row(const Matrix& logits, Index row) {
  int best = 0;
  for (Index c = 1; c < logits.cols(); ++c) {
    if (logits(row, c) > logits(row, best)) best = static_cast<int>(c);
  }
  return best;
}

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> nodes) {
  if (nodes.empty()) throw std::invalid_argument("accuracy: empty node mask");
  std::size_t hits = 0;
  for (Index v : nodes) hits += argmax_row(logits, v) == labels[v] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

double accuracy(const DifferentiableClassifier& model, const Dataset& dataset, Split which,
                const FeatureMatrix* features_override) {
  const auto nodes = dataset.nodes_in(which);
  const Matrix logits = model.logits(features_override ? *features_override : dataset.features);
  return accuracy(logits, dataset.labels, nodes);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(r).array() - peak).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

}  // namespace graft
