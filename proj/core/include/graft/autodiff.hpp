#pragma once

// Minimal reverse-accumulation engine over dense matrices.
//
// A Tape records nodes in creation order, which is already a topological
// order, so backward() is a single reverse sweep. Sparse operators enter only
// as constants (graph propagation matrices, input features).

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace graft::ad {

using Matrix = Eigen::MatrixXd;
using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor, Eigen::Index>;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and accumulates gradients into
  /// every node that requires them.
  void backward(Var root);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Operator implementations use these to register nodes.
  using Backward = std::function<void(Tape&, std::size_t self)>;
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Matrix& grad_mut(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

/// a * b
Var matmul(Var a, Var b);
/// op * a with a constant sparse operator (op must outlive the tape).
Var spmm(const SparseOperator& op, Var a);
/// a + b, same shape.
Var add(Var a, Var b);
/// Adds a 1 x cols row vector to every row.
Var add_row(Var a, Var row);
Var relu(Var a);
/// Columns [start, start + count).
Var col_block(Var a, Eigen::Index start, Eigen::Index count);
/// 1 x 1 view of a(row, col).
Var element(Var a, Eigen::Index row, Eigen::Index col);
/// Mean cross-entropy of softmax(logits) over the listed rows.
Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const Eigen::Index> rows);

/// Row-compressed neighbourhoods for attention: the sources attended by
/// target i are sources[offsets[i] .. offsets[i+1]).
struct AttentionGraph {
  std::vector<Eigen::Index> offsets;
  std::vector<Eigen::Index> sources;
};

/// Single-head graph attention aggregation:
///   e_ij = LeakyReLU(<h_j, att_src> + <h_i, att_dst>), alpha_i = softmax_j(e_i.),
///   out_i = sum_j alpha_ij h_j.
/// h is n x f, att_src and att_dst are f x 1.
Var graph_attention(Var h, Var att_src, Var att_dst, const AttentionGraph& graph, double negative_slope);

}  // namespace graft::ad
