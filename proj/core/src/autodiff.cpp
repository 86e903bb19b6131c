#include "graft/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace graft::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Matrix value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw std::logic_error("autodiff: mixing variables from different tapes");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Matrix(), needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_mut(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::logic_error("autodiff: root belongs to another tape");
  if (root.rows() != 1 || root.cols() != 1) throw std::logic_error("autodiff: backward needs a scalar root");
  for (auto& node : nodes_) node.grad.resize(0, 0);
  grad_mut(root.id())(0, 0) = 1.0;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward || node.grad.size() == 0) continue;
    node.backward(*this, id);
  }
}

namespace {

// Gradient accumulation target, or nullptr when the input is a constant.
Matrix* grad_of(Tape& tape, const Var& v) {
  return v.requires_grad() ? &tape.grad_mut(v.id()) : nullptr;
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Tape& tape = *a.tape();
  return tape.record(a.value() * b.value(), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (Matrix* ga = grad_of(t, a)) ga->noalias() += g * b.value().transpose();
    if (Matrix* gb = grad_of(t, b)) gb->noalias() += a.value().transpose() * g;
  });
}

Var spmm(const SparseOperator& op, Var a) {
  if (op.cols() != a.rows()) throw std::invalid_argument("spmm: shape mismatch");
  Tape& tape = *a.tape();
  Matrix out = op * a.value();
  return tape.record(std::move(out), {a}, [&op, a](Tape& t, std::size_t self) {
    if (Matrix* ga = grad_of(t, a)) ga->noalias() += op.transpose() * t.grad(self);
  });
}

Var add(Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
  Tape& tape = *a.tape();
  return tape.record(a.value() + b.value(), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (Matrix* ga = grad_of(t, a)) *ga += g;
    if (Matrix* gb = grad_of(t, b)) *gb += g;
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: shape mismatch");
  Tape& tape = *a.tape();
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return tape.record(std::move(out), {a, row}, [a, row](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (Matrix* ga = grad_of(t, a)) *ga += g;
    if (Matrix* gr = grad_of(t, row)) *gr += g.colwise().sum();
  });
}

Var relu(Var a) {
  Tape& tape = *a.tape();
  return tape.record(a.value().cwiseMax(0.0), {a}, [a](Tape& t, std::size_t self) {
    if (Matrix* ga = grad_of(t, a)) {
      *ga += (a.value().array() > 0.0).select(t.grad(self), 0.0);
    }
  });
}

Var col_block(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::invalid_argument("col_block: out of range");
  Tape& tape = *a.tape();
  return tape.record(a.value().middleCols(start, count), {a}, [a, start, count](Tape& t, std::size_t self) {
    if (Matrix* ga = grad_of(t, a)) ga->middleCols(start, count) += t.grad(self);
  });
}

Var element(Var a, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || row >= a.rows() || col < 0 || col >= a.cols()) {
    throw std::invalid_argument("element: out of range");
  }
  Tape& tape = *a.tape();
  Matrix out(1, 1);
  out(0, 0) = a.value()(row, col);
  return tape.record(std::move(out), {a}, [a, row, col](Tape& t, std::size_t self) {
    if (Matrix* ga = grad_of(t, a)) (*ga)(row, col) += t.grad(self)(0, 0);
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const Eigen::Index> rows) {
  if (rows.empty()) throw std::invalid_argument("softmax_cross_entropy: no rows");
  Tape& tape = *logits.tape();
  const Matrix& z = logits.value();
  const auto classes = z.cols();
  Matrix probs(static_cast<Eigen::Index>(rows.size()), classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = z.row(rows[r]);
    const double shift = row.maxCoeff();
    const Eigen::RowVectorXd e = (row.array() - shift).exp();
    const double total = e.sum();
    probs.row(static_cast<Eigen::Index>(r)) = e / total;
    loss -= (row(labels[rows[r]]) - shift) - std::log(total);
  }
  const double scale = 1.0 / static_cast<double>(rows.size());
  Matrix out(1, 1);
  out(0, 0) = loss * scale;
  std::vector<Eigen::Index> row_copy(rows.begin(), rows.end());
  std::vector<int> target(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) target[r] = labels[rows[r]];
  return tape.record(std::move(out), {logits},
                     [logits, probs = std::move(probs), row_copy = std::move(row_copy), target = std::move(target),
                      scale](Tape& t, std::size_t self) {
                       Matrix* g = grad_of(t, logits);
                       if (!g) return;
                       const double upstream = t.grad(self)(0, 0) * scale;
                       for (std::size_t r = 0; r < row_copy.size(); ++r) {
                         auto grow = g->row(row_copy[r]);
                         grow += upstream * probs.row(static_cast<Eigen::Index>(r));
                         grow(target[r]) -= upstream;
                       }
                     });
}

Var graph_attention(Var h, Var att_src, Var att_dst, const AttentionGraph& graph, double negative_slope) {
  const auto n = h.rows();
  const auto f = h.cols();
  if (att_src.rows() != f || att_src.cols() != 1 || att_dst.rows() != f || att_dst.cols() != 1) {
    throw std::invalid_argument("graph_attention: attention vectors must be f x 1");
  }
  if (static_cast<Eigen::Index>(graph.offsets.size()) != n + 1) {
    throw std::invalid_argument("graph_attention: graph size differs from feature rows");
  }
  Tape& tape = *h.tape();
  const Matrix& hv = h.value();
  const Eigen::VectorXd src_score = hv * att_src.value();
  const Eigen::VectorXd dst_score = hv * att_dst.value();

  std::vector<double> pre(graph.sources.size());
  std::vector<double> alpha(graph.sources.size());
  Matrix out = Matrix::Zero(n, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto begin = graph.offsets[i];
    const auto end = graph.offsets[i + 1];
    if (begin == end) continue;
    double peak = -std::numeric_limits<double>::infinity();
    for (auto k = begin; k < end; ++k) {
      const double raw = src_score(graph.sources[k]) + dst_score(i);
      pre[k] = raw;
      const double act = raw > 0.0 ? raw : negative_slope * raw;
      alpha[k] = act;
      peak = std::max(peak, act);
    }
    double total = 0.0;
    for (auto k = begin; k < end; ++k) {
      alpha[k] = std::exp(alpha[k] - peak);
      total += alpha[k];
    }
    for (auto k = begin; k < end; ++k) {
      alpha[k] /= total;
      out.row(i) += alpha[k] * hv.row(graph.sources[k]);
    }
  }

  return tape.record(
      std::move(out), {h, att_src, att_dst},
      [h, att_src, att_dst, &graph, negative_slope, pre = std::move(pre), alpha = std::move(alpha)](
          Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const Matrix& hv = h.value();
        const auto n = hv.rows();
        Eigen::VectorXd d_src = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd d_dst = Eigen::VectorXd::Zero(n);
        Matrix d_h = Matrix::Zero(n, hv.cols());
        std::vector<double> d_alpha;
        for (Eigen::Index i = 0; i < n; ++i) {
          const auto begin = graph.offsets[i];
          const auto end = graph.offsets[i + 1];
          if (begin == end) continue;
          d_alpha.assign(static_cast<std::size_t>(end - begin), 0.0);
          double weighted = 0.0;
          for (auto k = begin; k < end; ++k) {
            const auto j = graph.sources[k];
            d_h.row(j) += alpha[k] * g.row(i);
            const double da = g.row(i).dot(hv.row(j));
            d_alpha[k - begin] = da;
            weighted += alpha[k] * da;
          }
          for (auto k = begin; k < end; ++k) {
            const double d_act = alpha[k] * (d_alpha[k - begin] - weighted);
            const double d_pre = pre[k] > 0.0 ? d_act : negative_slope * d_act;
            d_src(graph.sources[k]) += d_pre;
            d_dst(i) += d_pre;
          }
        }
        if (Matrix* gs = grad_of(t, att_src)) gs->noalias() += hv.transpose() * d_src;
        if (Matrix* gd = grad_of(t, att_dst)) gd->noalias() += hv.transpose() * d_dst;
        if (Matrix* gh = grad_of(t, h)) {
          *gh += d_h;
          gh->noalias() += d_src * att_src.value().transpose();
          gh->noalias() += d_dst * att_dst.value().transpose();
        }
      });
}

}  // namespace graft::ad
