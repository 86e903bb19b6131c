#include "graft/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace graft {

LogisticRegression::LogisticRegression(Eigen::MatrixXd weights, Eigen::RowVectorXd bias, Eigen::RowVectorXd center,
                                       Eigen::RowVectorXd scale)
    : weights_(std::move(weights)), bias_(std::move(bias)), center_(std::move(center)), scale_(std::move(scale)) {}

Eigen::MatrixXd LogisticRegression::decision(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z = ((x.rowwise() - center_).array().rowwise() / scale_.array()).matrix();
  Eigen::MatrixXd out = z * weights_;
  out.rowwise() += bias_;
  return out;
}

std::vector<int> LogisticRegression::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd scores = decision(x);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Index r = 0; r < scores.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, best)) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

Eigen::MatrixXd select_columns(const FeatureMatrix& features, std::span<const Index> columns) {
  std::vector<Index> position(static_cast<std::size_t>(features.cols()), -1);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] < 0 || columns[j] >= features.cols()) throw std::out_of_range("select_columns: column out of range");
    position[columns[j]] = static_cast<Index>(j);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(features.rows(), static_cast<Index>(columns.size()));
  for (Index r = 0; r < features.outerSize(); ++r) {
    for (FeatureMatrix::InnerIterator it(features, r); it; ++it) {
      if (position[it.col()] >= 0) out(r, position[it.col()]) = it.value();
    }
  }
  return out;
}

namespace {

struct Objective {
  const Eigen::MatrixXd& x;  // m x p, standardised training rows
  const Eigen::MatrixXd& y;  // m x C one-hot
  double l2;                 // coefficient on ||W||^2 / 2

  // Gradient w.r.t. the stacked parameters [W; b] ((p+1) x C).
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& theta) const {
    const Index p = x.cols();
    Eigen::MatrixXd scores = x * theta.topRows(p);
    scores.rowwise() += theta.row(p);
    for (Index r = 0; r < scores.rows(); ++r) {
      const double peak = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - peak).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    const Eigen::MatrixXd residual = (scores - y) / static_cast<double>(x.rows());
    Eigen::MatrixXd g(theta.rows(), theta.cols());
    g.topRows(p) = x.transpose() * residual + l2 * theta.topRows(p);
    g.row(p) = residual.colwise().sum();
    return g;
  }
};

// Largest squared singular value of [x 1] by power iteration.
double spectral_bound(const Eigen::MatrixXd& x) {
  const Index p = x.cols();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p + 1) / std::sqrt(static_cast<double>(p + 1));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd xv = x * v.head(p) + Eigen::VectorXd::Constant(x.rows(), v(p));
    Eigen::VectorXd w(p + 1);
    w.head(p) = x.transpose() * xv;
    w(p) = xv.sum();
    const double norm = w.norm();
    if (norm == 0.0) break;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - lambda) <= 1e-10 * std::max(1.0, next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace

LogRegResult train_logreg(const Eigen::MatrixXd& features, std::span<const int> labels, std::span<const Split> split,
                          int class_count, std::uint64_t /*seed*/, const LogRegOptions& options) {
  if (static_cast<Index>(labels.size()) != features.rows() || split.size() != labels.size()) {
    throw std::invalid_argument("train_logreg: labels/split length differs from feature rows");
  }
  std::vector<Index> train_rows, test_rows;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (split[v] == Split::Train) train_rows.push_back(static_cast<Index>(v));
    if (split[v] == Split::Test) test_rows.push_back(static_cast<Index>(v));
  }
  std::set<int> present;
  for (Index v : train_rows) present.insert(labels[v]);
  if (present.size() < 2) throw std::invalid_argument("train_logreg: degenerate input with fewer than 2 classes");
  if (!(options.inverse_regularization > 0.0)) throw std::invalid_argument("train_logreg: C must be positive");

  const Index p = features.cols();
  const auto m = static_cast<Index>(train_rows.size());
  Eigen::MatrixXd x(m, p);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, class_count);
  for (Index r = 0; r < m; ++r) {
    x.row(r) = features.row(train_rows[r]);
    y(r, labels[train_rows[r]]) = 1.0;
  }

  Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(p);
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(p);
  if (options.standardize && m > 0) {
    center = x.colwise().mean();
    for (Index j = 0; j < p; ++j) {
      const double sd = std::sqrt((x.col(j).array() - center(j)).square().mean());
      scale(j) = sd > 0.0 ? sd : 1.0;
    }
    x = ((x.rowwise() - center).array().rowwise() / scale.array()).matrix();
  }

  const double l2 = 1.0 / (options.inverse_regularization * static_cast<double>(m));
  const Objective objective{x, y, l2};
  const double lipschitz = 0.5 * spectral_bound(x) / static_cast<double>(m) + l2;
  const double step = 1.0 / (1.01 * lipschitz);

  // Accelerated gradient descent with gradient-based restarts.
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p + 1, class_count);
  Eigen::MatrixXd momentum_point = theta;
  double t = 1.0;
  LogRegResult result;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd g = objective.gradient(momentum_point);
    result.gradient_norm = g.norm();
    result.iterations = it + 1;
    if (result.gradient_norm < options.gradient_tolerance) {
      theta = momentum_point;
      result.converged = true;
      break;
    }
    const Eigen::MatrixXd next = momentum_point - step * g;
    if ((g.array() * (next - theta).array()).sum() > 0.0) {
      t = 1.0;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum_point = next + ((t - 1.0) / t_next) * (next - theta);
    theta = next;
    t = t_next;
  }
  if (!result.converged) {
    result.gradient_norm = objective.gradient(theta).norm();
    result.converged = result.gradient_norm < options.gradient_tolerance;
  }

  result.model = LogisticRegression(theta.topRows(p), theta.row(p), center, scale);
  auto score = [&](const std::vector<Index>& rows) {
    if (rows.empty()) return 0.0;
    Eigen::MatrixXd sub(static_cast<Index>(rows.size()), p);
    for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Index>(r)) = features.row(rows[r]);
    const auto predicted = result.model.predict(sub);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) hits += predicted[r] == labels[rows[r]] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(rows.size());
  };
  result.train_accuracy = score(train_rows);
  result.test_accuracy = score(test_rows);
  return result;
}

}  // namespace graft
