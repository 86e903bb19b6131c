#pragma once

#include "graft/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace graft {

struct LogRegOptions {
  double inverse_regularization = 1.0;  // C: penalty is ||W||^2 / (2 C) on the summed loss
  double gradient_tolerance = 1e-5;
  int max_iterations = 5000;
  bool standardize = true;
};

/// Multinomial logistic regression over dense columns.
class LogisticRegression {
 public:
  LogisticRegression() = default;
  LogisticRegression(Eigen::MatrixXd weights, Eigen::RowVectorXd bias, Eigen::RowVectorXd center,
                     Eigen::RowVectorXd scale);

  Eigen::MatrixXd decision(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::RowVectorXd& bias() const { return bias_; }

 private:
  Eigen::MatrixXd weights_;  // p x C
  Eigen::RowVectorXd bias_;  // 1 x C
  Eigen::RowVectorXd center_;
  Eigen::RowVectorXd scale_;
};

struct LogRegResult {
  LogisticRegression model;
  double test_accuracy = 0.0;
  double train_accuracy = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Fits on the train split by full-batch accelerated gradient descent on the
/// L2-penalised mean cross-entropy until the gradient norm drops below the
/// tolerance or the iteration cap is reached. `seed` is recorded for
/// provenance; the fit itself starts from zero weights.
LogRegResult train_logreg(const Eigen::MatrixXd& features, std::span<const int> labels, std::span<const Split> split,
                          int class_count, std::uint64_t seed, const LogRegOptions& options = {});

/// Dense copy of the listed feature columns.
Eigen::MatrixXd select_columns(const FeatureMatrix& features, std::span<const Index> columns);

}  // namespace graft
