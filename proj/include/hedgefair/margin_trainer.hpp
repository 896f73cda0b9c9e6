#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hedgefair {

/// Linear constraint |g . theta| <= bound on the parameter vector
/// theta = [w; b]. Covariance between a group indicator and the margin
/// x . w + b is linear in theta, so every fairness constraint reduces to rows
/// of this form.
struct LinearBound {
  Eigen::VectorXd g;
  double bound = 0.0;
  std::string label;
};

/// Average logistic loss + reg * |w|^2 (intercept unregularized), plus the
/// quadratic penalty mu * sum max(0, |g . theta| - bound)^2.
class PenalizedObjective {
 public:
  PenalizedObjective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double reg,
                     std::vector<LinearBound> bounds);

  Eigen::Index parameter_count() const { return X_.cols() + 1; }

  /// Logistic loss + ridge term, without the penalty.
  double training_loss(const Eigen::VectorXd& theta) const;
  double value(const Eigen::VectorXd& theta, double mu) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, double mu) const;

  /// max_k (|g_k . theta| - bound_k)_+ and the index of the worst row (-1 if none).
  std::pair<double, int> max_violation(const Eigen::VectorXd& theta) const;

  const std::vector<LinearBound>& bounds() const { return bounds_; }

 private:
  Eigen::VectorXd margins(const Eigen::VectorXd& theta) const;

  const Eigen::MatrixXd& X_;
  Eigen::VectorXd sign_;  // +1 for label 1, -1 for label 0
  double reg_;
  std::vector<LinearBound> bounds_;
};

struct TrainerOptions {
  double reg = 1e-3;
  double penalty_start = 10.0;
  double penalty_growth = 10.0;
  int max_outer = 8;
  int max_inner = 2000;
  double gradient_tolerance = 1e-6;
  double feasibility_tolerance = 1e-4;
};

struct TrainResult {
  Eigen::VectorXd theta;  // [w; b]
  double training_loss = 0.0;
  double max_violation = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

/// Quadratic-penalty outer loop around gradient descent with Armijo
/// backtracking. Throws InfeasibleError if the bounds are still violated by
/// more than the feasibility tolerance after the last outer iteration.
TrainResult train_penalized(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            std::vector<LinearBound> bounds, const TrainerOptions& options,
                            const Eigen::VectorXd* warm_start = nullptr);

}  // namespace hedgefair
