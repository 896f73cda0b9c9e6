#include "hedgefair/margin_trainer.hpp"

#include <cmath>

#include "hedgefair/error.hpp"

namespace hedgefair {
namespace {

// log(1 + exp(-z)), stable for both signs.
double softplus_neg(double z) {
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

// d/dz log(1 + exp(-z)) = -1 / (1 + exp(z)).
double softplus_neg_grad(double z) {
  if (z > 0) {
    const double e = std::exp(-z);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(z));
}

}  // namespace

PenalizedObjective::PenalizedObjective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                       double reg, std::vector<LinearBound> bounds)
    : X_(X), reg_(reg), bounds_(std::move(bounds)) {
  if (X.rows() == 0) throw ValidationError("training set is empty");
  if (y.size() != X.rows()) throw ValidationError("label count does not match rows");
  sign_ = (2.0 * y.array() - 1.0).matrix();
  for (const auto& b : bounds_) {
    if (b.g.size() != parameter_count()) throw ValidationError("bound row has wrong length");
    if (b.bound < 0.0) throw ValidationError("bound must be non-negative");
  }
}

Eigen::VectorXd PenalizedObjective::margins(const Eigen::VectorXd& theta) const {
  const Eigen::Index d = X_.cols();
  return (X_ * theta.head(d)).array() + theta[d];
}

double PenalizedObjective::training_loss(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd m = margins(theta);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) sum += softplus_neg(sign_[i] * m[i]);
  const Eigen::Index d = X_.cols();
  return sum / static_cast<double>(m.size()) + reg_ * theta.head(d).squaredNorm();
}

double PenalizedObjective::value(const Eigen::VectorXd& theta, double mu) const {
  double pen = 0.0;
  for (const auto& b : bounds_) {
    const double excess = std::abs(b.g.dot(theta)) - b.bound;
    if (excess > 0) pen += excess * excess;
  }
  return training_loss(theta) + mu * pen;
}

Eigen::VectorXd PenalizedObjective::gradient(const Eigen::VectorXd& theta, double mu) const {
  const Eigen::Index d = X_.cols();
  const Eigen::VectorXd m = margins(theta);
  Eigen::VectorXd r(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    r[i] = sign_[i] * softplus_neg_grad(sign_[i] * m[i]);
  }
  r /= static_cast<double>(m.size());
  Eigen::VectorXd grad(d + 1);
  grad.head(d) = X_.transpose() * r + 2.0 * reg_ * theta.head(d);
  grad[d] = r.sum();
  for (const auto& b : bounds_) {
    const double v = b.g.dot(theta);
    const double excess = std::abs(v) - b.bound;
    if (excess > 0) grad += (2.0 * mu * excess * (v > 0 ? 1.0 : -1.0)) * b.g;
  }
  return grad;
}

std::pair<double, int> PenalizedObjective::max_violation(const Eigen::VectorXd& theta) const {
  double worst = 0.0;
  int index = -1;
  for (std::size_t k = 0; k < bounds_.size(); ++k) {
    const double excess = std::abs(bounds_[k].g.dot(theta)) - bounds_[k].bound;
    if (excess > worst) {
      worst = excess;
      index = static_cast<int>(k);
    }
  }
  return {worst, index};
}

TrainResult train_penalized(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            std::vector<LinearBound> bounds, const TrainerOptions& options,
                            const Eigen::VectorXd* warm_start) {
  PenalizedObjective obj(X, y, options.reg, std::move(bounds));
  TrainResult result;
  result.theta = warm_start != nullptr ? *warm_start
                                       : Eigen::VectorXd::Zero(obj.parameter_count());
  if (result.theta.size() != obj.parameter_count()) {
    throw ValidationError("warm start has the wrong length");
  }

  const bool constrained = !obj.bounds().empty();
  const int outer_limit = constrained ? options.max_outer : 1;
  double mu = options.penalty_start;
  double step = 1.0;
  for (int outer = 0; outer < outer_limit; ++outer) {
    result.outer_iterations = outer + 1;
    double f = obj.value(result.theta, mu);
    for (int it = 0; it < options.max_inner; ++it) {
      const Eigen::VectorXd g = obj.gradient(result.theta, mu);
      const double gnorm2 = g.squaredNorm();
      if (std::sqrt(gnorm2) < options.gradient_tolerance) break;
      ++result.inner_iterations;
      step = std::min(step * 2.0, 1e6);
      Eigen::VectorXd candidate;
      double fc = 0.0;
      int halvings = 0;
      while (true) {
        candidate = result.theta - step * g;
        fc = obj.value(candidate, mu);
        if (fc <= f - 1e-4 * step * gnorm2) break;
        step *= 0.5;
        if (++halvings > 80) break;
      }
      if (halvings > 80) break;  // no descent possible at machine precision
      result.theta = std::move(candidate);
      f = fc;
    }
    result.max_violation = obj.max_violation(result.theta).first;
    if (result.max_violation <= options.feasibility_tolerance) break;
    mu *= options.penalty_growth;
  }

  result.training_loss = obj.training_loss(result.theta);
  if (constrained) {
    auto [worst, index] = obj.max_violation(result.theta);
    result.max_violation = worst;
    if (worst > options.feasibility_tolerance) {
      const std::string label = obj.bounds()[static_cast<std::size_t>(index)].label;
      throw InfeasibleError("constraint '" + label + "' still violated by " +
                                std::to_string(worst) + " after " +
                                std::to_string(options.max_outer) + " penalty rounds",
                            label, worst);
    }
  }
  return result;
}

}  // namespace hedgefair
