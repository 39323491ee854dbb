#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rcpe/errors.hpp"
#include "rcpe/models/system_model.hpp"
#include "rcpe/types.hpp"

namespace rcpe {

struct BatchCostConfig {
  std::vector<Matrix<double>> weights;  // W_i; empty means identity for every sample
};

/// Weighted output-mismatch cost of simulating the model from x0 with the
/// candidate parameters against the recorded outputs:
///   J = sum_i (y_i - yhat_i)^T W_i (y_i - yhat_i).
inline double batch_cost(const SystemModel& model, const Vector<double>& mu_hat,
                         const Vector<double>& x0, const std::vector<Vector<double>>& u_seq,
                         const std::vector<Vector<double>>& y_seq,
                         const BatchCostConfig& cfg = {}) {
  if (u_seq.size() != y_seq.size()) throw DimensionMismatch("input and output sequences differ");
  if (!cfg.weights.empty() && cfg.weights.size() != y_seq.size())
    throw DimensionMismatch("one weight per sample is required");
  double cost = 0.0;
  Vector<double> x = x0;
  for (size_t i = 0; i < u_seq.size(); ++i) {
    const Vector<double> mismatch = y_seq[i] - model.output(x, u_seq[i], mu_hat);
    if (cfg.weights.empty())
      cost += mismatch.squaredNorm();
    else
      cost += mismatch.dot(cfg.weights[i] * mismatch);
    x = model.step(x, u_seq[i], mu_hat);
  }
  return cost;
}

using CostFunction = std::function<double(const Vector<double>&)>;

/// Cost closure over captured data. The model is held by reference and must
/// outlive the closure.
inline CostFunction make_batch_cost(const SystemModel& model, Vector<double> x0,
                                    std::vector<Vector<double>> u_seq,
                                    std::vector<Vector<double>> y_seq, BatchCostConfig cfg = {}) {
  return [&model, x0 = std::move(x0), u_seq = std::move(u_seq), y_seq = std::move(y_seq),
          cfg = std::move(cfg)](const Vector<double>& mu_hat) {
    return batch_cost(model, mu_hat, x0, u_seq, y_seq, cfg);
  };
}

struct LinearRlsResult {
  Vector<double> mu_hat;
  bool rank_deficient = false;  // information matrix does not pin down a unique minimizer
};

/// Recursive least squares for the linearly parameterized form y_k = phi_k mu,
/// accumulated in information form so that lambda = 1 reproduces the batch
/// normal-equations solution exactly.
inline LinearRlsResult linear_rls(const std::vector<Matrix<double>>& phi_seq,
                                  const std::vector<Vector<double>>& y_seq, double lambda) {
  if (phi_seq.empty() || phi_seq.size() != y_seq.size())
    throw DimensionMismatch("regressor and output sequences must be nonempty and equal");
  if (!(lambda > 0.0) || lambda > 1.0) throw InvalidConfig("forgetting factor must lie in (0, 1]");
  const Index lmu = phi_seq.front().cols();
  Matrix<double> information = Matrix<double>::Zero(lmu, lmu);
  Vector<double> moment = Vector<double>::Zero(lmu);
  for (size_t i = 0; i < phi_seq.size(); ++i) {
    const auto& phi = phi_seq[i];
    if (phi.cols() != lmu || phi.rows() != y_seq[i].size())
      throw DimensionMismatch("regressor shapes must agree across the sequence");
    information = lambda * information + phi.transpose() * phi;
    moment = lambda * moment + phi.transpose() * y_seq[i];
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix<double>> cod(information);
  LinearRlsResult result;
  result.rank_deficient = cod.rank() < lmu;
  result.mu_hat = cod.solve(moment);
  return result;
}

/// Central-difference gradient with per-component step delta * (|mu_i| + 1);
/// costs exactly 2 * param_dim evaluations.
inline Vector<double> fd_gradient(const CostFunction& cost, const Vector<double>& mu_hat,
                                  double delta) {
  if (!(delta > 0.0)) throw InvalidConfig("finite-difference step must be positive");
  Vector<double> gradient(mu_hat.size());
  for (Index i = 0; i < mu_hat.size(); ++i) {
    const double h = delta * (std::abs(mu_hat[i]) + 1.0);
    Vector<double> perturbed = mu_hat;
    perturbed[i] = mu_hat[i] + h;
    const double forward = cost(perturbed);
    perturbed[i] = mu_hat[i] - h;
    const double backward = cost(perturbed);
    gradient[i] = (forward - backward) / (2.0 * h);
  }
  return gradient;
}

struct GradientDescentResult {
  std::vector<Vector<double>> trajectory;  // iterates, starting point included
  std::vector<double> costs;               // cost at each iterate
  bool aborted = false;                    // non-finite cost or model failure hit
};

/// Fixed-step descent on the cost, gradient by central differences. Stops
/// early when the step norm falls below step_tol; aborts (keeping the
/// trajectory so far) when the cost turns non-finite or a model step fails.
inline GradientDescentResult gradient_descent(const CostFunction& cost, const Vector<double>& mu0,
                                              double gamma, int iters, double delta,
                                              double step_tol = 0.0) {
  if (!(gamma >= 0.0)) throw InvalidConfig("descent step size must be nonnegative");
  GradientDescentResult result;
  Vector<double> mu = mu0;
  try {
    const double c0 = cost(mu);
    result.trajectory.push_back(mu);
    result.costs.push_back(c0);
    if (!std::isfinite(c0)) {
      result.aborted = true;
      return result;
    }
    for (int j = 0; j < iters; ++j) {
      const Vector<double> step = gamma * fd_gradient(cost, mu, delta);
      mu -= step;
      const double c = cost(mu);
      if (!std::isfinite(c) || !mu.allFinite()) {
        result.aborted = true;
        return result;
      }
      result.trajectory.push_back(mu);
      result.costs.push_back(c);
      if (step.norm() < step_tol) break;
    }
  } catch (const std::runtime_error&) {
    result.aborted = true;
  }
  return result;
}

/// Joint state-and-parameter model X = [x; mu]: the parameter block is
/// constant under the dynamics, turning parameter estimation into state
/// estimation for an attached filter. Holds the base model by reference.
class AugmentedModel final : public SystemModel {
 public:
  explicit AugmentedModel(const SystemModel& base) : base_(base) {}

  Index state_dim() const override { return base_.state_dim() + base_.param_dim(); }
  Index input_dim() const override { return base_.input_dim(); }
  Index output_dim() const override { return base_.output_dim(); }
  Index param_dim() const override { return 0; }

  /// pi_1 X: the dynamic-state block.
  Vector<double> select_state(const Vector<double>& augmented) const {
    return augmented.head(base_.state_dim());
  }
  /// pi_2 X: the parameter block.
  Vector<double> select_params(const Vector<double>& augmented) const {
    return augmented.tail(base_.param_dim());
  }

  Vector<double> step(const Vector<double>& x, const Vector<double>& u,
                      const Vector<double>& mu) const override {
    check(x, mu);
    Vector<double> next(state_dim());
    next.head(base_.state_dim()) = base_.step(select_state(x), u, select_params(x));
    next.tail(base_.param_dim()) = select_params(x);
    return next;
  }

  Vector<double> output(const Vector<double>& x, const Vector<double>& u,
                        const Vector<double>& mu) const override {
    check(x, mu);
    return base_.output(select_state(x), u, select_params(x));
  }

 private:
  void check(const Vector<double>& x, const Vector<double>& mu) const {
    if (x.size() != state_dim()) throw DimensionMismatch("augmented state size mismatch");
    if (mu.size() != 0) throw DimensionMismatch("augmented model carries its parameters in the state");
  }

  const SystemModel& base_;
};

inline AugmentedModel augment(const SystemModel& model) { return AugmentedModel(model); }

}  // namespace rcpe
