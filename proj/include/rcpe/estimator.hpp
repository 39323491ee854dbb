#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include "rcpe/errors.hpp"
#include "rcpe/permutation.hpp"
#include "rcpe/types.hpp"

namespace rcpe {

/// Configuration of the retrospective cost estimator.
///
/// The estimator integrates the output error, maps the integral through an
/// adaptive gain updated by forgetting-factor RLS on the retrospective cost,
/// and produces the parameter estimate through the output map
///   estimate = offset + O_p |diag(scaling) * nu|,
/// where nu is the pre-estimate and O_p the configured permutation. The FIR
/// filter taps N_1..N_nf (each output_dim x param_dim) define the
/// retrospective error; their transposed stack spans the subspace that
/// confines nu.
template <typename Scalar>
struct EstimatorConfig {
  Index param_dim = 0;   // number of estimated parameters
  Index output_dim = 0;  // number of error channels

  std::vector<Matrix<Scalar>> filter_coeffs;  // FIR taps, newest delay first
  Scalar forgetting = Scalar(1);              // in (0, 1]
  Scalar regularization_scale = Scalar(1);    // beta: R_theta = beta * I
  std::optional<Matrix<Scalar>> regularization;  // full SPD R_theta, overrides beta
  PermutationMatrix permutation;
  Vector<Scalar> offset;                        // empty means zero
  Vector<Scalar> scaling;                       // diagonal of M, empty means identity
  std::optional<Vector<Scalar>> upper_bound;    // componentwise saturation of the estimate

  Index taps() const noexcept { return static_cast<Index>(filter_coeffs.size()); }
  Index coeff_dim() const noexcept { return param_dim * output_dim; }

  Vector<Scalar> offset_or_zero() const {
    return offset.size() ? offset : Vector<Scalar>::Zero(param_dim);
  }
  Vector<Scalar> scaling_or_identity() const {
    return scaling.size() ? scaling : Vector<Scalar>::Ones(param_dim);
  }

  /// Horizontal stack [N_1 ... N_nf].
  Matrix<Scalar> stacked_filter() const {
    Matrix<Scalar> n(output_dim, taps() * param_dim);
    for (Index i = 0; i < taps(); ++i)
      n.block(0, i * param_dim, output_dim, param_dim) = filter_coeffs[static_cast<size_t>(i)];
    return n;
  }

  /// P_0 = R_theta^{-1}.
  Matrix<Scalar> initial_covariance() const {
    const Index lt = coeff_dim();
    if (!regularization)
      return Matrix<Scalar>::Identity(lt, lt) / regularization_scale;
    Eigen::LLT<Matrix<Scalar>> llt(*regularization);
    if (llt.info() != Eigen::Success)
      throw InvalidConfig("regularization matrix is not positive definite");
    Matrix<Scalar> p = llt.solve(Matrix<Scalar>::Identity(lt, lt));
    return ((p + p.transpose()) / Scalar(2)).eval();
  }

  void validate() const {
    if (param_dim < 1 || output_dim < 1)
      throw InvalidConfig("param_dim and output_dim must be positive");
    if (filter_coeffs.empty()) throw InvalidConfig("at least one filter tap is required");
    for (const auto& n : filter_coeffs)
      if (n.rows() != output_dim || n.cols() != param_dim)
        throw InvalidConfig("filter tap must be output_dim x param_dim");
    if (!(forgetting > Scalar(0)) || forgetting > Scalar(1))
      throw InvalidConfig("forgetting factor must lie in (0, 1]");
    if (regularization) {
      const auto& r = *regularization;
      if (r.rows() != coeff_dim() || r.cols() != coeff_dim())
        throw InvalidConfig("regularization matrix must be coeff_dim square");
      const Scalar scale = r.template lpNorm<Eigen::Infinity>();
      if ((r - r.transpose()).template lpNorm<Eigen::Infinity>() > Scalar(1e-10) * (Scalar(1) + scale))
        throw InvalidConfig("regularization matrix must be symmetric");
      if (Eigen::LLT<Matrix<Scalar>>(r).info() != Eigen::Success)
        throw InvalidConfig("regularization matrix is not positive definite");
    } else if (!(regularization_scale > Scalar(0))) {
      throw InvalidConfig("regularization scale must be positive");
    }
    if (permutation.size() != param_dim)
      throw InvalidConfig("permutation size must equal param_dim");
    if (offset.size() && offset.size() != param_dim)
      throw InvalidConfig("offset size must equal param_dim");
    if (scaling.size()) {
      if (scaling.size() != param_dim) throw InvalidConfig("scaling size must equal param_dim");
      if (!(scaling.minCoeff() > Scalar(0))) throw InvalidConfig("scaling entries must be positive");
    }
    if (upper_bound) {
      if (upper_bound->size() != param_dim)
        throw InvalidConfig("upper_bound size must equal param_dim");
      if (((*upper_bound - offset_or_zero()).array() < Scalar(0)).any())
        throw InvalidConfig("upper_bound must not fall below the offset");
    }
  }
};

/// Evolving state of one estimator instance. A state is strictly sequential;
/// independent instances share nothing.
template <typename Scalar>
struct EstimatorState {
  Vector<Scalar> error_integral;  // running sum of output errors
  Vector<Scalar> coeffs;          // vectorized adaptive gain
  Matrix<Scalar> covariance;      // RLS covariance, kept symmetric
  Vector<Scalar> pre_estimate;    // nu at the current step
  Vector<Scalar> estimate;        // parameter estimate after the output map
  std::vector<Matrix<Scalar>> regressor_history;     // newest first, zero-padded
  std::vector<Vector<Scalar>> pre_estimate_history;  // newest first, zero-padded
  long step = 0;
  bool saturated = false;  // upper bound clipped the estimate at this step
};

/// phi_k = phi_{k-1} + z_{k-1}.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> update_integrator(const Eigen::MatrixBase<DerivedA>& phi,
                                                    const Eigen::MatrixBase<DerivedB>& z) {
  if (phi.size() != z.size()) throw DimensionMismatch("integrator state and error sizes differ");
  return phi + z;
}

/// Regressor I_{param_dim} (x) phi^T: block-diagonal rows of phi^T, so that
/// multiplying the vectorized gain reproduces the gain-times-integral product.
template <typename Derived>
Matrix<typename Derived::Scalar> build_regressor(const Eigen::MatrixBase<Derived>& phi,
                                                 Index param_dim) {
  using S = typename Derived::Scalar;
  const Index ly = phi.size();
  Matrix<S> regressor = Matrix<S>::Zero(param_dim, param_dim * ly);
  for (Index j = 0; j < param_dim; ++j)
    regressor.block(j, j * ly, 1, ly) = phi.transpose();
  return regressor;
}

/// nu = Phi * theta.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> pre_estimate(const Eigen::MatrixBase<DerivedA>& regressor,
                                               const Eigen::MatrixBase<DerivedB>& coeffs) {
  if (regressor.cols() != coeffs.size())
    throw DimensionMismatch("regressor columns must match coefficient length");
  return regressor * coeffs;
}

/// offset + O_p |diag(scaling) nu|; the result minus the offset is
/// componentwise nonnegative.
template <typename Scalar, typename Derived>
Vector<Scalar> apply_output_map(const Eigen::MatrixBase<Derived>& nu,
                                const EstimatorConfig<Scalar>& cfg) {
  if (nu.size() != cfg.param_dim) throw DimensionMismatch("pre-estimate size must equal param_dim");
  const Vector<Scalar> scaled =
      (cfg.scaling_or_identity().array() * nu.array()).abs().matrix();
  return cfg.offset_or_zero() + cfg.permutation.apply(scaled);
}

/// Vertical stacks of the last nf regressors and pre-estimates, newest first.
template <typename Scalar>
std::pair<Matrix<Scalar>, Vector<Scalar>> stack_history(const EstimatorState<Scalar>& state) {
  const Index nf = static_cast<Index>(state.regressor_history.size());
  if (nf == 0 || state.pre_estimate_history.size() != static_cast<size_t>(nf))
    throw DimensionMismatch("histories must hold one entry per filter tap");
  const Index lmu = state.regressor_history.front().rows();
  const Index lt = state.regressor_history.front().cols();
  Matrix<Scalar> stacked_regressors(nf * lmu, lt);
  Vector<Scalar> stacked_pre_estimates(nf * lmu);
  for (Index i = 0; i < nf; ++i) {
    stacked_regressors.block(i * lmu, 0, lmu, lt) = state.regressor_history[static_cast<size_t>(i)];
    stacked_pre_estimates.segment(i * lmu, lmu) = state.pre_estimate_history[static_cast<size_t>(i)];
  }
  return {std::move(stacked_regressors), std::move(stacked_pre_estimates)};
}

/// Retrospective error z + N Phibar theta_hat - N Vbar: the current error
/// recomputed as if theta_hat had produced the filtered past pre-estimates.
template <typename DZ, typename DT, typename DP, typename DV, typename DN>
Vector<typename DZ::Scalar> retrospective_error(const Eigen::MatrixBase<DZ>& z,
                                                const Eigen::MatrixBase<DT>& coeffs_hat,
                                                const Eigen::MatrixBase<DP>& stacked_regressors,
                                                const Eigen::MatrixBase<DV>& stacked_pre_estimates,
                                                const Eigen::MatrixBase<DN>& stacked_filter) {
  if (stacked_filter.cols() != stacked_regressors.rows() ||
      stacked_regressors.cols() != coeffs_hat.size() ||
      stacked_filter.cols() != stacked_pre_estimates.size() || stacked_filter.rows() != z.size())
    throw DimensionMismatch("retrospective error operands do not conform");
  return z + stacked_filter * (stacked_regressors * coeffs_hat - stacked_pre_estimates);
}

/// One forgetting-factor RLS update of (coeffs, covariance) from the current
/// error and the stacked history. Leaves the integrator, histories, and step
/// counter untouched. The covariance is re-symmetrized after the update.
template <typename Scalar>
EstimatorState<Scalar> rls_step(EstimatorState<Scalar> state,
                                const Vector<std::type_identity_t<Scalar>>& z,
                                const EstimatorConfig<Scalar>& cfg) {
  if (z.size() != cfg.output_dim) throw DimensionMismatch("error size must equal output_dim");
  if (!z.allFinite() || !state.coeffs.allFinite() || !state.covariance.allFinite())
    throw DivergenceSignal(state.step);

  const auto [stacked_regressors, stacked_pre_estimates] = stack_history(state);
  const Matrix<Scalar> filter = cfg.stacked_filter();
  const Matrix<Scalar> filtered_regressor = filter * stacked_regressors;  // N Phibar

  Matrix<Scalar> gain_denominator =
      cfg.forgetting * Matrix<Scalar>::Identity(cfg.output_dim, cfg.output_dim) +
      filtered_regressor * state.covariance * filtered_regressor.transpose();
  gain_denominator = ((gain_denominator + gain_denominator.transpose()) / Scalar(2)).eval();

  Eigen::LLT<Matrix<Scalar>> llt(gain_denominator);
  if (llt.info() != Eigen::Success || llt.rcond() < Scalar(1e-14))
    throw NumericalFailure(state.step, "singular retrospective gain denominator");

  const Matrix<Scalar> cov_times_wt = state.covariance * filtered_regressor.transpose();
  Matrix<Scalar> covariance_next =
      (state.covariance - cov_times_wt * llt.solve(cov_times_wt.transpose())) / cfg.forgetting;
  covariance_next = ((covariance_next + covariance_next.transpose()) / Scalar(2)).eval();

  const Vector<Scalar> innovation =
      filtered_regressor * state.coeffs + z - filter * stacked_pre_estimates;
  state.coeffs -= covariance_next * (filtered_regressor.transpose() * innovation);
  state.covariance = std::move(covariance_next);
  return state;
}

/// Initial state: zero integral, zero coefficients, covariance R_theta^{-1},
/// zero-padded histories. The initial estimate is exactly the offset.
template <typename Scalar>
EstimatorState<Scalar> make_initial_state(const EstimatorConfig<Scalar>& cfg) {
  cfg.validate();
  EstimatorState<Scalar> state;
  state.error_integral = Vector<Scalar>::Zero(cfg.output_dim);
  state.coeffs = Vector<Scalar>::Zero(cfg.coeff_dim());
  state.covariance = cfg.initial_covariance();
  state.pre_estimate = Vector<Scalar>::Zero(cfg.param_dim);
  state.regressor_history.assign(static_cast<size_t>(cfg.taps()),
                                 Matrix<Scalar>::Zero(cfg.param_dim, cfg.coeff_dim()));
  state.pre_estimate_history.assign(static_cast<size_t>(cfg.taps()),
                                    Vector<Scalar>::Zero(cfg.param_dim));
  state.estimate = apply_output_map(state.pre_estimate, cfg);
  return state;
}

/// Full estimator update for one step: RLS on the retrospective cost, then
/// integrator, regressor, pre-estimate, output map, and history roll. The
/// returned state's estimate is the parameter value for the next model step.
template <typename Scalar>
EstimatorState<Scalar> estimator_step(EstimatorState<Scalar> state,
                                      const Vector<std::type_identity_t<Scalar>>& z,
                                      const EstimatorConfig<Scalar>& cfg) {
  state = rls_step(std::move(state), z, cfg);

  // Push the regressor and pre-estimate of the step being consumed; they are
  // the newest entries seen by the next update.
  Matrix<Scalar> regressor_now = build_regressor(state.error_integral, cfg.param_dim);
  state.regressor_history.pop_back();
  state.regressor_history.insert(state.regressor_history.begin(), std::move(regressor_now));
  state.pre_estimate_history.pop_back();
  state.pre_estimate_history.insert(state.pre_estimate_history.begin(), state.pre_estimate);

  state.error_integral += z;
  state.pre_estimate = build_regressor(state.error_integral, cfg.param_dim) * state.coeffs;
  state.saturated = false;
  if (cfg.upper_bound) {
    // Saturate by clamping the pre-estimate magnitude that maps onto the
    // bound, so the stored history sees the saturated values and the
    // retrospective cost cannot wind up chasing an unbounded pre-estimate.
    const Vector<Scalar> magnitude_bound =
        cfg.permutation.apply_inverse((*cfg.upper_bound - cfg.offset_or_zero()).eval())
            .cwiseQuotient(cfg.scaling_or_identity());
    for (Index i = 0; i < cfg.param_dim; ++i) {
      if (std::abs(state.pre_estimate[i]) > magnitude_bound[i]) {
        state.pre_estimate[i] = state.pre_estimate[i] < Scalar(0) ? -magnitude_bound[i]
                                                                  : magnitude_bound[i];
        state.saturated = true;
      }
    }
  }
  state.estimate = apply_output_map(state.pre_estimate, cfg);
  ++state.step;
  return state;
}

/// Norm of the component of nu orthogonal to the column space of
/// [N_1^T ... N_nf^T]. Zero (up to roundoff) whenever nu obeys the subspace
/// confinement imposed by the filter.
template <typename Scalar>
Scalar subspace_residual(const Vector<std::type_identity_t<Scalar>>& nu,
                         const std::vector<Matrix<Scalar>>& filter_coeffs) {
  if (filter_coeffs.empty()) throw InvalidConfig("at least one filter tap is required");
  const Index lmu = filter_coeffs.front().cols();
  const Index ly = filter_coeffs.front().rows();
  if (nu.size() != lmu) throw DimensionMismatch("pre-estimate size must match filter columns");
  Matrix<Scalar> transposed_stack(lmu, static_cast<Index>(filter_coeffs.size()) * ly);
  for (size_t i = 0; i < filter_coeffs.size(); ++i)
    transposed_stack.block(0, static_cast<Index>(i) * ly, lmu, ly) =
        filter_coeffs[i].transpose();
  Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(transposed_stack);
  return (nu - transposed_stack * cod.solve(nu)).norm();
}

using EstimatorConfigd = EstimatorConfig<double>;
using EstimatorStated = EstimatorState<double>;

}  // namespace rcpe
