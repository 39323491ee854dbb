#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "rcpe/errors.hpp"
#include "rcpe/models/system_model.hpp"

namespace rcpe {

/// Two-state rational nonlinear plant
///   x+ = [x2; (mu1 + mu2 x2 + mu3 x1) / (1 + 0.6 x2 + 1.1 x1)] + [0; 1] u,
/// measured through y = x1. The denominator must stay away from zero.
inline Eigen::Vector2d low_order_step(const Eigen::Vector2d& x, double u,
                                      const Eigen::Vector3d& mu) {
  const double denominator = 1.0 + 0.6 * x[1] + 1.1 * x[0];
  if (std::abs(denominator) < 1e-13)
    throw SingularDynamics("low-order plant denominator vanished");
  return {x[1], (mu[0] + mu[1] * x[1] + mu[2] * x[0]) / denominator + u};
}

/// 2 + sum_{i=1}^{15} sin(2 pi i k / 100). The phase is reduced mod 100 in
/// integer arithmetic, so the period of 100 steps is exact in floating point.
inline double multisine_input(long k) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  const long r = k % 100;
  double value = 2.0;
  for (long i = 1; i <= 15; ++i)
    value += std::sin(two_pi * static_cast<double>((i * r) % 100) / 100.0);
  return value;
}

class LowOrderPlant final : public SystemModel {
 public:
  Index state_dim() const override { return 2; }
  Index input_dim() const override { return 1; }
  Index output_dim() const override { return 1; }
  Index param_dim() const override { return 3; }

  Vector<double> step(const Vector<double>& x, const Vector<double>& u,
                      const Vector<double>& mu) const override {
    check(x, u, mu);
    return low_order_step(Eigen::Vector2d(x), u[0], Eigen::Vector3d(mu));
  }

  Vector<double> output(const Vector<double>& x, const Vector<double>& u,
                        const Vector<double>& mu) const override {
    check(x, u, mu);
    return Vector<double>::Constant(1, x[0]);
  }

 private:
  void check(const Vector<double>& x, const Vector<double>& u, const Vector<double>& mu) const {
    if (x.size() != 2 || u.size() != 1 || mu.size() != 3)
      throw DimensionMismatch("low-order plant expects x in R^2, scalar u, mu in R^3");
  }
};

}  // namespace rcpe
