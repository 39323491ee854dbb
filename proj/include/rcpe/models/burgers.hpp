#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>

#include "rcpe/errors.hpp"
#include "rcpe/models/system_model.hpp"
#include "rcpe/types.hpp"

namespace rcpe {

/// Uniform grid for the 1-D viscous Burgers equation on [0, 1], advanced by
/// forward Euler with a second-order upwind convective term and a central
/// viscous term. Grid value j (1-based) sits at x = (j-1) dx, dx = 1/(N-1).
/// mu1 is the convective constant, mu2 the viscosity.
template <typename Scalar = double>
struct BurgersGrid {
  Vector<Scalar> u;
  Scalar dt{};
  Scalar c_max{};
  Scalar mu1{};
  Scalar mu2{};
  long step = 0;

  Index size() const noexcept { return u.size(); }
  Scalar dx() const { return Scalar(1) / Scalar(u.size() - 1); }
};

/// Strict upper bound c_max dx / u_max on the admissible time step; no bound
/// (infinity) while the field is still identically zero.
template <typename Scalar>
Scalar cfl_bound(Scalar dx, Scalar u_max, Scalar c_max) {
  if (!(u_max > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return c_max * dx / u_max;
}

/// Boundary values at step k: both left cells pinned to zero, right cell
/// driven by sin(5 dt k) + 0.25 sin(10 dt k).
template <typename Scalar>
std::array<Scalar, 3> burgers_boundary(long k, Scalar dt) {
  const Scalar t = dt * Scalar(k);
  return {Scalar(0), Scalar(0),
          std::sin(Scalar(5) * t) + Scalar(0.25) * std::sin(Scalar(10) * t)};
}

/// Stencil update of the interior cells j in {3, ..., N-1} (1-based); all
/// other cells are returned unchanged.
template <typename Scalar>
Vector<Scalar> burgers_interior_update(const Vector<Scalar>& u, Scalar mu1, Scalar mu2, Scalar dt,
                                       Scalar dx) {
  const Index n = u.size();
  if (n < 4) throw InvalidConfig("Burgers grid needs at least 4 points");
  const Index m = n - 3;  // updated cells, 0-based indices 2..n-2
  const Vector<Scalar> usq = u.array().square();
  Vector<Scalar> next = u;
  next.segment(2, m).array() -=
      mu1 * dt / (Scalar(2) * dx) *
      (Scalar(1.5) * usq.segment(2, m).array() - Scalar(2) * usq.segment(1, m).array() +
       Scalar(0.5) * usq.segment(0, m).array());
  next.segment(2, m).array() += mu2 * dt / (dx * dx) *
                                (u.segment(3, m).array() - Scalar(2) * u.segment(2, m).array() +
                                 u.segment(1, m).array());
  return next;
}

/// One explicit step. Rejects the step when dt is not strictly below the
/// stability bound for the current field, and signals divergence on
/// non-finite grid values.
template <typename Scalar>
BurgersGrid<Scalar> burgers_step(BurgersGrid<Scalar> grid) {
  if (!grid.u.allFinite()) throw DivergenceSignal(grid.step);
  const Scalar u_max = grid.u.cwiseAbs().maxCoeff();
  const Scalar bound = cfl_bound(grid.dx(), u_max, grid.c_max);
  if (!(grid.dt < bound)) throw StabilityError(grid.dt, u_max, bound);

  Vector<Scalar> next = burgers_interior_update(grid.u, grid.mu1, grid.mu2, grid.dt, grid.dx());
  const auto boundary = burgers_boundary(grid.step + 1, grid.dt);
  next[0] = boundary[0];
  next[1] = boundary[1];
  next[grid.size() - 1] = boundary[2];
  grid.u = std::move(next);
  ++grid.step;
  return grid;
}

/// Scalar measurement: grid value at 1-based index 87, x ~ 0.87.
template <typename Scalar>
Scalar burgers_measure(const BurgersGrid<Scalar>& grid) {
  if (grid.size() < 87) throw InvalidConfig("measurement index 87 requires at least 87 grid points");
  return grid.u[86];
}

template <typename Scalar = double>
BurgersGrid<Scalar> make_burgers_grid(Index n, Scalar dt, Scalar c_max, Scalar mu1, Scalar mu2) {
  if (n < 4) throw InvalidConfig("Burgers grid needs at least 4 points");
  if (!(dt > Scalar(0)) || !(c_max > Scalar(0)))
    throw InvalidConfig("Burgers dt and Courant number must be positive");
  BurgersGrid<Scalar> grid;
  grid.u = Vector<Scalar>::Zero(n);
  grid.dt = dt;
  grid.c_max = c_max;
  grid.mu1 = mu1;
  grid.mu2 = mu2;
  return grid;
}

/// SystemModel adapter. The boundary forcing is a function of the step
/// counter, so the counter is carried as the trailing state component:
/// x = [u_1..u_N, k]. There is no external input (input_dim = 0).
class BurgersPlant final : public SystemModel {
 public:
  BurgersPlant(Index n, double dt, double c_max) : n_(n), dt_(dt), c_max_(c_max) {
    if (n < 87) throw InvalidConfig("measurement index 87 requires at least 87 grid points");
    if (!(dt > 0.0) || !(c_max > 0.0))
      throw InvalidConfig("Burgers dt and Courant number must be positive");
  }

  Index state_dim() const override { return n_ + 1; }
  Index input_dim() const override { return 0; }
  Index output_dim() const override { return 1; }
  Index param_dim() const override { return 2; }

  Vector<double> initial_state() const {
    return Vector<double>::Zero(n_ + 1);  // zero field, step counter 0
  }

  Vector<double> step(const Vector<double>& x, const Vector<double>& u,
                      const Vector<double>& mu) const override {
    check(x, u, mu);
    BurgersGrid<double> grid;
    grid.u = x.head(n_);
    grid.dt = dt_;
    grid.c_max = c_max_;
    grid.mu1 = mu[0];
    grid.mu2 = mu[1];
    grid.step = static_cast<long>(std::llround(x[n_]));
    grid = burgers_step(std::move(grid));
    Vector<double> next(n_ + 1);
    next.head(n_) = grid.u;
    next[n_] = static_cast<double>(grid.step);
    return next;
  }

  Vector<double> output(const Vector<double>& x, const Vector<double>& u,
                        const Vector<double>& mu) const override {
    check(x, u, mu);
    return Vector<double>::Constant(1, x[86]);
  }

 private:
  void check(const Vector<double>& x, const Vector<double>& u, const Vector<double>& mu) const {
    if (x.size() != n_ + 1 || u.size() != 0 || mu.size() != 2)
      throw DimensionMismatch("Burgers plant expects x in R^(N+1), empty u, mu in R^2");
  }

  Index n_;
  double dt_;
  double c_max_;
};

}  // namespace rcpe
