#pragma once

#include "rcpe/types.hpp"

namespace rcpe {

/// Discrete-time plant x+ = f(x, u, mu), y = g(x, u, mu). Implementations
/// must be pure: identical arguments give identical results, with no hidden
/// state, so the same object can serve as the truth model and, with the
/// estimate substituted for mu, as the estimation model.
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual Index state_dim() const = 0;
  virtual Index input_dim() const = 0;
  virtual Index output_dim() const = 0;
  virtual Index param_dim() const = 0;

  virtual Vector<double> step(const Vector<double>& x, const Vector<double>& u,
                              const Vector<double>& mu) const = 0;
  virtual Vector<double> output(const Vector<double>& x, const Vector<double>& u,
                                const Vector<double>& mu) const = 0;
};

}  // namespace rcpe
