#pragma once

#include <Eigen/Core>

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rcpe/errors.hpp"
#include "rcpe/types.hpp"

namespace rcpe {

/// Permutation written as a 1-based tuple p = (i_1, ..., i_n): component j of
/// the mapped vector is component i_j of the argument. Row j of the dense
/// matrix is row i_j of the identity, so each row and column holds exactly
/// one 1.
class PermutationMatrix {
 public:
  PermutationMatrix() = default;

  explicit PermutationMatrix(std::vector<int> tuple) : tuple_(std::move(tuple)) {
    const int n = static_cast<int>(tuple_.size());
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (int idx : tuple_) {
      if (idx < 1 || idx > n)
        throw InvalidConfig("permutation index " + std::to_string(idx) + " out of range 1.." +
                            std::to_string(n));
      if (seen[static_cast<size_t>(idx - 1)]++)
        throw InvalidConfig("duplicate permutation index " + std::to_string(idx));
    }
  }

  static PermutationMatrix identity(Index n) {
    std::vector<int> t(static_cast<size_t>(n));
    std::iota(t.begin(), t.end(), 1);
    return PermutationMatrix(std::move(t));
  }

  Index size() const noexcept { return static_cast<Index>(tuple_.size()); }
  const std::vector<int>& tuple() const noexcept { return tuple_; }

  template <typename Scalar = double>
  Matrix<Scalar> dense() const {
    const Index n = size();
    Matrix<Scalar> m = Matrix<Scalar>::Zero(n, n);
    for (Index j = 0; j < n; ++j) m(j, tuple_[static_cast<size_t>(j)] - 1) = Scalar(1);
    return m;
  }

  /// O_p v, without forming the dense matrix.
  template <typename Derived>
  Vector<typename Derived::Scalar> apply(const Eigen::MatrixBase<Derived>& v) const {
    if (v.size() != size()) throw DimensionMismatch("permutation size mismatch");
    Vector<typename Derived::Scalar> out(size());
    for (Index j = 0; j < size(); ++j) out[j] = v[tuple_[static_cast<size_t>(j)] - 1];
    return out;
  }

  /// O_p^T v; permutation matrices are orthogonal, so this is the inverse map.
  template <typename Derived>
  Vector<typename Derived::Scalar> apply_inverse(const Eigen::MatrixBase<Derived>& v) const {
    if (v.size() != size()) throw DimensionMismatch("permutation size mismatch");
    Vector<typename Derived::Scalar> out(size());
    for (Index j = 0; j < size(); ++j) out[tuple_[static_cast<size_t>(j)] - 1] = v[j];
    return out;
  }

 private:
  std::vector<int> tuple_;
};

inline PermutationMatrix make_permutation(std::vector<int> tuple) {
  return PermutationMatrix(std::move(tuple));
}

}  // namespace rcpe
