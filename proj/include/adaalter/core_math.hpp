#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "adaalter/errors.hpp"

namespace adaalter {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Model parameters, gradients and accumulators all share this representation.
using ParamVector = Vector<double>;

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* what) {
  if (!v.allFinite()) throw InvariantError(std::string(what) + ": non-finite entry");
}

/// Coordinate-wise product a ∘ b.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> hadamard(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  require_same_size(a.size(), b.size(), "hadamard");
  return a.cwiseProduct(b);
}

/// result[j] = 1 / sqrt(b2[j] + shift). Throws DomainError if any radicand is not positive.
template <typename Derived>
Vector<typename Derived::Scalar> inv_sqrt_shifted(const Eigen::MatrixBase<Derived>& b2,
                                                  typename Derived::Scalar shift) {
  using Scalar = typename Derived::Scalar;
  if (!(shift >= Scalar(0))) throw DomainError("inv_sqrt_shifted: shift must be >= 0");
  Vector<Scalar> radicand = b2.array() + shift;
  if (radicand.size() > 0 && !(radicand.minCoeff() > Scalar(0))) {
    throw DomainError("inv_sqrt_shifted: nonpositive radicand");
  }
  return radicand.array().sqrt().inverse().matrix();
}

/// Coordinate-wise mean, accumulated left to right over the input order.
///
/// Uses the running-mean recurrence m_k = m_{k-1} + (v_k - m_{k-1}) / k, which is
/// exact on identical inputs and therefore leaves synchronized workers bit-identical.
template <typename Scalar>
Vector<Scalar> average(std::span<const Vector<Scalar>> vs) {
  if (vs.empty()) throw UsageError("average: empty input list");
  Vector<Scalar> mean = vs.front();
  for (std::size_t k = 1; k < vs.size(); ++k) {
    require_same_size(mean.size(), vs[k].size(), "average");
    mean += (vs[k] - mean) / static_cast<Scalar>(k + 1);
  }
  return mean;
}

template <typename Scalar>
Vector<Scalar> average(const std::vector<Vector<Scalar>>& vs) {
  return average(std::span<const Vector<Scalar>>(vs));
}

}  // namespace adaalter
