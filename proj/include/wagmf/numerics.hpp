#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "wagmf/error.hpp"

namespace wagmf {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Vector<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& v) {
  return v.derived().array().isFinite().all();
}

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* where) {
  if (a != b) {
    throw Error(ErrorKind::DimMismatch,
                std::string(where) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

/// Positive diagonal of a preconditioner V_t. Construction rejects any entry
/// that is not strictly positive and finite.
template <typename Scalar>
class DiagonalMetric {
 public:
  explicit DiagonalMetric(Vector<Scalar> diag) : diag_(std::move(diag)) {
    if (diag_.size() == 0 || !all_finite(diag_) || (diag_.array() <= Scalar(0)).any()) {
      throw Error(ErrorKind::InvalidMetric, "diagonal metric entries must be finite and > 0");
    }
  }

  static DiagonalMetric identity(Eigen::Index dim) {
    return DiagonalMetric(Vector<Scalar>::Ones(dim));
  }

  /// Builds a metric from a preconditioner that may hold exact zeros (epsilon = 0
  /// and an all-zero gradient history). Those coordinates take weight 1; the
  /// update leaves them fixed, so the choice only matters for non-separable sets.
  static DiagonalMetric from_preconditioner(const Vector<Scalar>& v) {
    return DiagonalMetric((v.array() > Scalar(0)).select(v, Scalar(1)));
  }

  const Vector<Scalar>& diag() const noexcept { return diag_; }
  Eigen::Index dim() const noexcept { return diag_.size(); }

 private:
  Vector<Scalar> diag_;
};

namespace detail {

constexpr bool is_power_of_two(int p) { return p > 0 && (p & (p - 1)) == 0; }

template <typename Scalar>
Scalar int_pow(Scalar x, int p) {
  Scalar result(1);
  Scalar base = x;
  while (p > 0) {
    if (p & 1) result *= base;
    base *= base;
    p >>= 1;
  }
  return result;
}

template <typename Scalar>
Scalar int_root(Scalar x, int p) {
  using std::pow;
  using std::sqrt;
  if (p == 1) return x;
  if (is_power_of_two(p)) {
    Scalar r = x;
    for (int k = p; k > 1; k >>= 1) r = sqrt(r);
    return r;
  }
  if (x < Scalar(0)) return -pow(-x, Scalar(1) / Scalar(p));
  return pow(x, Scalar(1) / Scalar(p));
}

}  // namespace detail

/// Element-wise p-th power.
template <typename Derived>
auto elem_pow(const Eigen::MatrixBase<Derived>& v, int p) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = detail::int_pow(v[i], p);
  return out;
}

/// Element-wise p-th root. Power-of-two roots use repeated square roots; odd
/// roots of negative entries are real and keep their sign.
template <typename Derived>
auto elem_root(const Eigen::MatrixBase<Derived>& v, int p) {
  using Scalar = typename Derived::Scalar;
  if (p < 1) throw Error(ErrorKind::DomainViolation, "root order must be >= 1");
  if (p % 2 == 0 && (v.array() < Scalar(0)).any()) {
    throw Error(ErrorKind::NegativeRadicand, "even root of a negative entry");
  }
  Vector<Scalar> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = detail::int_root(v[i], p);
  return out;
}

/// Squared V-weighted norm, sum_i V_i x_i^2.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar weighted_norm_sq(const Eigen::MatrixBase<Derived>& x, const DiagonalMetric<Scalar>& metric) {
  require_same_dim(x.size(), metric.dim(), "weighted_norm_sq");
  return (metric.diag().array() * x.array().square()).sum();
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar weighted_norm(const Eigen::MatrixBase<Derived>& x, const DiagonalMetric<Scalar>& metric) {
  using std::sqrt;
  return sqrt(weighted_norm_sq(x, metric));
}

}  // namespace wagmf
