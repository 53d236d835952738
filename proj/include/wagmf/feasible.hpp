#pragma once

#include <optional>
#include <variant>

#include "wagmf/numerics.hpp"

namespace wagmf {

struct Unconstrained {};

template <typename Scalar>
struct Box {
  Vector<Scalar> lo;
  Vector<Scalar> hi;
};

/// Feasible set F: all of R^d, or an axis-aligned box.
template <typename Scalar = double>
class FeasibleSet {
 public:
  FeasibleSet() = default;

  static FeasibleSet unconstrained() { return FeasibleSet(); }

  static FeasibleSet box(Vector<Scalar> lo, Vector<Scalar> hi) {
    require_same_dim(lo.size(), hi.size(), "box bounds");
    if (!all_finite(lo) || !all_finite(hi) || (lo.array() > hi.array()).any()) {
      throw Error(ErrorKind::InvalidSet, "box bounds must be finite with lo <= hi");
    }
    FeasibleSet set;
    set.kind_ = Box<Scalar>{std::move(lo), std::move(hi)};
    return set;
  }

  static FeasibleSet uniform_box(Eigen::Index dim, Scalar lo, Scalar hi) {
    return box(Vector<Scalar>::Constant(dim, lo), Vector<Scalar>::Constant(dim, hi));
  }

  bool is_box() const noexcept { return std::holds_alternative<Box<Scalar>>(kind_); }
  const Box<Scalar>& bounds() const { return std::get<Box<Scalar>>(kind_); }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& x) const {
    if (!is_box()) return true;
    const auto& b = bounds();
    return (x.array() >= b.lo.array()).all() && (x.array() <= b.hi.array()).all();
  }

 private:
  std::variant<Unconstrained, Box<Scalar>> kind_;
};

/// argmin_{x in F} ||x - y||_V^2. The objective is separable for a diagonal V,
/// so on a box it is the coordinate-wise clamp whatever V is.
template <typename Scalar, typename Derived>
Vector<Scalar> project(const FeasibleSet<Scalar>& set, const DiagonalMetric<Scalar>& metric,
                       const Eigen::MatrixBase<Derived>& y) {
  require_same_dim(y.size(), metric.dim(), "project");
  if (!set.is_box()) return y;
  const auto& b = set.bounds();
  require_same_dim(y.size(), b.lo.size(), "project");
  return y.cwiseMax(b.lo).cwiseMin(b.hi);
}

/// max_i (hi_i - lo_i); nullopt when the set is unbounded.
template <typename Scalar>
std::optional<Scalar> diameter_inf(const FeasibleSet<Scalar>& set) {
  if (!set.is_box()) return std::nullopt;
  const auto& b = set.bounds();
  return (b.hi - b.lo).maxCoeff();
}

}  // namespace wagmf
