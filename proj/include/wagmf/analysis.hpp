#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wagmf/problems.hpp"
#include "wagmf/schedules.hpp"

namespace wagmf {

/// Per-step record stream of one run. Vectors are stored column-wise in flat
/// buffers (d x T) so million-step 1-d runs stay cheap.
class RunTrace {
 public:
  using ColumnMap = Eigen::Map<const VectorXd>;
  using MatrixMap = Eigen::Map<const Eigen::MatrixXd>;

  struct Metadata {
    std::string preset;
    std::string problem;
    std::optional<std::uint64_t> seed;
    Eigen::Index dim = 0;
  };

  RunTrace() = default;
  explicit RunTrace(Metadata meta) : meta_(std::move(meta)) {}

  void reserve(std::size_t steps);

  /// Appends the record for round t = size() + 1.
  void append(const VectorXd& x, const VectorXd& g, double loss, double alpha, const VectorXd& precond);

  std::size_t size() const noexcept { return loss_.size(); }
  bool empty() const noexcept { return loss_.empty(); }
  const Metadata& meta() const noexcept { return meta_; }
  Metadata& meta() noexcept { return meta_; }
  Eigen::Index dim() const noexcept { return meta_.dim; }

  // Accessors take the 1-based round index t.
  std::int64_t t(std::size_t i) const noexcept { return static_cast<std::int64_t>(i) + 1; }
  ColumnMap x(std::int64_t t) const { return column(xs_, t); }
  ColumnMap g(std::int64_t t) const { return column(gs_, t); }
  ColumnMap precond(std::int64_t t) const { return column(vs_, t); }
  double loss(std::int64_t t) const { return loss_[static_cast<std::size_t>(t - 1)]; }
  double alpha(std::int64_t t) const { return alpha_[static_cast<std::size_t>(t - 1)]; }

  MatrixMap gradients() const { return {gs_.data(), meta_.dim, static_cast<Eigen::Index>(size())}; }
  MatrixMap iterates() const { return {xs_.data(), meta_.dim, static_cast<Eigen::Index>(size())}; }

 private:
  ColumnMap column(const std::vector<double>& buf, std::int64_t t) const {
    return {buf.data() + static_cast<std::size_t>(t - 1) * static_cast<std::size_t>(meta_.dim), meta_.dim};
  }

  Metadata meta_;
  std::vector<double> xs_, gs_, vs_;
  std::vector<double> loss_, alpha_;
};

struct RegretPoint {
  std::int64_t t;
  double regret;
  double average;
};

/// R(t) = sum_{s<=t} f_s(x_s) - f_s(x*), re-evaluating each round at x* with
/// the round's recorded seed.
std::vector<RegretPoint> regret(const RunTrace& trace, const LossOracle& oracle, const VectorXd& x_star);

/// Best fixed point in hindsight for 1-d linear losses over [lo, hi]: the
/// endpoint opposite to the sign of the summed slope.
double linear_comparator(const RunTrace& trace, double lo, double hi);

struct BoundInputs {
  double d_inf = 0.0;
  double g_inf = 0.0;
  double alpha = 0.0;
  double beta1 = 0.0;
  double lambda = 1.0;
};

struct BoundReport {
  double term1 = 0.0;
  double term2 = 0.0;
  double term3 = 0.0;
  double total = 0.0;
  BoundInputs inputs;
};

/// Three-term regret bound of the weighted framework, evaluated on the recorded
/// V_t, alpha_t and the momentum rebuilt from g_t with beta_{1t} = beta1 lambda^{t-1}.
/// V_0 is taken as zero.
BoundReport thm1_bound(const RunTrace& trace, std::optional<double> d_inf, double beta1, double lambda);

/// Closed-form bound for WADA with decaying momentum:
/// D^2/(2(1-b1)) W + b1 D^2 sqrt(G)/(2(1-b1)(1-l)^2) + a d G/(1-b1)^2 W,
/// W = sum_i (sum_j j g_{j,i}^2)^{1/4}.
template <typename Derived>
double corollary1_bound(const Eigen::MatrixBase<Derived>& grads, double d_inf, double g_inf, double alpha,
                        double beta1, double lambda, Eigen::Index d);

/// sum_i (sum_j j g_{j,i}^2)^{1/4}; grads holds one column per step.
template <typename Derived>
double weighted_dd_term(const Eigen::MatrixBase<Derived>& grads) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < grads.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < grads.cols(); ++j) {
      const double g = grads(i, j);
      acc += static_cast<double>(j + 1) * g * g;
    }
    total += std::sqrt(std::sqrt(acc));
  }
  return total;
}

/// sum_i ||g_{1:T,i}||_2.
template <typename Derived>
double adagrad_dd_term(const Eigen::MatrixBase<Derived>& grads) {
  return grads.rowwise().norm().sum();
}

/// Largest |g_{t,i}| in the stream.
template <typename Derived>
double observed_g_inf(const Eigen::MatrixBase<Derived>& grads) {
  return grads.size() == 0 ? 0.0 : grads.cwiseAbs().maxCoeff();
}

template <typename Derived>
double corollary1_bound(const Eigen::MatrixBase<Derived>& grads, double d_inf, double g_inf, double alpha,
                        double beta1, double lambda, Eigen::Index d) {
  if (lambda >= 1.0) throw Error(ErrorKind::LambdaOne, "momentum decay lambda must be < 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(ErrorKind::DomainViolation, "beta1 must lie in [0, 1)");
  const double w = weighted_dd_term(grads);
  const double d2 = d_inf * d_inf;
  const double one_b = 1.0 - beta1;
  return d2 / (2.0 * one_b) * w + beta1 * d2 * std::sqrt(g_inf) / (2.0 * one_b * (1.0 - lambda) * (1.0 - lambda)) +
         alpha * static_cast<double>(d) * g_inf / (one_b * one_b) * w;
}

struct Lemma3Result {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Checks sum_i x_i / (sum_{j<=i} j x_j)^{1/4} <= M (sum_i i x_i)^{1/4}
/// for 0 <= x_i <= M^2, M >= 1, with slack 1e-12.
Lemma3Result lemma3_check(std::span<const double> xs, double m);

/// Max over coordinates of |fd - analytic| / max(|fd|, |analytic|, 1e-12)
/// using central differences with step h.
template <typename F>
  requires std::invocable<F&, const VectorXd&>
double fd_gradient_check(F&& objective, const VectorXd& x, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::DomainViolation, "finite-difference step must be > 0");
  const VectorXd analytic = objective(x).grad;
  VectorXd probe = x;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = objective(probe).loss;
    probe[i] = x[i] - h;
    const double down = objective(probe).loss;
    probe[i] = x[i];
    const double fd = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(analytic[i]), 1e-12});
    worst = std::max(worst, std::abs(fd - analytic[i]) / scale);
  }
  return worst;
}

inline double fd_gradient_check(const LossOracle& oracle, const VectorXd& x, double h, std::int64_t t = 1,
                                std::uint64_t seed = 0) {
  return fd_gradient_check([&](const VectorXd& p) { return oracle.evaluate(t, p, seed); }, x, h);
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int dof = 0;
};

/// Two-sample, two-sided, pooled-variance Student's t-test. Zero pooled
/// variance gives t = 0, p = 1 for equal means and t = +-inf, p = 0 otherwise.
TTestResult students_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace wagmf
