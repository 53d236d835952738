#include "wagmf/analysis.hpp"

#include <limits>
#include <numeric>

namespace wagmf {

void RunTrace::reserve(std::size_t steps) {
  const auto d = static_cast<std::size_t>(meta_.dim);
  xs_.reserve(steps * d);
  gs_.reserve(steps * d);
  vs_.reserve(steps * d);
  loss_.reserve(steps);
  alpha_.reserve(steps);
}

void RunTrace::append(const VectorXd& x, const VectorXd& g, double loss, double alpha, const VectorXd& precond) {
  if (meta_.dim == 0) meta_.dim = x.size();
  require_same_dim(x.size(), meta_.dim, "trace iterate");
  require_same_dim(g.size(), meta_.dim, "trace gradient");
  require_same_dim(precond.size(), meta_.dim, "trace preconditioner");
  xs_.insert(xs_.end(), x.data(), x.data() + x.size());
  gs_.insert(gs_.end(), g.data(), g.data() + g.size());
  vs_.insert(vs_.end(), precond.data(), precond.data() + precond.size());
  loss_.push_back(loss);
  alpha_.push_back(alpha);
}

std::vector<RegretPoint> regret(const RunTrace& trace, const LossOracle& oracle, const VectorXd& x_star) {
  if (oracle.stochastic() && !trace.meta().seed) {
    throw Error(ErrorKind::MissingBranchRecord, "stochastic problem trace carries no seed");
  }
  require_same_dim(x_star.size(), oracle.dim(), "comparator");
  const std::uint64_t seed = trace.meta().seed.value_or(0);
  std::vector<RegretPoint> out;
  out.reserve(trace.size());
  double cumulative = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const std::int64_t t = trace.t(i);
    cumulative += trace.loss(t) - oracle.evaluate(t, x_star, seed).loss;
    out.push_back({t, cumulative, cumulative / static_cast<double>(t)});
  }
  return out;
}

double linear_comparator(const RunTrace& trace, double lo, double hi) {
  require_same_dim(trace.dim(), 1, "linear_comparator");
  const double slope = trace.gradients().sum();
  return slope > 0.0 ? lo : hi;
}

BoundReport thm1_bound(const RunTrace& trace, std::optional<double> d_inf, double beta1, double lambda) {
  if (!d_inf) throw Error(ErrorKind::UnboundedSet, "bound needs a finite feasible-set diameter");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(ErrorKind::DomainViolation, "beta1 must lie in [0, 1)");
  BoundReport report;
  report.inputs = {*d_inf, observed_g_inf(trace.gradients()), trace.empty() ? 0.0 : trace.alpha(1), beta1, lambda};
  if (trace.empty()) return report;

  const double d2 = *d_inf * *d_inf;
  const MomentumSchedule<double> momentum{beta1, lambda};
  VectorXd m = VectorXd::Zero(trace.dim());
  VectorXd v_prev = VectorXd::Zero(trace.dim());
  const auto steps = static_cast<std::int64_t>(trace.size());
  for (std::int64_t t = 1; t <= steps; ++t) {
    const double b1t = beta1_at(momentum, t);
    const double a_t = trace.alpha(t);
    m = b1t * m + (1.0 - b1t) * VectorXd(trace.g(t));
    const auto v = trace.precond(t);
    if (b1t > 0.0) report.term2 += d2 / 2.0 * b1t * v_prev.sum() / ((1.0 - b1t) * a_t);
    double inv_norm = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] > 0.0) inv_norm += m[i] * m[i] / v[i];
    }
    report.term3 += a_t / (1.0 - beta1) * inv_norm;
    v_prev = v;
  }
  report.term1 = d2 / (2.0 * trace.alpha(steps) * (1.0 - beta1)) * trace.precond(steps).sum();
  report.total = report.term1 + report.term2 + report.term3;
  return report;
}

Lemma3Result lemma3_check(std::span<const double> xs, double m) {
  if (!(m >= 1.0)) throw Error(ErrorKind::DomainViolation, "M must be >= 1");
  const double cap = m * m;
  long double prefix = 0.0L;
  long double lhs = 0.0L;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    if (!(x >= 0.0 && x <= cap)) {
      throw Error(ErrorKind::DomainViolation, "x_" + std::to_string(i + 1) + " outside [0, M^2]");
    }
    prefix += static_cast<long double>(i + 1) * x;
    if (x > 0.0) lhs += x / std::sqrt(std::sqrt(prefix));
  }
  const long double rhs = m * std::sqrt(std::sqrt(prefix));
  return {lhs <= rhs + 1e-12L, static_cast<double>(lhs), static_cast<double>(rhs)};
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0) || x < 0.0 || x > 1.0) {
    throw Error(ErrorKind::DomainViolation, "incomplete_beta needs a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

TTestResult students_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorKind::InsufficientSeeds, "t-test needs at least two samples per group");
  }
  auto mean = [](std::span<const double> s) { return std::accumulate(s.begin(), s.end(), 0.0) / s.size(); };
  auto sum_sq = [](std::span<const double> s, double mu) {
    double acc = 0.0;
    for (double v : s) acc += (v - mu) * (v - mu);
    return acc;
  };
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double mean_a = mean(a);
  const double mean_b = mean(b);
  TTestResult out;
  out.dof = static_cast<int>(a.size() + b.size() - 2);
  const double pooled = (sum_sq(a, mean_a) + sum_sq(b, mean_b)) / out.dof;
  const double diff = mean_a - mean_b;
  if (pooled == 0.0) {
    if (diff == 0.0) return {0.0, 1.0, out.dof};
    return {diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0,
            out.dof};
  }
  out.t = diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  const double nu = out.dof;
  out.p = incomplete_beta(nu / 2.0, 0.5, nu / (nu + out.t * out.t));
  return out;
}

}  // namespace wagmf
