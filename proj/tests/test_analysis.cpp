#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <random>

#include "wagmf/analysis.hpp"
#include "wagmf/optimizers.hpp"

using namespace wagmf;

namespace {

VectorXd scalar(double v) { return VectorXd::Constant(1, v); }

RunTrace constant_run(const LossOracle& oracle, double x, std::int64_t steps, std::optional<std::uint64_t> seed) {
  RunTrace trace({"fixed", oracle.id(), seed, 1});
  for (std::int64_t t = 1; t <= steps; ++t) {
    const auto e = oracle.evaluate(t, scalar(x), seed.value_or(0));
    trace.append(scalar(x), e.grad, e.loss, 1.0, scalar(1.0));
  }
  return trace;
}

double boost_two_sided_p(double t, int dof) {
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

TEST(Regret, OnlineExampleOverOnePeriod) {
  const ReddiOnline oracle;
  const auto trace = constant_run(oracle, 1.0, 101, std::nullopt);
  const auto r = regret(trace, oracle, scalar(-1.0));
  ASSERT_EQ(r.size(), 101u);
  EXPECT_DOUBLE_EQ(r.back().regret, 20.0);
  EXPECT_DOUBLE_EQ(r.back().average, 20.0 / 101.0);
  EXPECT_DOUBLE_EQ(r.front().regret, 2020.0);
  EXPECT_EQ(linear_comparator(trace, -1.0, 1.0), -1.0);
}

TEST(Regret, ZeroAtTheComparator) {
  const ReddiStochastic oracle;
  const auto trace = constant_run(oracle, -1.0, 500, 3);
  for (const auto& p : regret(trace, oracle, scalar(-1.0))) EXPECT_EQ(p.regret, 0.0);
}

TEST(Regret, StochasticReplayUsesTheRecordedBranches) {
  const ReddiStochastic oracle;
  const auto trace = constant_run(oracle, 0.5, 2000, 17);
  double expected = 0.0;
  for (std::int64_t t = 1; t <= 2000; ++t) {
    const double slope = ReddiStochastic::high_branch(t, 17) ? kReddiHighSlope : kReddiLowSlope;
    expected += slope * 0.5 - slope * -1.0;
  }
  EXPECT_NEAR(regret(trace, oracle, scalar(-1.0)).back().regret, expected, 1e-9);
}

TEST(Regret, MissingSeedOnStochasticTrace) {
  const ReddiStochastic oracle;
  auto trace = constant_run(oracle, 0.5, 10, 1);
  trace.meta().seed.reset();
  try {
    regret(trace, oracle, scalar(-1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingBranchRecord);
  }
}

TEST(Bounds, Thm1ByHand) {
  RunTrace trace({"hand", "none", std::nullopt, 1});
  trace.append(scalar(0.0), scalar(1.0), 0.0, 1.0, scalar(1.0));
  trace.append(scalar(0.0), scalar(2.0), 0.0, 1.0 / std::sqrt(2.0), scalar(2.0));
  const auto b = thm1_bound(trace, 2.0, 0.5, 0.5);
  EXPECT_NEAR(b.term1, 11.3137084989847603904, 1e-13);
  EXPECT_NEAR(b.term2, 0.942809041582063365868, 1e-14);
  EXPECT_NEAR(b.term3, 2.36720384407072705662, 1e-14);
  EXPECT_NEAR(b.total, 14.6237213846375508129, 1e-13);
  EXPECT_EQ(b.inputs.g_inf, 2.0);
}

TEST(Bounds, Thm1NeedsAFiniteDiameter) {
  RunTrace trace({"hand", "none", std::nullopt, 1});
  trace.append(scalar(0.0), scalar(1.0), 0.0, 1.0, scalar(1.0));
  try {
    thm1_bound(trace, std::nullopt, 0.5, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnboundedSet);
  }
}

TEST(Bounds, Corollary1ByHand) {
  Eigen::MatrixXd g(1, 2);
  g << 1.0, 2.0;
  EXPECT_NEAR(corollary1_bound(g, 2.0, 2.0, 0.1, 0.5, 0.5, 1), 19.6275523753153713993, 1e-13);
  try {
    corollary1_bound(g, 2.0, 2.0, 0.1, 0.5, 1.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LambdaOne);
  }
}

TEST(Bounds, DataDependentTerms) {
  Eigen::MatrixXd g(1, 50);
  for (int j = 0; j < 50; ++j) g(0, j) = std::pow(0.5, j + 1);
  EXPECT_NEAR(weighted_dd_term(g), 0.8164965809277260327, 1e-15);
  Eigen::MatrixXd h(2, 3);
  h << 3, 0, 4, 1, 1, 1;
  EXPECT_DOUBLE_EQ(adagrad_dd_term(h), 5.0 + std::sqrt(3.0));
  EXPECT_EQ(observed_g_inf(h), 4.0);
}

TEST(Bounds, WadaRegretStaysBelowTheBoundOnOnlineStream) {
  const ReddiOnline oracle;
  const auto preset = make_preset<double>("wada", 0.5, {{"lambda", "0.99"}});
  const auto set = FeasibleSet<double>::uniform_box(1, -1.0, 1.0);
  auto s = preset.initial_state(scalar(0.0));
  RunTrace trace({"wada", "reddi_online", std::nullopt, 1});
  for (int t = 1; t <= 20000; ++t) {
    const auto e = oracle.evaluate(t, s.x, 0);
    const VectorXd x = s.x;
    s = step(preset, std::move(s), e.grad, set);
    trace.append(x, e.grad, e.loss, s.alpha_t, s.precond);
  }
  const double r = regret(trace, oracle, scalar(linear_comparator(trace, -1.0, 1.0))).back().regret;
  const auto b = thm1_bound(trace, diameter_inf(set), 0.9, 0.99);
  EXPECT_LE(r, b.total);
  EXPECT_LE(r, corollary1_bound(trace.gradients(), 2.0, 1010.0, 0.5, 0.9, 0.99, 1));
}

TEST(Lemma3, SidesMatchDirectEvaluation) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const double m = 1.0 + 9.0 * std::uniform_real_distribution<double>(0, 1)(gen);
    std::uniform_real_distribution<double> dist(0, m * m);
    std::vector<double> xs(1 + trial % 50);
    for (auto& x : xs) x = dist(gen);
    double prefix = 0.0, lhs = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      prefix += (i + 1) * xs[i];
      lhs += xs[i] / std::pow(prefix, 0.25);
    }
    const auto r = lemma3_check(xs, m);
    EXPECT_NEAR(r.lhs, lhs, 1e-12 * lhs);
    EXPECT_NEAR(r.rhs, m * std::pow(prefix, 0.25), 1e-12 * r.rhs);
    EXPECT_EQ(r.holds, r.lhs <= r.rhs + 1e-12);
  }
}

TEST(Lemma3, TwoTermCounterexample) {
  const std::vector<double> xs{1.0, 1.0};
  const auto r = lemma3_check(xs, 1.0);
  EXPECT_FALSE(r.holds);
  EXPECT_NEAR(r.lhs, 1.7598356856515927, 1e-15);
  EXPECT_NEAR(r.rhs, 1.3160740129524924, 1e-15);
}

TEST(Lemma3, SingleTermHolds) {
  for (double m : {1.0, 2.5, 10.0}) {
    for (double frac : {0.0, 0.3, 1.0}) {
      const std::vector<double> xs{frac * m * m};
      EXPECT_TRUE(lemma3_check(xs, m).holds);
    }
  }
}

TEST(Lemma3, EdgeCases) {
  const std::vector<double> zeros(10, 0.0);
  EXPECT_TRUE(lemma3_check(zeros, 1.0).holds);
  const std::vector<double> single{4.0};
  const auto r = lemma3_check(single, 2.0);
  EXPECT_DOUBLE_EQ(r.lhs, 4.0 / std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(r.rhs, 2.0 * std::sqrt(2.0));
  const std::vector<double> too_big{5.0};
  EXPECT_THROW(lemma3_check(too_big, 2.0), Error);
  EXPECT_THROW(lemma3_check(single, 0.5), Error);
}

TEST(FiniteDifference, Polynomial) {
  auto f = [](const VectorXd& x) {
    Evaluation e;
    e.loss = x[0] * x[0] * x[1] + std::sin(x[1]);
    e.grad.resize(2);
    e.grad << 2 * x[0] * x[1], x[0] * x[0] + std::cos(x[1]);
    return e;
  };
  VectorXd x(2);
  x << 0.7, -1.3;
  EXPECT_LE(fd_gradient_check(f, x, 1e-6), 1e-8);
  auto wrong = [&](const VectorXd& p) {
    auto e = f(p);
    e.grad[1] += 0.01;
    return e;
  };
  EXPECT_GE(fd_gradient_check(wrong, x, 1e-6), 1e-3);
  EXPECT_THROW(fd_gradient_check(f, x, 0.0), Error);
}

TEST(TTest, FrozenReferenceValues) {
  struct Case {
    std::vector<double> a, b;
    double t, p;
  };
  const std::vector<Case> cases{
      {{1, 2, 3, 4, 5}, {2, 3, 4, 5, 6}, -1.0, 0.34659350708733416},
      {{0.1, 0.4, 0.35, 0.8}, {0.9, 1.1, 0.7, 1.3, 1.0}, -3.4470015345101044, 0.010734836087524959},
      {{10.2, 9.8, 10.1, 10.0, 9.9, 10.3, 10.05, 9.95},
       {10.4, 10.6, 10.2, 10.5, 10.45, 10.35, 10.55, 10.3},
       -5.137126718505737,
       0.00015102186552071013},
      {{3.1, 2.9}, {3.4, 3.6, 3.3}, -3.1843366656181304, 0.049927499019902996},
      {{-1.5, 0.2, 3.3, -0.7, 1.1, 2.2}, {0.5, 0.4, -0.3, 1.9, 2.6, 0.1, 0.0}, 0.029461713093785098,
       0.9770240932921925},
  };
  for (const auto& c : cases) {
    const auto r = students_t_test(c.a, c.b);
    EXPECT_NEAR(r.t, c.t, 1e-12 * std::max(1.0, std::abs(c.t)));
    EXPECT_NEAR(r.p, c.p, 1e-10 * c.p);
    EXPECT_NEAR(r.p, boost_two_sided_p(r.t, r.dof), 1e-10 * c.p);
  }
}

TEST(TTest, DegenerateAndSymmetric) {
  const std::vector<double> zeros(4, 0.0), ones(4, 1.0);
  const auto r = students_t_test(zeros, ones);
  EXPECT_EQ(r.t, -INFINITY);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_EQ(students_t_test(ones, ones).p, 1.0);

  std::mt19937_64 gen(8);
  std::normal_distribution<double> dist(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(3 + trial % 9), b(2 + trial % 7);
    for (auto& v : a) v = dist(gen);
    for (auto& v : b) v = dist(gen) + 0.5;
    const auto ab = students_t_test(a, b);
    const auto ba = students_t_test(b, a);
    EXPECT_EQ(ab.t, -ba.t);
    EXPECT_EQ(ab.p, ba.p);
    EXPECT_NEAR(ab.p, boost_two_sided_p(ab.t, ab.dof), 1e-12);
  }
  const std::vector<double> one{1.0};
  try {
    students_t_test(one, ones);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSeeds);
  }
}

TEST(IncompleteBeta, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 7.0, 30.0}) {
    for (double b : {0.5, 1.0, 3.0, 12.0}) {
      for (double x : {0.001, 0.1, 0.37, 0.5, 0.8, 0.999}) {
        EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-13);
      }
    }
  }
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
  EXPECT_THROW(incomplete_beta(-1.0, 1.0, 0.5), Error);
}
