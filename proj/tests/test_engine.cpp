#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wagmf/engine.hpp"

using namespace wagmf;

namespace {

VectorXd scalar(double v) { return VectorXd::Constant(1, v); }

OptimizerConfig<double> wada_config(double alpha, StepKind kind, double beta1, double eps, int p1 = 2) {
  OptimizerConfig<double> c;
  c.engine = Engine::WagmfStable;
  c.weight = WeightSchedule<double>::linear();
  c.p1 = p1;
  c.p2 = 4;
  c.step = {alpha, kind};
  c.momentum = {beta1, 1.0};
  c.epsilon = eps;
  return c;
}

OptimizerConfig<double> as_sum(OptimizerConfig<double> c) {
  c.engine = Engine::WagmfSum;
  return c;
}

const auto kFree = FeasibleSet<double>::unconstrained();

}  // namespace

TEST(WagmfStep, SingleWadaStepByHand) {
  const auto cfg = as_sum(wada_config(1.0, StepKind::Constant, 0.0, 0.0));
  auto s = wagmf_step(OptimizerState<double>::start(scalar(0.0)), scalar(2.0), cfg, kFree);
  EXPECT_EQ(s.t, 1);
  EXPECT_DOUBLE_EQ(s.m[0], 2.0);
  EXPECT_DOUBLE_EQ(s.v[0], 4.0);
  EXPECT_DOUBLE_EQ(s.weight_sum, 1.0);
  EXPECT_DOUBLE_EQ(s.precond[0], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(s.x[0], -std::sqrt(2.0));
}

TEST(WagmfStep, ZeroGradientIsAFixedPoint) {
  for (double eps : {0.0, 1e-7}) {
    const auto cfg = as_sum(wada_config(0.5, StepKind::InvSqrt, 0.9, eps));
    auto s = OptimizerState<double>::start(VectorXd::Constant(3, 0.3));
    for (int t = 0; t < 50; ++t) s = wagmf_step(std::move(s), VectorXd(VectorXd::Zero(3)), cfg, kFree);
    EXPECT_EQ(s.x, VectorXd::Constant(3, 0.3));
    EXPECT_EQ(s.v, VectorXd::Zero(3));
    EXPECT_EQ(s.precond, VectorXd::Constant(3, eps));
  }
}

TEST(WagmfStep, EqualWeightsGiveRootMeanSquare) {
  OptimizerConfig<double> cfg;
  cfg.engine = Engine::WagmfSum;
  cfg.weight = WeightSchedule<double>::equal();
  cfg.p1 = cfg.p2 = 2;
  cfg.momentum = {0.0, 1.0};
  cfg.epsilon = 0.0;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> dist(0, 2);
  auto s = OptimizerState<double>::start(VectorXd::Zero(2));
  VectorXd sum_sq = VectorXd::Zero(2);
  for (int t = 1; t <= 200; ++t) {
    VectorXd g(2);
    g << dist(gen), dist(gen);
    sum_sq += g.cwiseAbs2();
    s = wagmf_step(std::move(s), g, cfg, kFree);
    const VectorXd expected = (sum_sq / t).cwiseSqrt();
    EXPECT_NEAR((s.precond - expected).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(WagmfStep, Errors) {
  const auto cfg = as_sum(wada_config(0.5, StepKind::InvSqrt, 0.9, 1e-7));
  const auto s = OptimizerState<double>::start(VectorXd::Zero(2));
  try {
    wagmf_step(s, VectorXd(VectorXd::Zero(3)), cfg, kFree);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimMismatch);
  }
  VectorXd bad(2);
  bad << 1.0, std::nan("");
  try {
    wagmf_step(s, bad, cfg, kFree);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteGradient);
  }
}

TEST(StableStep, FirstStepTakesTheGradientPower) {
  const auto cfg = wada_config(0.1, StepKind::InvSqrt, 0.9, 1e-7, 3);
  const auto s = stable_step(OptimizerState<double>::start(scalar(0.0)), scalar(-1.5), cfg, kFree);
  EXPECT_EQ(s.v[0], 3.375);  // |g|^3, coefficient 1 - 2/2 vanishes
}

TEST(StableStep, TwoStepsMatchWeightedSum) {
  const auto cfg = wada_config(0.1, StepKind::InvSqrt, 0.0, 0.0);
  auto stable = OptimizerState<double>::start(scalar(0.0));
  auto summed = OptimizerState<double>::start(scalar(0.0));
  for (double g : {2.0, 1.0}) {
    stable = stable_step(std::move(stable), scalar(g), cfg, kFree);
    summed = wagmf_step(std::move(summed), scalar(g), as_sum(cfg), kFree);
  }
  EXPECT_DOUBLE_EQ(stable.v[0], 2.0);
  EXPECT_DOUBLE_EQ(summed.v[0] / summed.weight_sum, 2.0);
  EXPECT_DOUBLE_EQ(stable.x[0], summed.x[0]);
}

TEST(StableStep, ConstantGradientIsAFixedPoint) {
  const auto cfg = wada_config(0.1, StepKind::InvSqrt, 0.9, 1e-7);
  auto s = OptimizerState<double>::start(scalar(0.0));
  for (int t = 1; t <= 500; ++t) {
    s = stable_step(std::move(s), scalar(-3.0), cfg, kFree);
    ASSERT_NEAR(s.v[0], 9.0, 1e-12) << t;
  }
}

TEST(StableStep, RejectsOtherEngines) {
  auto cfg = as_sum(wada_config(0.1, StepKind::InvSqrt, 0.9, 1e-7));
  EXPECT_THROW(stable_step(OptimizerState<double>::start(scalar(0.0)), scalar(1.0), cfg, kFree), Error);
}

TEST(StableStep, MatchesWeightedSumOnRandomStreams) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> dist(-100, 100);
  for (int p1 : {2, 3, 4}) {
    const auto cfg = wada_config(0.3, StepKind::InvSqrt, 0.9, 1e-7, p1);
    auto stable = OptimizerState<double>::start(VectorXd::Zero(4));
    auto summed = stable;
    double worst = 0.0;
    for (int t = 1; t <= 3000; ++t) {
      VectorXd g(4);
      for (auto& e : g) e = dist(gen);
      stable = stable_step(std::move(stable), g, cfg, kFree);
      summed = wagmf_step(std::move(summed), g, as_sum(cfg), kFree);
      const auto denom = stable.x.cwiseAbs().cwiseMax(summed.x.cwiseAbs()).cwiseMax(1.0);
      worst = std::max(worst, ((stable.x - summed.x).cwiseAbs().array() / denom.array()).maxCoeff());
    }
    EXPECT_LE(worst, 1e-8) << "p1=" << p1;
  }
}

TEST(GenericStep, EmaConvergesToGradientMagnitude) {
  OptimizerConfig<double> cfg;
  cfg.engine = Engine::Ema;
  cfg.beta2 = 0.999;
  cfg.momentum = {0.9, 1.0};
  cfg.epsilon = 1e-7;
  auto s = OptimizerState<double>::start(scalar(0.0));
  const double c = 2.5;
  for (int t = 1; t <= 20000; ++t) {
    s = generic_step(std::move(s), scalar(c), cfg, kFree);
    if (t % 1000 == 0) {
      // Geometric series: v_t = c^2 (1 - beta2^t).
      EXPECT_NEAR(s.v[0], c * c * (1.0 - std::pow(0.999, t)), 1e-10);
    }
  }
  EXPECT_NEAR(s.precond[0], c + 1e-7, 1e-8);
}

TEST(GenericStep, AmsGradPreconditionerNeverDecreases) {
  OptimizerConfig<double> cfg;
  cfg.engine = Engine::AmsGrad;
  cfg.beta2 = 0.9;
  cfg.epsilon = 0.0;
  auto s = OptimizerState<double>::start(scalar(0.0), true);
  double prev_v = 0.0;
  double prev_V = 0.0;
  for (int t = 1; t <= 200; ++t) {
    const double g = t <= 10 ? 10.0 : 0.01;  // v decays after the burst
    s = generic_step(std::move(s), scalar(g), cfg, kFree);
    if (t > 11) {
      EXPECT_LT(s.v[0], prev_v);
    }
    EXPECT_GE(s.precond[0], prev_V);
    prev_v = s.v[0];
    prev_V = s.precond[0];
  }
}

TEST(GenericStep, SignStep) {
  OptimizerConfig<double> cfg;
  cfg.engine = Engine::Sign;
  cfg.step = {0.1, StepKind::Constant};
  const auto s = generic_step(OptimizerState<double>::start(scalar(0.0)), scalar(-3.7), cfg, kFree);
  EXPECT_DOUBLE_EQ(s.x[0], 0.1);
}

TEST(GenericStep, PlainSgdUsesIdentityPreconditioner) {
  OptimizerConfig<double> cfg;
  cfg.engine = Engine::PlainSgd;
  cfg.step = {0.5, StepKind::Constant};
  cfg.momentum = {0.0, 1.0};
  const auto s = generic_step(OptimizerState<double>::start(scalar(1.0)), scalar(4.0), cfg, kFree);
  EXPECT_DOUBLE_EQ(s.x[0], -1.0);
  EXPECT_EQ(s.precond[0], 1.0);
}

TEST(GenericStep, BiasCorrectionRescalesFirstStep) {
  OptimizerConfig<double> cfg;
  cfg.engine = Engine::Ema;
  cfg.step = {0.1, StepKind::Constant};
  cfg.epsilon = 0.0;
  cfg.bias_correction = true;
  const auto s = generic_step(OptimizerState<double>::start(scalar(0.0)), scalar(5.0), cfg, kFree);
  // m_hat = g, v_hat = g^2 on the first step, so the move is alpha * sign(g).
  EXPECT_NEAR(s.x[0], -0.1, 1e-15);
}

TEST(Engine, MomentumIsConvexCombinationOfGradients) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> dist(-4, 7);
  auto cfg = wada_config(0.1, StepKind::InvSqrt, 0.9, 1e-7);
  cfg.momentum.lambda = 0.999;
  auto s = OptimizerState<double>::start(VectorXd::Zero(3));
  // m_0 = 0 enters the combination, so the hull includes 0.
  VectorXd lo = VectorXd::Zero(3), hi = VectorXd::Zero(3);
  for (int t = 1; t <= 2000; ++t) {
    VectorXd g(3);
    for (auto& e : g) e = dist(gen);
    lo = lo.cwiseMin(g);
    hi = hi.cwiseMax(g);
    s = stable_step(std::move(s), g, cfg, kFree);
    EXPECT_TRUE((s.m.array() >= lo.array() - 1e-12).all() && (s.m.array() <= hi.array() + 1e-12).all());
  }
}

TEST(Engine, WadaPreconditionerBoundedBySqrtGInf) {
  std::mt19937_64 gen(10);
  const double g_inf = 30.0;
  std::uniform_real_distribution<double> dist(-g_inf, g_inf);
  const double eps = 1e-7;
  const auto cfg = wada_config(0.1, StepKind::InvSqrt, 0.9, eps);
  auto s = OptimizerState<double>::start(VectorXd::Zero(5));
  for (int t = 1; t <= 5000; ++t) {
    VectorXd g(5);
    for (auto& e : g) e = dist(gen);
    s = stable_step(std::move(s), g, cfg, kFree);
    EXPECT_LE(s.precond.maxCoeff(), std::sqrt(g_inf) + eps + 1e-12);
  }
}

TEST(Engine, EqualWeightsMatchReferenceAdaGrad) {
  // Reference: x <- x - alpha g / sqrt(sum g^2). The framework form divides by
  // sqrt(sum g^2 / t) with alpha / sqrt(t), which is the same map.
  OptimizerConfig<double> cfg;
  cfg.engine = Engine::WagmfSum;
  cfg.weight = WeightSchedule<double>::equal();
  cfg.p1 = cfg.p2 = 2;
  cfg.step = {0.2, StepKind::InvSqrt};
  cfg.momentum = {0.0, 1.0};
  cfg.epsilon = 0.0;
  std::mt19937_64 gen(12);
  std::normal_distribution<double> dist(0, 1);
  for (int run = 0; run < 20; ++run) {
    auto s = OptimizerState<double>::start(VectorXd::Zero(3));
    VectorXd x_ref = VectorXd::Zero(3);
    VectorXd acc = VectorXd::Zero(3);
    for (int t = 1; t <= 500; ++t) {
      VectorXd g(3);
      for (auto& e : g) e = dist(gen);
      acc += g.cwiseAbs2();
      x_ref -= (0.2 * g.array() / acc.array().sqrt()).matrix();
      s = wagmf_step(std::move(s), g, cfg, kFree);
      for (Eigen::Index i = 0; i < 3; ++i) {
        ASSERT_NEAR(s.x[i], x_ref[i], 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x_ref[i])));
      }
    }
  }
}

TEST(Engine, WadaEffectiveRateNeverGrows) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::bernoulli_distribution sparse(0.3);
  const auto cfg = wada_config(0.1, StepKind::InvSqrt, 0.9, 1e-7);
  auto s = OptimizerState<double>::start(VectorXd::Zero(4));
  for (int t = 1; t <= 10000; ++t) {
    VectorXd g(4);
    for (auto& e : g) e = sparse(gen) ? dist(gen) : 0.0;
    const VectorXd prev = s.precond;
    const double prev_alpha = s.alpha_t;
    s = stable_step(std::move(s), g, cfg, kFree);
    if (t >= 2) ASSERT_TRUE(preconditioner_nondecreasing(prev, prev_alpha, s.precond, s.alpha_t)) << t;
  }
}

TEST(OptimizerConfig, StableEngineNeedsLinearWeightsAndFourthRoot) {
  auto cfg = wada_config(0.1, StepKind::InvSqrt, 0.9, 1e-7);
  EXPECT_NO_THROW(cfg.validate());
  cfg.p2 = 2;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.p2 = 4;
  cfg.weight = WeightSchedule<double>::equal();
  EXPECT_THROW(cfg.validate(), Error);
}
