#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "wagmf/feasible.hpp"
#include "wagmf/numerics.hpp"
#include "wagmf/schedules.hpp"

namespace wagmf {

enum class Engine {
  WagmfSum,     // weighted sum v_t = v_{t-1} + gamma_t g^{p1}, normalized by b_t
  WagmfStable,  // running weighted average for gamma_t = t, p2 = 4
  Ema,          // v_t = beta2 v_{t-1} + (1 - beta2) g^2
  AmsGrad,      // Ema plus running elementwise max
  Sign,         // x - alpha_t sign(g)
  PlainSgd,     // V_t = I
};

inline std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::WagmfSum: return "wagmf_sum";
    case Engine::WagmfStable: return "wagmf_stable";
    case Engine::Ema: return "ema";
    case Engine::AmsGrad: return "amsgrad";
    case Engine::Sign: return "sign";
    case Engine::PlainSgd: return "plain_sgd";
  }
  return "plain_sgd";
}

template <typename Scalar = double>
struct OptimizerConfig {
  Engine engine = Engine::WagmfSum;
  WeightSchedule<Scalar> weight = WeightSchedule<Scalar>::equal();
  int p1 = 2;
  int p2 = 2;
  StepSizeSchedule<Scalar> step{};
  MomentumSchedule<Scalar> momentum{};
  Scalar beta2 = Scalar(0.999);  // ema / amsgrad
  Scalar epsilon = Scalar(1e-7);
  bool bias_correction = false;  // ema / amsgrad only

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
    if (p1 < 1 || p2 < 1) fail("p1 and p2 must be >= 1");
    if (!(epsilon >= Scalar(0))) fail("epsilon must be >= 0");
    if (!(step.base_alpha > Scalar(0))) fail("alpha must be > 0");
    if (!(momentum.beta1 >= Scalar(0) && momentum.beta1 < Scalar(1))) fail("beta1 must lie in [0, 1)");
    if (!(momentum.lambda > Scalar(0) && momentum.lambda <= Scalar(1))) fail("lambda must lie in (0, 1]");
    if (!(beta2 > Scalar(0) && beta2 < Scalar(1))) fail("beta2 must lie in (0, 1)");
    if (weight.kind == WeightKind::Exponential && !(weight.beta2 > Scalar(0) && weight.beta2 < Scalar(1))) {
      fail("exponential weight beta2 must lie in (0, 1)");
    }
    if (weight.kind == WeightKind::HyperHarmonic && !(weight.eta >= Scalar(0))) fail("eta must be >= 0");
    if (engine == Engine::WagmfStable && (weight.kind != WeightKind::Linear || p2 != 4)) {
      fail("wagmf_stable requires linear weights and p2 = 4");
    }
  }
};

template <typename Scalar = double>
struct OptimizerState {
  std::int64_t t = 0;
  Vector<Scalar> x;
  Vector<Scalar> m;
  Vector<Scalar> v;
  std::optional<Vector<Scalar>> v_hat;
  Scalar weight_sum = Scalar(0);

  // Diagnostics of the most recent step.
  Vector<Scalar> precond;  // V_t
  Scalar alpha_t = Scalar(0);

  static OptimizerState start(Vector<Scalar> x1, bool with_max = false) {
    OptimizerState s;
    const auto d = x1.size();
    s.x = std::move(x1);
    s.m = Vector<Scalar>::Zero(d);
    s.v = Vector<Scalar>::Zero(d);
    if (with_max) s.v_hat = Vector<Scalar>::Zero(d);
    s.precond = Vector<Scalar>::Zero(d);
    return s;
  }

  Eigen::Index dim() const noexcept { return x.size(); }
};

namespace detail {

template <typename Scalar>
void check_gradient(const OptimizerState<Scalar>& state, const Vector<Scalar>& g) {
  require_same_dim(g.size(), state.x.size(), "gradient");
  if (!all_finite(g)) throw Error(ErrorKind::NonFiniteGradient, "gradient contains NaN or Inf");
}

template <typename Scalar>
void update_momentum(OptimizerState<Scalar>& s, const Vector<Scalar>& g, const OptimizerConfig<Scalar>& cfg) {
  const Scalar b1 = beta1_at(cfg.momentum, s.t);
  s.m = b1 * s.m + (Scalar(1) - b1) * g;
}

/// g^{p1}, with |g|^{p1} for odd p1 so the accumulator stays non-negative.
template <typename Scalar>
Vector<Scalar> gradient_power(const Vector<Scalar>& g, int p1) {
  if (p1 % 2 == 1) return elem_pow(g.cwiseAbs(), p1);
  return elem_pow(g, p1);
}

/// x <- P_F^V(x - alpha m / V); coordinates with V = 0 carry no step.
template <typename Scalar>
void apply_preconditioned(OptimizerState<Scalar>& s, const Vector<Scalar>& direction,
                          const FeasibleSet<Scalar>& set) {
  const Vector<Scalar> scaled =
      (s.precond.array() > Scalar(0)).select(direction.array() / s.precond.array(), Scalar(0)).matrix();
  s.x = project(set, DiagonalMetric<Scalar>::from_preconditioner(s.precond), s.x - s.alpha_t * scaled);
}

}  // namespace detail

/// One step of the weighted framework: m, v accumulate, V = (v b)^{1/p2} + eps.
template <typename Scalar>
OptimizerState<Scalar> wagmf_step(OptimizerState<Scalar> state, const Vector<Scalar>& g,
                                  const OptimizerConfig<Scalar>& cfg, const FeasibleSet<Scalar>& set) {
  detail::check_gradient(state, g);
  [[maybe_unused]] const Scalar prev_sum = state.weight_sum;
  [[maybe_unused]] const Scalar prev_alpha = state.alpha_t;

  state.t += 1;
  detail::update_momentum(state, g, cfg);
  const Scalar w = gamma(cfg.weight, state.t);
  state.weight_sum += w;
  state.v += w * detail::gradient_power(g, cfg.p1);
  const Scalar b = balance(cfg.weight, state.t, state.weight_sum);
  state.alpha_t = alpha(cfg.step, state.t);
  assert(state.t < 2 || check_nonincrease(Scalar(1) / prev_sum, b, prev_alpha, state.alpha_t, cfg.p2));

  state.precond = elem_root(Vector<Scalar>(state.v * b), cfg.p2).array() + cfg.epsilon;
  detail::apply_preconditioned(state, state.m, set);
  return state;
}

/// Weighted average form for gamma_t = t, p2 = 4:
/// v_t = (1 - 2/(t+1)) v_{t-1} + 2/(t+1) g^{p1}, V = v^{1/4} + eps.
template <typename Scalar>
OptimizerState<Scalar> stable_step(OptimizerState<Scalar> state, const Vector<Scalar>& g,
                                   const OptimizerConfig<Scalar>& cfg, const FeasibleSet<Scalar>& set) {
  if (cfg.engine != Engine::WagmfStable) {
    throw Error(ErrorKind::InvalidConfig, "stable_step requires engine wagmf_stable");
  }
  detail::check_gradient(state, g);
  state.t += 1;
  detail::update_momentum(state, g, cfg);
  const Scalar c = Scalar(2) / static_cast<Scalar>(state.t + 1);
  state.v = (Scalar(1) - c) * state.v + c * detail::gradient_power(g, cfg.p1);
  state.weight_sum += static_cast<Scalar>(state.t);
  state.alpha_t = alpha(cfg.step, state.t);
  state.precond = elem_root(state.v, 4).array() + cfg.epsilon;
  detail::apply_preconditioned(state, state.m, set);
  return state;
}

/// Table-style baselines: EMA (Adam/RMSProp), AMSGrad, sign and plain SGD.
template <typename Scalar>
OptimizerState<Scalar> generic_step(OptimizerState<Scalar> state, const Vector<Scalar>& g,
                                    const OptimizerConfig<Scalar>& cfg, const FeasibleSet<Scalar>& set) {
  using std::pow;
  detail::check_gradient(state, g);
  state.t += 1;
  state.alpha_t = alpha(cfg.step, state.t);
  state.weight_sum += Scalar(1);

  switch (cfg.engine) {
    case Engine::Ema:
    case Engine::AmsGrad: {
      detail::update_momentum(state, g, cfg);
      state.v = cfg.beta2 * state.v + (Scalar(1) - cfg.beta2) * g.cwiseAbs2();
      Vector<Scalar> second = state.v;
      if (cfg.engine == Engine::AmsGrad) {
        if (!state.v_hat) state.v_hat = Vector<Scalar>::Zero(state.dim());
        *state.v_hat = state.v_hat->cwiseMax(state.v);
        second = *state.v_hat;
      }
      Vector<Scalar> direction = state.m;
      if (cfg.bias_correction) {
        const auto tt = static_cast<Scalar>(state.t);
        const Scalar b1 = beta1_at(cfg.momentum, state.t);
        if (b1 > Scalar(0)) direction /= (Scalar(1) - pow(b1, tt));
        second /= (Scalar(1) - pow(cfg.beta2, tt));
      }
      state.precond = second.cwiseSqrt().array() + cfg.epsilon;
      detail::apply_preconditioned(state, direction, set);
      break;
    }
    case Engine::Sign: {
      // Reported preconditioner is the per-coordinate magnitude |g_t|.
      state.m = g;
      state.precond = g.cwiseAbs();
      const Vector<Scalar> sign = g.array().sign().matrix();
      state.x = project(set, DiagonalMetric<Scalar>::identity(state.dim()), state.x - state.alpha_t * sign);
      break;
    }
    case Engine::PlainSgd: {
      detail::update_momentum(state, g, cfg);
      state.precond = Vector<Scalar>::Ones(state.dim());
      detail::apply_preconditioned(state, state.m, set);
      break;
    }
    default:
      throw Error(ErrorKind::InvalidConfig,
                  "generic_step does not handle engine " + std::string(to_string(cfg.engine)));
  }
  return state;
}

/// V_t / alpha_t >= V_{t-1} / alpha_{t-1} elementwise: the realized effective
/// learning rate alpha_t / V_t did not grow in any coordinate.
template <typename Scalar>
bool preconditioner_nondecreasing(const Vector<Scalar>& v_prev, Scalar alpha_prev, const Vector<Scalar>& v_curr,
                                  Scalar alpha_curr) {
  require_same_dim(v_prev.size(), v_curr.size(), "preconditioner_nondecreasing");
  return ((v_curr.array() * alpha_prev) >= (v_prev.array() * alpha_curr)).all();
}

}  // namespace wagmf
