#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "wagmf/error.hpp"

namespace wagmf {

enum class StepKind { InvSqrt, Constant };

/// alpha_t = base / sqrt(t) or constant base.
template <typename Scalar = double>
struct StepSizeSchedule {
  Scalar base_alpha = Scalar(0.1);
  StepKind kind = StepKind::InvSqrt;
};

/// beta_{1t} = beta1 * lambda^(t-1).
template <typename Scalar = double>
struct MomentumSchedule {
  Scalar beta1 = Scalar(0.9);
  Scalar lambda = Scalar(1);
};

enum class WeightKind { Equal, Linear, Exponential, HyperHarmonic };

/// Weights gamma_t placed on g_t^{p1} in the accumulator.
template <typename Scalar = double>
struct WeightSchedule {
  WeightKind kind = WeightKind::Equal;
  Scalar beta2 = Scalar(0.999);  // exponential only
  Scalar eta = Scalar(0);        // hyper-harmonic only

  static WeightSchedule equal() { return {WeightKind::Equal}; }
  static WeightSchedule linear() { return {WeightKind::Linear}; }
  static WeightSchedule exponential(Scalar beta2) { return {WeightKind::Exponential, beta2, Scalar(0)}; }
  static WeightSchedule hyper_harmonic(Scalar eta) { return {WeightKind::HyperHarmonic, Scalar(0.999), eta}; }
};

template <typename Scalar>
Scalar alpha(const StepSizeSchedule<Scalar>& s, std::int64_t t) {
  using std::sqrt;
  if (s.kind == StepKind::Constant) return s.base_alpha;
  return s.base_alpha / sqrt(static_cast<Scalar>(t));
}

template <typename Scalar>
Scalar beta1_at(const MomentumSchedule<Scalar>& m, std::int64_t t) {
  using std::pow;
  if (m.beta1 == Scalar(0)) return Scalar(0);
  if (m.lambda == Scalar(1)) return m.beta1;
  return m.beta1 * pow(m.lambda, static_cast<Scalar>(t - 1));
}

template <typename Scalar>
Scalar gamma(const WeightSchedule<Scalar>& w, std::int64_t t) {
  using std::pow;
  const auto tt = static_cast<Scalar>(t);
  switch (w.kind) {
    case WeightKind::Equal:
      return Scalar(1);
    case WeightKind::Linear:
      return tt;
    case WeightKind::Exponential: {
      const Scalar g = pow(Scalar(1) / w.beta2, tt);
      if (!std::isfinite(static_cast<double>(g))) {
        throw Error(ErrorKind::WeightOverflow,
                    "exponential weight (1/beta2)^t overflows at t=" + std::to_string(t));
      }
      return g;
    }
    case WeightKind::HyperHarmonic:
      return Scalar(1) / pow(tt, w.eta);
  }
  return Scalar(1);
}

/// b_t = 1 / sum_{i<=t} gamma_i, with the sum maintained by the caller.
template <typename Scalar>
Scalar balance(const WeightSchedule<Scalar>& /*w*/, std::int64_t /*t*/, Scalar running_sum) {
  return Scalar(1) / running_sum;
}

/// True iff b_curr^{-p2} / alpha_curr >= b_prev^{-p2} / alpha_prev, i.e. the
/// schedule part of the effective learning rate does not increase.
template <typename Scalar>
bool check_nonincrease(Scalar b_prev, Scalar b_curr, Scalar alpha_prev, Scalar alpha_curr, int p2) {
  using std::log;
  // Compared in log space: b^{-p2} overflows for large weight sums.
  const Scalar lhs = -Scalar(p2) * log(b_curr) - log(alpha_curr);
  const Scalar rhs = -Scalar(p2) * log(b_prev) - log(alpha_prev);
  return lhs >= rhs;
}

inline std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Equal: return "equal";
    case WeightKind::Linear: return "linear";
    case WeightKind::Exponential: return "exponential";
    case WeightKind::HyperHarmonic: return "hyper_harmonic";
  }
  return "equal";
}

inline WeightKind parse_weight_kind(std::string_view text) {
  if (text == "equal") return WeightKind::Equal;
  if (text == "linear") return WeightKind::Linear;
  if (text == "exponential") return WeightKind::Exponential;
  if (text == "hyper_harmonic") return WeightKind::HyperHarmonic;
  throw Error(ErrorKind::InvalidConfig, "unknown weight kind '" + std::string(text) + "'");
}

inline std::string_view to_string(StepKind kind) {
  return kind == StepKind::InvSqrt ? "inv_sqrt" : "constant";
}

inline StepKind parse_step_kind(std::string_view text) {
  if (text == "inv_sqrt") return StepKind::InvSqrt;
  if (text == "constant") return StepKind::Constant;
  throw Error(ErrorKind::InvalidConfig, "unknown step kind '" + std::string(text) + "'");
}

}  // namespace wagmf
