#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "wagmf/engine.hpp"

namespace wagmf {

enum class PresetName {
  Sgd,
  SignSgd,
  AdaGrad,
  RmsProp,
  RmsPropAvg,
  Adam,
  AdamNc,
  AmsGrad,
  Wada,
  WadaV3,
  WadaV4,
  Nostalgic,
};

inline constexpr std::array<std::pair<PresetName, std::string_view>, 12> kPresetNames{{
    {PresetName::Sgd, "sgd"},
    {PresetName::SignSgd, "sign_sgd"},
    {PresetName::AdaGrad, "adagrad"},
    {PresetName::RmsProp, "rmsprop"},
    {PresetName::RmsPropAvg, "rmsprop_avg"},
    {PresetName::Adam, "adam"},
    {PresetName::AdamNc, "adamnc"},
    {PresetName::AmsGrad, "amsgrad"},
    {PresetName::Wada, "wada"},
    {PresetName::WadaV3, "wada_v3"},
    {PresetName::WadaV4, "wada_v4"},
    {PresetName::Nostalgic, "nostalgic"},
}};

inline std::string_view to_string(PresetName name) {
  for (const auto& [n, s] : kPresetNames) {
    if (n == name) return s;
  }
  return "unknown";
}

/// Override key/value pairs for make_preset, values kept as raw strings.
using Overrides = std::map<std::string, std::string>;

template <typename Scalar = double>
struct Preset {
  PresetName name = PresetName::Wada;
  std::string label;  // canonical CLI spelling, e.g. "wada" or "nostalgic(0.5)"
  OptimizerConfig<Scalar> config;

  /// Schedule parts that stay fixed over time hold for every gradient stream;
  /// EMA, sign and plain presets carry no such guarantee.
  bool convergent() const {
    switch (name) {
      case PresetName::Adam:
      case PresetName::RmsProp:
      case PresetName::SignSgd:
      case PresetName::Sgd:
        return false;
      default:
        return true;
    }
  }

  OptimizerState<Scalar> initial_state(Vector<Scalar> x1) const {
    return OptimizerState<Scalar>::start(std::move(x1), config.engine == Engine::AmsGrad);
  }
};

inline constexpr double kDefaultNostalgicEta = 0.5;

namespace detail {

inline double parse_real(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidOverride, "override '" + key + "' expects a real, got '" + text + "'");
  }
  return value;
}

inline int parse_int(const std::string& key, const std::string& text) {
  const double value = parse_real(key, text);
  if (value != static_cast<int>(value)) {
    throw Error(ErrorKind::InvalidOverride, "override '" + key + "' expects an integer, got '" + text + "'");
  }
  return static_cast<int>(value);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(ErrorKind::InvalidOverride, "override '" + key + "' expects a boolean, got '" + text + "'");
}

/// Splits "nostalgic(0.25)" into ("nostalgic", "0.25").
inline std::pair<std::string, std::string> split_argument(std::string_view name) {
  const auto open = name.find('(');
  if (open == std::string_view::npos || name.back() != ')') return {std::string(name), {}};
  return {std::string(name.substr(0, open)), std::string(name.substr(open + 1, name.size() - open - 2))};
}

}  // namespace detail

/// Named configuration with the convex-experiment defaults (beta1 = 0.9,
/// lambda = 1, beta2 = 0.999, eps = 1e-7, alpha_t = alpha / sqrt(t));
/// overrides are applied last and re-validated.
template <typename Scalar = double>
Preset<Scalar> make_preset(std::string_view name, Scalar base_alpha, const Overrides& overrides = {}) {
  auto [base, argument] = detail::split_argument(name);
  PresetName id{};
  bool found = false;
  for (const auto& [n, s] : kPresetNames) {
    if (s == base) {
      id = n;
      found = true;
    }
  }
  if (!found || (!argument.empty() && id != PresetName::Nostalgic)) {
    throw Error(ErrorKind::UnknownPreset, "unknown optimizer '" + std::string(name) + "'");
  }

  Preset<Scalar> p;
  p.name = id;
  auto& c = p.config;
  c.step = {base_alpha, StepKind::InvSqrt};
  c.momentum = {Scalar(0.9), Scalar(1)};
  c.beta2 = Scalar(0.999);
  c.epsilon = Scalar(1e-7);

  switch (id) {
    case PresetName::Sgd:
      c.engine = Engine::PlainSgd;
      break;
    case PresetName::SignSgd:
      c.engine = Engine::Sign;
      c.momentum.beta1 = Scalar(0);
      break;
    case PresetName::AdaGrad:
    case PresetName::RmsPropAvg:
      c.engine = Engine::WagmfSum;
      c.weight = WeightSchedule<Scalar>::equal();
      c.p1 = c.p2 = 2;
      c.momentum.beta1 = Scalar(0);
      break;
    case PresetName::RmsProp:
      c.engine = Engine::Ema;
      c.momentum.beta1 = Scalar(0);
      break;
    case PresetName::Adam:
      c.engine = Engine::Ema;
      break;
    case PresetName::AdamNc:
      c.engine = Engine::WagmfSum;
      c.weight = WeightSchedule<Scalar>::equal();
      c.p1 = c.p2 = 2;
      break;
    case PresetName::AmsGrad:
      c.engine = Engine::AmsGrad;
      break;
    case PresetName::Wada:
    case PresetName::WadaV3:
    case PresetName::WadaV4:
      c.engine = Engine::WagmfStable;
      c.weight = WeightSchedule<Scalar>::linear();
      c.p1 = id == PresetName::Wada ? 2 : (id == PresetName::WadaV3 ? 3 : 4);
      c.p2 = 4;
      break;
    case PresetName::Nostalgic:
      c.engine = Engine::WagmfSum;
      c.weight = WeightSchedule<Scalar>::hyper_harmonic(
          argument.empty() ? Scalar(kDefaultNostalgicEta) : Scalar(detail::parse_real("eta", argument)));
      c.p1 = c.p2 = 2;
      break;
  }

  for (const auto& [key, value] : overrides) {
    if (key == "beta1") {
      c.momentum.beta1 = Scalar(detail::parse_real(key, value));
    } else if (key == "lambda") {
      c.momentum.lambda = Scalar(detail::parse_real(key, value));
    } else if (key == "beta2") {
      c.beta2 = Scalar(detail::parse_real(key, value));
      if (c.weight.kind == WeightKind::Exponential) c.weight.beta2 = c.beta2;
    } else if (key == "epsilon") {
      c.epsilon = Scalar(detail::parse_real(key, value));
    } else if (key == "p1") {
      c.p1 = detail::parse_int(key, value);
    } else if (key == "p2") {
      c.p2 = detail::parse_int(key, value);
    } else if (key == "eta") {
      if (c.weight.kind != WeightKind::HyperHarmonic) {
        throw Error(ErrorKind::InvalidOverride, "eta only applies to hyper-harmonic weights");
      }
      c.weight.eta = Scalar(detail::parse_real(key, value));
    } else if (key == "step") {
      try {
        c.step.kind = parse_step_kind(value);
      } catch (const Error& e) {
        throw Error(ErrorKind::InvalidOverride, e.what());
      }
    } else if (key == "bias_correction") {
      c.bias_correction = detail::parse_bool(key, value);
    } else {
      throw Error(ErrorKind::InvalidOverride, "unknown override key '" + key + "'");
    }
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidOverride, e.what());
  }

  p.label = std::string(base);
  if (id == PresetName::Nostalgic) {
    std::ostringstream os;
    os << base << '(' << c.weight.eta << ')';
    p.label = os.str();
  }
  return p;
}

/// Dispatches to the engine the preset is bound to.
template <typename Scalar>
OptimizerState<Scalar> step(const Preset<Scalar>& preset, OptimizerState<Scalar> state, const Vector<Scalar>& g,
                            const FeasibleSet<Scalar>& set) {
  switch (preset.config.engine) {
    case Engine::WagmfSum:
      return wagmf_step(std::move(state), g, preset.config, set);
    case Engine::WagmfStable:
      return stable_step(std::move(state), g, preset.config, set);
    default:
      return generic_step(std::move(state), g, preset.config, set);
  }
}

}  // namespace wagmf
