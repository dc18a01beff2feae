#pragma once

#include <random>
#include <vector>

#include "expertsurv/survival_models.hpp"
#include "oracles.hpp"

namespace gen {

using expertsurv::Family;
using expertsurv::KnotSet;
using expertsurv::ModelFamily;
using expertsurv::ModelSpec;
using expertsurv::ParameterVector;

inline std::vector<Family> all_families() {
  return {Family::Exponential, Family::WeibullAFT, Family::WeibullPH, Family::Gompertz,
          Family::Gamma,       Family::LogNormal,  Family::LogLogistic, Family::GenGamma,
          Family::GenF,        Family::RoystonParmar};
}

inline KnotSet one_knot() { return KnotSet({std::log(0.2), std::log(1.5), std::log(6.0)}); }

/// Draw parameters from a region where every family is well behaved.
/// `proper_only` keeps Gompertz shapes nonnegative (no mass at infinity).
inline ParameterVector random_parameters(Family f, std::mt19937_64& rng, bool proper_only = false) {
  auto u = [&](double lo, double hi) { return oracle::uniform(rng, lo, hi); };
  switch (f) {
    case Family::Exponential: return {ModelSpec(ModelFamily{f}), {u(0.05, 2.0)}};
    case Family::WeibullAFT: return {ModelSpec(ModelFamily{f}), {u(0.5, 3.0), u(0.5, 5.0)}};
    case Family::WeibullPH: return {ModelSpec(ModelFamily{f}), {u(0.5, 3.0), u(0.05, 1.5)}};
    case Family::Gompertz:
      return {ModelSpec(ModelFamily{f}), {u(proper_only ? 0.0 : -0.5, 1.0), u(0.05, 1.0)}};
    case Family::Gamma: return {ModelSpec(ModelFamily{f}), {u(0.5, 5.0), u(0.2, 3.0)}};
    case Family::LogNormal: return {ModelSpec(ModelFamily{f}), {u(-1.0, 2.0), u(0.3, 1.5)}};
    case Family::LogLogistic: return {ModelSpec(ModelFamily{f}), {u(1.2, 4.0), u(0.5, 5.0)}};
    case Family::GenGamma: return {ModelSpec(ModelFamily{f}), {u(-0.5, 1.5), u(0.3, 1.0), u(-1.2, 1.5)}};
    case Family::GenF: return {ModelSpec(ModelFamily{f}), {u(-0.5, 1.5), u(0.3, 0.8), u(-1.0, 1.0), u(0.1, 1.5)}};
    case Family::RoystonParmar:
      return {ModelSpec(ModelFamily{f, 1}, one_knot()), {u(-2.0, 0.0), u(0.6, 2.0), u(-0.01, 0.01)}};
  }
  return {};
}

}  // namespace gen
