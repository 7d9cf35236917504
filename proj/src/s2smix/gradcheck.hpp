#pragma once

#include <functional>

#include "s2smix/params.hpp"

namespace s2smix {

// Builds a scalar loss node on the given graph from the bound parameters.
// Must be deterministic for fixed parameter values (freeze dropout first).
using LossBuilder = std::function<int(Graph&, const BoundParams&)>;

// Compares reverse-mode gradients of the built loss against central finite
// differences with step h, coordinate by coordinate. Returns
//   max over parameters of |analytic - central| / max(1, |central|).
double finite_difference_check(const LossBuilder& build, ParamSet params, double h);

}  // namespace s2smix
