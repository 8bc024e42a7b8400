#pragma once

#include <functional>

#include "slothbench/tape.hpp"

namespace sloth {

// A differentiable scalar function: given a tape and the id of the input leaf,
// builds the computation and returns the id of a scalar output node.
using TapeFn = std::function<Tape::NodeId(Tape&, Tape::NodeId)>;

// Compares the tape gradient of f at `point` against central finite
// differences with the given step. Returns the max relative error over all
// coordinates, with denominator max(|analytic|, |numeric|, gradient scale,
// 1e-8); the gradient-scale floor keeps coordinates below the float32
// finite-difference noise floor from dominating the ratio.
float grad_check(const TapeFn& f, const Tensor& point, float step);

}  // namespace sloth
