#pragma once

// Umbrella header: monotone DR-submodular maximization over convex bodies via
// projected stochastic gradient and mirror ascent, with multilinear
// extensions, rounding, discrete baselines and an experiment harness.

#include "submax/adversarial.hpp"
#include "submax/common.hpp"
#include "submax/continuous.hpp"
#include "submax/discrete.hpp"
#include "submax/geometry.hpp"
#include "submax/harness.hpp"
#include "submax/multilinear.hpp"
#include "submax/set_function.hpp"
#include "submax/solvers.hpp"
