#pragma once

// Minimization of smooth matrix functions over the Stiefel manifold via two
// damped second-order dynamical systems: a Lagrange-multiplier formulation
// whose constraint obeys its own damped dynamic, and a projected-gradient
// formulation with per-step polar retraction. Includes a linear stability
// analyzer for the flow Jacobians at stationary points.

#include "stiefelflow/config.hpp"
#include "stiefelflow/dynamics.hpp"
#include "stiefelflow/experiments.hpp"
#include "stiefelflow/manifold.hpp"
#include "stiefelflow/matrix_io.hpp"
#include "stiefelflow/problems.hpp"
#include "stiefelflow/random.hpp"
#include "stiefelflow/stability.hpp"
#include "stiefelflow/sylvester.hpp"
#include "stiefelflow/types.hpp"
