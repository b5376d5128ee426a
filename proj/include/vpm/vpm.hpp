#pragma once

#include "vpm/errors.hpp"
#include "vpm/geometry.hpp"
#include "vpm/special_fn.hpp"
#include "vpm/quadrature.hpp"
#include "vpm/kernel.hpp"
#include "vpm/function_space.hpp"
#include "vpm/operators.hpp"
#include "vpm/smoothness.hpp"
#include "vpm/experiments.hpp"
#include "vpm/cli.hpp"
