#pragma once

// Umbrella header: the whole toolkit in one include.

#include "explab/feller.hpp"
#include "explab/lipschitz.hpp"
#include "explab/log_value.hpp"
#include "explab/model.hpp"
#include "explab/ode.hpp"
#include "explab/quadrature.hpp"
#include "explab/simulate.hpp"
#include "explab/version.hpp"
#include "explab/wiener.hpp"
