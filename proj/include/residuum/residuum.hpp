// Umbrella header.

#pragma once

#include "residuum/distributions.hpp"
#include "residuum/gof.hpp"
#include "residuum/io.hpp"
#include "residuum/regression.hpp"
#include "residuum/residuals.hpp"
#include "residuum/rng.hpp"
#include "residuum/simlab.hpp"
#include "residuum/special_functions.hpp"
