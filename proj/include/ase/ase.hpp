// Umbrella header.
#pragma once

#include "ase/allocation.hpp"
#include "ase/config.hpp"
#include "ase/dgp.hpp"
#include "ase/estimator.hpp"
#include "ase/harness.hpp"
#include "ase/nuisance.hpp"
#include "ase/quadrature.hpp"
#include "ase/reproduce.hpp"
#include "ase/rng.hpp"
#include "ase/survival_core.hpp"
