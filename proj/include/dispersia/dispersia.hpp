#pragma once

// Umbrella header for the dispersia library: variance-ratio goodness-of-fit
// testing, its asymptotic validity criterion, MLE fitting, distribution
// utilities, and a deterministic Monte Carlo harness.

#include "dispersia/config.hpp"
#include "dispersia/csv.hpp"
#include "dispersia/distributions.hpp"
#include "dispersia/errors.hpp"
#include "dispersia/fitting.hpp"
#include "dispersia/gof.hpp"
#include "dispersia/mc.hpp"
#include "dispersia/report.hpp"
#include "dispersia/rng.hpp"
#include "dispersia/special_functions.hpp"
#include "dispersia/vartest.hpp"
