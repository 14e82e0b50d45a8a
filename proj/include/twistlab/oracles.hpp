#pragma once

#include "twistlab/haar.hpp"

namespace twistlab {

/// sum_{k < terms} a^k cos(b^k pi x)
double weierstrass_series(double a, double b, double x, int terms = 60);

/// sum_{k < terms} 2^{-k} dist(2^k x, Z)
double takagi_series(double x, int terms = 60);

/// W_{a,2} as a solver/analysis input with exact cell averages.
FunctionInput weierstrass_input(double a, int terms = 60);

}  // namespace twistlab
