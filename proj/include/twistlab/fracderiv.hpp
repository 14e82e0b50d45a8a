#pragma once

#include "twistlab/haar.hpp"

namespace twistlab {

/// D^beta psi: every d_P becomes d_P |P|^{-beta}; the mean is dropped, since
/// constants form the kernel.
HaarSeries frac_deriv(const HaarSeries& series, Complex beta);

/// D^{-beta}. frac_integ(frac_deriv(psi, b), b) is psi minus its mean.
HaarSeries frac_integ(const HaarSeries& series, Complex beta);

}  // namespace twistlab
