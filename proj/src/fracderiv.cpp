#include "twistlab/fracderiv.hpp"

#include <cmath>

namespace twistlab {

HaarSeries frac_deriv(const HaarSeries& series, Complex beta) {
  HaarSeries out = series;
  out.set_mean(0.0);
  const PartitionTree& tree = series.tree();
  for (int k = 0; k < series.depth(); ++k) {
    auto d = out.level_coeffs(k);
    for (std::uint64_t i = 0; i < d.size(); ++i) {
      d[i] *= std::exp(-beta * std::log(tree.length(k, i)));
    }
  }
  return out;
}

HaarSeries frac_integ(const HaarSeries& series, Complex beta) {
  return frac_deriv(series, -beta);
}

}  // namespace twistlab
