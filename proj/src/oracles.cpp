#include "twistlab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace twistlab {

double weierstrass_series(double a, double b, double x, int terms) {
  double acc = 0.0;
  double ak = 1.0;
  double bk = 1.0;
  for (int k = 0; k < terms; ++k) {
    // b^k x mod 2 keeps the cosine argument small for integer b.
    const double arg = std::fmod(bk * x, 2.0);
    acc += ak * std::cos(std::numbers::pi * arg);
    ak *= a;
    bk *= b;
  }
  return acc;
}

double takagi_series(double x, int terms) {
  double acc = 0.0;
  double scale = 1.0;
  double y = x - std::floor(x);
  for (int k = 0; k < terms; ++k) {
    acc += scale * std::min(y, 1.0 - y);
    y = 2.0 * y;
    y -= std::floor(y);
    scale *= 0.5;
  }
  return acc;
}

FunctionInput weierstrass_input(double a, int terms) {
  auto rule = [a, terms](double x) { return weierstrass_series(a, 2.0, x, terms); };
  auto anti = [a, terms](double x) {
    double acc = 0.0;
    double ak = 1.0;
    double bk = 1.0;
    for (int k = 0; k < terms; ++k) {
      acc += ak * std::sin(std::numbers::pi * std::fmod(bk * x, 2.0)) /
             (std::numbers::pi * bk);
      ak *= a;
      bk *= 2.0;
    }
    return acc;
  };
  return FunctionInput::pointwise(rule, anti, 1, 1.0 / (1.0 - a));
}

}  // namespace twistlab
