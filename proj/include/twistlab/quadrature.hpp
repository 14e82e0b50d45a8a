#pragma once

#include <array>

namespace twistlab {

/// Five-point Gauss-Legendre rule on [0,1].
struct GaussLegendre5 {
  static constexpr std::array<double, 5> nodes{
      0.046910077030668004, 0.23076534494715845, 0.5, 0.76923465505284155,
      0.95308992296933200};
  static constexpr std::array<double, 5> weights{
      0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
      0.23931433524968324, 0.11846344252809454};

  /// Integral of f over [a, b].
  template <class F>
  static auto integrate(F&& f, double a, double b) {
    const double h = b - a;
    auto acc = weights[0] * f(a + h * nodes[0]);
    for (int i = 1; i < 5; ++i) acc += weights[i] * f(a + h * nodes[i]);
    return acc * h;
  }
};

}  // namespace twistlab
