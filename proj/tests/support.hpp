#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "twistlab/circle_map.hpp"

namespace testsupport {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Small hand-rolled generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::vector<double> vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  twistlab::CircleMap map() {
    return integer(0, 1) == 0 ? twistlab::CircleMap::linear()
                              : twistlab::CircleMap::perturbed_doubling(uniform(-0.15, 0.15));
  }
  // Random trigonometric polynomial of degree <= 3 (j starts at 0).
  std::function<double(double)> trig() {
    auto c = vector(4);
    auto s = vector(4);
    return [c, s](double x) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) {
        acc += c[j] * std::cos(kTwoPi * j * x) + s[j] * std::sin(kTwoPi * j * x);
      }
      return acc;
    };
  }

 private:
  std::mt19937_64 rng_;
};

// Bisection with a fixed step count, independent of the library's solver.
inline double bisect(const std::function<double(double)>& f, double a, double b,
                     int steps = 200) {
  double fa = f(a);
  for (int i = 0; i < steps; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fa <= 0.0) == (fm <= 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline double circle_distance(double a, double b) {
  double d = std::fabs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

}  // namespace testsupport
