#include "twistlab/circle_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "twistlab/errors.hpp"

namespace twistlab {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kCertifyGrid = 1 << 16;
constexpr int kBisectionSteps = 60;
constexpr int kNewtonCap = 100;
constexpr double kNewtonTol = 1e-14;
constexpr double kResidualTol = 1e-13;

double wrap_unit(double y) {
  double r = y - std::floor(y);
  if (r >= 1.0) r = 0.0;
  return r;
}

double circle_distance(double a, double b) {
  const double d = std::fabs(wrap_unit(a) - wrap_unit(b));
  return std::min(d, 1.0 - d);
}

}  // namespace

std::string to_string(MapFamily family) {
  switch (family) {
    case MapFamily::linear:
      return "linear";
    case MapFamily::perturbed_doubling:
      return "perturbed_doubling";
    case MapFamily::custom_lift:
      return "custom_lift";
  }
  return "unknown";
}

CircleMap CircleMap::linear() {
  CircleMap m;
  m.family_ = MapFamily::linear;
  m.description_ = "2x mod 1";
  m.certify();
  return m;
}

CircleMap CircleMap::perturbed_doubling(double epsilon) {
  if (!std::isfinite(epsilon) || std::fabs(epsilon) >= 0.155) {
    throw ValidationError(
        "perturbed_doubling requires |epsilon| < 0.155, got " +
        std::to_string(epsilon));
  }
  CircleMap m;
  m.family_ = MapFamily::perturbed_doubling;
  m.epsilon_ = epsilon;
  m.description_ = "2x + eps sin(2 pi x) mod 1";
  m.certify();
  return m;
}

CircleMap CircleMap::custom(Rule lift, Rule derivative,
                            std::string description) {
  if (!lift || !derivative) {
    throw ValidationError("custom lift needs both the lift and its derivative");
  }
  CircleMap m;
  m.family_ = MapFamily::custom_lift;
  m.lift_ = std::move(lift);
  m.deriv_ = std::move(derivative);
  m.description_ = std::move(description);
  if (std::fabs(m.lift_(0.0)) > 1e-12 || std::fabs(m.lift_(1.0) - 2.0) > 1e-12) {
    throw ValidationError("custom lift must satisfy L(0) = 0 and L(1) = 2");
  }
  m.certify();
  return m;
}

void CircleMap::certify() {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kCertifyGrid; ++i) {
    lo = std::min(lo, deriv_unit(static_cast<double>(i) / kCertifyGrid));
  }
  if (!(lo > 1.0)) {
    throw ValidationError("map is not expanding: min DF = " +
                          std::to_string(lo));
  }
  lambda_min_ = lo;
}

double CircleMap::lift_unit(double x) const {
  switch (family_) {
    case MapFamily::linear:
      return 2.0 * x;
    case MapFamily::perturbed_doubling:
      return 2.0 * x + epsilon_ * std::sin(kTwoPi * x);
    case MapFamily::custom_lift:
      return lift_(x);
  }
  return 0.0;
}

double CircleMap::deriv_unit(double x) const {
  switch (family_) {
    case MapFamily::linear:
      return 2.0;
    case MapFamily::perturbed_doubling:
      return 2.0 + kTwoPi * epsilon_ * std::cos(kTwoPi * x);
    case MapFamily::custom_lift:
      return deriv_(x);
  }
  return 0.0;
}

double CircleMap::lift(double x) const {
  const double k = std::floor(x);
  return lift_unit(x - k) + 2.0 * k;
}

double CircleMap::eval(double x) const { return wrap_unit(lift(x)); }

double CircleMap::deriv(double x) const {
  return deriv_unit(x - std::floor(x));
}

double CircleMap::inverse_branch(int branch, double y) const {
  if (branch != 0 && branch != 1) {
    throw ValidationError("branch must be 0 or 1");
  }
  const double target = wrap_unit(y) + branch;
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < kBisectionSteps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (lift_unit(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < kNewtonCap; ++i) {
    const double step = (lift_unit(x) - target) / deriv_unit(x);
    const double next = std::clamp(x - step, lo - 1e-15, hi + 1e-15);
    if (std::fabs(next - x) < kNewtonTol) {
      x = next;
      break;
    }
    x = next;
  }
  if (!(circle_distance(lift_unit(x), target) <= kResidualTol)) {
    throw NonConvergence("inverse branch residual above tolerance at y = " +
                         std::to_string(y));
  }
  return x < 0.0 ? 0.0 : (x >= 1.0 ? std::nextafter(1.0, 0.0) : x);
}

std::vector<double> CircleMap::orbit(double x, std::size_t n) const {
  std::vector<double> out;
  out.reserve(n);
  double y = wrap_unit(x);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(y);
    y = eval(y);
  }
  return out;
}

double CircleMap::log_weight(double x, std::size_t n) const {
  double y = wrap_unit(x);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += std::log(deriv(y));
    y = eval(y);
  }
  return acc;
}

double CircleMap::weight_product(double x, std::size_t n, double beta) const {
  if (n > 64) return std::exp(beta * log_weight(x, n));
  double y = wrap_unit(x);
  double prod = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    prod *= deriv(y);
    y = eval(y);
  }
  return std::pow(prod, beta);
}

Complex CircleMap::weight_product(double x, std::size_t n, Complex beta) const {
  return std::exp(beta * log_weight(x, n));
}

}  // namespace twistlab
