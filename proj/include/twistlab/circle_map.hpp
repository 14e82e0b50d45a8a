#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace twistlab {

using Complex = std::complex<double>;

enum class MapFamily { linear, perturbed_doubling, custom_lift };

std::string to_string(MapFamily family);

/// A degree-2 expanding map of the circle [0,1), given through a strictly
/// increasing lift L with L(0) = 0 and L(x + 1) = L(x) + 2. Lebesgue measure is
/// the reference measure, so the Jacobian g coincides with DF.
///
/// Because L(0) = 0 the point 0 is always fixed; the partition tree is built
/// from its preimages.
class CircleMap {
 public:
  using Rule = std::function<double(double)>;

  static CircleMap linear();
  /// L(x) = 2x + eps sin(2 pi x). Requires |eps| < 0.155.
  static CircleMap perturbed_doubling(double epsilon);
  /// lift and derivative are evaluated on [0,1] only; the constructor checks
  /// L(0) = 0, L(1) = 2 and min DF > 1 on a 2^16-point grid.
  static CircleMap custom(Rule lift, Rule derivative,
                          std::string description = "custom");

  MapFamily family() const noexcept { return family_; }
  double epsilon() const noexcept { return epsilon_; }
  double lambda_min() const noexcept { return lambda_min_; }
  double fixed_point() const noexcept { return 0.0; }
  const std::string& description() const noexcept { return description_; }

  /// Lift evaluated anywhere on the real line.
  double lift(double x) const;
  /// F(x) = L(x) mod 1, in [0,1).
  double eval(double x) const;
  /// DF(x) = g(x).
  double deriv(double x) const;

  /// The unique x in branch domain I_branch with F(x) = y. Throws
  /// NonConvergence if the residual stays above 1e-13.
  double inverse_branch(int branch, double y) const;

  /// [x, F x, ..., F^{n-1} x]
  std::vector<double> orbit(double x, std::size_t n) const;

  /// ln g_n(x) = sum_{k<n} ln g(F^k x).
  double log_weight(double x, std::size_t n) const;
  /// g_n(x)^beta
  double weight_product(double x, std::size_t n, double beta) const;
  Complex weight_product(double x, std::size_t n, Complex beta) const;

 private:
  CircleMap() = default;
  void certify();
  double lift_unit(double x) const;   // x in [0,1]
  double deriv_unit(double x) const;  // x in [0,1]

  MapFamily family_ = MapFamily::linear;
  double epsilon_ = 0.0;
  double lambda_min_ = 2.0;
  Rule lift_;
  Rule deriv_;
  std::string description_;
};

}  // namespace twistlab
