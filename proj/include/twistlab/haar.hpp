#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twistlab/partition.hpp"

namespace twistlab {

/// psi = c0 1_I + sum_P d_P phi_P over cells P of level < depth, where
/// phi_P = 1_{Q1}/|Q1| - 1_{Q2}/|Q2| and Q1, Q2 are the left and right
/// children of P. Coefficients are complex; real data keeps zero imaginary
/// parts. Functions and distributions share this representation.
class HaarSeries {
 public:
  HaarSeries(std::shared_ptr<const PartitionTree> tree, int depth);

  int depth() const noexcept { return depth_; }
  const PartitionTree& tree() const noexcept { return *tree_; }
  const std::shared_ptr<const PartitionTree>& tree_ptr() const noexcept {
    return tree_;
  }

  Complex mean() const noexcept { return mean_; }
  void set_mean(Complex c) noexcept { mean_ = c; }

  Complex coeff(int level, std::uint64_t index) const {
    return coeffs_[offset(level) + index];
  }
  Complex& coeff(int level, std::uint64_t index) {
    return coeffs_[offset(level) + index];
  }
  std::span<const Complex> level_coeffs(int level) const {
    return {coeffs_.data() + offset(level), PartitionTree::cell_count(level)};
  }
  std::span<Complex> level_coeffs(int level) {
    return {coeffs_.data() + offset(level), PartitionTree::cell_count(level)};
  }
  /// All wavelet coefficients, level by level.
  const std::vector<Complex>& coefficients() const noexcept { return coeffs_; }
  std::vector<Complex>& coefficients() noexcept { return coeffs_; }

  HaarSeries& operator+=(const HaarSeries& other);
  HaarSeries& operator-=(const HaarSeries& other);
  HaarSeries& operator*=(Complex c);

 private:
  static std::size_t offset(int level) {
    return (std::size_t{1} << level) - 1;
  }

  std::shared_ptr<const PartitionTree> tree_;
  int depth_;
  Complex mean_{0.0, 0.0};
  std::vector<Complex> coeffs_;
};

/// Input data for the solver and the analysis operations.
class FunctionInput {
 public:
  enum class Kind { pointwise, fourier, haar_coeffs, takagi_tent, weierstrass_rhs };
  using Rule = std::function<double(double)>;

  /// A bounded rule on [0, period). `antiderivative`, when given, yields exact
  /// cell averages; otherwise five-point Gauss-Legendre per cell is used.
  static FunctionInput pointwise(Rule rule, Rule antiderivative = {},
                                 int period = 1, double sup_bound = -1.0);
  /// cos_coeffs[j] cos(2 pi j x) + sin_coeffs[j] sin(2 pi j x), j >= 0.
  static FunctionInput fourier(std::vector<double> cos_coeffs,
                               std::vector<double> sin_coeffs);
  static FunctionInput haar(HaarSeries series);
  /// x -> inf_m |x - m|
  static FunctionInput takagi_tent();
  /// x -> -cos(pi x) / a. It has period 2: compositions with F are taken on
  /// the lift.
  static FunctionInput weierstrass_rhs(double a);

  FunctionInput scaled(double factor) const;

  Kind kind() const noexcept { return kind_; }
  std::string kind_name() const;
  bool has_rule() const noexcept { return static_cast<bool>(rule_); }
  /// Evaluates the rule at a lift coordinate x in [0, period).
  double operator()(double x) const;
  int period() const noexcept { return period_; }
  /// An upper bound for sup |v|.
  double sup_bound() const noexcept { return sup_bound_; }
  const Rule& antiderivative() const noexcept { return antiderivative_; }
  const HaarSeries* series() const noexcept {
    return series_ ? &*series_ : nullptr;
  }

 private:
  FunctionInput() = default;

  Kind kind_ = Kind::pointwise;
  Rule rule_;
  Rule antiderivative_;
  int period_ = 1;
  double sup_bound_ = 0.0;
  std::optional<HaarSeries> series_;
};

/// m(psi, Q) for every level-n cell.
std::vector<Complex> cell_averages(const FunctionInput& input,
                                   const PartitionTree& tree, int level);

/// Unbalanced Haar pyramid of level-n averages (n = log2 of the size).
HaarSeries analyze(std::span<const Complex> averages,
                   std::shared_ptr<const PartitionTree> tree);
HaarSeries analyze(std::span<const double> averages,
                   std::shared_ptr<const PartitionTree> tree);

/// Level-k cell values of the series truncated to levels < k (default: its
/// depth).
std::vector<Complex> synthesize(const HaarSeries& series);
std::vector<Complex> synthesize(const HaarSeries& series, int level);

/// Value of the level-n reconstruction at x.
Complex point_eval(const HaarSeries& series, double x);
/// [psi_0(x), ..., psi_n(x)], psi_k the reconstruction from levels < k.
std::vector<Complex> partial_sums(const HaarSeries& series, double x);

/// c_s(psi, P) = |P|^{-s} integral psi phi_P dm.
Complex pairing_coeff(const HaarSeries& series, int level,
                      std::uint64_t index, double s);

enum class BesovFlavor { inf_inf, one_one };

struct BesovNorm {
  double value = 0.0;
  /// Per-level sup (inf_inf) or sum (one_one) of the weighted coefficients.
  std::vector<double> profile;
};

BesovNorm besov_norm(const HaarSeries& series, double s, BesovFlavor flavor);

struct RegularityEstimate {
  double exponent = 0.0;
  /// Standard error of the fitted slope.
  double stderr_ = 0.0;
  double residual_rms = 0.0;
  int first_level = 0;
  int last_level = 0;
  std::vector<double> log_sup;  // ln sup_P |d_P| / |P|, per fitted level
};

/// Least-squares slope of ln sup_{P in P^k} |d_P|/|P| against ln 2^{-k} over
/// k in [4, n-1]. Throws DegenerateInput for (numerically) constant input.
RegularityEstimate regularity_estimate(const HaarSeries& series);

/// Exact finite expansion of 1_P / |P|.
HaarSeries dirac_expand(std::shared_ptr<const PartitionTree> tree, int level,
                        std::uint64_t index, int depth);

}  // namespace twistlab
