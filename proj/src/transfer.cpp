#include "twistlab/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "twistlab/errors.hpp"
#include "twistlab/parallel.hpp"
#include "twistlab/quadrature.hpp"

namespace twistlab {
namespace {

constexpr double kPowerTol = 1e-12;
constexpr int kPowerCap = 10000;

double weighted_sum(std::span<const double> x, std::span<const double> len) {
  std::vector<double> terms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) terms[i] = x[i] * len[i];
  return pairwise_sum(terms.data(), terms.size());
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

struct PowerResult {
  double lambda;
  std::vector<double> vec;
  int iterations;
  double change;
};

// Power iteration normalized by sum v_P |P| = 1, started from the constant.
PowerResult power_iterate(const TransferOperator& op,
                          const std::vector<double>& len) {
  std::vector<double> v(op.size(), 1.0);
  const double norm0 = weighted_sum(v, len);
  for (auto& x : v) x /= norm0;
  double lambda = 0.0;
  double change = 0.0;
  int it = 0;
  while (it < kPowerCap) {
    auto w = op.apply(v);
    lambda = weighted_sum(w, len);
    if (!(lambda > 0.0)) throw NonConvergence("transfer operator collapsed to zero");
    for (auto& x : w) x /= lambda;
    change = sup_diff(w, v);
    v = std::move(w);
    ++it;
    if (change < kPowerTol) break;
  }
  return {lambda, std::move(v), it, change};
}

}  // namespace

TransferOperator::TransferOperator(const CircleMap& map,
                                   std::shared_ptr<const PartitionTree> tree,
                                   int level, double s)
    : tree_(std::move(tree)), level_(level), s_(s) {
  if (!tree_ || level < 1 || level + 1 > tree_->depth()) {
    throw ValidationError("transfer level must lie in [1, tree depth - 1]");
  }
  const std::uint64_t n = PartitionTree::cell_count(level);
  weight_[0].resize(n);
  weight_[1].resize(n);
  const double e = 1.0 - s;
  const PartitionTree& t = *tree_;
  parallel_for(n, [&](std::size_t q) {
    const double len = t.length(level, q);
    for (int j = 0; j < 2; ++j) {
      const std::uint64_t r = PartitionTree::preimage_index(level, q, j);
      const double a = t.left(level + 1, r);
      const double b = t.right(level + 1, r);
      const double integral =
          e == 0.0 ? b - a
                   : GaussLegendre5::integrate(
                         [&](double y) { return std::pow(map.deriv(y), e); }, a, b);
      weight_[j][q] = integral / len;
    }
  });
}

std::vector<double> TransferOperator::apply(std::span<const double> x) const {
  if (x.size() != size()) throw ValidationError("vector size does not match level");
  std::vector<double> y(size());
  parallel_for(size(), [&](std::size_t q) {
    y[q] = weight_[0][q] * x[preimage(q, 0) >> 1] +
           weight_[1][q] * x[preimage(q, 1) >> 1];
  });
  return y;
}

std::vector<double> TransferOperator::apply_fine(std::span<const double> x) const {
  if (x.size() != 2 * size()) throw ValidationError("vector size does not match level");
  std::vector<double> y(size());
  parallel_for(size(), [&](std::size_t q) {
    y[q] = weight_[0][q] * x[preimage(q, 0)] + weight_[1][q] * x[preimage(q, 1)];
  });
  return y;
}

std::vector<double> TransferOperator::apply_transpose(std::span<const double> y) const {
  if (y.size() != size()) throw ValidationError("vector size does not match level");
  // Column p collects rows q with preimage(q, j) >> 1 == p, i.e. the image of
  // both children of p.
  std::vector<double> x(size());
  const int n = level_;
  parallel_for(size(), [&](std::size_t p) {
    double acc = 0.0;
    for (std::uint64_t c = 2 * p; c <= 2 * p + 1; ++c) {
      const std::uint64_t q = PartitionTree::image_index(n + 1, c);
      const int j = static_cast<int>(c >> n);
      acc += weight_[j][q] * y[q];
    }
    x[p] = acc;
  });
  return x;
}

std::vector<double> TransferOperator::dense() const {
  if (level_ > kDenseMaxLevel) {
    throw ValidationError("dense storage is limited to level 14");
  }
  const std::uint64_t n = size();
  std::vector<double> m(n * n, 0.0);
  for (std::uint64_t q = 0; q < n; ++q) {
    for (int j = 0; j < 2; ++j) m[q * n + (preimage(q, j) >> 1)] += weight_[j][q];
  }
  return m;
}

DensityResult invariant_density(const CircleMap& map,
                                std::shared_ptr<const PartitionTree> tree,
                                int level) {
  const TransferOperator op(map, tree, level, 1.0);
  const auto len = tree->lengths(level);
  auto res = power_iterate(op, len);
  DensityResult out;
  out.rho = std::move(res.vec);
  out.iterations = res.iterations;
  out.last_change = res.change;
  out.slow_mixing = res.change >= kPowerTol;
  return out;
}

EigenResult leading_eig(const CircleMap& map,
                        std::shared_ptr<const PartitionTree> tree, int level,
                        double s) {
  const TransferOperator op(map, tree, level, s);
  const auto len = tree->lengths(level);
  auto right = power_iterate(op, len);
  if (right.change >= kPowerTol) {
    throw NonConvergence("power iteration did not settle in 10^4 steps");
  }
  // Left eigenvector for the spectral projector.
  std::vector<double> left(op.size(), 1.0);
  for (int it = 0; it < kPowerCap; ++it) {
    auto w = op.apply_transpose(left);
    double m = 0.0;
    for (double x : w) m = std::max(m, std::fabs(x));
    for (auto& x : w) x /= m;
    const double change = sup_diff(w, left);
    left = std::move(w);
    if (change < kPowerTol) break;
  }
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> t(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * b[i];
    return pairwise_sum(t.data(), t.size());
  };
  const double lv = dot(left, right.vec);
  auto deflate = [&](std::vector<double>& x) {
    const double c = dot(left, x) / lv;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * right.vec[i];
  };
  std::vector<double> x(op.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::cos(2.0 * M_PI * (static_cast<double>(i) + 0.5) /
                    static_cast<double>(x.size())) +
           0.3 * std::sin(6.0 * M_PI * static_cast<double>(i) /
                          static_cast<double>(x.size()));
  }
  deflate(x);
  auto sup = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::fabs(e));
    return m;
  };
  // Geometric-mean decay rate after a short warm-up, stopped well above the
  // level where leakage through the approximate projector dominates.
  constexpr int kWarmup = 5;
  constexpr int kSteps = 200;
  constexpr double kFloor = 1e-8;
  double ratio = 0.0;
  double log_rate = 0.0;
  double decay = 1.0;
  int counted = 0;
  for (auto& e : x) e /= sup(x);
  for (int it = 0; it < kSteps; ++it) {
    x = op.apply(x);
    deflate(x);
    const double cur = sup(x);
    if (!(cur > 1e-300)) {
      counted = 0;
      break;
    }
    for (auto& e : x) e /= cur;
    if (it >= kWarmup) {
      log_rate += std::log(cur);
      ++counted;
    }
    decay *= cur / right.lambda;
    if (decay < kFloor && counted >= 10) break;
  }
  if (counted > 0) ratio = std::exp(log_rate / counted);
  const double gap = ratio / right.lambda;
  if (gap >= 0.95) {
    throw GapTooSmall("second eigenvalue estimate " + std::to_string(gap) +
                      " of the leading one");
  }
  EigenResult out;
  out.lambda = right.lambda;
  out.vector = std::move(right.vec);
  out.gap_ratio = gap;
  out.iterations = right.iterations;
  return out;
}

PressureCheck pressure_derivative_check(
    const CircleMap& map, std::shared_ptr<const PartitionTree> tree, int level,
    double h) {
  if (!(h >= 1e-4 && h <= 1e-2)) {
    throw ValidationError("h must lie in [1e-4, 1e-2]");
  }
  const double up = leading_eig(map, tree, level, 1.0 + h).lambda;
  const double down = leading_eig(map, tree, level, 1.0 - h).lambda;
  const auto rho = invariant_density(map, tree, level).rho;
  std::vector<double> terms(rho.size());
  parallel_for(rho.size(), [&](std::size_t p) {
    terms[p] = rho[p] * GaussLegendre5::integrate(
                            [&](double x) { return std::log(map.deriv(x)); },
                            tree->left(level, p), tree->right(level, p));
  });
  PressureCheck out;
  out.difference_quotient = -(std::log(up) - std::log(down)) / (2.0 * h);
  out.lyapunov = pairwise_sum(terms.data(), terms.size());
  out.error = std::fabs(out.difference_quotient - out.lyapunov);
  out.tolerance = std::max(1e-3, 10.0 * h * h);
  out.passed = out.error <= out.tolerance;
  return out;
}

Complex obstruction(const CircleMap& map,
                    std::shared_ptr<const PartitionTree> tree, int level,
                    const FunctionInput& v, Complex beta) {
  if (beta.imag() != 0.0) {
    throw ValidationError("obstruction needs a real beta");
  }
  if (!v.has_rule()) {
    throw ValidationError("obstruction needs a pointwise input");
  }
  const double b = beta.real();
  const auto eig = leading_eig(map, tree, level, 1.0 + b);
  std::vector<double> terms(eig.vector.size());
  parallel_for(terms.size(), [&](std::size_t p) {
    terms[p] = eig.vector[p] *
               GaussLegendre5::integrate(
                   [&](double x) { return v(x) * std::pow(map.deriv(x), -b); },
                   tree->left(level, p), tree->right(level, p));
  });
  return {pairwise_sum(terms.data(), terms.size()), 0.0};
}

std::vector<double> correlations(const CircleMap& map,
                                 std::shared_ptr<const PartitionTree> tree,
                                 int level,
                                 const std::function<double(double)>& phi,
                                 const std::function<double(double)>& psi,
                                 int kmax) {
  if (kmax < 0) throw ValidationError("kmax must be non-negative");
  const TransferOperator op(map, tree, level, 1.0);
  const auto rho = invariant_density(map, tree, level).rho;
  const std::uint64_t n = op.size();
  const PartitionTree& t = *tree;

  auto cell_integrals = [&](const std::function<double(double)>& f, int lev,
                            bool with_rho) {
    std::vector<double> out(PartitionTree::cell_count(lev));
    parallel_for(out.size(), [&](std::size_t i) {
      const double w = with_rho ? rho[i >> (lev - level)] : 1.0;
      out[i] = w * GaussLegendre5::integrate(f, t.left(lev, i), t.right(lev, i));
    });
    return out;
  };
  const auto phi_mass = cell_integrals(phi, level + 1, true);
  const auto psi_int = cell_integrals(psi, level, false);
  const auto psi_mass = cell_integrals(psi, level, true);
  const double mean_phi = pairwise_sum(phi_mass.data(), phi_mass.size());
  const double mean_psi = pairwise_sum(psi_mass.data(), psi_mass.size());

  std::vector<double> out(static_cast<std::size_t>(kmax) + 1);
  {
    std::vector<double> terms(n);
    parallel_for(n, [&](std::size_t p) {
      terms[p] = rho[p] * GaussLegendre5::integrate(
                              [&](double x) { return phi(x) * psi(x); },
                              t.left(level, p), t.right(level, p));
    });
    out[0] = pairwise_sum(terms.data(), terms.size()) - mean_phi * mean_psi;
  }
  if (kmax == 0) return out;
  // int phi (psi o F^k) rho dm = int psi L^k(phi rho) dm.
  std::vector<double> density(2 * n);
  for (std::uint64_t r = 0; r < 2 * n; ++r) {
    density[r] = phi_mass[r] / t.length(level + 1, r);
  }
  auto u = op.apply_fine(density);
  for (int k = 1; k <= kmax; ++k) {
    if (k > 1) u = op.apply(u);
    std::vector<double> terms(n);
    for (std::uint64_t p = 0; p < n; ++p) terms[p] = u[p] * psi_int[p];
    out[static_cast<std::size_t>(k)] =
        pairwise_sum(terms.data(), terms.size()) - mean_phi * mean_psi;
  }
  return out;
}

}  // namespace twistlab
