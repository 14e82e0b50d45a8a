#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>

#include "support.hpp"
#include "twistlab/errors.hpp"
#include "twistlab/fracderiv.hpp"

using namespace twistlab;
using namespace testsupport;

namespace {

HaarSeries random_series(Gen& gen, std::shared_ptr<const PartitionTree> tree, int depth) {
  HaarSeries s(tree, depth);
  s.set_mean(gen.uniform(-1, 1));
  for (auto& c : s.coefficients()) c = Complex(gen.uniform(-1, 1), gen.uniform(-1, 1));
  return s;
}

double coeff_diff(const HaarSeries& a, const HaarSeries& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coefficients().size(); ++i) {
    m = std::max(m, std::abs(a.coefficients()[i] - b.coefficients()[i]));
  }
  return m;
}

}  // namespace

TEST_CASE("fractional derivative examples") {
  const auto t = PartitionTree::build(CircleMap::linear(), 8);
  for (int k : {0, 2, 5, 7}) {
    HaarSeries s(t, 8);
    s.coeff(k, 1 % PartitionTree::cell_count(k)) = 1.0;
    const auto d = frac_deriv(s, 0.5);
    CHECK(d.coeff(k, 1 % PartitionTree::cell_count(k)).real() ==
          doctest::Approx(std::pow(2.0, 0.5 * k)));
  }

  Gen gen(41);
  const auto r = random_series(gen, t, 8);
  const auto zero = frac_deriv(r, 0.0);
  CHECK(zero.mean() == Complex{});
  CHECK(coeff_diff(zero, r) == 0.0);

  const auto im = frac_deriv(r, Complex(0.0, 1.0));
  for (int k = 0; k < 8; ++k) {
    const double phase = -std::log(std::pow(2.0, -k));
    const Complex rot = std::polar(1.0, phase);
    CHECK(std::abs(im.coeff(k, 0) - r.coeff(k, 0) * rot) <= 1e-14);
    CHECK(std::abs(im.coeff(k, 0)) == doctest::Approx(std::abs(r.coeff(k, 0))));
  }

  HaarSeries c(t, 8);
  c.set_mean(5.0);
  const auto ci = frac_integ(c, 0.39);
  CHECK(ci.mean() == Complex{});
  for (const auto& x : ci.coefficients()) CHECK(x == Complex{});
}

TEST_CASE("property: semigroup and inverse") {
  Gen gen(42);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = gen.integer(1, 10);
    const auto t = PartitionTree::build(gen.map(), n);
    const auto s = random_series(gen, t, n);
    const Complex b1(gen.uniform(-1, 1), gen.uniform(-1, 1));
    const Complex b2(gen.uniform(-1, 1), gen.uniform(-1, 1));
    const auto lhs = frac_deriv(frac_deriv(s, b1), b2);
    const auto rhs = frac_deriv(s, b1 + b2);
    double scale = 1.0;
    for (const auto& x : rhs.coefficients()) scale = std::max(scale, std::abs(x));
    CHECK(coeff_diff(lhs, rhs) <= 1e-12 * scale);

    const auto back = frac_integ(frac_deriv(s, b1), b1);
    CHECK(coeff_diff(back, s) <= 1e-12);
    CHECK(back.mean() == Complex{});
  }
}

TEST_CASE("property: derivative shifts the Besov index") {
  Gen gen(43);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = gen.integer(2, 10);
    const auto t = PartitionTree::build(gen.map(), n);
    const auto s = random_series(gen, t, n);
    const double beta = gen.uniform(-1, 1);
    const double sigma = gen.uniform(-1, 2);
    for (auto flavor : {BesovFlavor::inf_inf, BesovFlavor::one_one}) {
      auto lhs = besov_norm(frac_deriv(s, beta), sigma - beta, flavor).profile;
      auto rhs = besov_norm(s, sigma, flavor).profile;
      for (int k = 0; k < n; ++k) CHECK(lhs[k] == doctest::Approx(rhs[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: linearity") {
  Gen gen(44);
  const auto t = PartitionTree::build(CircleMap::perturbed_doubling(0.1), 7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_series(gen, t, 7);
    const auto b = random_series(gen, t, 7);
    const Complex c(gen.uniform(-2, 2), gen.uniform(-2, 2));
    const Complex beta(gen.uniform(-1, 1), 0.0);
    auto combo = b;
    combo *= c;
    combo += a;
    auto expected = frac_deriv(b, beta);
    expected *= c;
    expected += frac_deriv(a, beta);
    CHECK(coeff_diff(frac_deriv(combo, beta), expected) <= 1e-12);
  }
}

TEST_CASE("fractional Laplacian comparison on the dyadic tree") {
  // For phi_Q on the linear tree, the kernel integral
  // int (phi(x) - phi(y)) / d(x,y)^{1+b} dy over the ultrametric distance
  // equals |Q|^{-b} phi(x) times a factor in (1, 1 + sum_j 2^{-jb} / 2).
  const int n = 12;
  const auto t = PartitionTree::build(CircleMap::linear(), n);
  for (double b : {0.25, 0.5, 0.75}) {
    double bound = 1.0;
    for (int j = 1; j < 200; ++j) bound += std::pow(2.0, -j * b) / 2.0;
    for (int k : {1, 3, 5}) {
      const std::uint64_t q = 1;
      HaarSeries s(t, n);
      s.coeff(k, q) = 1.0;
      const auto phi = synthesize(s);
      const double len = t->length(k, q);
      const std::uint64_t x = (q << (n - k)) + 3;
      double integral = 0.0;
      for (std::uint64_t y = 0; y < phi.size(); ++y) {
        if (y == x) continue;
        const int common = n - std::bit_width(x ^ y);
        const double d = t->length(common, x >> (n - common));
        integral += t->length(n, y) * (phi[x].real() - phi[y].real()) / std::pow(d, 1.0 + b);
      }
      const double ratio = integral / (std::pow(len, -b) * phi[x].real());
      CHECK(ratio > 1.0);
      CHECK(ratio < bound);
    }
  }
}
