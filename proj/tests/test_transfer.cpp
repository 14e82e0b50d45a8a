#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "twistlab/errors.hpp"
#include "twistlab/quadrature.hpp"
#include "twistlab/transfer.hpp"

using namespace twistlab;
using namespace testsupport;

namespace {

std::shared_ptr<const PartitionTree> tree_for(const CircleMap& map, int n) {
  return PartitionTree::build(map, n);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

TEST_CASE("Ulam operator examples") {
  const auto lin = CircleMap::linear();
  const auto t = tree_for(lin, 9);
  const TransferOperator op(lin, t, 8, 1.0);
  for (std::uint64_t q = 0; q < op.size(); ++q) {
    CHECK(op.weight(q, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(op.weight(q, 1) == doctest::Approx(0.5).epsilon(1e-14));
  }
  const std::vector<double> ones(op.size(), 1.0);
  for (double y : op.apply(ones)) CHECK(y == doctest::Approx(1.0).epsilon(1e-14));

  const TransferOperator small(lin, t, 4, 1.0);
  const auto dense = small.dense();
  for (std::uint64_t r = 0; r < 16; ++r) {
    double row = 0.0;
    for (std::uint64_t c = 0; c < 16; ++c) {
      CHECK(dense[r * 16 + c] >= 0.0);
      row += dense[r * 16 + c];
    }
    CHECK(row == doctest::Approx(1.0));
  }

  for (double beta : {0.25, 0.5, 1.0}) {
    const TransferOperator tw(lin, t, 8, 1.0 + beta);
    for (double y : tw.apply(ones)) {
      CHECK(y == doctest::Approx(std::pow(2.0, -beta)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(TransferOperator(lin, t, 9, 1.0), ValidationError);
}

TEST_CASE("Ulam operator consistency with the branch sum") {
  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto t = tree_for(map, 9);
  const TransferOperator op(map, t, 8, 1.0);
  const auto got = op.apply(std::vector<double>(op.size(), 1.0));
  for (std::uint64_t q = 0; q < op.size(); q += 3) {
    const double a = t->left(8, q), b = t->right(8, q);
    const double exact = GaussLegendre5::integrate(
                             [&](double x) {
                               return 1.0 / map.deriv(map.inverse_branch(0, x)) +
                                      1.0 / map.deriv(map.inverse_branch(1, x));
                             },
                             a, b) /
                         (b - a);
    CHECK(std::fabs(got[q] - exact) <= 1e-6);
  }
}

TEST_CASE("property: duality with composition") {
  Gen gen(61);
  const int n = 12;
  for (int trial = 0; trial < 20; ++trial) {
    const auto map = gen.map();
    const auto t = tree_for(map, n + 1);
    const TransferOperator op(map, t, n, 1.0);
    const auto psi = gen.vector(std::size_t{1} << (n + 1));
    const auto theta = gen.vector(std::size_t{1} << n);
    const auto lpsi = op.apply_fine(psi);
    double lhs = 0.0, rhs = 0.0;
    for (std::uint64_t q = 0; q < theta.size(); ++q) lhs += lpsi[q] * theta[q] * t->length(n, q);
    for (std::uint64_t r = 0; r < psi.size(); ++r) {
      rhs += psi[r] * theta[PartitionTree::image_index(n + 1, r)] * t->length(n + 1, r);
    }
    CHECK(std::fabs(lhs - rhs) <= 1e-6);

    const TransferOperator coarse(map, t, 6, gen.uniform(0.5, 2.0));
    const auto x = gen.vector(64);
    const auto y = gen.vector(64);
    CHECK(dot(coarse.apply(x), y) == doctest::Approx(dot(x, coarse.apply_transpose(y))));
  }
}

TEST_CASE("dense and matrix-free applies agree") {
  Gen gen(62);
  const auto map = CircleMap::perturbed_doubling(-0.12);
  const auto t = tree_for(map, 8);
  const TransferOperator op(map, t, 7, 1.39);
  const auto dense = op.dense();
  const auto x = gen.vector(op.size());
  const auto y = op.apply(x);
  for (std::uint64_t r = 0; r < op.size(); ++r) {
    double acc = 0.0;
    for (std::uint64_t c = 0; c < op.size(); ++c) acc += dense[r * op.size() + c] * x[c];
    CHECK(acc == doctest::Approx(y[r]).epsilon(1e-12));
  }
}

TEST_CASE("invariant density examples") {
  const auto lin = CircleMap::linear();
  const auto lt = tree_for(lin, 11);
  for (double r : invariant_density(lin, lt, 10).rho) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));

  const auto map = CircleMap::perturbed_doubling(0.1);
  const int n = 10;
  const auto t = tree_for(map, n + 1);
  const auto dens = invariant_density(map, t, n);
  const auto& rho = dens.rho;
  CHECK_FALSE(dens.slow_mixing);
  const auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
  CHECK(*lo > 0.5);
  CHECK(*hi < 2.0);
  CHECK(*hi - *lo > 0.05);
  double mass = 0.0;
  for (std::uint64_t i = 0; i < rho.size(); ++i) mass += rho[i] * t->length(n, i);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  const TransferOperator op(map, t, n, 1.0);
  const auto again = op.apply(rho);
  for (std::uint64_t i = 0; i < rho.size(); ++i) CHECK(std::fabs(again[i] - rho[i]) <= 1e-11);
}

TEST_CASE("invariant density against an orbit histogram") {
  const auto map = CircleMap::perturbed_doubling(0.1);
  const int n = 6;
  const auto t = tree_for(map, 11);
  const auto rho = invariant_density(map, t, 10).rho;
  std::vector<double> counts(64, 0.0);
  double x = 0.1234567;
  const int steps = 10000000;
  for (int i = 0; i < 1000; ++i) x = map.eval(x);
  for (int i = 0; i < steps; ++i) {
    counts[t->locate(x, n)] += 1.0;
    x = map.eval(x);
  }
  double l1 = 0.0;
  for (std::uint64_t p = 0; p < 64; ++p) {
    double mass = 0.0;
    for (std::uint64_t c = p << 4; c < (p + 1) << 4; ++c) mass += rho[c] * t->length(10, c);
    l1 += std::fabs(counts[p] / steps - mass);
  }
  CHECK(l1 <= 1e-2);
}

TEST_CASE("leading eigenvalue examples") {
  const auto lin = CircleMap::linear();
  const auto lt = tree_for(lin, 11);
  for (double beta : {0.0, 0.39, 1.0}) {
    const auto e = leading_eig(lin, lt, 10, 1.0 + beta);
    CHECK(e.lambda == doctest::Approx(std::pow(2.0, -beta)).epsilon(1e-12));
    CHECK(e.gap_ratio < 0.9);
  }
  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto t = tree_for(map, 13);
  CHECK(std::fabs(leading_eig(map, t, 10, 1.0).lambda - 1.0) <= 1e-8);
  CHECK(std::fabs(leading_eig(map, t, 12, 1.0).lambda - 1.0) <= 1e-8);
  const double l10 = leading_eig(map, t, 10, 1.39).lambda;
  const double l12 = leading_eig(map, t, 12, 1.39).lambda;
  CHECK(l12 < 1.0);
  CHECK(std::fabs(l12 - l10) <= 1e-6);
  CHECK(l12 == doctest::Approx(0.76818).epsilon(1e-4));
}

TEST_CASE("pressure derivative check") {
  const auto lin = CircleMap::linear();
  const auto lt = tree_for(lin, 9);
  const auto lc = pressure_derivative_check(lin, lt, 8, 1e-3);
  CHECK(lc.lyapunov == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(lc.error <= 1e-6);
  CHECK(lc.passed);

  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto t = tree_for(map, 11);
  const auto pc = pressure_derivative_check(map, t, 10, 1e-3);
  CHECK(pc.error <= 1e-3);
  CHECK(pc.passed);
  CHECK(pc.lyapunov < std::log(2.0));

  // Second order: successive differences of the quotient shrink about 4x.
  const double q1 = pressure_derivative_check(map, t, 10, 8e-3).difference_quotient;
  const double q2 = pressure_derivative_check(map, t, 10, 4e-3).difference_quotient;
  const double q3 = pressure_derivative_check(map, t, 10, 2e-3).difference_quotient;
  const double ratio = (q1 - q2) / (q2 - q3);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);

  CHECK_THROWS_AS(pressure_derivative_check(map, t, 10, 0.1), ValidationError);
  CHECK_THROWS_AS(pressure_derivative_check(map, t, 10, 1e-5), ValidationError);
}

TEST_CASE("obstruction examples") {
  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto t = tree_for(map, 11);
  const double beta = 0.39;
  const auto zero = FunctionInput::pointwise([](double) { return 0.0; });
  CHECK(std::abs(obstruction(map, t, 10, zero, beta)) == 0.0);
  const auto gb = FunctionInput::pointwise([&](double x) { return std::pow(map.deriv(x), beta); });
  CHECK(obstruction(map, t, 10, gb, beta).real() == doctest::Approx(1.0).epsilon(1e-12));

  const auto lin = CircleMap::linear();
  const auto lt = tree_for(lin, 13);
  const double a = std::pow(2.0, -beta);
  const auto w = FunctionInput::weierstrass_rhs(a);
  const Complex o10 = obstruction(lin, lt, 10, w, beta);
  const Complex o12 = obstruction(lin, lt, 12, w, beta);
  CHECK(std::isfinite(o12.real()));
  CHECK(std::abs(o10 - o12) <= 1e-6);
  CHECK_THROWS_AS(obstruction(map, t, 10, zero, Complex(0.3, 0.1)), ValidationError);
}

TEST_CASE("correlation examples") {
  const auto lin = CircleMap::linear();
  const auto t = tree_for(lin, 11);
  const auto cosine = [](double x) { return std::cos(kTwoPi * x); };
  const auto c = correlations(lin, t, 10, cosine, cosine, 6);
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-10));
  for (int k = 1; k <= 6; ++k) CHECK(std::fabs(c[k]) <= 1e-10);

  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto pt = tree_for(map, 11);
  const auto flat = [](double) { return 3.0; };
  const auto sine = [](double x) { return std::sin(kTwoPi * x) + 0.2; };
  for (double v : correlations(map, pt, 10, flat, sine, 5)) CHECK(std::fabs(v) <= 1e-12);
  const double ab = correlations(map, pt, 10, cosine, sine, 0)[0];
  const double ba = correlations(map, pt, 10, sine, cosine, 0)[0];
  CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
}

TEST_CASE("property: log-convexity of the leading eigenvalue") {
  for (double eps : {-0.1, 0.1, 0.15}) {
    const auto map = CircleMap::perturbed_doubling(eps);
    const auto t = tree_for(map, 9);
    std::vector<double> logl;
    for (int i = 0; i <= 10; ++i) logl.push_back(std::log(leading_eig(map, t, 8, 1.0 + 0.1 * i).lambda));
    for (std::size_t i = 1; i + 1 < logl.size(); ++i) {
      CHECK(logl[i - 1] - 2 * logl[i] + logl[i + 1] >= -1e-6);
    }
  }
}

TEST_CASE("a nearly neutral fixed point closes the gap") {
  // g(0) = 2 - 0.3 pi is barely expanding, so for large s the essential part of
  // the spectrum sits next to the leading eigenvalue.
  const auto map = CircleMap::perturbed_doubling(-0.15);
  const auto t = tree_for(map, 9);
  CHECK_NOTHROW(leading_eig(map, t, 8, 1.0));
  CHECK_THROWS_AS(leading_eig(map, t, 8, 2.0), GapTooSmall);
}

TEST_CASE("property: eigenvector positivity") {
  Gen gen(64);
  for (int trial = 0; trial < 5; ++trial) {
    const auto map = gen.map();
    const auto t = tree_for(map, 9);
    const double s = gen.uniform(0.5, 2.0);
    const auto e = leading_eig(map, t, 8, s);
    CHECK(*std::min_element(e.vector.begin(), e.vector.end()) > 0.0);
    CHECK(e.lambda > 0.0);
  }
}
