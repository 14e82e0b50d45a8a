#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "support.hpp"
#include "twistlab/errors.hpp"
#include "twistlab/oracles.hpp"
#include "twistlab/parallel.hpp"
#include "twistlab/random.hpp"
#include "twistlab/statistics.hpp"

using namespace twistlab;
using namespace testsupport;

namespace {

std::shared_ptr<const PartitionTree> tree_for(const CircleMap& map, int n) {
  return PartitionTree::build(map, n);
}

double normal_cdf(double x, double variance) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance));
}

struct Pair {
  VarianceEstimate gk;
  VarianceEstimate mart;
};

Pair both(const VarianceContext& ctx, const std::function<double(double)>& phi) {
  return {sigma2_green_kubo(ctx, ctx.discretize(phi)), sigma2_martingale(ctx, ctx.discretize(phi))};
}

}  // namespace

TEST_CASE("variance examples on the linear map") {
  const auto lin = CircleMap::linear();
  const auto t = tree_for(lin, 14);
  const VarianceContext ctx(lin, t, 12);
  const auto c = both(ctx, [](double x) { return std::cos(kTwoPi * x); });
  CHECK(c.gk.value == doctest::Approx(0.5).epsilon(0.02));
  CHECK(c.mart.value == doctest::Approx(0.5).epsilon(0.02));
  CHECK(c.gk.diagnostics[0] == doctest::Approx(0.5).epsilon(1e-6));

  const auto cob = both(ctx, [](double x) { return std::cos(2 * kTwoPi * x) - std::cos(kTwoPi * x); });
  CHECK(cob.gk.value <= 0.01);
  CHECK(cob.mart.value <= 0.01);
  CHECK(cob.gk.diagnostics[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(cob.gk.diagnostics[1] == doctest::Approx(-0.5).epsilon(1e-5));
  // The martingale increment of a coboundary is negligible.
  CHECK(std::sqrt(cob.mart.value) <= 1e-3);

  const auto zero = both(ctx, [](double) { return 0.0; });
  CHECK(zero.gk.value == 0.0);
  CHECK(zero.mart.value == 0.0);
  CHECK_THROWS_AS(sigma2_green_kubo(ctx, std::vector<double>(10, 1.0)), ValidationError);
}

TEST_CASE("h is annihilated by T") {
  Gen gen(71);
  for (const auto& map : {CircleMap::linear(), CircleMap::perturbed_doubling(0.1)}) {
    const int W = 10;
    const auto t = tree_for(map, W + 2);
    const VarianceContext ctx(map, t, W);
    const auto est = sigma2_martingale(ctx, ctx.discretize([](double x) { return std::sin(kTwoPi * x) + 0.2; }));
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = gen.trig();
      std::vector<double> uw(PartitionTree::cell_count(W));
      const auto avg = cell_averages(FunctionInput::pointwise(u), *t, W);
      for (std::size_t i = 0; i < uw.size(); ++i) uw[i] = avg[i].real();
      CHECK(std::fabs(ctx.inner(est.h, ctx.compose_shift(uw))) <= 1e-6);
    }
  }
}

TEST_CASE("property: estimator concordance") {
  const std::vector<std::function<double(double)>> observables{
      [](double x) { return std::cos(kTwoPi * x); },
      [](double x) { return std::sin(kTwoPi * x) + 0.3 * std::cos(3 * kTwoPi * x); },
      [](double x) { return std::min(x, 1.0 - x); },
      [](double x) { return x < 0.3 ? 1.0 : -0.5; },
  };
  for (const auto& map : {CircleMap::linear(), CircleMap::perturbed_doubling(0.1)}) {
    const auto t = tree_for(map, 13);
    const VarianceContext ctx(map, t, 11);
    for (const auto& phi : observables) {
      const auto e = both(ctx, phi);
      CHECK(std::fabs(e.gk.value - e.mart.value) <= 0.1 * std::max(e.gk.value, 1e-3));
    }
  }
}

TEST_CASE("property: coboundaries have zero variance") {
  Gen gen(72);
  for (const auto& map : {CircleMap::linear(), CircleMap::perturbed_doubling(0.1)}) {
    const auto t = tree_for(map, 13);
    const VarianceContext ctx(map, t, 11);
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = gen.trig();
      const auto e = both(ctx, [&](double x) { return u(map.eval(x)) - u(x); });
      CHECK(e.gk.value <= 1e-3);
      CHECK(e.mart.value <= 1e-3);
    }
  }
}

TEST_CASE("property: estimators are quadratic") {
  Gen gen(73);
  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto t = tree_for(map, 12);
  const VarianceContext ctx(map, t, 10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto phi = ctx.discretize(gen.trig());
    const double c = gen.uniform(-4, 4);
    auto scaled = phi;
    for (auto& x : scaled) x *= c;
    const double g1 = sigma2_green_kubo(ctx, phi).value;
    const double g2 = sigma2_green_kubo(ctx, scaled).value;
    const double m1 = sigma2_martingale(ctx, phi).value;
    const double m2 = sigma2_martingale(ctx, scaled).value;
    CHECK(std::fabs(g2 - c * c * g1) <= 1e-10 * std::max(g2, 1e-300));
    CHECK(std::fabs(m2 - c * c * m1) <= 1e-10 * std::max(m2, 1e-300));
  }
}

TEST_CASE("CLT sanity for the doubling map") {
  // Orbits of the exact doubling map are read off a random binary expansion:
  // in double precision the orbit of any point reaches 0 within 53 steps.
  const int n = 1024;
  const std::uint64_t samples = 100000;
  std::vector<double> sums(samples);
  parallel_for(samples, [&](std::size_t s) {
    std::vector<std::uint64_t> words(n / 64 + 2);
    for (std::size_t w = 0; w < words.size(); ++w) {
      words[w] = CounterRng(s).bits(w);
    }
    auto bit = [&](int i) { return (words[i / 64] >> (63 - i % 64)) & 1u; };
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      double x = 0.0, scale = 0.5;
      for (int i = k; i < k + 53; ++i, scale *= 0.5) x += scale * bit(i);
      acc += std::cos(kTwoPi * x);
    }
    sums[s] = acc / std::sqrt(static_cast<double>(n));
  });
  double mean = 0.0;
  for (double v : sums) mean += v / samples;
  double var = 0.0;
  for (double v : sums) var += (v - mean) * (v - mean) / (samples - 1);
  CHECK(var >= 0.45);
  CHECK(var <= 0.55);
  CHECK(ks_statistic(sums, 0.5) <= 0.02);

  // The library Birkhoff sum agrees with the coded orbit while it is exact.
  const double x = 0.6180339887498949;
  double acc = 0.0, y = x;
  for (int k = 0; k < 40; ++k) {
    acc += std::cos(kTwoPi * y);
    y = std::fmod(2.0 * y, 1.0);
  }
  CHECK(birkhoff_sum(CircleMap::linear(), [](double z) { return std::cos(kTwoPi * z); }, x, 40) ==
        doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("KS statistic examples") {
  const int N = 1000;
  std::vector<double> quantiles(N);
  for (int i = 0; i < N; ++i) {
    const double p = (i + 0.5) / N;
    quantiles[i] = bisect([&](double z) { return normal_cdf(z, 2.0) - p; }, -20, 20);
  }
  CHECK(ks_statistic(quantiles, 2.0) <= 0.5 / N + 1e-9);
  CHECK(ks_statistic(std::vector<double>(50, 0.0), 1.0) == doctest::Approx(0.5));
  std::mt19937_64 rng(74);
  std::normal_distribution<double> shifted(0.5, 1.0);
  std::vector<double> s(10000);
  for (auto& v : s) v = shifted(rng);
  CHECK(ks_statistic(s, 1.0) > 0.1);
  CHECK_THROWS_AS(ks_statistic({}, 1.0), ValidationError);
}

TEST_CASE("CLT histogram") {
  const auto map = CircleMap::perturbed_doubling(0.1);
  const int n = 12;
  const auto t = tree_for(map, n);
  const auto sol = solve_twisted(map, t, FunctionInput::fourier({}, {0.0, 1.0}), 0.39, n);
  set_thread_count(1);
  const auto a = clt_histogram(sol, n, 20000, 42, 30);
  set_thread_count(4);
  const auto b = clt_histogram(sol, n, 20000, 42, 30);
  set_thread_count(std::max(1u, std::thread::hardware_concurrency()));
  CHECK(a.counts == b.counts);
  CHECK(a.bin_edges == b.bin_edges);
  CHECK(a.variance == b.variance);
  CHECK(a.ks == b.ks);
  std::uint64_t total = 0;
  for (auto c : a.counts) total += c;
  CHECK(total == 20000);
  CHECK(a.variance_by_level.size() == static_cast<std::size_t>(n));
  CHECK(clt_histogram(sol, n, 20000, 43, 30).counts != a.counts);

  // Degenerate limit: psi_k converges to a bounded function, so the variance
  // of psi_k / sqrt(k) falls like 1/k.
  const auto alpha = [](double x) { return std::sin(kTwoPi * x); };
  const auto smooth = solve_twisted(map, t, round_trip_input(map, alpha, 0.39), 0.39, n);
  const auto deg = clt_histogram(smooth, n, 20000, 42);
  const double ref = n * deg.variance_by_level[n - 1];
  for (int k = 10; k <= n; ++k) {
    CHECK(k * deg.variance_by_level[k - 1] == doctest::Approx(ref).epsilon(0.02));
  }
  CHECK(deg.variance == doctest::Approx(ref / n).epsilon(1e-12));
  CHECK_THROWS_AS(clt_histogram(sol, n + 1, 100, 1), ValidationError);
}

TEST_CASE("anti-Hölder minima") {
  const int n = 20;
  const auto lin = CircleMap::linear();
  const auto t = tree_for(lin, n);
  const double beta = 0.39;
  const auto avg = cell_averages(weierstrass_input(std::pow(2.0, -beta)), *t, n);
  std::vector<double> re(avg.size());
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = avg[i].real();
  const auto w = oscillation_minima(re, *t, beta, 8, 15);
  double lo = 1e300, hi = 0.0;
  for (const auto& m : w) {
    lo = std::min(lo, m.value);
    hi = std::max(hi, m.value);
  }
  CHECK(lo > 0.0);
  CHECK(hi / lo <= 2.0);

  const int m = 14;
  const auto ts = tree_for(CircleMap::perturbed_doubling(0.1), m);
  const auto smooth = cell_averages(FunctionInput::fourier({}, {0.0, 1.0}), *ts, m);
  std::vector<double> sre(smooth.size());
  for (std::size_t i = 0; i < sre.size(); ++i) sre[i] = smooth[i].real();
  const auto s = oscillation_minima(sre, *ts, beta, 2, 9);
  CHECK(s.back().value < 1e-2 * s.front().value);
  for (std::size_t i = 5; i < s.size(); ++i) CHECK(s[i].value < 0.5 * s[i - 1].value);

  const auto flat = oscillation_minima(std::vector<double>(1 << m, 2.0), *ts, beta, 2, 9);
  for (const auto& f : flat) CHECK(f.value == 0.0);
}

TEST_CASE("classifier examples") {
  const auto alpha = [](double x) { return std::sin(kTwoPi * x); };
  const double beta = 0.39;
  ClassifyConfig cfg;
  cfg.depth = 14;
  for (const auto& map : {CircleMap::linear(), CircleMap::perturbed_doubling(0.1)}) {
    const auto t = tree_for(map, cfg.depth + 1);
    const auto r = dichotomy_classify(map, t, round_trip_input(map, alpha, beta), beta, cfg);
    CHECK(r.verdict == Verdict::regular);
    CHECK(r.green_kubo.value <= 1e-3);
    CHECK(r.martingale.value <= 1e-3);
    CHECK(r.coefficient_decay >= 4.0);
    CHECK_FALSE(r.out_of_theorem_range);
  }
  const auto lin = CircleMap::linear();
  const auto lt = tree_for(lin, cfg.depth + 1);
  const auto w = dichotomy_classify(lin, lt, FunctionInput::weierstrass_rhs(std::pow(2.0, -beta)),
                                    beta, cfg);
  CHECK(w.verdict == Verdict::irregular);
  CHECK(w.oscillation_band <= 2.0);

  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto t = tree_for(map, cfg.depth + 1);
  const auto fig = dichotomy_classify(map, t, FunctionInput::fourier({}, {0.0, 1.0}), beta, cfg);
  CHECK(fig.verdict == Verdict::irregular);
  CHECK(fig.green_kubo.value == doctest::Approx(fig.martingale.value).epsilon(0.1));

  const auto tk = dichotomy_classify(lin, lt, FunctionInput::takagi_tent().scaled(-2.0), 1.0, cfg);
  CHECK(tk.out_of_theorem_range);
  CHECK_THROWS_AS(dichotomy_classify(lin, lt, FunctionInput::fourier({1.0}, {}), Complex(0.3, 0.1), cfg),
                  ValidationError);
  CHECK_THROWS_AS(dichotomy_classify(lin, lt, FunctionInput::fourier({1.0}, {}), 1.5, cfg),
                  ValidationError);
}

TEST_CASE("beta sweep examples") {
  const auto map = CircleMap::perturbed_doubling(0.1);
  ClassifyConfig cfg;
  cfg.depth = 12;
  const auto t = tree_for(map, cfg.depth + 1);
  const auto alpha = [](double x) { return std::sin(kTwoPi * x); };
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(0.1 + 0.5 * i / 19.0);

  ClassifyConfig deep;
  deep.depth = 14;
  const auto dt = tree_for(map, deep.depth + 1);
  const auto family = [&](double b) { return round_trip_input(map, alpha, b); };
  const auto cob = beta_sweep(map, dt, family, {0.15, 0.3, 0.45}, deep);
  CHECK(cob.all_near_zero);
  for (const auto& p : cob.points) CHECK(p.sigma2 <= 1e-3);
  // Near beta = 1 the finite-depth residue is still visible but shrinks with
  // depth.
  const double coarse = beta_sweep(map, t, family, {0.8}, cfg).points[0].sigma2;
  const double fine = beta_sweep(map, dt, family, {0.8}, deep).points[0].sigma2;
  CHECK(fine < 0.7 * coarse);

  const auto sine = FunctionInput::fourier({}, {0.0, 1.0});
  const auto gen = beta_sweep(map, t, [&](double) { return sine; }, grid, cfg);
  CHECK(gen.none_near_zero);
  CHECK(gen.zero_intervals.empty());
  for (const auto& p : gen.points) CHECK(p.sigma2 > 10 * cfg.sigma_floor);

  for (double b : {0.1, 0.35, 0.6}) {
    CHECK(dichotomy_classify(map, dt, sine, b, deep).verdict == Verdict::irregular);
  }

  const auto single = beta_sweep(map, dt, [&](double) { return sine; }, {0.39}, deep);
  REQUIRE(single.points.size() == 1);
  const auto report = dichotomy_classify(map, dt, sine, 0.39, deep);
  CHECK(single.points[0].sigma2 == report.green_kubo.value);
  CHECK_THROWS_AS(beta_sweep(map, t, [&](double) { return sine; }, {0.97}, cfg), ValidationError);
}
