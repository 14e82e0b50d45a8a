// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "runner.hpp"
#include "twistlab/cohomology.hpp"
#include "twistlab/fracderiv.hpp"
#include "twistlab/oracles.hpp"
#include "twistlab/statistics.hpp"
#include "twistlab/transfer.hpp"

using namespace twistlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double sup_error(const TwistedSolution& sol, const std::function<double(double)>& oracle,
                 int points) {
  double err = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = (i + 0.5) / points;
    err = std::max(err, std::abs(sol.eval(x) - oracle(x)));
  }
  return err;
}

Outcome closed_form() {
  const auto lin = CircleMap::linear();
  const int n = 12;
  const auto t = PartitionTree::build(lin, n);
  const auto sol = solve_twisted(lin, t, FunctionInput::fourier({1.0}, {}), 0.5, n,
                                 SolveOptions{SolveMethod::series, 1e-12});
  const double c = 1.0 / (1.0 - std::sqrt(2.0));
  double err = sup_error(sol, [c](double) { return c; }, 10000);
  for (const auto& a : sol.averages) err = std::max(err, std::abs(a - c));
  return {err <= 1e-10, "sup error " + fmt("%.3g", err)};
}

Outcome weierstrass() {
  const auto lin = CircleMap::linear();
  const int n = 17;
  const double a = std::pow(2.0, -0.39);
  const auto t = PartitionTree::build(lin, n);
  const auto sol = solve_twisted(lin, t, FunctionInput::weierstrass_rhs(a), 0.39, n,
                                 SolveOptions{SolveMethod::series, 1e-12});
  // Terms until a^K / (1 - a) < 1e-13.
  const int converged = static_cast<int>(std::ceil(std::log(1e-13 * (1.0 - a)) / std::log(a)));
  const double err = sup_error(sol, [&](double x) { return weierstrass_series(a, 2.0, x, converged); }, 10000);
  const double err60 = sup_error(sol, [&](double x) { return weierstrass_series(a, 2.0, x, 60); }, 10000);
  return {err <= 1e-8, "sup error " + fmt("%.3g", err) + " vs " + std::to_string(converged) +
                           "-term series (" + fmt("%.3g", err60) + " vs 60 terms)"};
}

Outcome takagi() {
  const auto lin = CircleMap::linear();
  const int n = 17;
  const auto t = PartitionTree::build(lin, n);
  const auto sol = solve_twisted(lin, t, FunctionInput::takagi_tent().scaled(-2.0), 1.0, n,
                                 SolveOptions{SolveMethod::series, 1e-12});
  const double err = sup_error(sol, [](double x) { return takagi_series(x, 60); }, 10000);
  return {err <= 1e-8, "sup error " + fmt("%.3g", err)};
}

Outcome round_trip() {
  const auto map = CircleMap::perturbed_doubling(0.1);
  const double beta = 0.39;
  const auto alpha = [](double x) { return std::sin(kTwoPi * x); };
  ClassifyConfig cfg;
  cfg.depth = 14;
  const auto t = PartitionTree::build(map, cfg.depth + 1);
  const auto v = round_trip_input(map, alpha, beta);
  const auto sol = solve_twisted(map, t, v, beta, cfg.depth);
  const double err = sup_error(sol, alpha, 10000);
  const auto r = dichotomy_classify(map, t, v, beta, cfg);
  const bool ok = err <= 1e-6 && r.verdict == Verdict::regular && r.green_kubo.value <= 1e-3 &&
                  r.martingale.value <= 1e-3;
  return {ok, "sup error " + fmt("%.3g", err) + ", verdict " + to_string(r.verdict) +
                  ", sigma2 gk " + fmt("%.3g", r.green_kubo.value) + " mc " +
                  fmt("%.3g", r.martingale.value)};
}

Outcome figure_one() {
  const auto map = CircleMap::perturbed_doubling(0.1);
  const double beta = 0.39;
  const auto v = FunctionInput::fourier({}, {0.0, 1.0});
  ClassifyConfig cfg;
  cfg.depth = 17;
  const auto t = PartitionTree::build(map, cfg.depth + 1);
  const auto report = dichotomy_classify(map, t, v, beta, cfg);
  const auto sol = solve_twisted(map, t, v, beta, cfg.depth);
  const auto clt = clt_histogram(sol, 17, 100000, 42);
  double lo = 1e300, hi = 0.0;
  for (int k = 12; k <= 17; ++k) {
    lo = std::min(lo, clt.variance_by_level[k - 1]);
    hi = std::max(hi, clt.variance_by_level[k - 1]);
  }
  const double spread = hi / lo - 1.0;
  const bool ok = report.verdict == Verdict::irregular && clt.ks <= 0.05 && spread <= 0.15;
  return {ok, "verdict " + to_string(report.verdict) + ", KS " + fmt("%.4f", clt.ks) +
                  ", variance " + fmt("%.4f", clt.variance) + ", spread n=12..17 " +
                  fmt("%.1f%%", 100.0 * spread)};
}

Outcome exact_variance() {
  const auto lin = CircleMap::linear();
  const auto t = PartitionTree::build(lin, 14);
  const VarianceContext ctx(lin, t, 12);
  const auto cosine = ctx.discretize([](double x) { return std::cos(kTwoPi * x); });
  const auto cob =
      ctx.discretize([](double x) { return std::cos(2 * kTwoPi * x) - std::cos(kTwoPi * x); });
  const double g1 = sigma2_green_kubo(ctx, cosine).value;
  const double m1 = sigma2_martingale(ctx, cosine).value;
  const double g2 = sigma2_green_kubo(ctx, cob).value;
  const double m2 = sigma2_martingale(ctx, cob).value;
  const auto in = [](double x) { return x >= 0.49 && x <= 0.51; };
  const bool ok = in(g1) && in(m1) && std::fabs(g2) <= 1e-3 && std::fabs(m2) <= 1e-3;
  return {ok, "cos: gk " + fmt("%.5f", g1) + " mc " + fmt("%.5f", m1) + "; coboundary: gk " +
                  fmt("%.2g", g2) + " mc " + fmt("%.2g", m2)};
}

Outcome spectral_identity() {
  const auto lin = CircleMap::linear();
  const auto lc = pressure_derivative_check(lin, PartitionTree::build(lin, 13), 12, 1e-3);
  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto pc = pressure_derivative_check(map, PartitionTree::build(map, 13), 12, 1e-3);
  const bool ok = lc.error <= 1e-6 && pc.error <= 1e-3 && pc.lyapunov > 0.0;
  return {ok, "linear error " + fmt("%.2g", lc.error) + " (ln 2 = " + fmt("%.6f", lc.lyapunov) +
                  "), eps=0.1 error " + fmt("%.2g", pc.error) + " (lyapunov " +
                  fmt("%.6f", pc.lyapunov) + ")"};
}

Outcome chain_rule() {
  const auto lin = CircleMap::linear();
  const int n = 12;
  const auto lt = PartitionTree::build(lin, n + 1);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> vals(std::size_t{1} << n);
    for (auto& x : vals) x = u(rng);
    const auto s = analyze(std::span<const double>(vals), lt);
    for (double beta : {0.25, 0.39, 0.5}) {
      worst = std::max(worst, chain_remainder(lin, s, beta).max_coefficient);
    }
  }
  const auto map = CircleMap::perturbed_doubling(0.1);
  const auto t = PartitionTree::build(map, n + 1);
  const auto s = analyze(
      std::span<const Complex>(cell_averages(FunctionInput::fourier({}, {0.0, 1.0}), *t, n)), t);
  const auto r = chain_remainder(map, s, 0.39);
  const double reg = r.regularity ? r.regularity->exponent : -1.0;
  const bool ok = worst <= 1e-10 && r.max_coefficient > 1e-10 && reg >= 0.5;
  return {ok, "linear max " + fmt("%.2g", worst) + "; eps=0.1 max " +
                  fmt("%.3g", r.max_coefficient) + ", regularity " + fmt("%.3f", reg)};
}

Outcome holder() {
  const int n = 18;
  const auto lin = CircleMap::linear();
  const auto t = PartitionTree::build(lin, n);
  bool ok = true;
  std::string detail;
  for (double a : {0.6, 0.7, 0.8}) {
    const auto avg = cell_averages(weierstrass_input(a, 200), *t, n);
    const double est = regularity_estimate(analyze(std::span<const Complex>(avg), t)).exponent;
    const double target = -std::log2(a);
    ok = ok && std::fabs(est - target) <= 0.05;
    detail += (detail.empty() ? "" : ", ") + fmt("a=%.1f: ", a) + fmt("%.4f", est) + " vs " +
              fmt("%.4f", target);
  }
  return {ok, detail};
}

Outcome telescoping() {
  const auto map = CircleMap::perturbed_doubling(0.1);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const int n = 12;
  const auto t = PartitionTree::build(map, n);
  auto sol = solve_twisted(map, t, FunctionInput::fourier({0.1}, {0.0, 1.0, 0.4}), 0.5, n);
  // psi at beta = 0 from the same alpha.
  sol.beta = 0.0;
  sol.derivative = frac_deriv(sol.series, 0.0);
  std::vector<std::vector<Complex>> avg(n + 1);
  avg[n] = sol.averages;
  for (int k = n - 1; k >= 0; --k) {
    avg[k].resize(PartitionTree::cell_count(k));
    for (std::uint64_t i = 0; i < avg[k].size(); ++i) {
      const double l1 = t->length(k + 1, 2 * i), l2 = t->length(k + 1, 2 * i + 1);
      avg[k][i] = (l1 * avg[k + 1][2 * i] + l2 * avg[k + 1][2 * i + 1]) / (l1 + l2);
    }
  }
  double tele = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = u(rng);
    for (int k = 0; k <= n; ++k) {
      const Complex expected = avg[k][t->locate(x, k)] - avg[0][0];
      tele = std::max(tele, std::abs(martingale_psi(sol, x, k) - expected));
    }
  }

  // Bounded difference |psi_n + S_n phi_v| on the regular branch.
  const int depth = 17;
  const auto dt = PartitionTree::build(map, depth);
  const double beta = 0.4;
  const auto rt = solve_twisted(
      map, dt, round_trip_input(map, [](double x) { return std::sin(kTwoPi * x); }, beta), beta,
      depth);
  const auto cells = phi_v_cells(rt, depth - 1);
  const auto phi = [&](double x) { return cells[dt->locate(x, depth)]; };
  std::vector<double> xs(2000);
  for (auto& x : xs) x = u(rng);
  double lo = 1e300, hi = 0.0;
  for (int k = 8; k <= 16; ++k) {
    double m = 0.0;
    for (double x : xs) {
      m = std::max(m, std::fabs(martingale_psi(rt, x, k).real() + birkhoff_sum(map, phi, x, k)));
    }
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  const bool ok = tele <= 1e-12 && hi / lo <= 2.0;
  return {ok, "telescoping max " + fmt("%.2g", tele) + ", bounded-difference ratio " +
                  fmt("%.3f", hi / lo)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "twistlab_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "fig1.json") << R"({"map": {"family": "perturbed_doubling", "epsilon": 0.1},
    "v": {"kind": "fourier", "sin": [0.0, 1.0]}, "beta": 0.39, "depth": 17,
    "samples": 100000, "seed": 42})";
  std::vector<std::string> csvs;
  int codes = 0;
  for (const char* threads : {"1", "8"}) {
    const auto out = dir / (std::string("t") + threads);
    std::ostringstream so, se;
    codes += cli::run({"--threads", threads, "--out", out.string(), "clt", "--config",
                       (dir / "fig1.json").string()},
                      so, se);
    std::string all;
    for (const auto& e : fs::directory_iterator(out)) {
      if (e.path().extension() == ".csv") all += e.path().filename().string() + "\n" + slurp(e.path());
    }
    csvs.push_back(all);
  }
  fs::remove_all(dir);
  const bool ok = codes == 0 && !csvs[0].empty() && csvs[0] == csvs[1];
  return {ok, std::string(codes == 0 ? "" : "cli failed, ") +
                  (csvs[0] == csvs[1] ? "CSV outputs byte-identical" : "CSV outputs differ") +
                  " (" + std::to_string(csvs[0].size()) + " bytes)"};
}

struct Criterion {
  int id;
  const char* name;
  double budget;  // seconds, 0 = none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "closed-form solve", 1.0, closed_form},
      {2, "Weierstrass oracle", 10.0, weierstrass},
      {3, "Takagi oracle", 10.0, takagi},
      {4, "round trip and regular branch", 60.0, round_trip},
      {5, "irregular branch CLT at depth 17", 180.0, figure_one},
      {6, "exact variance", 30.0, exact_variance},
      {7, "spectral identity", 60.0, spectral_identity},
      {8, "chain-rule remainder", 60.0, chain_rule},
      {9, "Hölder estimator", 30.0, holder},
      {10, "martingale telescoping", 30.0, telescoping},
      {11, "thread determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget == 0.0 || secs < c.budget;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %2d: %s  %s: %s [%.2f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs,
                in_time ? "" : (", budget " + fmt("%.0f", c.budget) + " s exceeded").c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed;
}
