#include "runner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "twistlab/cohomology.hpp"
#include "twistlab/errors.hpp"
#include "twistlab/fracderiv.hpp"
#include "twistlab/oracles.hpp"
#include "twistlab/parallel.hpp"
#include "twistlab/statistics.hpp"
#include "twistlab/transfer.hpp"

#ifndef TWISTLAB_VERSION
#define TWISTLAB_VERSION "0.1.0-unknown"
#endif

namespace twistlab::cli {
namespace {

using json = nlohmann::ordered_json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Files are collected first and written only after the whole run succeeded.
struct Output {
  std::vector<std::pair<std::string, std::string>> files;
  json summary = json::object();
  void add(std::string name, std::string content) {
    files.emplace_back(std::move(name), std::move(content));
  }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }
};

// ---- config access --------------------------------------------------------

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ValidationError("unknown key '" + key + "' in " + where);
    }
  }
}

double get_number(json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) j[key] = fallback;
  if (!j[key].is_number()) throw ValidationError("'" + key + "' must be a number");
  return j[key].get<double>();
}

std::int64_t get_int(json& j, const std::string& key, std::int64_t fallback) {
  if (!j.contains(key)) j[key] = fallback;
  if (!j[key].is_number_integer()) {
    throw ValidationError("'" + key + "' must be an integer");
  }
  return j[key].get<std::int64_t>();
}

std::string get_string(json& j, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) j[key] = fallback;
  if (!j[key].is_string()) throw ValidationError("'" + key + "' must be a string");
  return j[key].get<std::string>();
}

std::vector<double> get_numbers(json& j, const std::string& key,
                                std::vector<double> fallback) {
  if (!j.contains(key)) j[key] = fallback;
  if (!j[key].is_array()) throw ValidationError("'" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : j[key]) {
    if (!e.is_number()) throw ValidationError("'" + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Complex get_beta(json& j, double fallback) {
  if (!j.contains("beta")) j["beta"] = fallback;
  const auto& b = j["beta"];
  if (b.is_number()) return {b.get<double>(), 0.0};
  if (b.is_object()) {
    json c = b;
    check_keys(c, {"re", "im"}, "beta");
    const double re = get_number(c, "re", 0.0);
    const double im = get_number(c, "im", 0.0);
    j["beta"] = c;
    return {re, im};
  }
  throw ValidationError("'beta' must be a number or {re, im}");
}

double real_beta(json& j, double fallback) {
  const Complex b = get_beta(j, fallback);
  if (b.imag() != 0.0) throw ValidationError("this subcommand needs a real beta");
  return b.real();
}

int get_depth(json& j, std::int64_t fallback) {
  const auto d = get_int(j, "depth", fallback);
  if (d < 1 || d > PartitionTree::kMaxDepth - 1) {
    throw ValidationError("'depth' must lie in [1, 25]");
  }
  return static_cast<int>(d);
}

// sum cos_j cos(2 pi j x) + sin_j sin(2 pi j x), j >= 0, as for Fourier inputs.
struct Trig {
  std::vector<double> cos, sin;
  double value(double x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < cos.size(); ++j) acc += cos[j] * std::cos(kTwoPi * j * x);
    for (std::size_t j = 0; j < sin.size(); ++j) acc += sin[j] * std::sin(kTwoPi * j * x);
    return acc;
  }
  double slope(double x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < cos.size(); ++j) {
      acc -= kTwoPi * j * cos[j] * std::sin(kTwoPi * j * x);
    }
    for (std::size_t j = 0; j < sin.size(); ++j) {
      acc += kTwoPi * j * sin[j] * std::cos(kTwoPi * j * x);
    }
    return acc;
  }
};

CircleMap parse_map(json& cfg) {
  if (!cfg.contains("map")) cfg["map"] = json{{"family", "linear"}};
  json& m = cfg["map"];
  check_keys(m, {"family", "epsilon", "cos", "sin"}, "map");
  const auto family = get_string(m, "family", "linear");
  if (family == "linear") {
    check_keys(m, {"family"}, "map (linear)");
    return CircleMap::linear();
  }
  if (family == "perturbed_doubling") {
    check_keys(m, {"family", "epsilon"}, "map (perturbed_doubling)");
    return CircleMap::perturbed_doubling(get_number(m, "epsilon", 0.1));
  }
  if (family == "custom") {
    check_keys(m, {"family", "cos", "sin"}, "map (custom)");
    // L(x) = 2x + sum_j sin_j sin(2 pi j x) + cos_j (cos(2 pi j x) - 1)
    Trig t{get_numbers(m, "cos", {}), get_numbers(m, "sin", {})};
    double shift = 0.0;
    for (double c : t.cos) shift += c;
    auto lift = [t, shift](double x) { return 2.0 * x + t.value(x) - shift; };
    auto deriv = [t](double x) { return 2.0 + t.slope(x); };
    return CircleMap::custom(lift, deriv, "2x + trigonometric perturbation");
  }
  throw ValidationError("unknown map family '" + family + "'");
}

FunctionInput parse_trig_input(json& v) {
  // Fourier input: coefficient j multiplies cos/sin(2 pi j x), j >= 0.
  const auto c = get_numbers(v, "cos", {});
  const auto s = get_numbers(v, "sin", {});
  return FunctionInput::fourier(c, s);
}

FunctionInput parse_input(json& cfg, const CircleMap& map, Complex beta,
                          const std::shared_ptr<const PartitionTree>& tree,
                          const char* key = "v") {
  if (!cfg.contains(key)) cfg[key] = json{{"kind", "fourier"}, {"cos", {0.0}}, {"sin", {0.0, 1.0}}};
  json& v = cfg[key];
  if (!v.is_object()) throw ValidationError(std::string(key) + " must be an object");
  const auto kind = get_string(v, "kind", "fourier");
  const double scale = get_number(v, "scale", 1.0);
  FunctionInput in = FunctionInput::takagi_tent();
  if (kind == "fourier") {
    check_keys(v, {"kind", "scale", "cos", "sin"}, key);
    in = parse_trig_input(v);
  } else if (kind == "takagi_tent") {
    check_keys(v, {"kind", "scale"}, key);
  } else if (kind == "weierstrass_rhs") {
    check_keys(v, {"kind", "scale", "a"}, key);
    in = FunctionInput::weierstrass_rhs(get_number(v, "a", std::pow(2.0, -0.39)));
  } else if (kind == "weierstrass") {
    check_keys(v, {"kind", "scale", "a", "terms"}, key);
    const double a = get_number(v, "a", 0.7);
    if (!(a > 0.0 && a < 1.0)) throw ValidationError("'a' must lie in (0, 1)");
    in = weierstrass_input(a, static_cast<int>(get_int(v, "terms", 60)));
  } else if (kind == "round_trip") {
    check_keys(v, {"kind", "scale", "alpha"}, key);
    if (!v.contains("alpha")) v["alpha"] = json{{"cos", json::array()}, {"sin", {0.0, 1.0}}};
    json& a = v["alpha"];
    check_keys(a, {"cos", "sin"}, "alpha");
    if (beta.imag() != 0.0) throw ValidationError("round_trip input needs a real beta");
    Trig t{get_numbers(a, "cos", {}), get_numbers(a, "sin", {})};
    in = round_trip_input(map, [t](double x) { return t.value(x); }, beta.real());
  } else if (kind == "haar_coeffs") {
    check_keys(v, {"kind", "scale", "mean", "levels"}, key);
    const double mean = get_number(v, "mean", 0.0);
    if (!v.contains("levels") || !v["levels"].is_array()) {
      throw ValidationError("haar_coeffs needs a 'levels' array");
    }
    const auto& levels = v["levels"];
    HaarSeries series(tree, static_cast<int>(levels.size()));
    series.set_mean(mean);
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const auto& row = levels[k];
      if (!row.is_array() || row.size() != PartitionTree::cell_count(static_cast<int>(k))) {
        throw ValidationError("haar_coeffs level " + std::to_string(k) +
                              " must hold 2^level numbers");
      }
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (!row[i].is_number()) throw ValidationError("haar_coeffs must hold numbers");
        series.coeff(static_cast<int>(k), i) = row[i].get<double>();
      }
    }
    in = FunctionInput::haar(std::move(series));
  } else {
    throw ValidationError("unknown input kind '" + kind + "'");
  }
  return scale == 1.0 ? in : in.scaled(scale);
}

SolveOptions parse_solve_options(json& cfg) {
  SolveOptions o;
  o.tol = get_number(cfg, "tol", 1e-9);
  const auto method = get_string(cfg, "method", "series");
  if (method == "series") {
    o.method = SolveMethod::series;
  } else if (method == "iteration") {
    o.method = SolveMethod::iteration;
  } else {
    throw ValidationError("'method' must be series or iteration");
  }
  return o;
}

ClassifyConfig parse_classify(json& cfg, int depth, const SolveOptions& opt) {
  ClassifyConfig c;
  c.depth = depth;
  c.tol = opt.tol;
  c.method = opt.method;
  c.kmax = static_cast<int>(get_int(cfg, "kmax", c.kmax));
  c.neumann_terms = static_cast<int>(get_int(cfg, "neumann_terms", c.neumann_terms));
  if (!cfg.contains("classify")) cfg["classify"] = json::object();
  json& t = cfg["classify"];
  check_keys(t,
             {"first_level", "oscillation_margin", "sigma_floor", "stderr_factor",
              "irregular_factor", "decay_factor", "band_factor", "gamma"},
             "classify");
  c.first_level = static_cast<int>(get_int(t, "first_level", c.first_level));
  c.oscillation_margin =
      static_cast<int>(get_int(t, "oscillation_margin", c.oscillation_margin));
  c.sigma_floor = get_number(t, "sigma_floor", c.sigma_floor);
  c.stderr_factor = get_number(t, "stderr_factor", c.stderr_factor);
  c.irregular_factor = get_number(t, "irregular_factor", c.irregular_factor);
  c.decay_factor = get_number(t, "decay_factor", c.decay_factor);
  c.band_factor = get_number(t, "band_factor", c.band_factor);
  c.gamma = get_number(t, "gamma", c.gamma);
  return c;
}

json level_minima_json(const std::vector<LevelMinimum>& v) {
  json out = json::array();
  for (const auto& m : v) out.push_back({{"level", m.level}, {"min", m.value}});
  return out;
}

json estimate_json(const VarianceEstimate& e) {
  return {{"method", to_string(e.method)}, {"value", e.value}, {"stderr", e.stderr_}};
}

json complex_json(Complex c) { return {{"re", c.real()}, {"im", c.imag()}}; }

std::string address(int level, std::uint64_t index) {
  return Cell{level, index, 0.0, 1.0}.address();
}

// ---- subcommands ----------------------------------------------------------

const std::map<std::string, std::set<std::string>> kAllowedKeys = {
    {"partition", {"map", "depth"}},
    {"solve", {"map", "v", "beta", "depth", "tol", "method", "trace_points"}},
    {"analyze", {"map", "v", "depth", "s"}},
    {"fracderiv", {"map", "v", "beta", "depth"}},
    {"clt", {"map", "v", "beta", "depth", "tol", "method", "samples", "seed", "bins", "level"}},
    {"variance",
     {"map", "v", "beta", "depth", "tol", "method", "observable", "kmax", "neumann_terms"}},
    {"classify",
     {"map", "v", "beta", "depth", "tol", "method", "kmax", "neumann_terms", "classify"}},
    {"sweep-beta",
     {"map", "v", "beta_grid", "depth", "tol", "method", "kmax", "neumann_terms", "classify"}},
    {"spectrum", {"map", "depth", "beta_grid", "h"}},
    {"oracle-check", {"oracle", "a", "depth", "tol", "points", "terms"}},
};

void cmd_partition(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 12);
  const auto tree = PartitionTree::build(map, n);
  std::string csv = "level,address,a,b,length\n";
  double lo = 1e300, hi = 0.0;
  for (std::uint64_t i = 0; i < PartitionTree::cell_count(n); ++i) {
    const double len = tree->length(n, i);
    csv += std::to_string(n) + "," + address(n, i) + "," + num(tree->left(n, i)) + "," +
           num(tree->right(n, i)) + "," + num(len) + "\n";
    lo = std::min(lo, std::ldexp(len, n));
    hi = std::max(hi, std::ldexp(len, n));
  }
  out.add("partition.csv", csv);
  out.summary = {{"depth", n},
                 {"lambda_min", map.lambda_min()},
                 {"min_scaled_length", lo},
                 {"max_scaled_length", hi}};
  out.add_json("partition.json", out.summary);
}

void cmd_solve(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 12);
  const Complex beta = get_beta(cfg, 0.39);
  const auto opt = parse_solve_options(cfg);
  const auto tree = PartitionTree::build(map, n + 1);
  const auto v = parse_input(cfg, map, beta, tree);
  const auto sol = solve_twisted(map, tree, v, beta, n, opt);
  std::vector<double> points = {0.1, 0.3, 0.7};
  if (cfg.contains("trace_points")) {
    points = cfg["trace_points"].get<std::vector<double>>();
    for (double x : points) {
      if (!(x >= 0.0 && x < 1.0)) throw ValidationError("'trace_points' must lie in [0, 1)");
    }
  } else {
    cfg["trace_points"] = points;
  }
  std::string csv = "address,a,b,average_re,average_im,nodal_re,nodal_im\n";
  for (std::uint64_t i = 0; i < sol.averages.size(); ++i) {
    csv += address(n, i) + "," + num(tree->left(n, i)) + "," + num(tree->right(n, i)) +
           "," + num(sol.averages[i].real()) + "," + num(sol.averages[i].imag()) + "," +
           num(sol.nodal[i].real()) + "," + num(sol.nodal[i].imag()) + "\n";
  }
  out.add("solution.csv", csv);
  std::string trace = "x,k,psi_re,psi_im\n";
  for (double x : points) {
    const auto psi = martingale_trace(sol, x);
    for (std::size_t k = 0; k < psi.size(); ++k) {
      trace += num(x) + "," + std::to_string(k) + "," + num(psi[k].real()) + "," +
               num(psi[k].imag()) + "\n";
    }
  }
  out.add("martingale.csv", trace);
  out.summary = {{"method", to_string(sol.method)},
                 {"residual_sup", sol.residual_sup},
                 {"terms", sol.terms},
                 {"tail_bound", sol.tail_bound},
                 {"rate", sol.rate},
                 {"mean", complex_json(sol.series.mean())}};
  out.add_json("solve.json", out.summary);
}

std::string coeff_csv(const HaarSeries& s) {
  std::string csv = "level,address,re,im\n";
  for (int k = 0; k < s.depth(); ++k) {
    const auto d = s.level_coeffs(k);
    for (std::uint64_t i = 0; i < d.size(); ++i) {
      csv += std::to_string(k) + "," + address(k, i) + "," + num(d[i].real()) + "," +
             num(d[i].imag()) + "\n";
    }
  }
  return csv;
}

void cmd_analyze(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 12);
  const double s = get_number(cfg, "s", 0.39);
  const auto tree = PartitionTree::build(map, n);
  const auto v = parse_input(cfg, map, 0.0, tree);
  const auto series = analyze(std::span<const Complex>(cell_averages(v, *tree, n)), tree);
  out.add("coefficients.csv", coeff_csv(series));
  const auto profile = besov_norm(series, s, BesovFlavor::inf_inf).profile;
  std::string pcsv = "level,partial_value\n";
  for (std::size_t k = 0; k < profile.size(); ++k) {
    pcsv += std::to_string(k) + "," + num(profile[k]) + "\n";
  }
  out.add("profile.csv", pcsv);
  out.summary = {{"mean", complex_json(series.mean())},
                 {"s", s},
                 {"besov_inf_inf", besov_norm(series, s, BesovFlavor::inf_inf).value},
                 {"besov_one_one", besov_norm(series, s, BesovFlavor::one_one).value}};
  if (n >= 8) {
    try {
      const auto r = regularity_estimate(series);
      out.summary["regularity"] = {{"exponent", r.exponent},
                                   {"stderr", r.stderr_},
                                   {"first_level", r.first_level},
                                   {"last_level", r.last_level}};
    } catch (const DegenerateInput&) {
      out.summary["regularity"] = nullptr;
    }
  }
  out.add_json("analyze.json", out.summary);
}

void cmd_fracderiv(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 12);
  const Complex beta = get_beta(cfg, 0.39);
  const auto tree = PartitionTree::build(map, n);
  const auto v = parse_input(cfg, map, beta, tree);
  const auto series = analyze(std::span<const Complex>(cell_averages(v, *tree, n)), tree);
  const auto d = frac_deriv(series, beta);
  out.add("fracderiv.csv", coeff_csv(d));
  double mx = 0.0;
  for (const auto& c : d.coefficients()) mx = std::max(mx, std::abs(c));
  out.summary = {{"beta", complex_json(beta)}, {"max_coefficient", mx}};
  out.add_json("fracderiv.json", out.summary);
}

void cmd_clt(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 17);
  const Complex beta = get_beta(cfg, 0.39);
  const auto opt = parse_solve_options(cfg);
  const auto samples = get_int(cfg, "samples", 100000);
  const auto seed = get_int(cfg, "seed", 42);
  const auto bins = get_int(cfg, "bins", 50);
  const auto level = get_int(cfg, "level", n);
  if (samples < 2) throw ValidationError("'samples' must be at least 2");
  if (seed < 0) throw ValidationError("'seed' must be non-negative");
  if (bins < 1 || bins > 100000) throw ValidationError("'bins' must lie in [1, 1e5]");
  if (beta.imag() != 0.0) throw ValidationError("clt needs a real beta");
  const auto tree = PartitionTree::build(map, n + 1);
  const auto v = parse_input(cfg, map, beta, tree);
  const auto sol = solve_twisted(map, tree, v, beta, n, opt);
  const auto r = clt_histogram(sol, static_cast<int>(level), static_cast<std::uint64_t>(samples),
                               static_cast<std::uint64_t>(seed), static_cast<int>(bins));
  std::string csv = "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < r.counts.size(); ++b) {
    csv += num(r.bin_edges[b]) + "," + num(r.bin_edges[b + 1]) + "," +
           std::to_string(r.counts[b]) + "\n";
  }
  out.add("histogram.csv", csv);
  out.summary = {{"level", r.n},
                 {"samples", r.samples},
                 {"seed", r.seed},
                 {"mean", r.mean},
                 {"variance", r.variance},
                 {"ks", r.ks},
                 {"variance_by_level", r.variance_by_level},
                 {"max_increment", r.max_increment},
                 {"residual_sup", sol.residual_sup}};
  out.add_json("clt.json", out.summary);
}

void cmd_variance(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 12);
  const auto opt = parse_solve_options(cfg);
  const int kmax = static_cast<int>(get_int(cfg, "kmax", 40));
  const int K = static_cast<int>(get_int(cfg, "neumann_terms", 60));
  if (n < 2) throw ValidationError("variance needs depth >= 2");
  const auto tree = PartitionTree::build(map, n);
  const VarianceContext ctx(map, tree, n - 1);
  std::vector<double> phi;
  if (cfg.contains("observable")) {
    // A direct observable; v and beta are not used.
    const auto obs = parse_input(cfg, map, 0.0, tree, "observable");
    if (!obs.has_rule()) throw ValidationError("observable must be a pointwise input");
    phi = ctx.discretize([&](double x) { return obs(x); });
  } else {
    const double beta = real_beta(cfg, 0.39);
    const auto v = parse_input(cfg, map, beta, tree);
    const auto sol = solve_twisted(map, tree, v, beta, n, opt);
    phi = phi_v_observable(sol);
  }
  const auto gk = sigma2_green_kubo(ctx, phi, kmax);
  const auto mg = sigma2_martingale(ctx, phi, K);
  std::string csv = "k,correlation\n";
  for (std::size_t k = 0; k < gk.diagnostics.size(); ++k) {
    csv += std::to_string(k) + "," + num(gk.diagnostics[k]) + "\n";
  }
  out.add("correlations.csv", csv);
  out.summary = {{"green_kubo", estimate_json(gk)}, {"martingale", estimate_json(mg)}};
  out.add_json("variance.json", out.summary);
}

json report_json(const DichotomyReport& r) {
  const auto& c = r.config;
  return {{"beta", r.beta},
          {"verdict", to_string(r.verdict)},
          {"out_of_theorem_range", r.out_of_theorem_range},
          {"sigma2", {estimate_json(r.green_kubo), estimate_json(r.martingale)}},
          {"coefficient_minima", level_minima_json(r.coefficient_minima)},
          {"oscillation_minima", level_minima_json(r.oscillation_minima)},
          {"coefficient_decay", r.coefficient_decay},
          {"oscillation_band", r.oscillation_band},
          {"residual_sup", r.residual_sup},
          {"thresholds",
           {{"sigma_floor", c.sigma_floor},
            {"stderr_factor", c.stderr_factor},
            {"irregular_factor", c.irregular_factor},
            {"decay_factor", c.decay_factor},
            {"band_factor", c.band_factor},
            {"first_level", c.first_level},
            {"oscillation_margin", c.oscillation_margin},
            {"gamma", c.gamma}}}};
}

void cmd_classify(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 14);
  const double beta = real_beta(cfg, 0.39);
  const auto opt = parse_solve_options(cfg);
  const auto c = parse_classify(cfg, n, opt);
  const auto tree = PartitionTree::build(map, n);
  const auto v = parse_input(cfg, map, beta, tree);
  const auto r = dichotomy_classify(map, tree, v, beta, c);
  out.summary = report_json(r);
  out.add_json("report.json", out.summary);
}

void cmd_sweep(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 12);
  const auto opt = parse_solve_options(cfg);
  const auto c = parse_classify(cfg, n, opt);
  const auto grid = get_numbers(cfg, "beta_grid", {0.39});
  const auto tree = PartitionTree::build(map, n);
  // Parse once to validate and record defaults; round-trip inputs depend on
  // beta and are rebuilt per grid point.
  json vcfg = cfg;
  parse_input(cfg, map, grid.front(), tree);
  auto family = [&](double b) {
    json local = vcfg;
    return parse_input(local, map, b, tree);
  };
  const auto r = beta_sweep(map, tree, family, grid, c);
  std::string csv = "beta,sigma2,stderr\n";
  json points = json::array();
  for (const auto& p : r.points) {
    csv += num(p.beta) + "," + num(p.sigma2) + "," + num(p.stderr_) + "\n";
    points.push_back({{"beta", p.beta},
                      {"sigma2", p.sigma2},
                      {"stderr", p.stderr_},
                      {"near_zero", p.near_zero}});
  }
  json intervals = json::array();
  for (const auto& [lo, hi] : r.zero_intervals) intervals.push_back({lo, hi});
  out.add("sweep.csv", csv);
  out.summary = {{"points", points},
                 {"zero_intervals", intervals},
                 {"all_near_zero", r.all_near_zero},
                 {"none_near_zero", r.none_near_zero},
                 {"max_second_difference", r.max_second_difference}};
  out.add_json("sweep.json", out.summary);
}

void cmd_spectrum(json& cfg, Output& out) {
  const auto map = parse_map(cfg);
  const int n = get_depth(cfg, 12);
  const auto grid = get_numbers(cfg, "beta_grid", {0.0, 0.39});
  const double h = get_number(cfg, "h", 1e-3);
  const auto tree = PartitionTree::build(map, n + 1);
  json points = json::array();
  for (double b : grid) {
    const auto e = leading_eig(map, tree, n, 1.0 + b);
    points.push_back({{"beta", b}, {"lambda", e.lambda}, {"gap_estimate", e.gap_ratio}});
  }
  const auto pc = pressure_derivative_check(map, tree, n, h);
  const auto rho = invariant_density(map, tree, n);
  std::string csv = "cell,rho\n";
  for (std::size_t i = 0; i < rho.rho.size(); ++i) {
    csv += std::to_string(i) + "," + num(rho.rho[i]) + "\n";
  }
  out.add("density.csv", csv);
  out.summary = {{"level", n},
                 {"points", points},
                 {"pressure_check",
                  {{"h", h},
                   {"difference_quotient", pc.difference_quotient},
                   {"lyapunov", pc.lyapunov},
                   {"error", pc.error},
                   {"tolerance", pc.tolerance},
                   {"passed", pc.passed}}},
                 {"density_iterations", rho.iterations},
                 {"slow_mixing", rho.slow_mixing}};
  out.add_json("spectrum.json", out.summary);
}

void cmd_oracle(json& cfg, Output& out) {
  const auto which = get_string(cfg, "oracle", "weierstrass");
  const int n = get_depth(cfg, 17);
  const double tol = get_number(cfg, "tol", 1e-9);
  const auto points = get_int(cfg, "points", 10000);
  const int terms = static_cast<int>(get_int(cfg, "terms", 60));
  if (points < 1) throw ValidationError("'points' must be positive");
  const auto map = CircleMap::linear();
  const auto tree = PartitionTree::build(map, n);
  std::function<double(double)> oracle;
  FunctionInput v = FunctionInput::takagi_tent();
  double beta = 1.0;
  if (which == "weierstrass") {
    const double a = get_number(cfg, "a", 0.7);
    if (!(a > 0.5 && a < 1.0)) throw ValidationError("'a' must lie in (0.5, 1)");
    beta = -std::log2(a);
    v = FunctionInput::weierstrass_rhs(a);
    oracle = [a, terms](double x) { return weierstrass_series(a, 2.0, x, terms); };
  } else if (which == "takagi") {
    v = v.scaled(-2.0);
    oracle = [terms](double x) { return takagi_series(x, terms); };
  } else {
    throw ValidationError("oracle must be weierstrass or takagi");
  }
  const auto sol = solve_twisted(map, tree, v, beta, n, {SolveMethod::series, tol});
  std::vector<double> err(static_cast<std::size_t>(points));
  parallel_for(err.size(), [&](std::size_t i) {
    const double x = static_cast<double>(i) / static_cast<double>(points);
    err[i] = std::abs(sol.eval(x) - oracle(x));
  });
  double sup = 0.0;
  for (double e : err) sup = std::max(sup, e);
  out.summary = {{"oracle", which}, {"beta", beta}, {"sup_error", sup},
                 {"residual_sup", sol.residual_sup}};
  out.add_json("oracle.json", out.summary);
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  return j;
}

void write_files(const std::filesystem::path& dir, const Output& out) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> staged;
  try {
    for (const auto& [name, content] : out.files) {
      staged.push_back(dir / (name + ".partial"));
      std::ofstream f(staged.back(), std::ios::binary | std::ios::trunc);
      f << content;
      f.close();
      if (!f) throw std::runtime_error("cannot write " + staged.back().string());
    }
  } catch (...) {
    for (const auto& p : staged) std::filesystem::remove(p);
    throw;
  }
  for (std::size_t i = 0; i < staged.size(); ++i) {
    std::filesystem::rename(staged[i], dir / out.files[i].first);
  }
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& msg) {
  json e = {{"error", kind}, {"message", msg}, {"exit_code", code}};
  err << e.dump() << "\n";
  return code;
}

}  // namespace

std::string version() { return TWISTLAB_VERSION; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"twistlab: twisted cohomological equations over expanding circle maps"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir = "out";
  std::int64_t seed = -1;
  unsigned threads = std::max(1U, std::thread::hardware_concurrency());
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Random seed (overrides the config)")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1U, 1024U));

  std::string config_path;
  std::string oracle_name;
  double oracle_a = std::nan("");
  int oracle_depth = -1;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, _] : kAllowedKeys) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config");
    subs[name] = sub;
  }
  subs["oracle-check"]->add_option("oracle", oracle_name, "weierstrass or takagi");
  subs["oracle-check"]->add_option("--a", oracle_a, "Weierstrass amplitude a");
  subs["oracle-check"]->add_option("--depth", oracle_depth, "Partition depth");

  std::vector<std::string> argv_store{"twistlab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return fail(err, kExitValidation, "ValidationError", e.what());
  }

  std::string name;
  for (const auto& [n, sub] : subs) {
    if (sub->parsed()) name = n;
  }
  try {
    set_thread_count(threads);
    json cfg = load_config(config_path);
    check_keys(cfg, kAllowedKeys.at(name), "config");
    if (seed >= 0 && name == "clt") cfg["seed"] = seed;
    if (name == "oracle-check") {
      if (!oracle_name.empty()) cfg["oracle"] = oracle_name;
      if (!std::isnan(oracle_a)) cfg["a"] = oracle_a;
      if (oracle_depth > 0) cfg["depth"] = oracle_depth;
    }
    Output result;
    static const std::map<std::string, void (*)(json&, Output&)> handlers = {
        {"partition", cmd_partition}, {"solve", cmd_solve},
        {"analyze", cmd_analyze},     {"fracderiv", cmd_fracderiv},
        {"clt", cmd_clt},             {"variance", cmd_variance},
        {"classify", cmd_classify},   {"sweep-beta", cmd_sweep},
        {"spectrum", cmd_spectrum},   {"oracle-check", cmd_oracle}};
    handlers.at(name)(cfg, result);
    // Every JSON report carries the resolved config and the version.
    for (auto& [file, content] : result.files) {
      if (file.ends_with(".json")) {
        json report = {{"subcommand", name}, {"version", version()}, {"config", cfg},
                       {"result", json::parse(content)}};
        content = report.dump(2) + "\n";
      }
    }
    write_files(out_dir, result);
    json summary = {{"subcommand", name}, {"result", result.summary}};
    if (name == "oracle-check") {
      out << "sup_error=" << num(result.summary["sup_error"].get<double>()) << "\n";
    }
    out << summary.dump() << "\n";
    return kExitOk;
  } catch (const ValidationError& e) {
    return fail(err, kExitValidation, e.kind(), e.what());
  } catch (const NumericalError& e) {
    return fail(err, kExitNumerical, e.kind(), e.what());
  } catch (const json::exception& e) {
    return fail(err, kExitValidation, "ValidationError", e.what());
  } catch (const std::exception& e) {
    return fail(err, kExitNumerical, "Error", e.what());
  }
}

}  // namespace twistlab::cli
