#include "twistlab/statistics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "twistlab/errors.hpp"
#include "twistlab/parallel.hpp"
#include "twistlab/quadrature.hpp"
#include "twistlab/random.hpp"

namespace twistlab {
namespace {

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

void require_real(Complex beta, const char* what) {
  if (beta.imag() != 0.0) {
    throw ValidationError(std::string(what) + " needs a real beta");
  }
}

double sample_mean(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size()) / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x, double mean) {
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - mean) * (x[i] - mean);
  return pairwise_sum(sq.data(), sq.size()) / static_cast<double>(x.size() - 1);
}

// Ratio of the last two entries, as a geometric decay rate below 0.9.
double decay_rate(const std::vector<double>& v) {
  if (v.size() < 2) return 0.9;
  const double a = std::fabs(v[v.size() - 2]);
  const double b = std::fabs(v.back());
  if (a == 0.0) return 0.0;
  return std::min(0.9, b / a);
}

}  // namespace

VarianceContext::VarianceContext(const CircleMap& map,
                                 std::shared_ptr<const PartitionTree> tree,
                                 int level)
    : tree_(std::move(tree)), level_(level) {
  rho_ = invariant_density(map, tree_, level).rho;
  const std::uint64_t n = PartitionTree::cell_count(level);
  coarse_mass_.resize(n);
  fine_mass_.resize(2 * n);
  for (std::uint64_t q = 0; q < n; ++q) coarse_mass_[q] = tree_->length(level, q) * rho_[q];
  for (std::uint64_t r = 0; r < 2 * n; ++r) {
    fine_mass_[r] = tree_->length(level + 1, r) * rho_[r >> 1];
  }
}

std::vector<double> VarianceContext::discretize(
    const std::function<double(double)>& phi) const {
  const int lev = level_ + 1;
  std::vector<double> out(PartitionTree::cell_count(lev));
  const PartitionTree& t = *tree_;
  parallel_for(out.size(), [&](std::size_t r) {
    const double a = t.left(lev, r);
    const double b = t.right(lev, r);
    out[r] = GaussLegendre5::integrate(phi, a, b) / (b - a);
  });
  return out;
}

std::vector<double> VarianceContext::center(std::vector<double> phi) const {
  const double mean = inner(phi, std::vector<double>(phi.size(), 1.0));
  for (auto& x : phi) x -= mean;
  return phi;
}

double VarianceContext::inner(const std::vector<double>& f,
                              const std::vector<double>& h) const {
  if (f.size() != fine_mass_.size() || h.size() != fine_mass_.size()) {
    throw ValidationError("observable must live on level W+1 cells");
  }
  std::vector<double> terms(f.size());
  for (std::size_t r = 0; r < f.size(); ++r) terms[r] = fine_mass_[r] * f[r] * h[r];
  return pairwise_sum(terms.data(), terms.size());
}

std::vector<double> VarianceContext::transfer_fine(
    const std::vector<double>& f) const {
  const std::uint64_t n = coarse_mass_.size();
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t q) {
    const std::uint64_t r0 = PartitionTree::preimage_index(level_, q, 0);
    const std::uint64_t r1 = PartitionTree::preimage_index(level_, q, 1);
    out[q] = (fine_mass_[r0] * f[r0] + fine_mass_[r1] * f[r1]) / coarse_mass_[q];
  });
  return out;
}

std::vector<double> VarianceContext::transfer(const std::vector<double>& f) const {
  const std::uint64_t n = coarse_mass_.size();
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t q) {
    const std::uint64_t r0 = PartitionTree::preimage_index(level_, q, 0);
    const std::uint64_t r1 = PartitionTree::preimage_index(level_, q, 1);
    out[q] = (fine_mass_[r0] * f[r0 >> 1] + fine_mass_[r1] * f[r1 >> 1]) /
             coarse_mass_[q];
  });
  return out;
}

std::vector<double> VarianceContext::compose_shift(
    const std::vector<double>& f) const {
  std::vector<double> out(fine_mass_.size());
  for (std::uint64_t r = 0; r < out.size(); ++r) {
    out[r] = f[PartitionTree::image_index(level_ + 1, r)];
  }
  return out;
}

std::vector<double> VarianceContext::refine(const std::vector<double>& f) const {
  std::vector<double> out(fine_mass_.size());
  for (std::uint64_t r = 0; r < out.size(); ++r) out[r] = f[r >> 1];
  return out;
}

std::string to_string(VarianceMethod method) {
  return method == VarianceMethod::green_kubo ? "green_kubo" : "martingale_mc";
}

VarianceEstimate sigma2_green_kubo(const VarianceContext& ctx,
                                   std::vector<double> phi, int kmax) {
  if (kmax < 1) throw ValidationError("kmax must be at least 1");
  phi = ctx.center(std::move(phi));
  VarianceEstimate out;
  out.method = VarianceMethod::green_kubo;
  const double c0 = ctx.inner(phi, phi);
  out.diagnostics.push_back(c0);
  if (c0 == 0.0) {
    out.diagnostics.resize(static_cast<std::size_t>(kmax) + 1, 0.0);
    return out;
  }
  auto u = ctx.transfer_fine(phi);
  for (int k = 1; k <= kmax; ++k) {
    if (k > 1) u = ctx.transfer(u);
    out.diagnostics.push_back(ctx.inner(phi, ctx.refine(u)));
  }
  const double last = std::fabs(out.diagnostics.back());
  if (last > 1e-3 * c0) {
    throw TailNotDecaying("correlations still at " + std::to_string(last / c0) +
                          " of C_0 after " + std::to_string(kmax) + " steps");
  }
  std::vector<double> terms(out.diagnostics);
  for (std::size_t k = 1; k < terms.size(); ++k) terms[k] *= 2.0;
  const double sum = pairwise_sum(terms.data(), terms.size());
  const double q = decay_rate(out.diagnostics);
  out.value = std::max(0.0, sum);
  out.stderr_ = 2.0 * last * q / (1.0 - q) +
                64.0 * std::numeric_limits<double>::epsilon() * c0;
  return out;
}

VarianceEstimate sigma2_martingale(const VarianceContext& ctx,
                                   std::vector<double> phi, int K) {
  if (K < 1) throw ValidationError("K must be at least 1");
  phi = ctx.center(std::move(phi));
  VarianceEstimate out;
  out.method = VarianceMethod::martingale_mc;
  const double scale = sup_abs(phi);
  auto u = ctx.transfer_fine(phi);
  std::vector<double> w = u;
  out.diagnostics.push_back(sup_abs(u));
  for (int k = 2; k <= K; ++k) {
    u = ctx.transfer(u);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += u[i];
    out.diagnostics.push_back(sup_abs(u));
  }
  const double last = out.diagnostics.back();
  if (scale > 0.0 && last > 1e-3 * scale) {
    throw TailNotDecaying("T^K phi still at " + std::to_string(last / scale) +
                          " of sup |phi| after " + std::to_string(K) + " steps");
  }
  const auto wf = ctx.compose_shift(w);
  out.h.resize(phi.size());
  for (std::size_t r = 0; r < phi.size(); ++r) out.h[r] = phi[r] - wf[r] + w[r >> 1];
  out.value = ctx.inner(out.h, out.h);
  const double q = decay_rate(out.diagnostics);
  const double tail = 2.0 * last * q / (1.0 - q);
  out.stderr_ = 2.0 * std::sqrt(out.value) * tail + tail * tail +
                64.0 * std::numeric_limits<double>::epsilon() * scale * scale;
  return out;
}

double ks_statistic(std::vector<double> samples, double variance) {
  if (samples.empty()) throw ValidationError("KS test needs a non-empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  const double sd = std::sqrt(std::max(variance, 0.0));
  auto cdf = [&](double x) {
    if (sd == 0.0) return x < 0.0 ? 0.0 : 1.0;
    return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0)));
  };
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

CltResult clt_histogram(const TwistedSolution& solution, int n,
                        std::uint64_t samples, std::uint64_t seed, int bins) {
  require_real(solution.beta, "clt_histogram");
  if (n < 1 || n > solution.depth) {
    throw ValidationError("CLT level must lie in [1, solution depth]");
  }
  if (samples < 2) throw ValidationError("CLT needs at least two samples");
  if (bins < 1) throw ValidationError("bins must be positive");
  const CounterRng rng(seed);
  const std::size_t levels = static_cast<std::size_t>(n);
  // values[k-1][i] = psi_k(x_i)
  std::vector<std::vector<double>> values(levels, std::vector<double>(samples));
  parallel_for(samples, [&](std::size_t i) {
    const auto ps = partial_sums(solution.derivative, rng.uniform(i));
    for (std::size_t k = 1; k <= levels; ++k) values[k - 1][i] = ps[k].real();
  });

  CltResult out;
  out.n = n;
  out.samples = samples;
  out.seed = seed;
  for (std::size_t k = 1; k <= levels; ++k) {
    std::vector<double> scaled(values[k - 1]);
    const double root = std::sqrt(static_cast<double>(k));
    for (auto& x : scaled) x /= root;
    out.variance_by_level.push_back(sample_variance(scaled, sample_mean(scaled)));
    double inc = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double prev = k == 1 ? 0.0 : values[k - 2][i];
      inc = std::max(inc, std::fabs(values[k - 1][i] - prev));
    }
    out.max_increment.push_back(inc);
  }
  std::vector<double> final_values(values[levels - 1]);
  const double root = std::sqrt(static_cast<double>(n));
  for (auto& x : final_values) x /= root;
  out.mean = sample_mean(final_values);
  out.variance = sample_variance(final_values, out.mean);

  const auto [lo_it, hi_it] = std::minmax_element(final_values.begin(), final_values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  out.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    out.bin_edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
  }
  out.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double x : final_values) {
    auto b = static_cast<std::int64_t>((x - lo) / (hi - lo) * bins);
    b = std::clamp<std::int64_t>(b, 0, bins - 1);
    ++out.counts[static_cast<std::size_t>(b)];
  }
  out.ks = ks_statistic(std::move(final_values), out.variance);
  return out;
}

std::vector<LevelMinimum> oscillation_minima(const std::vector<double>& averages,
                                             const PartitionTree& tree,
                                             double beta, int first_level,
                                             int last_level) {
  const int n = std::bit_width(averages.size()) - 1;
  if (averages.empty() || PartitionTree::cell_count(n) != averages.size() ||
      n > tree.depth()) {
    throw ValidationError("averages must fill one tree level");
  }
  first_level = std::max(first_level, 0);
  last_level = std::min(last_level, n);
  std::vector<double> lo(averages), hi(averages);
  std::vector<LevelMinimum> out;
  for (int k = n; k >= first_level; --k) {
    if (k < n) {
      std::vector<double> l2(lo.size() / 2), h2(hi.size() / 2);
      for (std::size_t i = 0; i < l2.size(); ++i) {
        l2[i] = std::min(lo[2 * i], lo[2 * i + 1]);
        h2[i] = std::max(hi[2 * i], hi[2 * i + 1]);
      }
      lo = std::move(l2);
      hi = std::move(h2);
    }
    if (k > last_level) continue;
    double m = std::numeric_limits<double>::infinity();
    for (std::uint64_t p = 0; p < lo.size(); ++p) {
      m = std::min(m, (hi[p] - lo[p]) * std::pow(tree.length(k, p), -beta));
    }
    out.push_back({k, m});
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<LevelMinimum> anti_holder_check(const TwistedSolution& solution,
                                            double beta, int first_level,
                                            int last_level) {
  require_real(solution.beta, "anti_holder_check");
  std::vector<double> avg(solution.averages.size());
  for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = solution.averages[i].real();
  return oscillation_minima(avg, solution.series.tree(), beta, first_level,
                            last_level);
}

std::vector<LevelMinimum> coefficient_minima(const TwistedSolution& solution,
                                             double beta, int first_level,
                                             int last_level) {
  require_real(solution.beta, "coefficient_minima");
  first_level = std::max(first_level, 0);
  last_level = std::min(last_level, solution.depth - 1);
  std::vector<LevelMinimum> out;
  for (int k = first_level; k <= last_level; ++k) {
    double m = std::numeric_limits<double>::infinity();
    for (std::uint64_t p = 0; p < PartitionTree::cell_count(k); ++p) {
      m = std::min(m, std::abs(pairing_coeff(solution.series, k, p, beta)));
    }
    out.push_back({k, m});
  }
  return out;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::regular:
      return "regular";
    case Verdict::irregular:
      return "irregular";
    default:
      return "inconclusive";
  }
}

std::vector<double> phi_v_observable(const TwistedSolution& solution) {
  if (solution.depth < 2) throw ValidationError("phi_v needs depth >= 2");
  return phi_v_cells(solution, solution.depth - 1);
}

DichotomyReport dichotomy_classify(const CircleMap& map,
                                   std::shared_ptr<const PartitionTree> tree,
                                   const FunctionInput& v, Complex beta,
                                   const ClassifyConfig& config) {
  require_real(beta, "dichotomy_classify");
  const double b = beta.real();
  if (!(b > 0.0 && b <= config.gamma)) {
    throw ValidationError("dichotomy_classify needs 0 < beta <= gamma");
  }
  const int n = config.depth;
  if (n < config.first_level + config.oscillation_margin + 2) {
    throw ValidationError(
        "classification depth must reach first_level + oscillation_margin + 2");
  }
  DichotomyReport report;
  report.beta = b;
  report.config = config;
  report.out_of_theorem_range = b >= config.gamma;

  const auto sol = solve_twisted(map, tree, v, beta, n, {config.method, config.tol});
  report.residual_sup = sol.residual_sup;
  const auto phi = phi_v_observable(sol);
  const VarianceContext ctx(map, tree, n - 1);
  bool estimated = true;
  try {
    report.green_kubo = sigma2_green_kubo(ctx, phi, config.kmax);
    report.martingale = sigma2_martingale(ctx, phi, config.neumann_terms);
  } catch (const TailNotDecaying&) {
    estimated = false;
  }
  report.coefficient_minima = coefficient_minima(sol, b, config.first_level, n - 1);
  report.oscillation_minima = anti_holder_check(
      sol, b, config.first_level, n - 1 - config.oscillation_margin);

  const auto& cm = report.coefficient_minima;
  report.coefficient_decay = cm.back().value > 0.0
                                 ? cm.front().value / cm.back().value
                                 : std::numeric_limits<double>::infinity();
  double omin = std::numeric_limits<double>::infinity();
  double omax = 0.0;
  for (const auto& m : report.oscillation_minima) {
    omin = std::min(omin, m.value);
    omax = std::max(omax, m.value);
  }
  report.oscillation_band =
      omin > 0.0 ? omax / omin : std::numeric_limits<double>::infinity();

  if (estimated) {
    auto threshold = [&](const VarianceEstimate& e) {
      return std::max(config.sigma_floor, config.stderr_factor * e.stderr_);
    };
    const auto& gk = report.green_kubo;
    const auto& mg = report.martingale;
    const bool small = gk.value < threshold(gk) && mg.value < threshold(mg);
    const bool large = gk.value > config.irregular_factor * threshold(gk) &&
                       mg.value > config.irregular_factor * threshold(mg);
    if (small && report.coefficient_decay >= config.decay_factor) {
      report.verdict = Verdict::regular;
    } else if (large && report.oscillation_band <= config.band_factor) {
      report.verdict = Verdict::irregular;
    }
  }
  return report;
}

SweepReport beta_sweep(const CircleMap& map,
                       std::shared_ptr<const PartitionTree> tree,
                       const std::function<FunctionInput(double)>& family,
                       const std::vector<double>& grid,
                       const ClassifyConfig& config) {
  if (grid.empty()) throw ValidationError("beta grid is empty");
  for (double b : grid) {
    if (!(b > 0.0 && b < 0.95)) throw ValidationError("beta grid must lie in (0, 0.95)");
  }
  const int n = config.depth;
  const VarianceContext ctx(map, tree, n - 1);
  SweepReport out;
  for (double b : grid) {
    const auto sol =
        solve_twisted(map, tree, family(b), b, n, {config.method, config.tol});
    const auto est = sigma2_green_kubo(ctx, phi_v_observable(sol), config.kmax);
    SweepPoint p;
    p.beta = b;
    p.sigma2 = est.value;
    p.stderr_ = est.stderr_;
    p.near_zero =
        est.value <= std::max(config.sigma_floor, config.stderr_factor * est.stderr_);
    out.points.push_back(p);
  }
  const auto& pts = out.points;
  out.all_near_zero = std::all_of(pts.begin(), pts.end(), [](auto& p) { return p.near_zero; });
  out.none_near_zero = std::none_of(pts.begin(), pts.end(), [](auto& p) { return p.near_zero; });
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pts[i].near_zero) continue;
    const double lo = pts[i > 0 ? i - 1 : 0].beta;
    const double hi = pts[std::min(i + 1, pts.size() - 1)].beta;
    if (!out.zero_intervals.empty() && out.zero_intervals.back().second >= lo) {
      out.zero_intervals.back().second = hi;
    } else {
      out.zero_intervals.emplace_back(lo, hi);
    }
  }
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    out.max_second_difference =
        std::max(out.max_second_difference,
                 std::fabs(pts[i + 1].sigma2 - 2.0 * pts[i].sigma2 + pts[i - 1].sigma2));
  }
  return out;
}

}  // namespace twistlab
