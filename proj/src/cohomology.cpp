#include "twistlab/cohomology.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "twistlab/errors.hpp"
#include "twistlab/fracderiv.hpp"
#include "twistlab/parallel.hpp"
#include "twistlab/quadrature.hpp"

namespace twistlab {
namespace {

double wrap(double y, int period) {
  double r = y - period * std::floor(y / period);
  if (r >= period) r = 0.0;
  return r;
}

// Pointwise machinery for rule-based inputs. S is double for real beta and
// Complex otherwise.
template <class S>
struct PointKernel {
  std::shared_ptr<const CircleMap> map;
  std::shared_ptr<const FunctionInput> v;
  S beta;
  int period;

  S inverse_weight(double y) const {
    return std::exp(-beta * std::log(map->deriv(y)));
  }
  double rhs(double y) const { return (*v)(y); }
  double advance(double y) const { return wrap(map->lift(y), period); }

  // -sum_{k=0}^{K} v(F^k x) / g_{k+1}(x)^beta, compositions on the lift.
  S series(double x, int terms) const {
    S acc{};
    S w{1.0};
    double y = x;
    for (int k = 0; k <= terms; ++k) {
      w *= inverse_weight(y);
      acc -= rhs(y) * w;
      y = advance(y);
    }
    return acc;
  }
};

int terms_for(double sup_v, double rate, double tol, int cap, double* tail) {
  // Truncating after K terms leaves a tail below sup|v| rate^{K+2} / (1 - rate)
  // and a residual below sup|v| rate^{K+1}.
  auto tail_of = [&](int k) {
    return sup_v * std::pow(rate, k + 2) / (1.0 - rate);
  };
  auto bound_of = [&](int k) {
    return std::max(tail_of(k), sup_v * std::pow(rate, k + 1));
  };
  int k = 0;
  while (bound_of(k) >= tol) {
    if (++k > cap) {
      throw ToleranceNotReached(
          "series would need more than " + std::to_string(cap) +
              " terms; achievable bound " + std::to_string(bound_of(cap)),
          bound_of(cap));
    }
  }
  *tail = tail_of(k);
  return k;
}

template <class S>
Complex as_complex(S s) {
  return Complex(s);
}

// Gauss-Legendre rule moved to [0,1].
struct UnitRule {
  std::vector<double> x;
  std::vector<double> w;
};

template <unsigned N>
UnitRule unit_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  UnitRule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.5);
      r.w.push_back(0.5 * w[i]);
      continue;
    }
    r.x.push_back(0.5 * (1.0 - a[i]));
    r.w.push_back(0.5 * w[i]);
    r.x.push_back(0.5 * (1.0 + a[i]));
    r.w.push_back(0.5 * w[i]);
  }
  return r;
}

// Orthonormal Legendre polynomials of [a, b] at x.
void legendre(double x, double a, double b, int count, double* out) {
  const double t = 2.0 * (x - a) / (b - a) - 1.0;
  double p0 = 1.0;
  double p1 = t;
  for (int k = 0; k < count; ++k) {
    double pk;
    if (k == 0) {
      pk = p0;
    } else if (k == 1) {
      pk = p1;
    } else {
      pk = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    out[k] = std::sqrt((2 * k + 1) / (b - a)) * pk;
  }
}

int moment_degree(int level) {
  if (level <= 3) return 40;
  if (level <= 7) return 28;
  return 8;
}

// Level-n averages of alpha from Legendre moments on every cell of every
// sheet. On a level-k cell P with image FP,
//   int_P alpha e_j = int_P g^{-beta} (alpha(F x) - v(x)) e_j(x) dx,
// and alpha on FP is replaced by its projection onto the parent moments.
// The root moments solve a small closed linear system.
template <class S>
std::vector<Complex> moment_averages(const CircleMap& map,
                                     const PartitionTree& tree,
                                     const FunctionInput& v, S beta, int n) {
  using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  static const UnitRule coarse = unit_rule<60>();
  static const UnitRule middle = unit_rule<40>();
  static const UnitRule fine = unit_rule<30>();
  const int p = v.period();
  auto inv_weight = [&](double x) -> S {
    return std::exp(-beta * std::log(map.deriv(x)));
  };

  const int J0 = moment_degree(0);
  const int size = p * J0;
  Matrix C = Matrix::Zero(size, size);
  Vector V = Vector::Zero(size);
  std::vector<double> ej(J0), ei(J0);
  for (int s = 0; s < p; ++s) {
    for (int b = 0; b < 2; ++b) {
      const double a = tree.left(1, b);
      const double h = tree.right(1, b) - a;
      const int target = (2 * s + b) % p;
      for (std::size_t q = 0; q < coarse.x.size(); ++q) {
        const double x = a + h * coarse.x[q];
        const S gw = coarse.w[q] * h * inv_weight(x);
        legendre(x, 0.0, 1.0, J0, ej.data());
        legendre(map.lift(x) - b, 0.0, 1.0, J0, ei.data());
        const double vx = v(x + s);
        for (int j = 0; j < J0; ++j) {
          const S gj = gw * ej[j];
          V(s * J0 + j) += gj * vx;
          for (int i = 0; i < J0; ++i) C(s * J0 + j, target * J0 + i) += gj * ei[i];
        }
      }
    }
  }
  const Matrix A = Matrix::Identity(size, size) - C;
  const Vector root = A.partialPivLu().solve(-V);
  std::vector<S> prev(root.data(), root.data() + size);
  if (n == 0) return {as_complex(prev[0])};

  int prev_deg = J0;
  for (int k = 1; k <= n; ++k) {
    const int deg = k == n ? 1 : moment_degree(k);
    const UnitRule& rule = k <= 4 ? coarse : (k <= 8 ? middle : fine);
    const std::uint64_t cells = PartitionTree::cell_count(k);
    const std::uint64_t half = cells / 2;
    std::vector<S> cur(static_cast<std::size_t>(p) * cells * deg);
    parallel_for(static_cast<std::size_t>(p) * cells, [&](std::size_t id) {
      const int s = static_cast<int>(id / cells);
      const std::uint64_t i = id % cells;
      const int b = static_cast<int>(i >> (k - 1));
      const std::uint64_t parent = i & (half - 1);
      const int target = (2 * s + b) % p;
      const S* mp = &prev[(target * half + parent) * prev_deg];
      const double a = tree.left(k, i);
      const double h = tree.right(k, i) - a;
      const double pa = tree.left(k - 1, parent);
      const double pb = tree.right(k - 1, parent);
      double e_child[48];
      double e_parent[48];
      S* out = &cur[id * deg];
      for (std::size_t q = 0; q < rule.x.size(); ++q) {
        const double x = a + h * rule.x[q];
        legendre(x, a, a + h, deg, e_child);
        legendre(map.lift(x) - b, pa, pb, prev_deg, e_parent);
        S proj{};
        for (int m = 0; m < prev_deg; ++m) proj += mp[m] * e_parent[m];
        const S f = rule.w[q] * h * inv_weight(x) * (proj - v(x + s));
        for (int j = 0; j < deg; ++j) out[j] += f * e_child[j];
      }
    });
    prev = std::move(cur);
    prev_deg = deg;
  }
  const std::uint64_t cells = PartitionTree::cell_count(n);
  std::vector<Complex> averages(cells);
  for (std::uint64_t i = 0; i < cells; ++i) {
    averages[i] = as_complex(prev[i]) / std::sqrt(tree.length(n, i));
  }
  return averages;
}

// Rule-based input: nodal values, residual, averages and evaluator.
template <class S>
void solve_pointwise(TwistedSolution& sol,
                     std::shared_ptr<const PartitionTree> tree_ptr,
                     const FunctionInput& v, S beta,
                     const SolveOptions& opt) {
  const PartitionTree& tree = *tree_ptr;
  const int n = sol.depth;
  const int period = v.period();
  const double rate = sol.rate;
  PointKernel<S> kernel{std::make_shared<const CircleMap>(sol.map),
                        std::make_shared<const FunctionInput>(v), beta, period};
  const std::uint64_t cells = PartitionTree::cell_count(n);
  const std::vector<double> left = tree.endpoints(n);

  double tail = 0.0;
  const int K = terms_for(v.sup_bound(), rate, opt.tol, opt.series_cap, &tail);

  std::function<S(double)> evaluate;
  if (opt.method == SolveMethod::series) {
    evaluate = [kernel, K](double x) { return kernel.series(x, K); };
    std::vector<S> nodal(cells);
    std::vector<double> resid(cells);
    parallel_for(cells, [&](std::size_t i) {
      const double x = left[i];
      const S a = kernel.series(x, K);
      const S a_next = kernel.series(kernel.advance(x), K);
      nodal[i] = a;
      resid[i] = std::abs(v(x) - (a_next - a / kernel.inverse_weight(x)));
    });
    sol.nodal.assign(nodal.begin(), nodal.end());
    sol.residual_sup = *std::max_element(resid.begin(), resid.end());
    sol.terms = K;
    sol.tail_bound = tail;
  } else {
    // Fixed-point sweeps alpha <- (alpha o F - v) / g^beta on the left
    // endpoints of every sheet. This set is closed under F, so the image of a
    // node is found combinatorially.
    const std::uint64_t nodes = cells * static_cast<std::uint64_t>(period);
    const std::uint64_t half = cells / 2;
    std::vector<std::uint64_t> next(nodes);
    std::vector<double> vx(nodes);
    std::vector<S> winv(nodes);
    for (std::uint64_t j = 0; j < nodes; ++j) {
      const std::uint64_t i = j % cells;
      const std::uint64_t branch = i >= half ? 1 : 0;
      const std::uint64_t target = 2 * (i % half);
      next[j] = period == 2 ? branch * cells + target : target;
      const double x = left[i] + static_cast<double>(j / cells);
      vx[j] = v(x);
      winv[j] = kernel.inverse_weight(x);
    }
    std::vector<S> cur(nodes, S{});
    std::vector<S> nxt(nodes);
    double change = 0.0;
    int sweeps = 0;
    const double stop = 0.5 * opt.tol * (1.0 - rate) / rate;
    while (true) {
      change = 0.0;
      for (std::uint64_t j = 0; j < nodes; ++j) {
        nxt[j] = (cur[next[j]] - vx[j]) * winv[j];
        change = std::max(change, std::abs(nxt[j] - cur[j]));
      }
      std::swap(cur, nxt);
      ++sweeps;
      if (change <= stop) break;
      if (sweeps >= opt.series_cap) {
        throw ToleranceNotReached("fixed-point iteration hit the sweep cap",
                                  change * rate / (1.0 - rate));
      }
    }
    double resid = 0.0;
    for (std::uint64_t j = 0; j < nodes; ++j) {
      resid = std::max(resid, std::abs(vx[j] - (cur[next[j]] - cur[j] / winv[j])));
    }
    sol.residual_sup = resid;
    sol.terms = sweeps;
    sol.tail_bound = change * rate / (1.0 - rate);
    sol.nodal.assign(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(cells));

    // Off the node set: unroll K steps, then interpolate the table. The
    // interpolation error is bounded by 2 sup|alpha|, damped by rate^K.
    double sup_alpha = 0.0;
    for (const auto& a : cur) sup_alpha = std::max(sup_alpha, std::abs(a));
    int unroll = 0;
    while (2.0 * sup_alpha * std::pow(rate, unroll + 1) >= 0.5 * opt.tol &&
           unroll < opt.series_cap) {
      ++unroll;
    }
    auto table = std::make_shared<std::vector<S>>(std::move(cur));
    auto ends = std::make_shared<std::vector<double>>(left);
    ends->push_back(1.0);
    auto tp = tree_ptr;
    evaluate = [kernel, table, ends, tp, unroll, n, cells, period](double x) {
      S acc{};
      S w{1.0};
      double y = x;
      for (int k = 0; k < unroll; ++k) {
        w *= kernel.inverse_weight(y);
        acc -= kernel.rhs(y) * w;
        y = kernel.advance(y);
      }
      const double frac = y - std::floor(y);
      const std::uint64_t sheet =
          period == 2 ? static_cast<std::uint64_t>(y >= 1.0) : 0;
      const std::uint64_t i = tp->locate(frac, n);
      const double a = (*ends)[i];
      const double b = (*ends)[i + 1];
      const std::uint64_t j0 = sheet * cells + i;
      // The right endpoint of the last cell wraps to the next sheet's 0.
      std::uint64_t j1 = j0 + 1;
      if (i + 1 == cells) j1 = period == 2 ? (1 - sheet) * cells : 0;
      const double t = (frac - a) / (b - a);
      const S value = (1.0 - t) * (*table)[j0] + t * (*table)[j1];
      return acc + w * value;
    };
  }

  sol.averages = moment_averages(sol.map, tree, v, beta, n);
  sol.eval = [evaluate](double x) { return as_complex(evaluate(x)); };
}

// Haar-coefficient input: work on level-n averages with the Markov shift.
void solve_haar(TwistedSolution& sol,
                std::shared_ptr<const PartitionTree> tree_ptr,
                const FunctionInput& v, const SolveOptions& opt) {
  const PartitionTree& tree = *tree_ptr;
  const int n = sol.depth;
  if (tree.depth() < n + 1) {
    throw ValidationError("Haar input needs a tree one level deeper than depth");
  }
  const std::uint64_t cells = PartitionTree::cell_count(n);
  const auto vbar = cell_averages(v, tree, n);
  std::vector<Complex> gbar(cells);
  const Complex beta = sol.beta;
  const CircleMap& map = sol.map;
  parallel_for(cells, [&](std::size_t i) {
    const double a = tree.left(n, i);
    const double b = tree.right(n, i);
    gbar[i] = GaussLegendre5::integrate(
                  [&](double x) { return std::exp(beta * std::log(map.deriv(x))); },
                  a, b) /
              (b - a);
  });
  // (S A)_Q = (|Q0| A[F Q0] + |Q1| A[F Q1]) / |Q|: the average of A o F over
  // Q, exact for A piecewise constant on P^n.
  std::vector<double> w0(cells), w1(cells);
  std::vector<std::uint64_t> c0(cells), c1(cells);
  for (std::uint64_t q = 0; q < cells; ++q) {
    const double len = tree.length(n, q);
    w0[q] = tree.length(n + 1, 2 * q) / len;
    w1[q] = tree.length(n + 1, 2 * q + 1) / len;
    c0[q] = PartitionTree::image_index(n + 1, 2 * q);
    c1[q] = PartitionTree::image_index(n + 1, 2 * q + 1);
  }
  auto shift = [&](const std::vector<Complex>& a) {
    std::vector<Complex> out(cells);
    for (std::uint64_t q = 0; q < cells; ++q) {
      out[q] = w0[q] * a[c0[q]] + w1[q] * a[c1[q]];
    }
    return out;
  };

  const double rate = sol.rate;
  std::vector<Complex> alpha(cells);
  if (opt.method == SolveMethod::series) {
    double tail = 0.0;
    const int K = terms_for(v.sup_bound(), rate, opt.tol, opt.series_cap, &tail);
    std::vector<Complex> term(cells);
    for (std::uint64_t q = 0; q < cells; ++q) term[q] = -vbar[q] / gbar[q];
    alpha = term;
    for (int k = 1; k <= K; ++k) {
      term = shift(term);
      for (std::uint64_t q = 0; q < cells; ++q) {
        term[q] /= gbar[q];
        alpha[q] += term[q];
      }
    }
    sol.terms = K;
    sol.tail_bound = tail;
  } else {
    const double stop = 0.5 * opt.tol * (1.0 - rate) / rate;
    int sweeps = 0;
    double change = 0.0;
    while (true) {
      const auto sa = shift(alpha);
      change = 0.0;
      for (std::uint64_t q = 0; q < cells; ++q) {
        const Complex nv = (sa[q] - vbar[q]) / gbar[q];
        change = std::max(change, std::abs(nv - alpha[q]));
        alpha[q] = nv;
      }
      ++sweeps;
      if (change <= stop) break;
      if (sweeps >= opt.series_cap) {
        throw ToleranceNotReached("fixed-point iteration hit the sweep cap",
                                  change * rate / (1.0 - rate));
      }
    }
    sol.terms = sweeps;
    sol.tail_bound = change * rate / (1.0 - rate);
  }
  const auto sa = shift(alpha);
  double resid = 0.0;
  for (std::uint64_t q = 0; q < cells; ++q) {
    resid = std::max(resid, std::abs(vbar[q] - (sa[q] - gbar[q] * alpha[q])));
  }
  sol.residual_sup = resid;
  sol.averages = alpha;
  sol.nodal = alpha;
  auto table = std::make_shared<std::vector<Complex>>(std::move(alpha));
  auto tp = tree_ptr;
  sol.eval = [table, tp, n](double x) { return (*table)[tp->locate(x, n)]; };
}

}  // namespace

std::string to_string(SolveMethod method) {
  return method == SolveMethod::series ? "series" : "iteration";
}

TwistedSolution solve_twisted(const CircleMap& map,
                              std::shared_ptr<const PartitionTree> tree,
                              const FunctionInput& v, Complex beta, int depth,
                              const SolveOptions& options) {
  if (!(beta.real() > 0.0)) {
    throw Divergence("the twisted equation needs Re beta > 0");
  }
  if (!tree || depth < 1 || depth > tree->depth()) {
    throw ValidationError("solve depth must lie in [1, tree depth]");
  }
  if (!(options.tol > 0.0)) throw ValidationError("tolerance must be positive");

  TwistedSolution sol{map,   beta, depth, options.method, options.tol,
                      {},    HaarSeries(tree, depth), HaarSeries(tree, depth),
                      {},    0.0,  0,     0.0,            0.0,
                      {}};
  sol.rate = std::pow(map.lambda_min(), -beta.real());

  if (v.kind() == FunctionInput::Kind::haar_coeffs) {
    solve_haar(sol, tree, v, options);
  } else if (beta.imag() == 0.0) {
    solve_pointwise<double>(sol, tree, v, beta.real(), options);
  } else {
    solve_pointwise<Complex>(sol, tree, v, beta, options);
  }
  if (!(sol.residual_sup <= options.tol)) {
    throw ToleranceNotReached("residual certificate above tolerance",
                              sol.residual_sup);
  }
  sol.series = analyze(std::span<const Complex>(sol.averages), tree);
  sol.derivative = frac_deriv(sol.series, beta);
  return sol;
}

FunctionInput round_trip_input(const CircleMap& map,
                               std::function<double(double)> alpha_star,
                               double beta) {
  auto rule = [map, a = std::move(alpha_star), beta](double x) {
    return a(map.eval(x)) - std::pow(map.deriv(x), beta) * a(x);
  };
  return FunctionInput::pointwise(rule);
}

Complex martingale_psi(const TwistedSolution& solution, double x, int k) {
  if (k < 0 || k > solution.depth) {
    throw ValidationError("martingale level exceeds the solution depth");
  }
  return martingale_trace(solution, x)[static_cast<std::size_t>(k)];
}

std::vector<Complex> martingale_trace(const TwistedSolution& solution,
                                      double x) {
  return partial_sums(solution.derivative, x);
}

PhiValue phi_v(const TwistedSolution& solution, double x, int k, double tol) {
  if (!solution.is_real()) {
    throw ValidationError("phi_v needs a real beta");
  }
  if (k < 1 || k > solution.depth - 1) {
    throw ValidationError("phi_v level must lie in [1, depth - 1]");
  }
  const auto at_x = partial_sums(solution.derivative, x);
  const auto at_fx = partial_sums(solution.derivative, solution.map.eval(x));
  auto value = [&](int j) {
    return (at_fx[static_cast<std::size_t>(j)] -
            at_x[static_cast<std::size_t>(j) + 1])
        .real();
  };
  PhiValue out;
  out.level = k;
  out.value = value(k);
  out.increment = std::fabs(out.value - value(k - 1));
  out.converged = out.increment <= 10.0 * tol;
  return out;
}

std::vector<double> phi_v_cells(const TwistedSolution& solution, int k) {
  if (!solution.is_real()) {
    throw ValidationError("phi_v needs a real beta");
  }
  if (k < 0 || k > solution.depth - 1) {
    throw ValidationError("phi_v level must lie in [0, depth - 1]");
  }
  const auto coarse = synthesize(solution.derivative, k);
  const auto fine = synthesize(solution.derivative, k + 1);
  std::vector<double> out(fine.size());
  for (std::uint64_t r = 0; r < fine.size(); ++r) {
    out[r] = (coarse[PartitionTree::image_index(k + 1, r)] - fine[r]).real();
  }
  return out;
}

double birkhoff_sum(const CircleMap& map,
                    const std::function<double(double)>& phi, double x,
                    int k) {
  double acc = 0.0;
  double y = x - std::floor(x);
  for (int j = 0; j < k; ++j) {
    acc += phi(y);
    y = map.eval(y);
  }
  return acc;
}

HaarSeries koopman_coeffs(const HaarSeries& series) {
  const PartitionTree& tree = series.tree();
  const int n = series.depth();
  if (tree.depth() < n + 1) {
    throw ValidationError("koopman_coeffs needs a tree one level deeper");
  }
  HaarSeries out(series.tree_ptr(), n + 1);
  out.set_mean(series.mean());
  // phi_P o F = sum_j C_P^j phi_{P^j} + E_P^j 1_{P^j}/|P^j| over the two
  // preimages P^j. The indicator parts are collected as masses and expanded
  // in one bottom-up pass.
  std::vector<std::vector<Complex>> mass(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    mass[static_cast<std::size_t>(k)].assign(PartitionTree::cell_count(k), Complex{});
  }
  for (int k = 0; k < n; ++k) {
    const auto d = series.level_coeffs(k);
    for (std::uint64_t i = 0; i < d.size(); ++i) {
      if (d[i] == Complex{}) continue;
      const double p = tree.length(k, i);
      const double q1 = tree.length(k + 1, 2 * i);
      const double q2 = tree.length(k + 1, 2 * i + 1);
      for (int b = 0; b < 2; ++b) {
        const std::uint64_t pj = PartitionTree::preimage_index(k, i, b);
        const double pjl = tree.length(k + 1, pj);
        const double q1j = tree.length(k + 2, 2 * pj);
        const double q2j = tree.length(k + 2, 2 * pj + 1);
        const double c = p * q2j * q1j / (q1 * q2 * pjl);
        const double e = q1j / q1 - q2j / q2;
        out.coeff(k + 1, pj) += d[i] * c;
        mass[static_cast<std::size_t>(k) + 1][pj] += d[i] * e;
      }
    }
  }
  // A Dirac mass w on R contributes w |Q2|/|A| to every ancestor A with
  // R in its left child Q1, and -w |Q1|/|A| when R is in Q2.
  std::vector<Complex> below(PartitionTree::cell_count(n), Complex{});
  for (int k = n; k >= 1; --k) {
    auto& m = mass[static_cast<std::size_t>(k)];
    for (std::uint64_t i = 0; i < m.size(); ++i) below[i] += m[i];
    const std::uint64_t parents = PartitionTree::cell_count(k - 1);
    std::vector<Complex> up(parents);
    for (std::uint64_t a = 0; a < parents; ++a) {
      const double p = tree.length(k - 1, a);
      const double q1 = tree.length(k, 2 * a);
      const double q2 = tree.length(k, 2 * a + 1);
      const Complex m1 = below[2 * a];
      const Complex m2 = below[2 * a + 1];
      out.coeff(k - 1, a) += (m1 * q2 - m2 * q1) / p;
      up[a] = m1 + m2;
    }
    below = std::move(up);
    below.resize(PartitionTree::cell_count(n));
  }
  out.set_mean(out.mean() + below[0]);
  return out;
}

ChainRemainder chain_remainder(const CircleMap& map, const HaarSeries& series,
                               Complex beta) {
  const PartitionTree& tree = series.tree();
  const int n1 = series.depth() + 1;
  HaarSeries lhs = frac_deriv(koopman_coeffs(series), beta);
  const HaarSeries composed = koopman_coeffs(frac_deriv(series, beta));
  auto values = synthesize(composed);
  parallel_for(values.size(), [&](std::size_t i) {
    const double a = tree.left(n1, i);
    const double b = tree.right(n1, i);
    const Complex g = GaussLegendre5::integrate(
                          [&](double x) { return std::exp(beta * std::log(map.deriv(x))); },
                          a, b) /
                      (b - a);
    values[i] *= g;
  });
  const HaarSeries rhs = analyze(std::span<const Complex>(values), series.tree_ptr());
  lhs -= rhs;
  ChainRemainder out{lhs, 0.0, std::nullopt};
  for (const auto& c : out.remainder.coefficients()) {
    out.max_coefficient = std::max(out.max_coefficient, std::abs(c));
  }
  if (beta.imag() == 0.0 && n1 >= 8) {
    try {
      out.regularity = regularity_estimate(out.remainder);
    } catch (const DegenerateInput&) {
      out.regularity = std::nullopt;
    }
  }
  return out;
}

}  // namespace twistlab
