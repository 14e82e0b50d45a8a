#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "twistlab/circle_map.hpp"
#include "twistlab/haar.hpp"

namespace twistlab {

enum class SolveMethod { iteration, series };

std::string to_string(SolveMethod method);

struct SolveOptions {
  SolveMethod method = SolveMethod::series;
  double tol = 1e-9;
  /// Maximum number of series terms (and of fixed-point sweeps).
  int series_cap = 2000;
};

/// Bounded solution alpha of v = alpha o F - g^beta alpha at depth n.
struct TwistedSolution {
  CircleMap map;
  Complex beta;
  int depth = 0;
  SolveMethod method = SolveMethod::series;
  double tol = 0.0;
  /// Level-n cell averages m(alpha, P).
  std::vector<Complex> averages;
  HaarSeries series;
  /// D^beta alpha, the distributional Livsic solution seen at depth n.
  HaarSeries derivative;
  /// alpha at the left endpoints of the level-n cells (for Haar input: the
  /// cell averages).
  std::vector<Complex> nodal;
  double residual_sup = 0.0;
  /// Number of series terms (series) or fixed-point sweeps (iteration).
  int terms = 0;
  double tail_bound = 0.0;
  /// Contraction factor lambda_min^{-Re beta}.
  double rate = 0.0;
  /// Pointwise alpha on [0,1); piecewise constant for Haar input.
  std::function<Complex(double)> eval;

  bool is_real() const { return beta.imag() == 0.0; }
};

/// Solves the twisted cohomological equation. The tree must have depth >=
/// `depth` (>= depth + 1 for Haar-coefficient input). Throws Divergence when
/// Re beta <= 0 and ToleranceNotReached when the term cap is too small.
TwistedSolution solve_twisted(const CircleMap& map,
                              std::shared_ptr<const PartitionTree> tree,
                              const FunctionInput& v, Complex beta, int depth,
                              const SolveOptions& options = {});

/// v := alpha* o F - g^beta alpha* for a known alpha* (period 1).
FunctionInput round_trip_input(const CircleMap& map,
                               std::function<double(double)> alpha_star,
                               double beta);

/// psi_k(x) = sum_{j<k} d_{P_j(x)} |P_j(x)|^{-beta} phi_{P_j(x)}(x).
Complex martingale_psi(const TwistedSolution& solution, double x, int k);
/// [psi_0(x), ..., psi_n(x)]
std::vector<Complex> martingale_trace(const TwistedSolution& solution,
                                      double x);

struct PhiValue {
  double value = 0.0;
  /// |value_k - value_{k-1}|, a proxy for the truncation error.
  double increment = 0.0;
  bool converged = false;
  int level = 0;
};

/// phi_v(x) ~ psi_k(F x) - psi_{k+1}(x). Needs a real beta and k <= n - 1.
PhiValue phi_v(const TwistedSolution& solution, double x, int k,
               double tol = 1e-3);

/// The same quantity on every level-(k+1) cell (it is constant there).
std::vector<double> phi_v_cells(const TwistedSolution& solution, int k);

double birkhoff_sum(const CircleMap& map,
                    const std::function<double(double)>& phi, double x, int k);

/// Haar coefficients of psi o F, one level deeper than psi (the tree must
/// reach depth series.depth() + 1). Exact for piecewise-constant psi.
HaarSeries koopman_coeffs(const HaarSeries& series);

struct ChainRemainder {
  /// D^beta(psi o F) - (D^beta psi) o F g^beta at depth n + 1.
  HaarSeries remainder;
  double max_coefficient = 0.0;
  std::optional<RegularityEstimate> regularity;
};

ChainRemainder chain_remainder(const CircleMap& map, const HaarSeries& series,
                               Complex beta);

}  // namespace twistlab
