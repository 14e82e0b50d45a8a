#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twistlab/cohomology.hpp"
#include "twistlab/transfer.hpp"

namespace twistlab {

/// The normalized operator T f = L_1(rho f) / rho at a working level W.
/// Observables live on level-(W+1) cells, rho and T-images on level-W cells.
class VarianceContext {
 public:
  VarianceContext(const CircleMap& map, std::shared_ptr<const PartitionTree> tree,
                  int level);

  int level() const noexcept { return level_; }
  const std::vector<double>& density() const noexcept { return rho_; }
  const PartitionTree& tree() const noexcept { return *tree_; }

  /// Level-(W+1) cell averages of a rule.
  std::vector<double> discretize(const std::function<double(double)>& phi) const;
  /// phi minus its rho-weighted mean.
  std::vector<double> center(std::vector<double> phi) const;
  /// int f h rho dm for level-(W+1) f, h.
  double inner(const std::vector<double>& f, const std::vector<double>& h) const;
  /// T on a level-(W+1) observable.
  std::vector<double> transfer_fine(const std::vector<double>& f) const;
  /// T on a level-W function.
  std::vector<double> transfer(const std::vector<double>& f) const;
  /// Level-W function seen on level-(W+1) cells: f o F (shift) or f (refine).
  std::vector<double> compose_shift(const std::vector<double>& f) const;
  std::vector<double> refine(const std::vector<double>& f) const;

 private:
  std::shared_ptr<const PartitionTree> tree_;
  int level_;
  std::vector<double> rho_;
  std::vector<double> fine_mass_;  // |R| rho_{parent R}
  std::vector<double> coarse_mass_;  // |Q| rho_Q
};

enum class VarianceMethod { green_kubo, martingale_mc };
std::string to_string(VarianceMethod method);

struct VarianceEstimate {
  VarianceMethod method = VarianceMethod::green_kubo;
  double value = 0.0;
  double stderr_ = 0.0;
  /// Green-Kubo: C_0..C_kmax. Martingale: sup |T^k phi| for k = 1..K.
  std::vector<double> diagnostics;
  /// Martingale only: h = phi - (w o F - w) on level-(W+1) cells.
  std::vector<double> h;
};

/// sigma^2 = C_0 + 2 sum_{k=1}^{kmax} C_k. Throws TailNotDecaying when
/// |C_kmax| > 1e-3 C_0.
VarianceEstimate sigma2_green_kubo(const VarianceContext& ctx,
                                   std::vector<double> phi, int kmax = 40);
/// sigma^2 = |h|^2 in L^2(rho m) with w = sum_{k=1}^{K} T^k phi.
VarianceEstimate sigma2_martingale(const VarianceContext& ctx,
                                   std::vector<double> phi, int K = 60);

double ks_statistic(std::vector<double> samples, double variance);

struct CltResult {
  int n = 0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double variance = 0.0;
  /// Sample variance of psi_k / sqrt(k) for k = 1..n.
  std::vector<double> variance_by_level;
  /// max |psi_k - psi_{k-1}| over the sample, k = 1..n.
  std::vector<double> max_increment;
  std::vector<double> bin_edges;
  std::vector<std::uint64_t> counts;
  double ks = 0.0;
};

CltResult clt_histogram(const TwistedSolution& solution, int n,
                        std::uint64_t samples, std::uint64_t seed,
                        int bins = 50);

struct LevelMinimum {
  int level = 0;
  double value = 0.0;
};

/// Per level k: min over level-k cells of osc(alpha on the cell) / |P|^beta,
/// with the oscillation taken over the level-n averages inside the cell.
std::vector<LevelMinimum> anti_holder_check(const TwistedSolution& solution,
                                            double beta, int first_level,
                                            int last_level);
/// The same from level-n averages given directly.
std::vector<LevelMinimum> oscillation_minima(const std::vector<double>& averages,
                                             const PartitionTree& tree,
                                             double beta, int first_level,
                                             int last_level);
/// Per level k: min over level-k cells of |c_beta(alpha, P)|.
std::vector<LevelMinimum> coefficient_minima(const TwistedSolution& solution,
                                             double beta, int first_level,
                                             int last_level);

struct ClassifyConfig {
  int depth = 14;
  double tol = 1e-9;
  SolveMethod method = SolveMethod::series;
  int kmax = 40;
  int neumann_terms = 60;
  int first_level = 6;
  /// The oscillation test stops at level n - 1 - margin, so every cell holds
  /// at least 2^margin level-n averages.
  int oscillation_margin = 5;
  double sigma_floor = 1e-3;
  double stderr_factor = 3.0;
  double irregular_factor = 10.0;
  double decay_factor = 4.0;
  double band_factor = 2.0;
  /// Theorem range: the dichotomy statements need beta < gamma.
  double gamma = 1.0;
};

enum class Verdict { regular, irregular, inconclusive };
std::string to_string(Verdict verdict);

struct DichotomyReport {
  double beta = 0.0;
  VarianceEstimate green_kubo;
  VarianceEstimate martingale;
  std::vector<LevelMinimum> coefficient_minima;
  std::vector<LevelMinimum> oscillation_minima;
  double coefficient_decay = 0.0;
  double oscillation_band = 0.0;
  Verdict verdict = Verdict::inconclusive;
  bool out_of_theorem_range = false;
  double residual_sup = 0.0;
  ClassifyConfig config;
};

/// phi_v on level-n cells for a solution of depth n (needs n >= 2).
std::vector<double> phi_v_observable(const TwistedSolution& solution);

DichotomyReport dichotomy_classify(const CircleMap& map,
                                   std::shared_ptr<const PartitionTree> tree,
                                   const FunctionInput& v, Complex beta,
                                   const ClassifyConfig& config = {});

struct SweepPoint {
  double beta = 0.0;
  double sigma2 = 0.0;
  double stderr_ = 0.0;
  bool near_zero = false;
};

struct SweepReport {
  std::vector<SweepPoint> points;
  /// [beta_i, beta_{i+1}] grid intervals touching a near-zero point.
  std::vector<std::pair<double, double>> zero_intervals;
  double max_second_difference = 0.0;
  bool all_near_zero = false;
  bool none_near_zero = false;
};

/// sigma^2 of phi_v along a beta grid; `family` gives v for each beta.
SweepReport beta_sweep(const CircleMap& map,
                       std::shared_ptr<const PartitionTree> tree,
                       const std::function<FunctionInput(double)>& family,
                       const std::vector<double>& grid,
                       const ClassifyConfig& config = {});

}  // namespace twistlab
