#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "twistlab/circle_map.hpp"
#include "twistlab/haar.hpp"
#include "twistlab/partition.hpp"

namespace twistlab {

/// Ulam discretization of L_s psi(x) = sum_{F y = x} psi(y) g(y)^{-s} on
/// functions that are constant on level-n cells.
///
/// Row Q has two entries, one per inverse branch: the preimage R_j of Q is a
/// level-(n+1) cell and the entry (1/|Q|) int_{R_j} g^{1-s} dm sits in the
/// column of the level-n cell containing R_j.
class TransferOperator {
 public:
  static constexpr int kDenseMaxLevel = 14;

  TransferOperator(const CircleMap& map,
                   std::shared_ptr<const PartitionTree> tree, int level,
                   double s);

  int level() const noexcept { return level_; }
  double exponent() const noexcept { return s_; }
  std::uint64_t size() const noexcept { return weight_[0].size(); }
  const PartitionTree& tree() const noexcept { return *tree_; }

  /// Branch-j entry of row q and the level-(n+1) preimage cell it reads.
  double weight(std::uint64_t q, int branch) const {
    return weight_[branch][q];
  }
  std::uint64_t preimage(std::uint64_t q, int branch) const {
    return PartitionTree::preimage_index(level_, q, branch);
  }

  std::vector<double> apply(std::span<const double> x) const;
  /// Input constant on level-(n+1) cells, output on level-n cells.
  std::vector<double> apply_fine(std::span<const double> x) const;
  std::vector<double> apply_transpose(std::span<const double> y) const;
  /// Row-major 2^n x 2^n matrix; only for n <= kDenseMaxLevel.
  std::vector<double> dense() const;

 private:
  std::shared_ptr<const PartitionTree> tree_;
  int level_;
  double s_;
  std::vector<double> weight_[2];
};

struct DensityResult {
  /// Cell values of the invariant density, sum rho_P |P| = 1.
  std::vector<double> rho;
  int iterations = 0;
  double last_change = 0.0;
  /// More than 10^4 iterations were needed.
  bool slow_mixing = false;
};

DensityResult invariant_density(const CircleMap& map,
                                std::shared_ptr<const PartitionTree> tree,
                                int level);

struct EigenResult {
  double lambda = 0.0;
  /// Positive eigenvector, normalized so sum v_P |P| = 1.
  std::vector<double> vector;
  /// Modulus ratio of the next eigenvalue (deflated power iteration).
  double gap_ratio = 0.0;
  int iterations = 0;
};

/// Leading eigenpair of L_s. Throws GapTooSmall when the deflated estimate
/// reaches 0.95 lambda.
EigenResult leading_eig(const CircleMap& map,
                        std::shared_ptr<const PartitionTree> tree, int level,
                        double s);

struct PressureCheck {
  /// -(ln lambda(1+h) - ln lambda(1-h)) / 2h
  double difference_quotient = 0.0;
  /// sum_P rho_P int_P ln g dm
  double lyapunov = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

PressureCheck pressure_derivative_check(
    const CircleMap& map, std::shared_ptr<const PartitionTree> tree, int level,
    double h);

/// int (v / g^beta) rho_{1+beta} dm with int rho_{1+beta} dm = 1. Real beta.
Complex obstruction(const CircleMap& map,
                    std::shared_ptr<const PartitionTree> tree, int level,
                    const FunctionInput& v, Complex beta);

/// C_k = int phi (psi o F^k) rho dm - int phi rho dm int psi rho dm for
/// k = 0..kmax, with rho the level-n invariant density. Needs tree depth
/// >= level + 1.
std::vector<double> correlations(const CircleMap& map,
                                 std::shared_ptr<const PartitionTree> tree,
                                 int level,
                                 const std::function<double(double)>& phi,
                                 const std::function<double(double)>& psi,
                                 int kmax);

}  // namespace twistlab
