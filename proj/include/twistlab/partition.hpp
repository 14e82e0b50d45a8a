#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "twistlab/circle_map.hpp"

namespace twistlab {

/// A cell of the level-k Markov partition. Cells are half-open [a, b).
///
/// Cell `index` at level k has the k-bit address given by the binary digits of
/// index, most significant first. Child 0 (append-0) is the left child, and F
/// maps the cell w_1 w_2 ... w_k onto w_2 ... w_k.
struct Cell {
  int level = 0;
  std::uint64_t index = 0;
  double a = 0.0;
  double b = 1.0;

  double length() const { return b - a; }
  std::string address() const;
};

struct GridDistance {
  double value = 1.0;
  /// Level of the smallest cell containing both points.
  int level = 0;
  /// True when both points share a level-N cell, so the true distance is only
  /// bounded above by `value`.
  bool depth_limited = false;
};

/// Nested Markov partitions P^0, ..., P^N generated by preimages of the fixed
/// point 0.
///
/// Only the level-N endpoints are stored: the level-k endpoints are every
/// 2^{N-k}-th entry of that array.
class PartitionTree {
 public:
  static constexpr int kMaxDepth = 26;

  static std::shared_ptr<const PartitionTree> build(const CircleMap& map,
                                                    int depth);

  int depth() const noexcept { return depth_; }
  static std::uint64_t cell_count(int level) {
    return std::uint64_t{1} << level;
  }

  double left(int level, std::uint64_t index) const {
    return endpoints_[index << (depth_ - level)];
  }
  double right(int level, std::uint64_t index) const {
    return endpoints_[(index + 1) << (depth_ - level)];
  }
  double length(int level, std::uint64_t index) const {
    return right(level, index) - left(level, index);
  }
  Cell cell(int level, std::uint64_t index) const;

  /// Index of the level-k cell whose half-open interval contains x.
  std::uint64_t locate(double x, int level) const;
  Cell cell_of(double x, int level) const;

  GridDistance grid_metric(double x, double y) const;

  /// Level-k endpoints {a_0 = 0 < a_1 < ...}, without the closing 1.
  std::vector<double> endpoints(int level) const;
  /// All lengths of level-k cells.
  std::vector<double> lengths(int level) const;

  /// Index (at level k-1) of the image F(P) of a level-k cell.
  static std::uint64_t image_index(int level, std::uint64_t index) {
    return index & ((std::uint64_t{1} << (level - 1)) - 1);
  }
  /// Index (at level k+1) of the branch-j preimage of a level-k cell.
  static std::uint64_t preimage_index(int level, std::uint64_t index,
                                      int branch) {
    return (static_cast<std::uint64_t>(branch) << level) | index;
  }

 private:
  PartitionTree() = default;

  int depth_ = 0;
  // 2^N + 1 entries, last one is 1.0.
  std::vector<double> endpoints_;
};

}  // namespace twistlab
