#include "twistlab/partition.hpp"

#include <algorithm>
#include <cmath>

#include "twistlab/errors.hpp"
#include "twistlab/parallel.hpp"

namespace twistlab {

std::string Cell::address() const {
  std::string s(static_cast<std::size_t>(level), '0');
  for (int i = 0; i < level; ++i) {
    if ((index >> (level - 1 - i)) & 1U) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

std::shared_ptr<const PartitionTree> PartitionTree::build(const CircleMap& map,
                                                          int depth) {
  if (depth < 1 || depth > kMaxDepth) {
    throw ValidationError("partition depth must lie in [1, 26], got " +
                          std::to_string(depth));
  }
  // Level k+1 endpoints are the two branch preimages of the level-k ones;
  // branch 0 fills [0, c) and branch 1 fills [c, 1), both in order.
  std::vector<double> level{0.0};
  for (int k = 0; k < depth; ++k) {
    const std::size_t n = level.size();
    std::vector<double> next(2 * n);
    parallel_for(2 * n, [&](std::size_t i) {
      const int branch = i < n ? 0 : 1;
      next[i] = map.inverse_branch(branch, level[i % n]);
    });
    level = std::move(next);
  }
  for (std::size_t i = 1; i < level.size(); ++i) {
    if (!(level[i] > level[i - 1])) {
      throw NonConvergence("partition endpoints are not strictly increasing");
    }
  }
  level.push_back(1.0);

  auto tree = std::shared_ptr<PartitionTree>(new PartitionTree());
  tree->depth_ = depth;
  tree->endpoints_ = std::move(level);
  return tree;
}

Cell PartitionTree::cell(int level, std::uint64_t index) const {
  return Cell{level, index, left(level, index), right(level, index)};
}

std::uint64_t PartitionTree::locate(double x, int level) const {
  double y = x - std::floor(x);
  if (y >= 1.0) y = 0.0;
  // Last endpoint <= y among the first 2^N entries.
  const auto end = endpoints_.end() - 1;
  auto it = std::upper_bound(endpoints_.begin(), end, y);
  const auto fine = static_cast<std::uint64_t>(it - endpoints_.begin()) - 1;
  return fine >> (depth_ - level);
}

Cell PartitionTree::cell_of(double x, int level) const {
  return cell(level, locate(x, level));
}

GridDistance PartitionTree::grid_metric(double x, double y) const {
  const std::uint64_t ix = locate(x, depth_);
  const std::uint64_t iy = locate(y, depth_);
  int common = depth_;
  const std::uint64_t diff = ix ^ iy;
  if (diff != 0) {
    int highest = 63 - __builtin_clzll(diff);
    common = depth_ - 1 - highest;
  }
  GridDistance d;
  d.level = common;
  d.value = length(common, ix >> (depth_ - common));
  d.depth_limited = (common == depth_);
  return d;
}

std::vector<double> PartitionTree::endpoints(int level) const {
  std::vector<double> out(cell_count(level));
  for (std::uint64_t i = 0; i < out.size(); ++i) out[i] = left(level, i);
  return out;
}

std::vector<double> PartitionTree::lengths(int level) const {
  std::vector<double> out(cell_count(level));
  for (std::uint64_t i = 0; i < out.size(); ++i) out[i] = length(level, i);
  return out;
}

}  // namespace twistlab
