#include "twistlab/haar.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "twistlab/errors.hpp"
#include "twistlab/parallel.hpp"
#include "twistlab/quadrature.hpp"

namespace twistlab {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int level_of_size(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) {
    throw ValidationError("averages must have a power-of-two length");
  }
  return static_cast<int>(std::countr_zero(n));
}

void require_compatible(const HaarSeries& a, const HaarSeries& b) {
  if (a.tree_ptr() != b.tree_ptr() || a.depth() != b.depth()) {
    throw ValidationError("Haar series live on different trees or depths");
  }
}

double tent(double x) {
  const double r = x - std::floor(x);
  return std::min(r, 1.0 - r);
}

// Integral of tent from 0 to x, for any real x.
double tent_antiderivative(double x) {
  const double k = std::floor(x);
  const double r = x - k;
  const double part = r <= 0.5 ? 0.5 * r * r : 0.25 - 0.5 * (1.0 - r) * (1.0 - r);
  return 0.25 * k + part;
}

}  // namespace

HaarSeries::HaarSeries(std::shared_ptr<const PartitionTree> tree, int depth)
    : tree_(std::move(tree)), depth_(depth) {
  if (!tree_) throw ValidationError("Haar series needs a partition tree");
  if (depth < 0 || depth > tree_->depth()) {
    throw ValidationError("Haar depth exceeds the partition depth");
  }
  coeffs_.assign((std::size_t{1} << depth) - 1, Complex{});
}

HaarSeries& HaarSeries::operator+=(const HaarSeries& other) {
  require_compatible(*this, other);
  mean_ += other.mean_;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

HaarSeries& HaarSeries::operator-=(const HaarSeries& other) {
  require_compatible(*this, other);
  mean_ -= other.mean_;
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

HaarSeries& HaarSeries::operator*=(Complex c) {
  mean_ *= c;
  for (auto& d : coeffs_) d *= c;
  return *this;
}

// ---------------------------------------------------------------------------
// FunctionInput

FunctionInput FunctionInput::pointwise(Rule rule, Rule antiderivative,
                                       int period, double sup_bound) {
  if (!rule) throw ValidationError("pointwise input needs a rule");
  if (period != 1 && period != 2) {
    throw ValidationError("pointwise input period must be 1 or 2");
  }
  FunctionInput in;
  in.kind_ = Kind::pointwise;
  in.rule_ = std::move(rule);
  in.antiderivative_ = std::move(antiderivative);
  in.period_ = period;
  if (sup_bound < 0.0) {
    // Dense sampling with a safety factor; only used for tail bounds.
    double m = 0.0;
    const int n = 1 << 14;
    for (int i = 0; i < n * period; ++i) {
      m = std::max(m, std::fabs(in.rule_((i + 0.5) / n)));
    }
    sup_bound = 1.05 * m;
  }
  if (!std::isfinite(sup_bound)) {
    throw ValidationError("pointwise input must be bounded");
  }
  in.sup_bound_ = sup_bound;
  return in;
}

FunctionInput FunctionInput::fourier(std::vector<double> cos_coeffs,
                                     std::vector<double> sin_coeffs) {
  double bound = 0.0;
  for (double c : cos_coeffs) bound += std::fabs(c);
  for (std::size_t j = 1; j < sin_coeffs.size(); ++j) {
    bound += std::fabs(sin_coeffs[j]);
  }
  auto rule = [c = cos_coeffs, s = sin_coeffs](double x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      acc += c[j] * std::cos(kTwoPi * static_cast<double>(j) * x);
    }
    for (std::size_t j = 1; j < s.size(); ++j) {
      acc += s[j] * std::sin(kTwoPi * static_cast<double>(j) * x);
    }
    return acc;
  };
  auto anti = [c = cos_coeffs, s = sin_coeffs](double x) {
    double acc = c.empty() ? 0.0 : c[0] * x;
    for (std::size_t j = 1; j < c.size(); ++j) {
      const double w = kTwoPi * static_cast<double>(j);
      acc += c[j] * std::sin(w * x) / w;
    }
    for (std::size_t j = 1; j < s.size(); ++j) {
      const double w = kTwoPi * static_cast<double>(j);
      acc -= s[j] * std::cos(w * x) / w;
    }
    return acc;
  };
  FunctionInput in = pointwise(std::move(rule), std::move(anti), 1, bound);
  in.kind_ = Kind::fourier;
  return in;
}

FunctionInput FunctionInput::haar(HaarSeries series) {
  FunctionInput in;
  in.kind_ = Kind::haar_coeffs;
  double bound = 0.0;
  for (const auto& v : synthesize(series)) bound = std::max(bound, std::abs(v));
  in.sup_bound_ = bound;
  in.series_ = std::move(series);
  return in;
}

FunctionInput FunctionInput::takagi_tent() {
  FunctionInput in = pointwise(tent, tent_antiderivative, 1, 0.5);
  in.kind_ = Kind::takagi_tent;
  return in;
}

FunctionInput FunctionInput::weierstrass_rhs(double a) {
  if (!(a > 0.0 && a < 1.0)) {
    throw ValidationError("weierstrass_rhs needs 0 < a < 1");
  }
  auto rule = [a](double x) { return -std::cos(kPi * x) / a; };
  auto anti = [a](double x) { return -std::sin(kPi * x) / (kPi * a); };
  FunctionInput in = pointwise(rule, anti, 2, 1.0 / a);
  in.kind_ = Kind::weierstrass_rhs;
  return in;
}

FunctionInput FunctionInput::scaled(double factor) const {
  FunctionInput out = *this;
  out.sup_bound_ = std::fabs(factor) * sup_bound_;
  if (rule_) {
    out.rule_ = [r = rule_, factor](double x) { return factor * r(x); };
  }
  if (antiderivative_) {
    out.antiderivative_ = [r = antiderivative_, factor](double x) {
      return factor * r(x);
    };
  }
  if (series_) *out.series_ *= factor;
  return out;
}

std::string FunctionInput::kind_name() const {
  switch (kind_) {
    case Kind::pointwise:
      return "pointwise";
    case Kind::fourier:
      return "fourier";
    case Kind::haar_coeffs:
      return "haar_coeffs";
    case Kind::takagi_tent:
      return "takagi_tent";
    case Kind::weierstrass_rhs:
      return "weierstrass_rhs";
  }
  return "unknown";
}

double FunctionInput::operator()(double x) const {
  if (rule_) return rule_(x);
  return point_eval(*series_, x).real();
}

std::vector<Complex> cell_averages(const FunctionInput& input,
                                   const PartitionTree& tree, int level) {
  if (level < 0 || level > tree.depth()) {
    throw ValidationError("cell_averages level exceeds the partition depth");
  }
  const std::uint64_t n = PartitionTree::cell_count(level);
  std::vector<Complex> out(n);
  if (const HaarSeries* s = input.series()) {
    // Exact projection of a piecewise-constant series.
    const int d = s->depth();
    const auto fine = synthesize(*s);
    if (level >= d) {
      for (std::uint64_t i = 0; i < n; ++i) out[i] = fine[i >> (level - d)];
    } else {
      const int shift = d - level;
      for (std::uint64_t i = 0; i < n; ++i) {
        Complex acc{};
        for (std::uint64_t j = i << shift; j < (i + 1) << shift; ++j) {
          acc += tree.length(d, j) * fine[j];
        }
        out[i] = acc / tree.length(level, i);
      }
    }
    return out;
  }
  const auto& anti = input.antiderivative();
  parallel_for(n, [&](std::size_t i) {
    const double a = tree.left(level, i);
    const double b = tree.right(level, i);
    if (anti) {
      out[i] = (anti(b) - anti(a)) / (b - a);
    } else {
      out[i] = GaussLegendre5::integrate(input, a, b) / (b - a);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Pyramid

HaarSeries analyze(std::span<const Complex> averages,
                   std::shared_ptr<const PartitionTree> tree) {
  const int n = level_of_size(averages.size());
  HaarSeries out(tree, n);
  std::vector<Complex> cur(averages.begin(), averages.end());
  for (int k = n - 1; k >= 0; --k) {
    const std::uint64_t cells = PartitionTree::cell_count(k);
    std::vector<Complex> parent(cells);
    auto d = out.level_coeffs(k);
    for (std::uint64_t i = 0; i < cells; ++i) {
      const double q1 = tree->length(k + 1, 2 * i);
      const double q2 = tree->length(k + 1, 2 * i + 1);
      const double p = tree->length(k, i);
      const Complex m1 = cur[2 * i];
      const Complex m2 = cur[2 * i + 1];
      const Complex m = (q1 * m1 + q2 * m2) / p;
      parent[i] = m;
      // Splitting the jump by the children's weights keeps both dual forms
      // q1 (m1 - m) and -q2 (m2 - m) equal to rounding.
      d[i] = (q1 * q2 / p) * (m1 - m2);
    }
    cur = std::move(parent);
  }
  out.set_mean(cur[0]);
  return out;
}

HaarSeries analyze(std::span<const double> averages,
                   std::shared_ptr<const PartitionTree> tree) {
  std::vector<Complex> c(averages.begin(), averages.end());
  return analyze(std::span<const Complex>(c), std::move(tree));
}

std::vector<Complex> synthesize(const HaarSeries& series) {
  return synthesize(series, series.depth());
}

std::vector<Complex> synthesize(const HaarSeries& series, int level) {
  if (level < 0 || level > series.depth()) {
    throw ValidationError("synthesize level exceeds the series depth");
  }
  const PartitionTree& tree = series.tree();
  std::vector<Complex> cur{series.mean()};
  for (int k = 0; k < level; ++k) {
    const std::uint64_t cells = PartitionTree::cell_count(k);
    std::vector<Complex> next(2 * cells);
    const auto d = series.level_coeffs(k);
    for (std::uint64_t i = 0; i < cells; ++i) {
      next[2 * i] = cur[i] + d[i] / tree.length(k + 1, 2 * i);
      next[2 * i + 1] = cur[i] - d[i] / tree.length(k + 1, 2 * i + 1);
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<Complex> partial_sums(const HaarSeries& series, double x) {
  const PartitionTree& tree = series.tree();
  const int n = series.depth();
  const std::uint64_t fine = tree.locate(x, n);
  std::vector<Complex> out(static_cast<std::size_t>(n) + 1);
  Complex acc = series.mean();
  out[0] = acc;
  for (int k = 0; k < n; ++k) {
    const std::uint64_t child = fine >> (n - k - 1);
    const std::uint64_t idx = child >> 1;
    const Complex d = series.coeff(k, idx);
    if ((child & 1U) == 0) {
      acc += d / tree.length(k + 1, child);
    } else {
      acc -= d / tree.length(k + 1, child);
    }
    out[static_cast<std::size_t>(k) + 1] = acc;
  }
  return out;
}

Complex point_eval(const HaarSeries& series, double x) {
  return partial_sums(series, x).back();
}

Complex pairing_coeff(const HaarSeries& series, int level,
                      std::uint64_t index, double s) {
  if (level < 0 || level >= series.depth()) {
    throw ValidationError("pairing_coeff needs a cell above the series depth");
  }
  const PartitionTree& tree = series.tree();
  const double q1 = tree.length(level + 1, 2 * index);
  const double q2 = tree.length(level + 1, 2 * index + 1);
  const double p = tree.length(level, index);
  return std::pow(p, -s) * series.coeff(level, index) * (1.0 / q1 + 1.0 / q2);
}

BesovNorm besov_norm(const HaarSeries& series, double s, BesovFlavor flavor) {
  const PartitionTree& tree = series.tree();
  BesovNorm out;
  out.profile.resize(static_cast<std::size_t>(series.depth()));
  const double exponent = flavor == BesovFlavor::inf_inf ? -(s + 1.0) : -s;
  double acc = 0.0;
  for (int k = 0; k < series.depth(); ++k) {
    const auto d = series.level_coeffs(k);
    std::vector<double> w(d.size());
    for (std::uint64_t i = 0; i < d.size(); ++i) {
      w[i] = std::abs(d[i]) * std::pow(tree.length(k, i), exponent);
    }
    double level_value;
    if (flavor == BesovFlavor::inf_inf) {
      level_value = *std::max_element(w.begin(), w.end());
      acc = std::max(acc, level_value);
    } else {
      level_value = pairwise_sum(w.data(), w.size());
      acc += level_value;
    }
    out.profile[static_cast<std::size_t>(k)] = level_value;
  }
  out.value = std::abs(series.mean()) + acc;
  return out;
}

RegularityEstimate regularity_estimate(const HaarSeries& series) {
  const int n = series.depth();
  if (n < 8) throw ValidationError("regularity_estimate needs depth >= 8");
  bool all_small = true;
  for (const auto& d : series.coefficients()) {
    if (std::abs(d) >= 1e-14) {
      all_small = false;
      break;
    }
  }
  if (all_small) {
    throw DegenerateInput("all wavelet coefficients vanish (constant input)");
  }
  const PartitionTree& tree = series.tree();
  RegularityEstimate est;
  est.first_level = 4;
  est.last_level = n - 1;
  std::vector<double> xs;
  std::vector<double> ys;
  for (int k = est.first_level; k <= est.last_level; ++k) {
    const auto d = series.level_coeffs(k);
    double sup = 0.0;
    for (std::uint64_t i = 0; i < d.size(); ++i) {
      sup = std::max(sup, std::abs(d[i]) / tree.length(k, i));
    }
    sup = std::max(sup, 1e-300);
    xs.push_back(-k * std::numbers::ln2);
    ys.push_back(std::log(sup));
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (my + slope * (xs[i] - mx));
    rss += r * r;
  }
  est.exponent = slope;
  est.residual_rms = std::sqrt(rss / m);
  est.stderr_ = m > 2 ? std::sqrt(rss / (m - 2) / sxx) : 0.0;
  est.log_sup = std::move(ys);
  return est;
}

HaarSeries dirac_expand(std::shared_ptr<const PartitionTree> tree, int level,
                        std::uint64_t index, int depth) {
  if (level > depth) throw ValidationError("dirac_expand needs level <= depth");
  HaarSeries out(tree, depth);
  out.set_mean(1.0);
  for (int j = 0; j < level; ++j) {
    const std::uint64_t anc = index >> (level - j);
    const bool left_child = ((index >> (level - j - 1)) & 1U) == 0;
    const double p = tree->length(j, anc);
    const double q1 = tree->length(j + 1, 2 * anc);
    const double q2 = tree->length(j + 1, 2 * anc + 1);
    out.coeff(j, anc) = left_child ? q2 / p : -q1 / p;
  }
  return out;
}

}  // namespace twistlab
