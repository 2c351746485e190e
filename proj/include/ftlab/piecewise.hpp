#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ftlab/errors.hpp"

namespace ftlab {

enum class Domain { road, mass };

// Piecewise-constant function with exact breakpoints.  Cells follow the
// right-open convention [b_i, b_{i+1}); the function is zero outside the
// breakpoint span.  All distances and variations between two such functions
// are computed exactly over the merged breakpoint set, never by projecting
// onto a grid.
struct PiecewiseConstantFn {
  Domain domain = Domain::road;
  std::vector<double> breaks;  // size m+1, strictly ascending (empty = zero function)
  std::vector<double> values;  // size m

  PiecewiseConstantFn() = default;
  PiecewiseConstantFn(Domain d, std::vector<double> b, std::vector<double> v)
      : domain(d), breaks(std::move(b)), values(std::move(v)) {
    validate();
  }

  void validate() const {
    if (breaks.empty()) {
      if (!values.empty()) throw std::invalid_argument("piecewise-constant: values without breakpoints");
      return;
    }
    if (breaks.size() != values.size() + 1)
      throw std::invalid_argument("piecewise-constant: need one more breakpoint than values");
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
      if (!(breaks[i] < breaks[i + 1]))
        throw std::invalid_argument("piecewise-constant: breakpoints must strictly ascend");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("piecewise-constant: non-finite value");
  }

  bool empty() const { return values.empty(); }
  double x_min() const { return breaks.front(); }
  double x_max() const { return breaks.back(); }

  double value_at(double x) const {
    if (empty() || x < breaks.front() || x >= breaks.back()) return 0.0;
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
    return values[std::size_t(it - breaks.begin()) - 1];
  }

  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * (breaks[i + 1] - breaks[i]);
    return s;
  }

  // Total variation against the zero extension: both boundary jumps count.
  double total_variation() const {
    if (empty()) return 0.0;
    double tv = std::abs(values.front()) + std::abs(values.back());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) tv += std::abs(values[i + 1] - values[i]);
    return tv;
  }

  // Support of the non-zero cells, or nullopt for the zero function.
  std::optional<std::pair<double, double>> support() const {
    std::size_t lo = values.size(), hi = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] != 0.0) {
        lo = std::min(lo, i);
        hi = i;
      }
    if (lo == values.size()) return std::nullopt;
    return std::make_pair(breaks[lo], breaks[hi + 1]);
  }
};

// Piecewise-linear function that may carry jump discontinuities at its
// breakpoints: segment i runs linearly from seg_begin[i] at breaks[i]+ to
// seg_end[i] at breaks[i+1]-.  Constant extensions apply outside the span.
// Cumulative distributions (ext 0/1) and pseudo-inverses (jumps across
// vacuum) both fit this shape.  end_point_value records a function value at
// the right endpoint that differs from the left limit; it has measure zero
// and never enters an integral.
struct PiecewiseLinearFn {
  std::vector<double> breaks;     // size m+1 (m >= 0; a single break is a pure step)
  std::vector<double> seg_begin;  // size m
  std::vector<double> seg_end;    // size m
  double ext_left = 0.0;
  double ext_right = 0.0;
  std::optional<double> end_point_value;

  static PiecewiseLinearFn from_nodes(std::vector<double> b, const std::vector<double>& node_vals,
                                      double extl, double extr) {
    if (b.size() != node_vals.size() || b.size() < 2)
      throw std::invalid_argument("piecewise-linear: need matching breakpoints and node values");
    PiecewiseLinearFn f;
    f.breaks = std::move(b);
    f.seg_begin.assign(node_vals.begin(), node_vals.end() - 1);
    f.seg_end.assign(node_vals.begin() + 1, node_vals.end());
    f.ext_left = extl;
    f.ext_right = extr;
    f.validate();
    return f;
  }

  void validate() const {
    if (breaks.empty()) throw std::invalid_argument("piecewise-linear: no breakpoints");
    if (seg_begin.size() != breaks.size() - 1 || seg_end.size() != seg_begin.size())
      throw std::invalid_argument("piecewise-linear: inconsistent segment arrays");
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
      if (!(breaks[i] < breaks[i + 1]))
        throw std::invalid_argument("piecewise-linear: breakpoints must strictly ascend");
  }

  std::size_t segments() const { return seg_begin.size(); }
  double x_min() const { return breaks.front(); }
  double x_max() const { return breaks.back(); }

  // Right-continuous evaluation; at the last breakpoint the recorded
  // end-point value (if any) wins, else the right extension.
  double value(double x) const {
    if (x < breaks.front()) return ext_left;
    if (x >= breaks.back()) {
      if (x == breaks.back() && end_point_value) return *end_point_value;
      return ext_right;
    }
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
    const std::size_t i = std::size_t(it - breaks.begin()) - 1;
    const double w = (x - breaks[i]) / (breaks[i + 1] - breaks[i]);
    return seg_begin[i] + w * (seg_end[i] - seg_begin[i]);
  }

  // Left limit at x (for left-continuous reads of pseudo-inverses).
  double value_left(double x) const {
    if (x <= breaks.front()) return ext_left;
    if (x > breaks.back()) return ext_right;
    const auto it = std::lower_bound(breaks.begin(), breaks.end(), x);
    const std::size_t idx = std::size_t(it - breaks.begin());
    if (idx < breaks.size() && breaks[idx] == x) return seg_end[idx - 1];
    const std::size_t i = idx - 1;
    const double w = (x - breaks[i]) / (breaks[i + 1] - breaks[i]);
    return seg_begin[i] + w * (seg_end[i] - seg_begin[i]);
  }

  bool is_continuous(double tol = 0.0) const {
    for (std::size_t i = 0; i + 1 < segments(); ++i)
      if (std::abs(seg_end[i] - seg_begin[i + 1]) > tol) return false;
    return true;
  }

  bool is_non_decreasing(double tol = 0.0) const {
    double prev = ext_left;
    for (std::size_t i = 0; i < segments(); ++i) {
      if (seg_begin[i] < prev - tol || seg_end[i] < seg_begin[i] - tol) return false;
      prev = seg_end[i];
    }
    return !(ext_right < prev - tol);
  }

  double max_abs_slope() const {
    double s = 0.0;
    for (std::size_t i = 0; i < segments(); ++i)
      s = std::max(s, std::abs(seg_end[i] - seg_begin[i]) / (breaks[i + 1] - breaks[i]));
    return s;
  }
};

namespace detail {

inline std::vector<double> merged_breaks(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> m;
  m.reserve(a.size() + b.size());
  m.insert(m.end(), a.begin(), a.end());
  m.insert(m.end(), b.begin(), b.end());
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());
  return m;
}

// Integral of |h| on [0,w] for h linear with endpoint values hl, hr,
// splitting at the sign change so the result is exact.
inline double abs_linear_integral(double hl, double hr, double w) {
  if (hl == 0.0 && hr == 0.0) return 0.0;
  if ((hl >= 0.0 && hr >= 0.0) || (hl <= 0.0 && hr <= 0.0))
    return 0.5 * (std::abs(hl) + std::abs(hr)) * w;
  const double root = w * hl / (hl - hr);
  return 0.5 * (std::abs(hl) * root + std::abs(hr) * (w - root));
}

inline double sq_linear_integral(double hl, double hr, double w) {
  // integral of h^2 with h linear: w*(hl^2 + hl*hr + hr^2)/3
  return w * (hl * hl + hl * hr + hr * hr) / 3.0;
}

}  // namespace detail

// L^p distances between piecewise-constant functions, exact over the merged
// breakpoint set.  Requires matching domains.
inline double lp_distance(const PiecewiseConstantFn& a, const PiecewiseConstantFn& b, double p) {
  if (a.domain != b.domain)
    throw std::invalid_argument("lp_distance: functions live on different domains");
  if (p != 1.0 && p != 2.0 && !std::isinf(p))
    throw std::invalid_argument("lp_distance: p must be 1, 2 or inf");
  const auto m = detail::merged_breaks(a.breaks, b.breaks);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    const double mid = 0.5 * (m[i] + m[i + 1]);
    const double d = std::abs(a.value_at(mid) - b.value_at(mid));
    const double w = m[i + 1] - m[i];
    if (std::isinf(p))
      acc = std::max(acc, d);
    else if (p == 1.0)
      acc += d * w;
    else
      acc += d * d * w;
  }
  return p == 2.0 ? std::sqrt(acc) : acc;
}

inline double l1_distance(const PiecewiseConstantFn& a, const PiecewiseConstantFn& b) {
  return lp_distance(a, b, 1.0);
}

// Exact integral of |f-g| for two piecewise-linear functions (jumps allowed),
// over the union of their spans; outside, the constant extensions must agree
// or the integral would diverge.
inline double l1_distance(const PiecewiseLinearFn& f, const PiecewiseLinearFn& g) {
  const auto m = detail::merged_breaks(f.breaks, g.breaks);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    const double x0 = m[i], x1 = m[i + 1];
    const double w = x1 - x0;
    // endpoint values from inside the cell (right limit at x0, left at x1)
    const double fl = f.value(x0), gl = g.value(x0);
    const double fr = f.value_left(x1), gr = g.value_left(x1);
    acc += detail::abs_linear_integral(fl - gl, fr - gr, w);
  }
  return acc;
}

// integral of |f| over the real line (compact support assumed: ext 0).
inline double l1_norm(const PiecewiseLinearFn& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.segments(); ++i)
    acc += detail::abs_linear_integral(f.seg_begin[i], f.seg_end[i], f.breaks[i + 1] - f.breaks[i]);
  return acc;
}

inline double sup_norm(const PiecewiseLinearFn& f) {
  double s = std::max(std::abs(f.ext_left), std::abs(f.ext_right));
  for (std::size_t i = 0; i < f.segments(); ++i)
    s = std::max({s, std::abs(f.seg_begin[i]), std::abs(f.seg_end[i])});
  return s;
}

// Cumulative distribution F(x) = integral of the density up to x, as a
// continuous piecewise-linear function whose slopes are exactly the cell
// values.  Requires unit total mass.
inline PiecewiseLinearFn cumulative(const PiecewiseConstantFn& density, double mass_tol = 1e-9) {
  density.validate();
  if (density.empty()) throw std::invalid_argument("cumulative: empty density");
  std::vector<double> nodes(density.breaks.size());
  nodes[0] = 0.0;
  for (std::size_t i = 0; i < density.values.size(); ++i)
    nodes[i + 1] = nodes[i] + density.values[i] * (density.breaks[i + 1] - density.breaks[i]);
  if (std::abs(nodes.back() - 1.0) > mass_tol)
    throw std::invalid_argument("cumulative: total mass is " + std::to_string(nodes.back()) +
                                ", expected 1");
  nodes.back() = 1.0;
  return PiecewiseLinearFn::from_nodes(density.breaks, nodes, 0.0, 1.0);
}

// Pseudo-inverse X(z) = inf{x : F(x) >= z} of a non-decreasing cumulative
// with range [0,1].  Rising pieces invert to linear segments, jumps of F
// become flat segments of X, and flat stretches of F surface as jump
// discontinuities of X (vacuum).  X(0) is the left edge of the support.
inline PiecewiseLinearFn pseudo_inverse(const PiecewiseLinearFn& F) {
  if (!F.is_non_decreasing(1e-12))
    throw std::invalid_argument("pseudo_inverse: cumulative must be non-decreasing");
  if (std::abs(F.ext_left) > 1e-9 || std::abs(F.ext_right - 1.0) > 1e-9)
    throw std::invalid_argument("pseudo_inverse: cumulative must run from 0 to 1");

  PiecewiseLinearFn X;
  double level = 0.0;
  auto emit = [&X](double z0, double z1, double x0, double x1) {
    if (!(z1 > z0)) return;
    if (X.breaks.empty()) X.breaks.push_back(z0);
    X.breaks.push_back(z1);
    X.seg_begin.push_back(x0);
    X.seg_end.push_back(x1);
  };
  for (std::size_t i = 0; i < F.segments(); ++i) {
    const double b0 = F.seg_begin[i];
    if (b0 > level) emit(level, b0, F.breaks[i], F.breaks[i]);  // jump of F at breaks[i]
    level = std::max(level, b0);
    const double e0 = F.seg_end[i];
    if (e0 > level) emit(level, e0, F.breaks[i], F.breaks[i + 1]);  // rising piece
    level = std::max(level, e0);
  }
  if (F.ext_right > level)  // terminal jump (e.g. last atom of an empirical measure)
    emit(level, F.ext_right, F.breaks.back(), F.breaks.back());
  if (X.breaks.empty()) throw std::invalid_argument("pseudo_inverse: cumulative never rises");
  X.breaks.front() = 0.0;
  X.breaks.back() = 1.0;
  X.ext_left = X.seg_begin.front();
  X.ext_right = X.seg_end.back();
  return X;
}

// Uniform empirical measure: atoms with equal masses summing to 1.
struct AtomicMeasure {
  std::vector<double> positions;  // strictly ascending
  std::vector<double> masses;     // each 1/N

  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<double> pos)
      : positions(std::move(pos)), masses(positions.size(), positions.empty() ? 0.0 : 1.0 / double(positions.size())) {
    for (std::size_t i = 0; i + 1 < positions.size(); ++i)
      if (!(positions[i] < positions[i + 1]))
        throw std::invalid_argument("atomic measure: positions must strictly ascend");
  }

  std::size_t count() const { return positions.size(); }
  double total_mass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
  }
};

// Right-continuous step cumulative of an empirical measure: a jump of 1/N at
// each atom.
inline PiecewiseLinearFn cumulative(const AtomicMeasure& mu, double mass_tol = 1e-9) {
  if (mu.count() == 0) throw std::invalid_argument("cumulative: empty measure");
  if (std::abs(mu.total_mass() - 1.0) > mass_tol)
    throw std::invalid_argument("cumulative: empirical measure mass != 1");
  PiecewiseLinearFn F;
  F.breaks = mu.positions;
  const std::size_t n = mu.count();
  double level = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    level += mu.masses[j];
    F.seg_begin.push_back(level);
    F.seg_end.push_back(level);
  }
  F.ext_left = 0.0;
  F.ext_right = 1.0;
  return F;
}

}  // namespace ftlab
