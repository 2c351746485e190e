#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ftlab/density.hpp"
#include "ftlab/errors.hpp"
#include "ftlab/particle.hpp"
#include "ftlab/piecewise.hpp"
#include "ftlab/velocity.hpp"

namespace ftlab {

namespace detail {

inline void require_unit_mass(double mass, const char* who) {
  if (std::abs(mass - 1.0) > 1e-8)
    throw std::invalid_argument(std::string(who) + ": total mass " + std::to_string(mass) +
                                " != 1");
}

// W1 from a pair (cumulative, pseudo-inverse) of each measure, evaluated both
// as int |F_a - F_b| dx and int |X_a - X_b| dz.  The two routes are
// independent computations and must agree to 1e-10; the cumulative route is
// the returned value.
inline double w1_from_transforms(const PiecewiseLinearFn& Fa, const PiecewiseLinearFn& Fb) {
  const double via_cumulative = l1_distance(Fa, Fb);
  const double via_inverse = l1_distance(pseudo_inverse(Fa), pseudo_inverse(Fb));
  if (std::abs(via_cumulative - via_inverse) > 1e-10)
    throw NumericError("w1_distance: cumulative and pseudo-inverse routes disagree: " +
                       std::to_string(via_cumulative) + " vs " + std::to_string(via_inverse));
  return via_cumulative;
}

}  // namespace detail

inline double w1_distance(const PiecewiseConstantFn& a, const PiecewiseConstantFn& b) {
  detail::require_unit_mass(a.integral(), "w1_distance(a)");
  detail::require_unit_mass(b.integral(), "w1_distance(b)");
  return detail::w1_from_transforms(cumulative(a), cumulative(b));
}

inline double w1_distance(const AtomicMeasure& a, const AtomicMeasure& b) {
  detail::require_unit_mass(a.total_mass(), "w1_distance(a)");
  detail::require_unit_mass(b.total_mass(), "w1_distance(b)");
  return detail::w1_from_transforms(cumulative(a), cumulative(b));
}

inline double w1_distance(const PiecewiseConstantFn& a, const AtomicMeasure& b) {
  detail::require_unit_mass(a.integral(), "w1_distance(a)");
  detail::require_unit_mass(b.total_mass(), "w1_distance(b)");
  return detail::w1_from_transforms(cumulative(a), cumulative(b));
}

inline double w1_distance(const AtomicMeasure& a, const PiecewiseConstantFn& b) {
  return w1_distance(b, a);
}

// Total variation with both boundary jumps (variation against the zero
// extension).
inline double total_variation(const PiecewiseConstantFn& f) { return f.total_variation(); }

// max over j <= N-2 of (v(rho_{j+1}) - v(rho_j)) / (x_{j+1} - x_j).  Under
// (V1)+(V2) the dynamics keeps this below 1/t.
inline double oleinik_residual(const ParticleConfig& c, const VelocityModel& model, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("oleinik_residual: t must be > 0");
  if (c.n < 2) return 0.0;
  const auto rho = c.densities();
  double worst = -std::numeric_limits<double>::infinity();
  for (int j = 0; j + 1 < c.n; ++j) {
    const double num = model.v_clamped(rho[std::size_t(j) + 1]) - model.v_clamped(rho[std::size_t(j)]);
    worst = std::max(worst, num / c.gap(j));
  }
  return worst;
}

struct LipschitzSupBound {
  double sup_norm = 0.0;
  double l1_norm = 0.0;
  bool bound_ok = false;
};

// For a compactly supported 1-Lipschitz f: ||f||_inf <= sqrt(||f||_1).
// Slopes are checked against L_f before the bound is evaluated.
inline LipschitzSupBound lipschitz_sup_bound(const PiecewiseLinearFn& f, double L_f = 1.0) {
  if (!f.is_continuous(1e-12))
    throw std::invalid_argument("lipschitz_sup_bound: f has jump discontinuities");
  if (f.max_abs_slope() > L_f * (1.0 + 1e-9))
    throw std::invalid_argument("lipschitz_sup_bound: slope exceeds the Lipschitz constant");
  if (std::abs(f.ext_left) > 0.0 || std::abs(f.ext_right) > 0.0)
    throw std::invalid_argument("lipschitz_sup_bound: f must be compactly supported");
  LipschitzSupBound r;
  r.sup_norm = sup_norm(f);
  r.l1_norm = l1_norm(f);
  r.bound_ok = r.sup_norm <= std::sqrt(r.l1_norm) + 1e-12;
  return r;
}

// Total variation of x -> v(rho^{E,N}(t,x)) over the whole line; outside the
// support the density vanishes and the composed profile sits at v_max.
inline double velocity_profile_tv(const ParticleConfig& c, const VelocityModel& model) {
  const auto rho = c.densities();
  double tv = std::abs(model.v_clamped(rho.front()) - model.v_max());
  for (std::size_t j = 0; j + 1 < rho.size(); ++j)
    tv += std::abs(model.v_clamped(rho[j + 1]) - model.v_clamped(rho[j]));
  tv += std::abs(model.v_max() - model.v_clamped(rho.back()));
  return tv;
}

// Sum of absolute gap differences between two configurations sharing N,
// the right-hand side ingredient of the Wasserstein stability estimate.
inline double gap_difference_sum(const ParticleConfig& a, const ParticleConfig& b) {
  if (a.n != b.n) throw std::invalid_argument("gap_difference_sum: particle counts differ");
  double s = 0.0;
  for (int j = 0; j < a.n; ++j) s += std::abs(a.gap(j) - b.gap(j));
  return s;
}

// Sum_j |y_j - y~_j| of the inverse discrete densities; the contraction
// quantity of the inverse-density dynamics.
inline double inverse_density_l1(const ParticleConfig& a, const ParticleConfig& b) {
  if (a.n != b.n) throw std::invalid_argument("inverse_density_l1: particle counts differ");
  const auto ya = a.inverse_densities(), yb = b.inverse_densities();
  double s = 0.0;
  for (std::size_t j = 0; j < ya.size(); ++j) s += std::abs(ya[j] - yb[j]);
  return s;
}

inline double density_l1(const ParticleConfig& a, const ParticleConfig& b) {
  if (a.n != b.n) throw std::invalid_argument("density_l1: particle counts differ");
  const auto ra = a.densities(), rb = b.densities();
  double s = 0.0;
  for (std::size_t j = 0; j < ra.size(); ++j) s += std::abs(ra[j] - rb[j]);
  return s;
}

}  // namespace ftlab
