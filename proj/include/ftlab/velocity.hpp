#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ftlab/errors.hpp"

namespace ftlab {

enum class VelocityKind { greenshields, bonzani_mussone, linear_family, tabulated };

// A traffic velocity law v(rho) on [0, rho_max] with rho_max = 1.
//
// The standing assumptions are: v Lipschitz and strictly decreasing with
// v(1) = 0 (V1), and optionally rho -> rho*v'(rho) non-increasing (V2),
// which makes the flux f(rho) = rho*v(rho) strictly concave.
// check_assumptions() verifies both numerically for any model.
class VelocityModel {
 public:
  static VelocityModel greenshields() {
    VelocityModel m;
    m.kind_ = VelocityKind::greenshields;
    m.v_max_ = 1.0;
    m.lipschitz_ = 1.0;
    m.v2_ = true;
    return m;
  }

  // v(rho) = exp(rho/(rho-1)) for rho < 1 and 0 at rho = 1.  Not (V2):
  // rho*v'(rho) = -rho*v(rho)/(1-rho)^2 decreases on [0,(sqrt5-1)/2] and
  // increases afterwards, so the flux is not concave.
  static VelocityModel bonzani_mussone() {
    VelocityModel m;
    m.kind_ = VelocityKind::bonzani_mussone;
    m.v_max_ = 1.0;
    m.lipschitz_ = 4.0 * std::exp(-1.0);  // max of v(rho)/(1-rho)^2, attained at rho = 1/2
    m.v2_ = false;
    return m;
  }

  static VelocityModel linear(double v_max) {
    if (!(v_max > 0.0) || !std::isfinite(v_max))
      throw std::invalid_argument("linear velocity family needs v_max > 0");
    VelocityModel m;
    m.kind_ = VelocityKind::linear_family;
    m.v_max_ = v_max;
    m.lipschitz_ = v_max;
    m.v2_ = true;
    return m;
  }

  // Monotone piecewise-linear interpolation of (rho, v) samples with rho
  // ascending from 0 to 1.  Shape assumptions are not enforced here; run
  // check_assumptions() to see which of (V1)/(V2) the table satisfies.
  static VelocityModel tabulated(std::vector<double> rho, std::vector<double> v) {
    if (rho.size() < 2 || rho.size() != v.size())
      throw std::invalid_argument("tabulated velocity needs >= 2 matching samples");
    for (std::size_t i = 0; i + 1 < rho.size(); ++i)
      if (!(rho[i] < rho[i + 1]))
        throw std::invalid_argument("tabulated velocity: rho samples must ascend");
    if (std::abs(rho.front()) > 1e-12 || std::abs(rho.back() - 1.0) > 1e-12)
      throw std::invalid_argument("tabulated velocity: rho must span [0,1]");
    for (double s : v)
      if (!std::isfinite(s)) throw std::invalid_argument("tabulated velocity: non-finite sample");
    rho.front() = 0.0;
    rho.back() = 1.0;
    VelocityModel m;
    m.kind_ = VelocityKind::tabulated;
    m.tab_rho_ = std::move(rho);
    m.tab_v_ = std::move(v);
    m.v_max_ = m.tab_v_.front();
    double max_slope = 0.0;
    for (std::size_t i = 0; i + 1 < m.tab_rho_.size(); ++i) {
      const double s = (m.tab_v_[i + 1] - m.tab_v_[i]) / (m.tab_rho_[i + 1] - m.tab_rho_[i]);
      max_slope = std::max(max_slope, std::abs(s));
    }
    m.lipschitz_ = max_slope;
    m.v2_ = m.table_v2_holds();
    return m;
  }

  VelocityKind kind() const { return kind_; }
  double rho_max() const { return 1.0; }
  double v_max() const { return v_max_; }
  double lipschitz() const { return lipschitz_; }
  bool satisfies_v2() const { return v2_; }

  // v(rho); the domain is [0,1] with a 1e-12 guard for roundoff.
  double v(double rho) const {
    if (!(rho >= -1e-12 && rho <= 1.0 + 1e-12))
      throw std::invalid_argument("velocity evaluated outside [0,1]: rho=" + std::to_string(rho));
    return v_unchecked(std::clamp(rho, 0.0, 1.0));
  }

  // Clamping evaluation for integrator trial states; constant extension
  // v(rho<0) = v_max, v(rho>1) = 0 keeps the RHS Lipschitz.
  double v_clamped(double rho) const { return v_unchecked(std::clamp(rho, 0.0, 1.0)); }

  double flux(double rho) const { return rho * v(rho); }

  // dv/drho.  Analytic for the closed-form kinds; for Bonzani-Mussone the
  // expression -v(rho)/(1-rho)^2 avoids the catastrophic cancellation a
  // difference quotient would hit near rho = 1.  Tabulated models fall back
  // to a central difference with step 1e-7.
  double v_prime(double rho) const {
    rho = std::clamp(rho, 0.0, 1.0);
    switch (kind_) {
      case VelocityKind::greenshields:
        return -1.0;
      case VelocityKind::linear_family:
        return -v_max_;
      case VelocityKind::bonzani_mussone: {
        if (rho >= 1.0) return 0.0;
        const double d = 1.0 - rho;
        return -v_unchecked(rho) / (d * d);
      }
      case VelocityKind::tabulated: {
        const double h = 1e-7;
        const double lo = std::max(0.0, rho - h);
        const double hi = std::min(1.0, rho + h);
        return (v_unchecked(hi) - v_unchecked(lo)) / (hi - lo);
      }
    }
    return 0.0;
  }

  // Derivative of v_clamped: flat outside [0,1].
  double v_prime_clamped(double rho) const {
    if (rho < 0.0 || rho > 1.0) return 0.0;
    return v_prime(rho);
  }

  double flux_prime(double rho) const { return v_clamped(rho) + rho * v_prime(rho); }

  const std::vector<double>& table_rho() const { return tab_rho_; }
  const std::vector<double>& table_v() const { return tab_v_; }

  // Location of the flux maximum on [0,1].  Greenshields/linear peak at 1/2;
  // Bonzani-Mussone at (3-sqrt5)/2 where (1-rho)^2 = rho.  Tabulated fluxes
  // are piecewise quadratic and may be multimodal, so extrema are searched
  // segment by segment.
  double flux_argmax() const {
    switch (kind_) {
      case VelocityKind::greenshields:
      case VelocityKind::linear_family:
        return 0.5;
      case VelocityKind::bonzani_mussone:
        return (3.0 - std::sqrt(5.0)) / 2.0;
      case VelocityKind::tabulated:
        return table_flux_extremum(0.0, 1.0, /*maximize=*/true).first;
    }
    return 0.5;
  }

  double flux_max_on(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    if (kind_ == VelocityKind::tabulated) return table_flux_extremum(lo, hi, true).second;
    return flux(std::clamp(flux_argmax(), lo, hi));
  }

  double flux_min_on(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    if (kind_ == VelocityKind::tabulated) return table_flux_extremum(lo, hi, false).second;
    // unimodal flux: the minimum over an interval sits at an endpoint
    return std::min(flux(lo), flux(hi));
  }

  // Bound on |f'(rho)| over [0,1], used for CFL time steps.
  double max_wave_speed() const {
    switch (kind_) {
      case VelocityKind::greenshields:
        return 1.0;
      case VelocityKind::linear_family:
        return v_max_;
      default: {
        double s = 0.0;
        const int n = 4096;
        for (int i = 0; i <= n; ++i) {
          const double r = double(i) / n;
          s = std::max(s, std::abs(flux_prime(r)));
        }
        return 1.05 * s;
      }
    }
  }

  bool strictly_concave_flux() const { return v2_; }

 private:
  VelocityModel() = default;

  double v_unchecked(double rho) const {
    switch (kind_) {
      case VelocityKind::greenshields:
        return 1.0 - rho;
      case VelocityKind::linear_family:
        return v_max_ * (1.0 - rho);
      case VelocityKind::bonzani_mussone:
        return rho < 1.0 ? std::exp(rho / (rho - 1.0)) : 0.0;
      case VelocityKind::tabulated: {
        const auto it = std::upper_bound(tab_rho_.begin(), tab_rho_.end(), rho);
        std::size_t i = (it == tab_rho_.begin()) ? 0 : std::size_t(it - tab_rho_.begin()) - 1;
        if (i + 1 >= tab_rho_.size()) i = tab_rho_.size() - 2;
        const double w = (rho - tab_rho_[i]) / (tab_rho_[i + 1] - tab_rho_[i]);
        return tab_v_[i] + w * (tab_v_[i + 1] - tab_v_[i]);
      }
    }
    return 0.0;
  }

  // (V2) check on the table's own segments: rho*v' with v' the segment slope,
  // evaluated at segment midpoints, must be non-increasing.
  bool table_v2_holds() const {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < tab_rho_.size(); ++i) {
      const double slope = (tab_v_[i + 1] - tab_v_[i]) / (tab_rho_[i + 1] - tab_rho_[i]);
      const double mid = 0.5 * (tab_rho_[i] + tab_rho_[i + 1]);
      const double g = mid * slope;
      if (g > prev + 1e-9) return false;
      prev = g;
    }
    return true;
  }

  // Exact extremum of the piecewise-quadratic tabulated flux on [lo,hi].
  std::pair<double, double> table_flux_extremum(double lo, double hi, bool maximize) const {
    double best_arg = lo;
    double best = flux(lo);
    auto consider = [&](double r) {
      const double f = flux(r);
      if (maximize ? f > best : f < best) {
        best = f;
        best_arg = r;
      }
    };
    consider(hi);
    for (std::size_t i = 0; i + 1 < tab_rho_.size(); ++i) {
      const double a = std::max(lo, tab_rho_[i]);
      const double b = std::min(hi, tab_rho_[i + 1]);
      if (a >= b) continue;
      consider(a);
      consider(b);
      // within the segment v = alpha + beta*rho, so f = alpha*rho + beta*rho^2
      const double beta = (tab_v_[i + 1] - tab_v_[i]) / (tab_rho_[i + 1] - tab_rho_[i]);
      const double alpha = tab_v_[i] - beta * tab_rho_[i];
      if (beta != 0.0) {
        const double vertex = -alpha / (2.0 * beta);
        if (vertex > a && vertex < b) consider(vertex);
      }
    }
    return {best_arg, best};
  }

  VelocityKind kind_ = VelocityKind::greenshields;
  double v_max_ = 1.0;
  double lipschitz_ = 1.0;
  bool v2_ = true;
  std::vector<double> tab_rho_, tab_v_;
};

struct AssumptionReport {
  bool v1_holds = false;
  bool v2_holds = false;
  double estimated_L = 0.0;  // max |v'| over the sample grid
  double estimated_c = 0.0;  // max v' over the sample grid; (V1) needs c < 0
};

// Samples v and v' on a uniform grid of grid_n+1 points (or on the table's
// own segments for tabulated models) and reports which standing assumptions
// hold.  v1 requires v(1) = 0 and v' <= c < 0; v2 requires rho*v'(rho)
// non-increasing along the grid within 1e-9.
inline AssumptionReport check_assumptions(const VelocityModel& model, int grid_n) {
  if (grid_n < 16) throw std::invalid_argument("check_assumptions: grid_n must be >= 16");
  AssumptionReport rep;

  std::vector<double> rhos, vprimes;
  if (model.kind() == VelocityKind::tabulated) {
    // run on the table's own segments: exact slopes, flat pieces visible
    const auto& tr = model.table_rho();
    const auto& tv = model.table_v();
    for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
      rhos.push_back(0.5 * (tr[i] + tr[i + 1]));
      vprimes.push_back((tv[i + 1] - tv[i]) / (tr[i + 1] - tr[i]));
    }
  } else {
    rhos.reserve(grid_n + 1);
    vprimes.reserve(grid_n + 1);
    for (int i = 0; i <= grid_n; ++i) {
      const double r = double(i) / grid_n;
      rhos.push_back(r);
      vprimes.push_back(model.v_prime(r));
    }
  }

  double max_vp = -std::numeric_limits<double>::infinity();
  double max_abs_vp = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const double val = model.v(rhos[i]);
    if (!std::isfinite(val) || !std::isfinite(vprimes[i]))
      throw NumericError("check_assumptions: non-finite velocity sample");
    max_vp = std::max(max_vp, vprimes[i]);
    max_abs_vp = std::max(max_abs_vp, std::abs(vprimes[i]));
  }
  rep.estimated_c = max_vp;
  rep.estimated_L = max_abs_vp;
  rep.v1_holds = (model.v(1.0) == 0.0) && (max_vp < 0.0);

  rep.v2_holds = true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const double g = rhos[i] * vprimes[i];
    if (g > prev + 1e-9) {
      rep.v2_holds = false;
      break;
    }
    prev = g;
  }
  return rep;
}

}  // namespace ftlab
