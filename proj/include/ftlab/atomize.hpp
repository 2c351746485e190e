#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ftlab/particle.hpp"
#include "ftlab/piecewise.hpp"

namespace ftlab {

// A macroscopic initial datum: piecewise-constant probability density with
// values in [0,1] and compact support.
struct InitialDensity {
  PiecewiseConstantFn profile;

  explicit InitialDensity(PiecewiseConstantFn p) : profile(std::move(p)) { validate(); }

  void validate() const {
    profile.validate();
    if (profile.empty()) throw std::invalid_argument("initial density: empty profile");
    for (double v : profile.values)
      if (v < 0.0 || v > 1.0 + 1e-12)
        throw std::invalid_argument("initial density: values must lie in [0,1]");
    const double mass = profile.integral();
    if (std::abs(mass - 1.0) > 1e-12)
      throw std::invalid_argument("initial density: total mass is " + std::to_string(mass) +
                                  ", expected 1 within 1e-12");
    if (!profile.support()) throw std::invalid_argument("initial density: identically zero");
  }

  double sup_value() const {
    double s = 0.0;
    for (double v : profile.values) s = std::max(s, v);
    return s;
  }
  std::pair<double, double> support() const { return *profile.support(); }
};

// rho_bar = 1/2 on [1/2, 5/2]; the datum of the Bonzani-Mussone experiment.
inline InitialDensity block_density() {
  return InitialDensity(PiecewiseConstantFn(Domain::road, {0.5, 2.5}, {0.5}));
}

// Two-level BV profile: 1 on [0,1/2], 1/3 on [1/2,2].
inline InitialDensity two_level_density() {
  return InitialDensity(PiecewiseConstantFn(Domain::road, {0.0, 0.5, 2.0}, {1.0, 1.0 / 3.0}));
}

// Two-level profile with the jump at mass fraction 1/3, so no dyadic particle
// count reproduces it exactly: 1 on [0,1/3], 1/2 on [1/3,5/3].
inline InitialDensity two_level_offset_density() {
  return InitialDensity(
      PiecewiseConstantFn(Domain::road, {0.0, 1.0 / 3.0, 5.0 / 3.0}, {1.0, 0.5}));
}

inline InitialDensity uniform_density() {
  return InitialDensity(PiecewiseConstantFn(Domain::road, {0.0, 1.0}, {1.0}));
}

// Mass-splitting atomization: x_0 = inf supp(rho_bar), then each x_j is the
// first point where the running mass from x_{j-1} reaches 1/n; x_n lands on
// sup supp(rho_bar).  Where the cumulative is flat at the target level the
// strict inequality in the defining sup picks the left endpoint of the flat
// stretch, so vehicles sit at the left edge of vacuum regions.  The
// cumulative of a piecewise-constant profile is piecewise linear, making the
// inversion exact.
inline ParticleConfig atomize_dfr(const InitialDensity& rho_bar, int n) {
  if (n < 1) throw std::invalid_argument("atomize_dfr: n must be >= 1");
  const auto& p = rho_bar.profile;
  const std::size_t m = p.values.size();

  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) cum[i + 1] = cum[i] + p.values[i] * (p.breaks[i + 1] - p.breaks[i]);

  const auto [supp_lo, supp_hi] = rho_bar.support();
  std::vector<double> x(std::size_t(n) + 1);
  x[0] = supp_lo;
  x[std::size_t(n)] = supp_hi;

  std::size_t cell = 0;
  for (int j = 1; j < n; ++j) {
    const double target = double(j) / double(n);
    while (cell + 1 < cum.size() && cum[cell + 1] < target) ++cell;
    if (cell >= m) throw NumericError("atomize_dfr: cumulative inversion ran off the profile");
    // first crossing inside cell: cum[cell] <= target <= cum[cell+1], value > 0 here
    const double v = p.values[cell];
    if (!(v > 0.0)) throw NumericError("atomize_dfr: flat cumulative at target level");
    x[std::size_t(j)] = p.breaks[cell] + (target - cum[cell]) / v;
  }

  ParticleConfig cfg(std::move(x));
  if (!config_ok(cfg, 1e-9)) {
    if (rho_bar.sup_value() > 1.0 + 1e-12)
      throw std::invalid_argument("atomize_dfr: profile exceeds rho_max, gaps fall below l");
    throw NumericError("atomize_dfr: produced an inadmissible configuration");
  }
  return cfg;
}

// The perturbed scheme: odd-indexed vehicles (except the leader) move to the
// midpoint of their trailing gap.  Even indices and the leader stay put.  The
// result is admissible whenever the base gaps are >= 2l (density <= 1/2).
// Violations are reported through *violations (or by validate_config), never
// repaired; exploratory runs on inadmissible configurations stay possible.
inline ParticleConfig atomize_midpoint_shift(const ParticleConfig& base,
                                             std::vector<ConfigViolation>* violations = nullptr) {
  std::vector<double> x = base.positions;
  for (int j = 1; j < base.n; j += 2)
    x[std::size_t(j)] = 0.5 * (base.positions[std::size_t(j) - 1] + base.positions[std::size_t(j)]);
  ParticleConfig cfg(std::move(x));
  if (violations) *violations = validate_config(cfg, 1e-9);
  return cfg;
}

}  // namespace ftlab
