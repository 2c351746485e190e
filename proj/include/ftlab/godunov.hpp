#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ftlab/atomize.hpp"
#include "ftlab/errors.hpp"
#include "ftlab/piecewise.hpp"
#include "ftlab/velocity.hpp"

namespace ftlab {

// Uniform-grid cell averages of the macroscopic density at one time.
struct GridDensity {
  double x_left = 0.0;
  double dx = 0.0;
  std::vector<double> cells;
  double t = 0.0;

  double x_center(std::size_t i) const { return x_left + (double(i) + 0.5) * dx; }
  double mass() const {
    double s = 0.0;
    for (double c : cells) s += c;
    return s * dx;
  }
  double total_variation() const {
    if (cells.empty()) return 0.0;
    double tv = std::abs(cells.front()) + std::abs(cells.back());
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) tv += std::abs(cells[i + 1] - cells[i]);
    return tv;
  }
  PiecewiseConstantFn to_piecewise() const {
    std::vector<double> b(cells.size() + 1);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = x_left + double(i) * dx;
    return PiecewiseConstantFn(Domain::road, std::move(b), cells);
  }
};

// Godunov numerical flux: min of f over [rl, rr] when rl <= rr, max over
// [rr, rl] otherwise.  Consistent by construction: both reduce to f(c) at
// rl = rr.
inline double godunov_flux(const VelocityModel& model, double rho_left, double rho_right) {
  if (!(rho_left >= -1e-12 && rho_left <= 1.0 + 1e-12) ||
      !(rho_right >= -1e-12 && rho_right <= 1.0 + 1e-12))
    throw std::invalid_argument("godunov_flux: states outside [0,1]");
  const double rl = std::clamp(rho_left, 0.0, 1.0);
  const double rr = std::clamp(rho_right, 0.0, 1.0);
  if (rl == rr) return model.flux(rl);
  return rl < rr ? model.flux_min_on(rl, rr) : model.flux_max_on(rr, rl);
}

struct LwrRun {
  std::vector<GridDensity> snapshots;  // one per requested output time
  long steps = 0;
  double min_cell = 0.0, max_cell = 0.0;
  double max_tv_growth = 0.0;  // largest TV increase over a step (TVD: <= 0 up to roundoff)
  double max_mass_drift = 0.0;
};

// First-order Godunov solve of rho_t + f(rho)_x = 0 with compactly supported
// data.  The domain covers K_T = supp(rho_bar) + [0, t_end*v_max] plus a
// margin sized to the scheme's numerical smearing (O(sqrt(dx t)) at the
// support edges), keeping the boundary fluxes at the 1e-13 level and the
// total mass conserved to 1e-12.  Every requested output time (and t_end) is
// hit exactly by shortening the step.
inline LwrRun solve_lwr(const InitialDensity& rho_bar, const VelocityModel& model, double t_end,
                        double dx, double cfl = 0.45, std::vector<double> output_times = {},
                        double dt_override = 0.0) {
  if (!(dx > 0.0)) throw std::invalid_argument("solve_lwr: dx must be > 0");
  if (!(t_end >= 0.0)) throw std::invalid_argument("solve_lwr: t_end must be >= 0");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("solve_lwr: cfl must be in (0,1]");
  if (output_times.empty()) output_times = {t_end};
  for (std::size_t i = 0; i + 1 < output_times.size(); ++i)
    if (!(output_times[i] < output_times[i + 1]))
      throw std::invalid_argument("solve_lwr: output times must strictly ascend");
  if (output_times.back() > t_end + 1e-12)
    throw std::invalid_argument("solve_lwr: output times exceed t_end");

  const auto [supp_lo, supp_hi] = rho_bar.support();
  const double margin = 8.0 * std::sqrt(dx * model.max_wave_speed() * std::max(t_end, dx)) +
                        32.0 * dx;
  const double x_left = supp_lo - margin;
  const double x_right = supp_hi + t_end * model.v_max() + margin;
  const std::size_t ncells = std::size_t(std::ceil((x_right - x_left) / dx)) + 1;

  const double speed = std::max(model.max_wave_speed(), 1e-12);
  const double dt_cfl = cfl * dx / speed;
  double dt_base = dt_cfl;
  if (dt_override > 0.0) {
    if (dt_override > dt_cfl)
      throw std::invalid_argument("solve_lwr: requested dt violates the CFL bound " +
                                  std::to_string(dt_cfl));
    dt_base = dt_override;
  }

  LwrRun run;
  GridDensity g;
  g.x_left = x_left;
  g.dx = dx;
  g.t = 0.0;
  g.cells.assign(ncells, 0.0);
  // exact cell averages of the initial profile
  const auto& p = rho_bar.profile;
  for (std::size_t i = 0; i < ncells; ++i) {
    const double a = x_left + double(i) * dx, b = a + dx;
    double acc = 0.0;
    for (std::size_t k = 0; k < p.values.size(); ++k) {
      const double lo = std::max(a, p.breaks[k]), hi = std::min(b, p.breaks[k + 1]);
      if (hi > lo) acc += p.values[k] * (hi - lo);
    }
    g.cells[i] = acc / dx;
  }

  const double mass0 = g.mass();
  run.min_cell = *std::min_element(g.cells.begin(), g.cells.end());
  run.max_cell = *std::max_element(g.cells.begin(), g.cells.end());

  std::vector<double> flux(ncells + 1);
  std::size_t out_idx = 0;
  while (out_idx < output_times.size() && output_times[out_idx] <= 0.0) {
    auto snap = g;
    snap.t = 0.0;
    run.snapshots.push_back(std::move(snap));
    ++out_idx;
  }

  while (out_idx < output_times.size()) {
    const double target = output_times[out_idx];
    while (g.t < target) {
      const double dt = std::min(dt_base, target - g.t);
      const double tv_before = g.total_variation();
      flux[0] = godunov_flux(model, 0.0, g.cells.front());
      for (std::size_t i = 1; i < ncells; ++i)
        flux[i] = godunov_flux(model, g.cells[i - 1], g.cells[i]);
      flux[ncells] = godunov_flux(model, g.cells.back(), 0.0);
      const double lam = dt / dx;
      for (std::size_t i = 0; i < ncells; ++i) g.cells[i] -= lam * (flux[i + 1] - flux[i]);
      g.t = (target - g.t <= dt_base) ? target : g.t + dt;
      ++run.steps;
      run.max_tv_growth = std::max(run.max_tv_growth, g.total_variation() - tv_before);
      run.min_cell = std::min(run.min_cell, *std::min_element(g.cells.begin(), g.cells.end()));
      run.max_cell = std::max(run.max_cell, *std::max_element(g.cells.begin(), g.cells.end()));
    }
    auto snap = g;
    run.snapshots.push_back(std::move(snap));
    run.max_mass_drift =
        std::max(run.max_mass_drift, std::abs(run.snapshots.back().mass() - mass0));
    ++out_idx;
  }
  return run;
}

// Godunov evolution of Riemann data rho_l / rho_r on the window
// [-half_width, half_width], with copy (outflow) ghost cells so the constant
// far states stay exact.  Waves must not reach the window ends within t_end.
inline LwrRun godunov_riemann_run(const VelocityModel& model, double rho_l, double rho_r,
                                  double t_end, double dx, double half_width, double cfl = 0.45) {
  if (!(dx > 0.0) || !(half_width > 0.0))
    throw std::invalid_argument("godunov_riemann_run: bad grid");
  const double speed = std::max(model.max_wave_speed(), 1e-12);
  if (t_end * speed > half_width - 2.0 * dx)
    throw std::invalid_argument("godunov_riemann_run: waves reach the window boundary");
  const double dt_base = cfl * dx / speed;

  LwrRun run;
  GridDensity g;
  const std::size_t half_cells = std::size_t(std::ceil(half_width / dx));
  g.x_left = -double(half_cells) * dx;  // cell interface at x = 0
  g.dx = dx;
  g.t = 0.0;
  g.cells.assign(2 * half_cells, 0.0);
  for (std::size_t i = 0; i < g.cells.size(); ++i)
    g.cells[i] = (i < half_cells) ? rho_l : rho_r;

  const double mass0 = g.mass();
  run.min_cell = std::min(rho_l, rho_r);
  run.max_cell = std::max(rho_l, rho_r);
  const std::size_t ncells = g.cells.size();
  std::vector<double> flux(ncells + 1);
  while (g.t < t_end) {
    const double dt = std::min(dt_base, t_end - g.t);
    const double tv_before = g.total_variation();
    flux[0] = godunov_flux(model, g.cells.front(), g.cells.front());
    for (std::size_t i = 1; i < ncells; ++i)
      flux[i] = godunov_flux(model, g.cells[i - 1], g.cells[i]);
    flux[ncells] = godunov_flux(model, g.cells.back(), g.cells.back());
    const double lam = dt / dx;
    for (std::size_t i = 0; i < ncells; ++i) g.cells[i] -= lam * (flux[i + 1] - flux[i]);
    g.t = (t_end - g.t <= dt_base) ? t_end : g.t + dt;
    ++run.steps;
    run.max_tv_growth = std::max(run.max_tv_growth, g.total_variation() - tv_before);
    run.min_cell = std::min(run.min_cell, *std::min_element(g.cells.begin(), g.cells.end()));
    run.max_cell = std::max(run.max_cell, *std::max_element(g.cells.begin(), g.cells.end()));
  }
  // mass changes only through the boundary fluxes of the constant far states
  run.max_mass_drift = std::abs(
      g.mass() - (mass0 - t_end * (model.flux(rho_r) - model.flux(rho_l))));
  run.snapshots.push_back(std::move(g));
  return run;
}

// Exact entropy solution of the Riemann problem for a strictly concave flux:
// an admissible shock when rl < rr, a rarefaction through the inverse of f'
// when rl > rr.
inline double riemann_exact(const VelocityModel& model, double rho_l, double rho_r, double t,
                            double x) {
  if (!model.strictly_concave_flux())
    throw std::invalid_argument("riemann_exact: flux is not strictly concave; use the Godunov solver");
  if (!(t > 0.0)) throw std::invalid_argument("riemann_exact: t must be > 0");
  if (rho_l == rho_r) return rho_l;
  const double xi = x / t;
  if (rho_l < rho_r) {  // shock with Rankine-Hugoniot speed
    const double s = (model.flux(rho_r) - model.flux(rho_l)) / (rho_r - rho_l);
    return xi < s ? rho_l : rho_r;
  }
  // rarefaction: f' decreasing, so the fan spans [f'(rho_l), f'(rho_r)]
  const double fl = model.flux_prime(rho_l), fr = model.flux_prime(rho_r);
  if (xi <= fl) return rho_l;
  if (xi >= fr) return rho_r;
  double lo = rho_r, hi = rho_l;  // f' decreasing in rho: invert by bisection
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (model.flux_prime(mid) > xi)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct GridSpec {
  double x_left = 0.0;
  double dx = 0.0;
  std::size_t ncells = 0;
};

// Exact cell averages of a piecewise-constant function on a uniform grid.
// The grid must cover the support of f.
inline GridDensity sample_to_grid(const PiecewiseConstantFn& f, const GridSpec& grid) {
  if (!(grid.dx > 0.0) || grid.ncells == 0) throw std::invalid_argument("sample_to_grid: bad grid");
  const auto supp = f.support();
  if (supp) {
    const double right = grid.x_left + double(grid.ncells) * grid.dx;
    if (supp->first < grid.x_left - 1e-12 || supp->second > right + 1e-12)
      throw std::invalid_argument("sample_to_grid: grid does not cover the support of f");
  }
  GridDensity g;
  g.x_left = grid.x_left;
  g.dx = grid.dx;
  g.cells.assign(grid.ncells, 0.0);
  for (std::size_t i = 0; i < grid.ncells; ++i) {
    const double a = grid.x_left + double(i) * grid.dx, b = a + grid.dx;
    double acc = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
      const double lo = std::max(a, f.breaks[k]), hi = std::min(b, f.breaks[k + 1]);
      if (hi > lo) acc += f.values[k] * (hi - lo);
    }
    g.cells[i] = acc / grid.dx;
  }
  return g;
}

}  // namespace ftlab
