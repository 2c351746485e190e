#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ftlab/errors.hpp"
#include "ftlab/particle.hpp"
#include "ftlab/velocity.hpp"

namespace ftlab {

enum class OdeMethod { implicit_trapezoid_bdf2, backward_euler, explicit_rk_oracle };

struct IntegratorSettings {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double initial_step = 0.0;  // 0 = choose automatically
  double max_step = std::numeric_limits<double>::infinity();
  double newton_tol = 1e-12;
  int newton_max_iter = 25;
  OdeMethod method = OdeMethod::implicit_trapezoid_bdf2;

  void validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(newton_tol > 0.0) || !(max_step > 0.0) ||
        newton_max_iter < 1 || initial_step < 0.0)
      throw std::invalid_argument("integrator settings: tolerances and steps must be positive");
  }
};

struct IntegratorStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long newton_iterations = 0;
  double max_residual = 0.0;  // largest Newton residual seen at convergence
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ParticleConfig> states;
  IntegratorStats stats;

  const ParticleConfig& at(std::size_t i) const { return states[i]; }
};

// ---------------------------------------------------------------------------
// Right-hand sides of the three equivalent formulations.

// x-form (canonical): xdot_N = v_max, xdot_j = v(l / gap_j).
inline std::vector<double> ftl_rhs_positions(const ParticleConfig& c, const VelocityModel& model) {
  std::vector<double> f(c.positions.size());
  for (int j = 0; j < c.n; ++j) {
    const double g = c.gap(j);
    if (!(g > 0.0)) throw std::invalid_argument("ftl_rhs_positions: non-positive gap");
    f[std::size_t(j)] = model.v(c.l / g);
  }
  f[std::size_t(c.n)] = model.v_max();
  return f;
}

// rho-form: rhodot_{N-1} = -N rho^2 (v_max - v(rho)),
//           rhodot_j = N rho_j^2 (v(rho_j) - v(rho_{j+1})).
inline std::vector<double> ftl_rhs_density(const std::vector<double>& rho,
                                           const VelocityModel& model, int n) {
  if (int(rho.size()) != n) throw std::invalid_argument("ftl_rhs_density: need N densities");
  for (double r : rho)
    if (!(r > 0.0)) throw std::invalid_argument("ftl_rhs_density: non-positive density");
  std::vector<double> f(rho.size());
  for (int j = 0; j + 1 < n; ++j)
    f[std::size_t(j)] =
        n * rho[std::size_t(j)] * rho[std::size_t(j)] * (model.v(rho[std::size_t(j)]) - model.v(rho[std::size_t(j) + 1]));
  const double rl = rho[std::size_t(n) - 1];
  f[std::size_t(n) - 1] = -double(n) * rl * rl * (model.v_max() - model.v(rl));
  return f;
}

// y-form: ydot_{N-1} = N (v_max - V(y_{N-1})), ydot_j = N (V(y_{j+1}) - V(y_j)),
// with V(y) = v(1/y).  y_j < 1 violates the discrete minimum principle.
inline std::vector<double> ftl_rhs_inverse_density(const std::vector<double>& y,
                                                   const VelocityModel& model, int n) {
  if (int(y.size()) != n) throw std::invalid_argument("ftl_rhs_inverse_density: need N values");
  for (double yy : y)
    if (!(yy >= 1.0 - 1e-9))
      throw std::invalid_argument("ftl_rhs_inverse_density: y < 1 breaks the minimum principle");
  auto V = [&](double yy) { return model.v_clamped(1.0 / yy); };
  std::vector<double> f(y.size());
  for (int j = 0; j + 1 < n; ++j)
    f[std::size_t(j)] = n * (V(y[std::size_t(j) + 1]) - V(y[std::size_t(j)]));
  f[std::size_t(n) - 1] = n * (model.v_max() - V(y[std::size_t(n) - 1]));
  return f;
}

// ---------------------------------------------------------------------------
// ODE systems with upper-bidiagonal Jacobians (each state couples only to
// itself and its right neighbour), making the Newton solve O(N).

namespace detail {

struct PositionSystem {
  const VelocityModel* model;
  int n;
  double l;
  double gap_floor;  // accepted states must keep every gap above this

  std::size_t dim() const { return std::size_t(n) + 1; }

  bool rhs(const std::vector<double>& x, std::vector<double>& f) const {
    for (int j = 0; j < n; ++j) {
      const double g = x[std::size_t(j) + 1] - x[std::size_t(j)];
      if (!(g > 0.0)) return false;
      f[std::size_t(j)] = model->v_clamped(l / g);
    }
    f[std::size_t(n)] = model->v_max();
    return true;
  }

  void jacobian(const std::vector<double>& x, std::vector<double>& diag,
                std::vector<double>& super) const {
    for (int j = 0; j < n; ++j) {
      const double g = x[std::size_t(j) + 1] - x[std::size_t(j)];
      const double rho = l / g;
      const double d = model->v_prime_clamped(rho) * l / (g * g);
      diag[std::size_t(j)] = d;   // d v_j / d x_j
      super[std::size_t(j)] = -d;  // d v_j / d x_{j+1}
    }
    diag[std::size_t(n)] = 0.0;
    super[std::size_t(n)] = 0.0;
  }

  bool admissible(const std::vector<double>& x) const {
    for (int j = 0; j < n; ++j)
      if (!(x[std::size_t(j) + 1] - x[std::size_t(j)] >= gap_floor)) return false;
    return true;
  }
};

struct InverseDensitySystem {
  const VelocityModel* model;
  int n;
  double y_floor;

  std::size_t dim() const { return std::size_t(n); }

  double V(double y) const { return model->v_clamped(1.0 / y); }
  double Vp(double y) const {
    const double rho = 1.0 / y;
    return -model->v_prime_clamped(rho) * rho * rho;  // >= 0
  }

  bool rhs(const std::vector<double>& y, std::vector<double>& f) const {
    for (double yy : y)
      if (!(yy > 0.0)) return false;
    for (int j = 0; j + 1 < n; ++j)
      f[std::size_t(j)] = n * (V(y[std::size_t(j) + 1]) - V(y[std::size_t(j)]));
    f[std::size_t(n) - 1] = n * (model->v_max() - V(y[std::size_t(n) - 1]));
    return true;
  }

  void jacobian(const std::vector<double>& y, std::vector<double>& diag,
                std::vector<double>& super) const {
    for (int j = 0; j < n; ++j) {
      diag[std::size_t(j)] = -n * Vp(y[std::size_t(j)]);
      super[std::size_t(j)] = (j + 1 < n) ? n * Vp(y[std::size_t(j) + 1]) : 0.0;
    }
  }

  bool admissible(const std::vector<double>& y) const {
    for (double yy : y)
      if (!(yy >= y_floor)) return false;
    return true;
  }
};

// Solve u - a f(u) = b by Newton iteration; M = I - a J is upper bidiagonal
// with unit-or-larger diagonal (J has non-positive diagonal), so the back
// substitution is well posed.
template <class Sys>
bool solve_stage(const Sys& sys, double a, const std::vector<double>& b, std::vector<double>& u,
                 const IntegratorSettings& s, IntegratorStats& stats, std::vector<double>& f) {
  const std::size_t m = sys.dim();
  std::vector<double> r(m), diag(m), super(m), delta(m);
  for (int it = 0; it < s.newton_max_iter; ++it) {
    if (!sys.rhs(u, f)) return false;
    double rn = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      r[i] = u[i] - a * f[i] - b[i];
      rn = std::max(rn, std::abs(r[i]));
    }
    if (!std::isfinite(rn)) return false;
    sys.jacobian(u, diag, super);
    delta[m - 1] = -r[m - 1] / (1.0 - a * diag[m - 1]);
    for (std::size_t i = m - 1; i-- > 0;)
      delta[i] = (-r[i] + a * super[i] * delta[i + 1]) / (1.0 - a * diag[i]);
    double dn = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      u[i] += delta[i];
      dn = std::max(dn, std::abs(delta[i]) / (1.0 + std::abs(u[i])));
    }
    ++stats.newton_iterations;
    if (dn <= s.newton_tol) {
      if (!sys.rhs(u, f)) return false;
      stats.max_residual = std::max(stats.max_residual, rn);
      return true;
    }
  }
  return false;
}

// One TR-BDF2 step (trapezoid to gamma*h, BDF2 to h) with the third-order
// quadrature companion as embedded error estimate, filtered through
// (I - d h J)^{-1} for stiff robustness.
template <class Sys>
bool trbdf2_step(const Sys& sys, const std::vector<double>& y, const std::vector<double>& fy,
                 double h, const IntegratorSettings& s, IntegratorStats& stats,
                 std::vector<double>& ynew, std::vector<double>& fnew, double& err) {
  static const double gamma = 2.0 - std::sqrt(2.0);
  static const double d = gamma / 2.0;
  static const double w = std::sqrt(2.0) / 4.0;
  // weights of the embedded third-order rule
  static const double e1 = (std::sqrt(2.0) - 1.0) / 3.0;  // b1 - b1hat
  static const double e2 = -1.0 / 3.0;
  static const double e3 = (2.0 - std::sqrt(2.0)) / 3.0;

  const std::size_t m = sys.dim();
  std::vector<double> b(m), y2(m), f2(m), f3(m), est(m), diag(m), super(m);

  for (std::size_t i = 0; i < m; ++i) {
    b[i] = y[i] + d * h * fy[i];
    y2[i] = y[i] + gamma * h * fy[i];  // predictor
  }
  if (!solve_stage(sys, d * h, b, y2, s, stats, f2)) return false;

  for (std::size_t i = 0; i < m; ++i) {
    b[i] = y[i] + w * h * (fy[i] + f2[i]);
    ynew[i] = y2[i] + (1.0 - gamma) * h * f2[i];  // predictor
  }
  if (!solve_stage(sys, d * h, b, ynew, s, stats, f3)) return false;

  for (std::size_t i = 0; i < m; ++i) est[i] = h * (e1 * fy[i] + e2 * f2[i] + e3 * f3[i]);
  sys.jacobian(ynew, diag, super);
  est[m - 1] = est[m - 1] / (1.0 - d * h * diag[m - 1]);
  for (std::size_t i = m - 1; i-- > 0;)
    est[i] = (est[i] + d * h * super[i] * est[i + 1]) / (1.0 - d * h * diag[i]);

  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double sc = s.abs_tol + s.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
    const double q = est[i] / sc;
    acc += q * q;
  }
  err = std::sqrt(acc / double(m));
  fnew = f3;
  return true;
}

template <class Sys>
bool backward_euler_step(const Sys& sys, const std::vector<double>& y,
                         const std::vector<double>& fy, double h, const IntegratorSettings& s,
                         IntegratorStats& stats, std::vector<double>& ynew,
                         std::vector<double>& fnew, double& err) {
  const std::size_t m = sys.dim();
  std::vector<double> b(m);
  for (std::size_t i = 0; i < m; ++i) {
    b[i] = y[i];
    ynew[i] = y[i] + h * fy[i];
  }
  if (!solve_stage(sys, h, b, ynew, s, stats, fnew)) return false;
  // implicit-vs-explicit Euler difference ~ h^2 y'' approximates the local error
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double est = 0.5 * (ynew[i] - y[i] - h * fy[i]);
    const double sc = s.abs_tol + s.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
    acc += (est / sc) * (est / sc);
  }
  err = std::sqrt(acc / double(m));
  return true;
}

// Dormand-Prince 5(4) with FSAL; the accuracy reference for the implicit pair.
template <class Sys>
bool dopri5_step(const Sys& sys, const std::vector<double>& y, const std::vector<double>& fy,
                 double h, const IntegratorSettings& s, std::vector<double>& ynew,
                 std::vector<double>& fnew, double& err) {
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                      b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t m = sys.dim();
  std::vector<double> k2(m), k3(m), k4(m), k5(m), k6(m), u(m);

  auto stage = [&](std::vector<double>& k, auto&& combine) {
    for (std::size_t i = 0; i < m; ++i) u[i] = y[i] + h * combine(i);
    return sys.rhs(u, k);
  };
  if (!stage(k2, [&](std::size_t i) { return a21 * fy[i]; })) return false;
  if (!stage(k3, [&](std::size_t i) { return a31 * fy[i] + a32 * k2[i]; })) return false;
  if (!stage(k4, [&](std::size_t i) { return a41 * fy[i] + a42 * k2[i] + a43 * k3[i]; })) return false;
  if (!stage(k5, [&](std::size_t i) {
        return a51 * fy[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
      }))
    return false;
  if (!stage(k6, [&](std::size_t i) {
        return a61 * fy[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
      }))
    return false;
  for (std::size_t i = 0; i < m; ++i)
    ynew[i] = y[i] + h * (b1 * fy[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  if (!sys.rhs(ynew, fnew)) return false;

  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double est = h * (e1 * fy[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * fnew[i]);
    const double sc = s.abs_tol + s.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
    acc += (est / sc) * (est / sc);
  }
  err = std::sqrt(acc / double(m));
  return true;
}

// Knots of accepted steps, for cubic Hermite dense output.
struct DenseOutput {
  std::vector<double> t;
  std::vector<std::vector<double>> y;
  std::vector<std::vector<double>> f;

  void eval(double tq, std::vector<double>& out) const {
    if (t.empty()) throw std::invalid_argument("dense output: no knots stored");
    if (tq <= t.front()) {
      out = y.front();
      return;
    }
    if (tq >= t.back()) {
      out = y.back();
      return;
    }
    const auto it = std::upper_bound(t.begin(), t.end(), tq);
    const std::size_t i = std::size_t(it - t.begin()) - 1;
    const double h = t[i + 1] - t[i];
    const double th = (tq - t[i]) / h;
    const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
    const double h10 = th * (1 - th) * (1 - th);
    const double h01 = th * th * (3 - 2 * th);
    const double h11 = th * th * (th - 1);
    out.resize(y[i].size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = h00 * y[i][k] + h * h10 * f[i][k] + h01 * y[i + 1][k] + h * h11 * f[i + 1][k];
  }
};

// Adaptive driver.  Accepted steps land exactly on every requested output
// time, so the recorded snapshots carry no interpolation error; the Hermite
// dense output (when requested) serves queries between them.
template <class Sys>
std::vector<std::vector<double>> integrate_system(const Sys& sys, std::vector<double> y,
                                                  const std::vector<double>& output_times,
                                                  const IntegratorSettings& s,
                                                  IntegratorStats& stats,
                                                  DenseOutput* dense = nullptr) {
  s.validate();
  if (output_times.empty()) throw std::invalid_argument("integrate: no output times");
  for (std::size_t i = 0; i + 1 < output_times.size(); ++i)
    if (!(output_times[i] < output_times[i + 1]))
      throw std::invalid_argument("integrate: output times must strictly ascend");
  if (output_times.front() < 0.0) throw std::invalid_argument("integrate: negative output time");

  const std::size_t m = sys.dim();
  std::vector<double> f(m), ynew(m), fnew(m);
  if (!sys.rhs(y, f)) throw NumericError("integrate: invalid initial state");

  std::vector<std::vector<double>> snapshots;
  std::size_t out_idx = 0;
  double t = 0.0;
  while (out_idx < output_times.size() && output_times[out_idx] == 0.0) {
    snapshots.push_back(y);
    ++out_idx;
  }
  if (dense) {
    dense->t.push_back(t);
    dense->y.push_back(y);
    dense->f.push_back(f);
  }
  if (out_idx == output_times.size()) return snapshots;

  const double t_end = output_times.back();
  const int order = (s.method == OdeMethod::explicit_rk_oracle) ? 5
                    : (s.method == OdeMethod::backward_euler)   ? 1
                                                                : 2;
  double h;
  if (s.initial_step > 0.0) {
    h = s.initial_step;
  } else {
    double fmax = 0.0;
    for (double v : f) fmax = std::max(fmax, std::abs(v));
    h = std::min({t_end / 100.0, 1e-2 / (1.0 + fmax), s.max_step});
  }

  while (out_idx < output_times.size()) {
    const double next_out = output_times[out_idx];
    h = std::min(h, s.max_step);
    double h_try = h;
    bool clipped = false;
    if (t + h_try >= next_out) {
      h_try = next_out - t;
      clipped = true;
    }

    double err = 0.0;
    bool ok = false;
    switch (s.method) {
      case OdeMethod::implicit_trapezoid_bdf2:
        ok = trbdf2_step(sys, y, f, h_try, s, stats, ynew, fnew, err);
        break;
      case OdeMethod::backward_euler:
        ok = backward_euler_step(sys, y, f, h_try, s, stats, ynew, fnew, err);
        break;
      case OdeMethod::explicit_rk_oracle:
        ok = dopri5_step(sys, y, f, h_try, s, ynew, fnew, err);
        break;
    }
    if (ok && err <= 1.0 && !sys.admissible(ynew)) ok = false;  // ordering violation: reject

    if (!ok) {
      ++stats.steps_rejected;
      h = 0.5 * h_try;
    } else if (err > 1.0) {
      ++stats.steps_rejected;
      const double fac = std::clamp(0.9 * std::pow(err, -1.0 / (order + 1)), 0.1, 0.9);
      h = h_try * fac;
    } else {
      ++stats.steps_accepted;
      t = clipped ? next_out : t + h_try;
      y.swap(ynew);
      f.swap(fnew);
      if (dense) {
        dense->t.push_back(t);
        dense->y.push_back(y);
        dense->f.push_back(f);
      }
      if (clipped && t == next_out) {
        snapshots.push_back(y);
        ++out_idx;
      }
      const double fac =
          std::clamp(err > 0.0 ? 0.9 * std::pow(err, -1.0 / (order + 1)) : 5.0, 0.2, 5.0);
      double h_next = h_try * fac;
      if (clipped) h_next = std::max(h_next, h);  // do not let clipping shrink the proposal
      h = h_next;
    }

    if (h < 1e-14 * std::max(1.0, t_end))
      throw NumericError("integrate: step size collapsed at t=" + std::to_string(t) +
                         " (Newton failure or persistent rejection)");
  }
  return snapshots;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Position-form integration (canonical).  Snapshots are taken exactly at the
// requested output times; the leader equation is linear and is reproduced to
// rounding by every method here.
inline Trajectory integrate(const ParticleConfig& config, const VelocityModel& model, double t_end,
                            const IntegratorSettings& settings = {},
                            std::vector<double> output_times = {},
                            detail::DenseOutput* dense = nullptr) {
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be > 0");
  if (output_times.empty()) output_times = {0.0, t_end};
  if (output_times.back() > t_end + 1e-12)
    throw std::invalid_argument("integrate: output times exceed t_end");

  detail::PositionSystem sys;
  sys.model = &model;
  sys.n = config.n;
  sys.l = config.l;
  sys.gap_floor = std::min(config.l, config.min_gap()) * (1.0 - 1e-8);

  Trajectory traj;
  const auto snaps =
      detail::integrate_system(sys, config.positions, output_times, settings, traj.stats, dense);
  traj.times = output_times;
  traj.states.reserve(snaps.size());
  for (const auto& s : snaps) traj.states.emplace_back(s);
  return traj;
}

// y-form integration; positions are reconstructed from the inverse densities
// through the leader anchor x_N(t) = x_N(0) + v_max t.
inline Trajectory integrate_inverse(const ParticleConfig& config, const VelocityModel& model,
                                    double t_end, const IntegratorSettings& settings = {},
                                    std::vector<double> output_times = {}) {
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate_inverse: t_end must be > 0");
  if (output_times.empty()) output_times = {0.0, t_end};
  if (output_times.back() > t_end + 1e-12)
    throw std::invalid_argument("integrate_inverse: output times exceed t_end");

  detail::InverseDensitySystem sys;
  sys.model = &model;
  sys.n = config.n;
  const auto y0 = config.inverse_densities();
  double ymin = y0[0];
  for (double v : y0) ymin = std::min(ymin, v);
  sys.y_floor = std::min(1.0, ymin) * (1.0 - 1e-8);

  Trajectory traj;
  const auto snaps = detail::integrate_system(sys, y0, output_times, settings, traj.stats);
  traj.times = output_times;
  traj.states.reserve(snaps.size());
  const double xN0 = config.positions.back();
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const double xN = xN0 + model.v_max() * output_times[k];
    std::vector<double> x(std::size_t(config.n) + 1);
    x[std::size_t(config.n)] = xN;
    for (int j = config.n - 1; j >= 0; --j)
      x[std::size_t(j)] = x[std::size_t(j) + 1] - config.l * snaps[k][std::size_t(j)];
    traj.states.emplace_back(std::move(x));
  }
  return traj;
}

}  // namespace ftlab
