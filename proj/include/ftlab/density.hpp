#pragma once

#include <cmath>
#include <vector>

#include "ftlab/particle.hpp"
#include "ftlab/piecewise.hpp"

namespace ftlab {

// Eulerian discrete density: value l/gap_j on [x_j, x_{j+1}), zero outside.
// Cell sums telescope to N*l, so the total integral is 1.
inline PiecewiseConstantFn eulerian_density(const ParticleConfig& c) {
  return PiecewiseConstantFn(Domain::road, c.positions, c.densities());
}

// Inverse Eulerian discrete density: gap_j/l on the same cells.
inline PiecewiseConstantFn inverse_eulerian_density(const ParticleConfig& c) {
  return PiecewiseConstantFn(Domain::road, c.positions, c.inverse_densities());
}

// Empirical measure: one atom of mass 1/N at each follower x_0..x_{N-1}.
// The leader carries no atom.
inline AtomicMeasure dirac_empirical(const ParticleConfig& c) {
  return AtomicMeasure(std::vector<double>(c.positions.begin(), c.positions.end() - 1));
}

// Mass-coordinate breakpoints 0, 1/N, ..., 1.
inline std::vector<double> mass_breaks(int n) {
  std::vector<double> z(std::size_t(n) + 1);
  for (int j = 0; j <= n; ++j) z[std::size_t(j)] = double(j) / double(n);
  return z;
}

struct LagrangianProfiles {
  PiecewiseConstantFn rho;  // rho_j on [jl, (j+1)l)
  PiecewiseConstantFn y;    // y_j = 1/rho_j on the same cells
};

// Lagrangian densities on the mass coordinate z in [0,1].  The L1 norm of y
// equals the measure of the support, x_N - x_0.
inline LagrangianProfiles lagrangian_profiles(const ParticleConfig& c) {
  const auto z = mass_breaks(c.n);
  return {PiecewiseConstantFn(Domain::mass, z, c.densities()),
          PiecewiseConstantFn(Domain::mass, z, c.inverse_densities())};
}

// Cumulative of the Eulerian density with the node values pinned to j*l
// exactly: F(x_j) = j/N.
inline PiecewiseLinearFn eulerian_cumulative(const ParticleConfig& c) {
  return PiecewiseLinearFn::from_nodes(c.positions, mass_breaks(c.n), 0.0, 1.0);
}

// Pseudo-inverse of the Eulerian cumulative: continuous piecewise-linear on
// [0,1] with X(jl) = x_j.
inline PiecewiseLinearFn eulerian_pseudo_inverse(const ParticleConfig& c) {
  return PiecewiseLinearFn::from_nodes(mass_breaks(c.n), c.positions, c.positions.front(),
                                       c.positions.back());
}

// Step cumulative of the empirical measure: jump 1/N at each atom.
inline PiecewiseLinearFn dirac_cumulative(const ParticleConfig& c) {
  return cumulative(dirac_empirical(c));
}

// Pseudo-inverse of the empirical cumulative: x_j on (jl, (j+1)l], with the
// value at z = 1 pinned to the leader position x_N (a measure-zero
// convention; the atoms themselves stop at x_{N-1}).
inline PiecewiseLinearFn dirac_pseudo_inverse(const ParticleConfig& c) {
  PiecewiseLinearFn X = pseudo_inverse(dirac_cumulative(c));
  X.end_point_value = c.positions.back();
  return X;
}

// Support envelope K_t = [x_0(0), x_N(0) + t*v_max]; every snapshot of the
// dynamics stays inside it.
inline std::pair<double, double> support_bound(const ParticleConfig& at_time_zero, double t,
                                               double v_max) {
  if (t < 0.0) throw std::invalid_argument("support_bound: t must be >= 0");
  return {at_time_zero.positions.front(), at_time_zero.positions.back() + t * v_max};
}

}  // namespace ftlab
