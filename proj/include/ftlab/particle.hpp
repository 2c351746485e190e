#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ftlab/errors.hpp"

namespace ftlab {

// N+1 ordered vehicles of mass l = 1/N.  positions[j] is vehicle j, the
// leader sits at positions[n].  Admissibility requires strictly increasing
// positions with every gap at least l.
struct ParticleConfig {
  int n = 0;                      // number of gaps (N); N+1 vehicles
  double l = 0.0;                 // mass per vehicle, 1/N
  std::vector<double> positions;  // size n+1, strictly ascending

  ParticleConfig() = default;
  explicit ParticleConfig(std::vector<double> pos)
      : n(int(pos.size()) - 1), l(pos.size() > 1 ? 1.0 / double(pos.size() - 1) : 0.0),
        positions(std::move(pos)) {
    if (positions.size() < 2) throw std::invalid_argument("particle config needs >= 2 vehicles");
  }

  double gap(int j) const { return positions[j + 1] - positions[j]; }
  double min_gap() const {
    double g = gap(0);
    for (int j = 1; j < n; ++j) g = std::min(g, gap(j));
    return g;
  }
  double max_gap() const {
    double g = gap(0);
    for (int j = 1; j < n; ++j) g = std::max(g, gap(j));
    return g;
  }

  // discrete density rho_j = l / gap_j, j = 0..N-1
  std::vector<double> densities() const {
    std::vector<double> r(n);
    for (int j = 0; j < n; ++j) r[j] = l / gap(j);
    return r;
  }

  // inverse discrete density y_j = gap_j / l
  std::vector<double> inverse_densities() const {
    std::vector<double> y(n);
    for (int j = 0; j < n; ++j) y[j] = gap(j) / l;
    return y;
  }
};

struct ConfigViolation {
  int index;
  std::string what;
  double magnitude;
};

// Admissibility check: strictly increasing positions and gaps >= l, reported
// as data rather than thrown (violations are an object of study here).
inline std::vector<ConfigViolation> validate_config(const ParticleConfig& c, double gap_rel_tol = 1e-12) {
  std::vector<ConfigViolation> out;
  for (int j = 0; j < c.n; ++j) {
    const double g = c.gap(j);
    if (!(g > 0.0)) {
      out.push_back({j, "positions not strictly increasing", g});
    } else if (g < c.l * (1.0 - gap_rel_tol)) {
      out.push_back({j, "gap below vehicle length l", c.l - g});
    }
  }
  for (double x : c.positions)
    if (!std::isfinite(x)) {
      out.push_back({-1, "non-finite position", x});
      break;
    }
  return out;
}

inline bool config_ok(const ParticleConfig& c, double gap_rel_tol = 1e-12) {
  return validate_config(c, gap_rel_tol).empty();
}

}  // namespace ftlab
