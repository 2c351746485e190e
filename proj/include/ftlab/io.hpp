#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ftlab/atomize.hpp"
#include "ftlab/dynamics.hpp"
#include "ftlab/godunov.hpp"
#include "ftlab/piecewise.hpp"
#include "ftlab/velocity.hpp"

namespace ftlab {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                         std::size_t min_cols) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(tok, &pos));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // header line
    if (row.size() < min_cols)
      throw std::invalid_argument("malformed CSV row in " + path + ": " + line);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("no data rows in " + path);
  return rows;
}

}  // namespace detail

// InitialDensity file: rows `breakpoint,value`; the last row carries the
// terminal breakpoint (its value is ignored).
inline InitialDensity read_initial_density(const std::string& path) {
  const auto rows = detail::read_numeric_csv(path, 2);
  if (rows.size() < 2) throw std::invalid_argument("density file needs >= 2 rows: " + path);
  std::vector<double> breaks, values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    breaks.push_back(rows[i][0]);
    if (i + 1 < rows.size()) values.push_back(rows[i][1]);
  }
  return InitialDensity(PiecewiseConstantFn(Domain::road, std::move(breaks), std::move(values)));
}

inline void write_density_csv(const std::string& path, const PiecewiseConstantFn& f) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << "breakpoint,value\n";
  for (std::size_t i = 0; i < f.values.size(); ++i)
    out << fmt_double(f.breaks[i]) << "," << fmt_double(f.values[i]) << "\n";
  if (!f.breaks.empty()) out << fmt_double(f.breaks.back()) << ",0\n";
}

inline void write_cumulative_csv(const std::string& path, const PiecewiseLinearFn& F) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << "x,F\n";
  for (std::size_t i = 0; i < F.segments(); ++i) {
    out << fmt_double(F.breaks[i]) << "," << fmt_double(F.seg_begin[i]) << "\n";
    if (i + 1 == F.segments() || F.seg_end[i] != F.seg_begin[i + 1])
      out << fmt_double(F.breaks[i + 1]) << "," << fmt_double(F.seg_end[i]) << "\n";
  }
}

// Trajectory dump: header t,x_0,...,x_N.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  if (traj.states.empty()) throw std::invalid_argument("trajectory is empty");
  out << "t";
  for (int j = 0; j <= traj.states.front().n; ++j) out << ",x_" << j;
  out << "\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << fmt_double(traj.times[k]);
    for (double x : traj.states[k].positions) out << "," << fmt_double(x);
    out << "\n";
  }
}

inline void write_grid_csv(const std::string& path, const GridDensity& g) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << "x_center,rho\n";
  for (std::size_t i = 0; i < g.cells.size(); ++i)
    out << fmt_double(g.x_center(i)) << "," << fmt_double(g.cells[i]) << "\n";
}

inline void write_positions_csv(const std::string& path, const ParticleConfig& c) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << "j,x\n";
  for (std::size_t j = 0; j < c.positions.size(); ++j)
    out << j << "," << fmt_double(c.positions[j]) << "\n";
}

// Velocity selection grammar: greenshields | bonzani | linear:<v_max> |
// table:<path> (two-column CSV rho,v with rho ascending from 0 to 1).
inline VelocityModel parse_velocity(const std::string& spec) {
  if (spec == "greenshields") return VelocityModel::greenshields();
  if (spec == "bonzani") return VelocityModel::bonzani_mussone();
  if (spec.rfind("linear:", 0) == 0) {
    try {
      return VelocityModel::linear(std::stod(spec.substr(7)));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("bad linear velocity spec: " + spec);
    }
  }
  if (spec.rfind("table:", 0) == 0) {
    const auto rows = detail::read_numeric_csv(spec.substr(6), 2);
    std::vector<double> rho, v;
    for (const auto& r : rows) {
      rho.push_back(r[0]);
      v.push_back(r[1]);
    }
    return VelocityModel::tabulated(std::move(rho), std::move(v));
  }
  throw std::invalid_argument("unknown velocity spec: " + spec +
                              " (expected greenshields|bonzani|linear:<v>|table:<path>)");
}

// rho_bar selection: builtin name or a CSV path.
inline InitialDensity parse_initial_density(const std::string& spec) {
  if (spec == "block") return block_density();
  if (spec == "twolevel") return two_level_density();
  if (spec == "twolevel-offset") return two_level_offset_density();
  if (spec == "uniform") return uniform_density();
  return read_initial_density(spec);
}

}  // namespace ftlab
