#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ftlab/atomize.hpp"
#include "ftlab/density.hpp"
#include "ftlab/dynamics.hpp"
#include "ftlab/godunov.hpp"
#include "ftlab/io.hpp"
#include "ftlab/metrics.hpp"
#include "ftlab/velocity.hpp"
#include "ftlab/version.hpp"

namespace ftlab {

enum class StudyKind { convergence, rate_t0, stability, remark49 };

inline const char* study_kind_name(StudyKind k) {
  switch (k) {
    case StudyKind::convergence: return "convergence";
    case StudyKind::rate_t0: return "rate";
    case StudyKind::stability: return "stability";
    case StudyKind::remark49: return "remark49";
  }
  return "?";
}

struct StudyConfig {
  StudyKind kind = StudyKind::convergence;
  std::string velocity = "greenshields";
  std::string rho_bar = "block";
  std::vector<int> n_list;
  double t_end = 1.0;
  std::vector<double> output_times;  // empty: filled with a default grid
  IntegratorSettings integrator;
  double ref_dx = 0.0;       // 0: min(1e-3, support length / 2000)
  double lipschitz_L = 0.0;  // 0: take the model's constant
  std::string scheme = "dfr";
  std::string out;
  std::string format = "csv";
  unsigned seed = 0;

  void validate() const {
    if (n_list.empty()) throw std::invalid_argument("study: n_list must be non-empty");
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      if (n_list[i] < 1) throw std::invalid_argument("study: n must be >= 1");
      if (i > 0 && n_list[i] <= n_list[i - 1])
        throw std::invalid_argument("study: n_list must strictly ascend");
    }
    if (!(t_end > 0.0)) throw std::invalid_argument("study: t_end must be > 0");
    if (format != "csv" && format != "json")
      throw std::invalid_argument("study: format must be csv or json");
    if (scheme != "dfr" && scheme != "midpoint")
      throw std::invalid_argument("study: scheme must be dfr or midpoint");
  }
};

struct ReportRow {
  int n;
  double t;
  std::string metric;
  double value;
};

struct StudyReport {
  std::vector<ReportRow> rows;
  nlohmann::json config_echo;
  std::string tool_version = kVersion;
  double wall_seconds = 0.0;
  unsigned seed = 0;

  void add(int n, double t, std::string metric, double value) {
    rows.push_back({n, t, std::move(metric), value});
  }

  // every (n, t, metric) combination must be unique
  void check_unique() const {
    std::set<std::tuple<int, double, std::string>> seen;
    for (const auto& r : rows)
      if (!seen.insert({r.n, r.t, r.metric}).second)
        throw NumericError("study report: duplicate row (" + std::to_string(r.n) + "," +
                           std::to_string(r.t) + "," + r.metric + ")");
  }
};

namespace detail {

inline unsigned worker_pool_size(std::size_t jobs) {
  unsigned cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("FTL_LWR_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = unsigned(v);
  }
  return unsigned(std::min<std::size_t>(cap, jobs));
}

// Fan a list of independent jobs over the worker pool; each job writes only
// its own slot, so the merged result does not depend on scheduling.
inline void run_jobs(std::size_t count, const std::function<void(std::size_t)>& job) {
  const unsigned workers = worker_pool_size(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        job(i);
      }
    });
  for (auto& th : pool) th.join();
}

inline std::vector<double> default_output_grid(double t_end, int pieces) {
  std::vector<double> t(std::size_t(pieces) + 1);
  for (int i = 0; i <= pieces; ++i) t[std::size_t(i)] = t_end * double(i) / double(pieces);
  return t;
}

// Per-snapshot invariant monitors: unit mass, ordering with the minimum-gap
// rule, and the density bound from the discrete maximum principle.
inline bool monitors_pass(const ParticleConfig& snap, const ParticleConfig& initial) {
  if (!config_ok(snap, 1e-8)) return false;
  const double mass = eulerian_density(snap).integral();
  if (std::abs(mass - 1.0) > 1e-9) return false;
  double rho_max0 = 0.0;
  for (double r : initial.densities()) rho_max0 = std::max(rho_max0, r);
  for (double r : snap.densities())
    if (r > std::max(1.0, rho_max0) + 1e-8) return false;
  return true;
}

inline ParticleConfig atomize_by_scheme(const InitialDensity& rho_bar, int n,
                                        const std::string& scheme) {
  ParticleConfig cfg = atomize_dfr(rho_bar, n);
  if (scheme == "midpoint") cfg = atomize_midpoint_shift(cfg);
  return cfg;
}

inline nlohmann::json config_to_json(const StudyConfig& cfg) {
  nlohmann::json j;
  j["study"] = study_kind_name(cfg.kind);
  j["velocity"] = cfg.velocity;
  j["rho_bar"] = cfg.rho_bar;
  j["n_list"] = cfg.n_list;
  j["t_end"] = cfg.t_end;
  j["output_times"] = cfg.output_times;
  j["tolerances"] = {{"abs_tol", cfg.integrator.abs_tol},
                     {"rel_tol", cfg.integrator.rel_tol},
                     {"newton_tol", cfg.integrator.newton_tol}};
  j["ref_dx"] = cfg.ref_dx;
  j["scheme"] = cfg.scheme;
  j["out"] = cfg.out;
  j["format"] = cfg.format;
  j["seed"] = cfg.seed;
  return j;
}

// least-squares slope of log(err) against log(n), ignoring zero errors
inline bool loglog_slope(const std::vector<int>& ns, const std::vector<double>& errs,
                         double& slope) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < ns.size(); ++i)
    if (errs[i] > 1e-14) {
      xs.push_back(std::log(double(ns[i])));
      ys.push_back(std::log(errs[i]));
    }
  if (xs.size() < 2) return false;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double k = double(xs.size());
  slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return true;
}

}  // namespace detail

// Micro-to-macro convergence: for each N atomize, evolve, and compare the
// Eulerian discrete density against a fine-grid Godunov reference in L1 and
// W1 at every output time.  TV of the initial discrete density is recorded so
// the (H1)/(H2) hypotheses stay visible in the report.
inline StudyReport run_convergence_study(StudyConfig cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const VelocityModel model = parse_velocity(cfg.velocity);
  const InitialDensity rho_bar = parse_initial_density(cfg.rho_bar);
  if (cfg.output_times.empty()) cfg.output_times = detail::default_output_grid(cfg.t_end, 4);

  const auto supp = rho_bar.support();
  const double dx = cfg.ref_dx > 0.0 ? cfg.ref_dx
                                     : std::min(1e-3, (supp.second - supp.first) / 2000.0);
  const LwrRun ref = solve_lwr(rho_bar, model, cfg.t_end, dx, 0.45, cfg.output_times);
  std::vector<PiecewiseConstantFn> ref_pieces;
  ref_pieces.reserve(ref.snapshots.size());
  for (const auto& g : ref.snapshots) ref_pieces.push_back(g.to_piecewise());

  StudyReport rep;
  rep.seed = cfg.seed;
  rep.config_echo = detail::config_to_json(cfg);

  std::vector<std::vector<ReportRow>> per_n(cfg.n_list.size());
  detail::run_jobs(cfg.n_list.size(), [&](std::size_t i) {
    const int n = cfg.n_list[i];
    auto& rows = per_n[i];
    try {
      const ParticleConfig c0 = detail::atomize_by_scheme(rho_bar, n, cfg.scheme);
      rows.push_back({n, 0.0, "tv_rho0", total_variation(eulerian_density(c0))});
      const Trajectory traj = integrate(c0, model, cfg.t_end, cfg.integrator, cfg.output_times);
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const auto rho = eulerian_density(traj.states[k]);
        rows.push_back({n, traj.times[k], "l1_vs_lwr", l1_distance(rho, ref_pieces[k])});
        rows.push_back({n, traj.times[k], "w1_vs_lwr", w1_distance(rho, ref_pieces[k])});
        rows.push_back(
            {n, traj.times[k], "monitors_ok",
             detail::monitors_pass(traj.states[k], c0) ? 1.0 : 0.0});
      }
    } catch (const std::exception&) {
      rows.push_back({n, 0.0, "integration_failed", 1.0});
    }
  });
  for (auto& rows : per_n)
    for (auto& r : rows) rep.rows.push_back(std::move(r));

  rep.check_unique();
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// Atomization quality at t = 0 for the mass-splitting scheme: W1 and L1
// distances to rho_bar per N, the displayed W1 bound 2(x_max-x_min)/N, and
// fitted log-log slopes.  Exactly reproduced profiles (all-zero errors) are
// flagged as degenerate instead of fitted.
inline StudyReport run_rate_study_t0(StudyConfig cfg) {
  cfg.kind = StudyKind::rate_t0;
  cfg.validate();
  if (cfg.scheme != "dfr") throw std::invalid_argument("rate study: scheme must be dfr");
  const auto t0 = std::chrono::steady_clock::now();
  parse_velocity(cfg.velocity);  // t=0 rates need no dynamics; still validate the spec string
  const InitialDensity rho_bar = parse_initial_density(cfg.rho_bar);
  const auto supp = rho_bar.support();
  const double span = supp.second - supp.first;

  StudyReport rep;
  rep.seed = cfg.seed;
  rep.config_echo = detail::config_to_json(cfg);

  std::vector<double> w1s(cfg.n_list.size()), l1s(cfg.n_list.size());
  detail::run_jobs(cfg.n_list.size(), [&](std::size_t i) {
    const ParticleConfig c0 = atomize_dfr(rho_bar, cfg.n_list[i]);
    const auto rho0 = eulerian_density(c0);
    w1s[i] = w1_distance(rho0, rho_bar.profile);
    l1s[i] = l1_distance(rho0, rho_bar.profile);
  });
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const int n = cfg.n_list[i];
    rep.add(n, 0.0, "w1_rho0_vs_rhobar", w1s[i]);
    rep.add(n, 0.0, "l1_rho0_vs_rhobar", l1s[i]);
    rep.add(n, 0.0, "w1_bound", 2.0 * span / double(n));
  }
  double slope;
  if (detail::loglog_slope(cfg.n_list, w1s, slope))
    rep.add(0, 0.0, "w1_loglog_slope", slope);
  else
    rep.add(0, 0.0, "w1_rate_degenerate", 1.0);
  if (detail::loglog_slope(cfg.n_list, l1s, slope))
    rep.add(0, 0.0, "l1_loglog_slope", slope);
  else
    rep.add(0, 0.0, "l1_rate_degenerate", 1.0);

  rep.check_unique();
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// Stability of two discretization schemes (mass-splitting vs midpoint
// perturbed) of the same datum: W1 and L1 between the evolved Eulerian
// densities at every output time, with the Wasserstein stability bound
// W1(0) + 2 L T sum|gap diffs| recorded alongside.
inline StudyReport run_stability_study(StudyConfig cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const VelocityModel model = parse_velocity(cfg.velocity);
  const InitialDensity rho_bar = parse_initial_density(cfg.rho_bar);
  if (cfg.output_times.empty()) cfg.output_times = detail::default_output_grid(cfg.t_end, 30);
  const double L = cfg.lipschitz_L > 0.0 ? cfg.lipschitz_L : model.lipschitz();

  StudyReport rep;
  rep.seed = cfg.seed;
  rep.config_echo = detail::config_to_json(cfg);

  std::vector<std::vector<ReportRow>> per_n(cfg.n_list.size());
  detail::run_jobs(cfg.n_list.size(), [&](std::size_t i) {
    const int n = cfg.n_list[i];
    auto& rows = per_n[i];
    try {
      const ParticleConfig a0 = atomize_dfr(rho_bar, n);
      const ParticleConfig b0 = atomize_midpoint_shift(a0);
      const double gap_sum = gap_difference_sum(a0, b0);
      const double w1_0 = w1_distance(eulerian_density(a0), eulerian_density(b0));
      const double rhs = w1_0 + 2.0 * L * cfg.t_end * gap_sum;
      rows.push_back({n, 0.0, "gap_diff_sum", gap_sum});
      rows.push_back({n, 0.0, "stability_rhs", rhs});

      const Trajectory ta = integrate(a0, model, cfg.t_end, cfg.integrator, cfg.output_times);
      const Trajectory tb = integrate(b0, model, cfg.t_end, cfg.integrator, cfg.output_times);
      double sup_w1 = 0.0;
      for (std::size_t k = 0; k < cfg.output_times.size(); ++k) {
        const auto ra = eulerian_density(ta.states[k]);
        const auto rb = eulerian_density(tb.states[k]);
        const double w1 = w1_distance(ra, rb);
        sup_w1 = std::max(sup_w1, w1);
        rows.push_back({n, cfg.output_times[k], "w1_pair", w1});
        rows.push_back({n, cfg.output_times[k], "l1_pair", l1_distance(ra, rb)});
        rows.push_back({n, cfg.output_times[k], "monitors_ok",
                        (detail::monitors_pass(ta.states[k], a0) &&
                         detail::monitors_pass(tb.states[k], b0))
                            ? 1.0
                            : 0.0});
      }
      rows.push_back({n, 0.0, "sup_w1", sup_w1});
      rows.push_back({n, 0.0, "stability_ok", sup_w1 <= rhs + 1e-6 ? 1.0 : 0.0});
    } catch (const std::exception&) {
      rows.push_back({n, 0.0, "integration_failed", 1.0});
    }
  });
  for (auto& rows : per_n)
    for (auto& r : rows) rep.rows.push_back(std::move(r));

  rep.check_unique();
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// The Bonzani-Mussone experiment: block datum, N = 5,20,100,500, horizon 3.
inline StudyReport run_remark49_study(StudyConfig cfg) {
  cfg.kind = StudyKind::remark49;
  cfg.velocity = "bonzani";
  cfg.rho_bar = "block";
  cfg.t_end = 3.0;
  if (cfg.n_list.empty()) cfg.n_list = {5, 20, 100, 500};
  if (cfg.output_times.empty()) cfg.output_times = detail::default_output_grid(cfg.t_end, 30);
  return run_stability_study(std::move(cfg));
}

inline StudyReport run_study(StudyConfig cfg) {
  switch (cfg.kind) {
    case StudyKind::convergence: return run_convergence_study(std::move(cfg));
    case StudyKind::rate_t0: return run_rate_study_t0(std::move(cfg));
    case StudyKind::stability: return run_stability_study(std::move(cfg));
    case StudyKind::remark49: return run_remark49_study(std::move(cfg));
  }
  throw std::invalid_argument("unknown study kind");
}

// ---------------------------------------------------------------------------
// Report serialization.  CSV carries the provenance block as leading comment
// lines; JSON mirrors the CSV columns one object per row.

inline void write_report_csv(const StudyReport& rep, std::ostream& out) {
  out << "# tool_version: " << rep.tool_version << "\n";
  out << "# seed: " << rep.seed << "\n";
  out << "# wall_seconds: " << fmt_double(rep.wall_seconds) << "\n";
  out << "# config: " << rep.config_echo.dump() << "\n";
  out << "n,t,metric,value\n";
  for (const auto& r : rep.rows)
    out << r.n << "," << fmt_double(r.t) << "," << r.metric << "," << fmt_double(r.value) << "\n";
}

inline void write_report_json(const StudyReport& rep, std::ostream& out) {
  nlohmann::json j;
  j["provenance"] = {{"tool_version", rep.tool_version},
                     {"seed", rep.seed},
                     {"wall_seconds", rep.wall_seconds},
                     {"config", rep.config_echo}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rep.rows)
    j["rows"].push_back({{"n", r.n}, {"t", r.t}, {"metric", r.metric}, {"value", r.value}});
  out << j.dump(2) << "\n";
}

inline void write_report(const StudyReport& rep, const std::string& path,
                         const std::string& format) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write report: " + path);
  if (format == "json")
    write_report_json(rep, out);
  else
    write_report_csv(rep, out);
}

// JSON study configuration: keys {study, velocity, rho_bar, n_list, t_end,
// output_times, tolerances, out, format}.
inline StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("bad config JSON: " + std::string(e.what()));
  }
  StudyConfig cfg;
  const std::string kind = j.value("study", "convergence");
  if (kind == "convergence") cfg.kind = StudyKind::convergence;
  else if (kind == "rate") cfg.kind = StudyKind::rate_t0;
  else if (kind == "stability") cfg.kind = StudyKind::stability;
  else if (kind == "remark49") cfg.kind = StudyKind::remark49;
  else throw std::invalid_argument("unknown study kind: " + kind);
  cfg.velocity = j.value("velocity", cfg.velocity);
  cfg.rho_bar = j.value("rho_bar", cfg.rho_bar);
  if (j.contains("n_list")) cfg.n_list = j["n_list"].get<std::vector<int>>();
  cfg.t_end = j.value("t_end", cfg.t_end);
  if (j.contains("output_times"))
    cfg.output_times = j["output_times"].get<std::vector<double>>();
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    cfg.integrator.abs_tol = t.value("abs_tol", cfg.integrator.abs_tol);
    cfg.integrator.rel_tol = t.value("rel_tol", cfg.integrator.rel_tol);
    cfg.integrator.newton_tol = t.value("newton_tol", cfg.integrator.newton_tol);
  }
  cfg.ref_dx = j.value("ref_dx", cfg.ref_dx);
  cfg.scheme = j.value("scheme", cfg.scheme);
  cfg.out = j.value("out", cfg.out);
  cfg.format = j.value("format", cfg.format);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

}  // namespace ftlab
