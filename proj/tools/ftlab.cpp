// ftlab: follow-the-leader particle runs, Godunov LWR reference solves, and
// the micro-macro convergence / stability studies, from one command line.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ftlab/atomize.hpp"
#include "ftlab/density.hpp"
#include "ftlab/dynamics.hpp"
#include "ftlab/godunov.hpp"
#include "ftlab/io.hpp"
#include "ftlab/metrics.hpp"
#include "ftlab/study.hpp"
#include "ftlab/version.hpp"

namespace {

// "a:step:b" or a comma-separated list; range checks happen downstream
std::vector<double> parse_times(const std::string& spec) {
  std::vector<double> out;
  if (spec.empty()) return out;
  const auto c1 = spec.find(':');
  if (c1 != std::string::npos) {
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw std::invalid_argument("time grid must be start:step:stop, got " + spec);
    const double a = std::stod(spec.substr(0, c1));
    const double step = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const double b = std::stod(spec.substr(c2 + 1));
    if (!(step > 0.0) || b < a) throw std::invalid_argument("bad time grid: " + spec);
    const int k = int(std::round((b - a) / step));
    for (int i = 0; i <= k; ++i) out.push_back(std::min(a + i * step, b));
    if (out.back() < b) out.push_back(b);
  } else {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  }
  for (std::size_t i = 0; i + 1 < out.size(); ++i)
    if (!(out[i] < out[i + 1])) throw std::invalid_argument("output times must ascend: " + spec);
  return out;
}

ftlab::OdeMethod parse_method(const std::string& m) {
  if (m == "implicit_trapezoid_bdf2") return ftlab::OdeMethod::implicit_trapezoid_bdf2;
  if (m == "backward_euler") return ftlab::OdeMethod::backward_euler;
  if (m == "explicit_rk_oracle") return ftlab::OdeMethod::explicit_rk_oracle;
  throw std::invalid_argument("unknown method: " + m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"follow-the-leader / LWR traffic-flow laboratory"};
  app.set_version_flag("--version", std::string(ftlab::kVersion));
  app.require_subcommand(1);

  // common option storage
  std::string velocity = "greenshields", rho_bar = "block", scheme = "dfr";
  std::string out, format = "csv", times_spec, config_path, method = "implicit_trapezoid_bdf2";
  int n = 10;
  double t_end = 1.0, dx = 1e-3, cfl = 0.45;
  double abs_tol = 1e-10, rel_tol = 1e-8;
  std::vector<int> n_list;

  auto* atomize = app.add_subcommand("atomize", "build initial particle positions from rho_bar");
  atomize->add_option("--rho-bar", rho_bar, "builtin name or CSV path");
  atomize->add_option("--n", n, "number of gaps (N+1 vehicles)")->required();
  atomize->add_option("--scheme", scheme, "dfr|midpoint");
  atomize->add_option("--out", out, "positions CSV (default positions.csv)");

  std::string density_out, cumulative_out;
  auto* simulate = app.add_subcommand("simulate", "integrate the FtL dynamics");
  simulate->add_option("--n", n)->required();
  simulate->add_option("--velocity", velocity);
  simulate->add_option("--rho-bar", rho_bar);
  simulate->add_option("--scheme", scheme);
  simulate->add_option("--t-end", t_end);
  simulate->add_option("--abs-tol", abs_tol);
  simulate->add_option("--rel-tol", rel_tol);
  simulate->add_option("--method", method);
  simulate->add_option("--output-times", times_spec, "a:step:b or comma list");
  simulate->add_option("--out", out, "trajectory CSV (default trajectory.csv)");
  simulate->add_option("--density-out", density_out, "terminal Eulerian density CSV");
  simulate->add_option("--cumulative-out", cumulative_out, "terminal cumulative CSV");

  auto* lwr = app.add_subcommand("lwr", "Godunov reference solve of the LWR equation");
  lwr->add_option("--velocity", velocity);
  lwr->add_option("--rho-bar", rho_bar);
  lwr->add_option("--dx", dx);
  lwr->add_option("--cfl", cfl);
  lwr->add_option("--t-end", t_end);
  lwr->add_option("--out", out, "grid CSV (default lwr.csv)");

  auto* compare = app.add_subcommand("compare",
                                     "particle run vs Godunov reference, metric time series");
  compare->add_option("--n", n)->required();
  compare->add_option("--velocity", velocity);
  compare->add_option("--rho-bar", rho_bar);
  compare->add_option("--scheme", scheme);
  compare->add_option("--t-end", t_end);
  compare->add_option("--dx", dx);
  compare->add_option("--output-times", times_spec);
  compare->add_option("--out", out, "metrics CSV (default compare.csv)");

  auto* study = app.add_subcommand("study", "multi-N studies with machine-readable reports");
  study->require_subcommand(1);
  auto add_study_opts = [&](CLI::App* s) {
    s->add_option("--config", config_path, "JSON study configuration");
    s->add_option("--velocity", velocity);
    s->add_option("--rho-bar", rho_bar);
    s->add_option("--scheme", scheme);
    s->add_option("--n-list", n_list, "particle counts");
    s->add_option("--t-end", t_end);
    s->add_option("--output-times", times_spec);
    s->add_option("--out", out, "report path (default report.<format>)");
    s->add_option("--format", format, "csv|json");
  };
  auto* st_conv = study->add_subcommand("convergence", "L1/W1 against the Godunov reference");
  auto* st_rate = study->add_subcommand("rate", "atomization rates at t=0");
  auto* st_stab = study->add_subcommand("stability", "dfr vs midpoint scheme distances");
  auto* st_r49 = study->add_subcommand("remark49", "Bonzani-Mussone experiment reproduction");
  for (auto* s : {st_conv, st_rate, st_stab, st_r49}) add_study_opts(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (atomize->parsed()) {
      const auto rb = ftlab::parse_initial_density(rho_bar);
      auto cfg = ftlab::atomize_dfr(rb, n);
      if (scheme == "midpoint") {
        std::vector<ftlab::ConfigViolation> viol;
        cfg = ftlab::atomize_midpoint_shift(cfg, &viol);
        for (const auto& v : viol)
          std::cerr << "warning: gap " << v.index << ": " << v.what << " by " << v.magnitude
                    << "\n";
      } else if (scheme != "dfr") {
        throw std::invalid_argument("--scheme must be dfr or midpoint");
      }
      ftlab::write_positions_csv(out.empty() ? "positions.csv" : out, cfg);
    } else if (simulate->parsed()) {
      const auto model = ftlab::parse_velocity(velocity);
      const auto rb = ftlab::parse_initial_density(rho_bar);
      auto cfg = ftlab::atomize_dfr(rb, n);
      if (scheme == "midpoint") cfg = ftlab::atomize_midpoint_shift(cfg);
      ftlab::IntegratorSettings s;
      s.abs_tol = abs_tol;
      s.rel_tol = rel_tol;
      s.method = parse_method(method);
      auto times = parse_times(times_spec);
      if (times.empty())
        for (int i = 0; i <= 100; ++i) times.push_back(t_end * double(i) / 100.0);
      const auto traj = ftlab::integrate(cfg, model, t_end, s, times);
      ftlab::write_trajectory_csv(out.empty() ? "trajectory.csv" : out, traj);
      if (!density_out.empty())
        ftlab::write_density_csv(density_out, ftlab::eulerian_density(traj.states.back()));
      if (!cumulative_out.empty())
        ftlab::write_cumulative_csv(cumulative_out,
                                    ftlab::eulerian_cumulative(traj.states.back()));
    } else if (lwr->parsed()) {
      const auto model = ftlab::parse_velocity(velocity);
      const auto rb = ftlab::parse_initial_density(rho_bar);
      const auto run = ftlab::solve_lwr(rb, model, t_end, dx, cfl);
      ftlab::write_grid_csv(out.empty() ? "lwr.csv" : out, run.snapshots.back());
    } else if (compare->parsed()) {
      const auto model = ftlab::parse_velocity(velocity);
      const auto rb = ftlab::parse_initial_density(rho_bar);
      auto cfg = ftlab::atomize_dfr(rb, n);
      if (scheme == "midpoint") cfg = ftlab::atomize_midpoint_shift(cfg);
      auto times = parse_times(times_spec);
      if (times.empty())
        for (int i = 0; i <= 10; ++i) times.push_back(t_end * double(i) / 10.0);
      const auto traj = ftlab::integrate(cfg, model, t_end, {}, times);
      const auto ref = ftlab::solve_lwr(rb, model, t_end, dx, cfl, times);
      std::ofstream os(out.empty() ? "compare.csv" : out);
      if (!os) throw std::invalid_argument("cannot write output file");
      os << "t,metric,value,n\n";
      for (std::size_t k = 0; k < times.size(); ++k) {
        const auto rho = ftlab::eulerian_density(traj.states[k]);
        const auto refp = ref.snapshots[k].to_piecewise();
        os << ftlab::fmt_double(times[k]) << ",l1_vs_lwr,"
           << ftlab::fmt_double(ftlab::l1_distance(rho, refp)) << "," << n << "\n";
        os << ftlab::fmt_double(times[k]) << ",w1_vs_lwr,"
           << ftlab::fmt_double(ftlab::w1_distance(rho, refp)) << "," << n << "\n";
      }
    } else if (study->parsed()) {
      ftlab::StudyConfig cfg;
      if (!config_path.empty()) cfg = ftlab::load_study_config(config_path);
      if (st_conv->parsed()) cfg.kind = ftlab::StudyKind::convergence;
      if (st_rate->parsed()) cfg.kind = ftlab::StudyKind::rate_t0;
      if (st_stab->parsed()) cfg.kind = ftlab::StudyKind::stability;
      if (st_r49->parsed()) cfg.kind = ftlab::StudyKind::remark49;
      if (config_path.empty()) {
        cfg.velocity = velocity;
        cfg.rho_bar = rho_bar;
        cfg.scheme = scheme;
        cfg.t_end = t_end;
        cfg.n_list = n_list;
        cfg.format = format;
        cfg.output_times = parse_times(times_spec);
      }
      if (cfg.n_list.empty()) {
        switch (cfg.kind) {
          case ftlab::StudyKind::convergence: cfg.n_list = {25, 100, 400}; break;
          case ftlab::StudyKind::rate_t0: cfg.n_list = {16, 32, 64, 128, 256, 512, 1024}; break;
          case ftlab::StudyKind::stability: cfg.n_list = {10, 50}; break;
          case ftlab::StudyKind::remark49: break;  // filled by the study itself
        }
      }
      if (!out.empty()) cfg.out = out;
      if (cfg.out.empty()) cfg.out = std::string("report.") + cfg.format;
      const auto rep = ftlab::run_study(cfg);
      ftlab::write_report(rep, cfg.out, cfg.format);
      std::cout << "wrote " << cfg.out << " (" << rep.rows.size() << " rows, "
                << ftlab::fmt_double(rep.wall_seconds) << "s)\n";
    }
  } catch (const ftlab::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
