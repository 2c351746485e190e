#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ftlab/atomize.hpp"
#include "ftlab/density.hpp"
#include "ftlab/dynamics.hpp"
#include "ftlab/metrics.hpp"
#include "support/oracles.hpp"

using namespace ftlab;

TEST_CASE("Wasserstein distance basics") {
  const auto u = PiecewiseConstantFn(Domain::road, {0.0, 1.0}, {1.0});
  CHECK(w1_distance(u, u) == 0.0);
  const auto shifted = PiecewiseConstantFn(Domain::road, {0.25, 1.25}, {1.0});
  CHECK(w1_distance(u, shifted) == Catch::Approx(0.25).margin(1e-14));
}

TEST_CASE("Wasserstein between two-vehicle densities is 1/8") {
  const auto a = eulerian_density(ParticleConfig({0.0, 0.5, 1.0}));
  const auto b = eulerian_density(ParticleConfig({0.0, 0.25, 1.0}));
  CHECK(w1_distance(a, b) == Catch::Approx(0.125).margin(1e-14));
}

TEST_CASE("Wasserstein rejects mass mismatch") {
  const auto u = PiecewiseConstantFn(Domain::road, {0.0, 1.0}, {1.0});
  const auto half = PiecewiseConstantFn(Domain::road, {0.0, 1.0}, {0.5});
  CHECK_THROWS_AS(w1_distance(u, half), std::invalid_argument);
}

TEST_CASE("Wasserstein agrees with quadrature on random configurations") {
  std::mt19937 rng(99);
  for (int rep = 0; rep < 15; ++rep) {
    const int n = 3 + int(rng() % 12);
    const auto a = oracle::random_config(rng, n);
    const auto b = oracle::random_config(rng, n);
    const auto da = eulerian_density(a), db = eulerian_density(b);
    const double w = w1_distance(da, db);
    const double lo = std::min(da.x_min(), db.x_min()) - 0.1;
    const double hi = std::max(da.x_max(), db.x_max()) + 0.1;
    const double q = oracle::l1_quadrature(cumulative(da), cumulative(db), lo, hi, 100000);
    CHECK(w == Catch::Approx(q).margin(1e-3));
  }
}

TEST_CASE("Wasserstein between empirical measures and densities") {
  const auto cfg = ParticleConfig({0.0, 0.5, 1.0});
  const auto mu = dirac_empirical(cfg);
  CHECK(w1_distance(mu, mu) == 0.0);
  // W1(dirac, eulerian) = l/2 (x_N - x_0) for the same configuration
  const double w = w1_distance(eulerian_density(cfg), mu);
  CHECK(w == Catch::Approx(0.5 / 2.0 * 1.0).margin(1e-14));

  std::mt19937 rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + int(rng() % 25);
    const auto c = oracle::random_config(rng, n);
    const double expect =
        (c.positions.back() - c.positions.front()) / (2.0 * double(n));
    CHECK(w1_distance(eulerian_density(c), dirac_empirical(c)) ==
          Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("Wasserstein between equal-size empirical measures is the mean gap") {
  // for sorted atoms of equal mass the optimal plan is the identity pairing
  std::mt19937 rng(55);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + int(rng() % 25);
    const auto a = oracle::random_config(rng, n);
    const auto b = oracle::random_config(rng, n);
    double expect = 0.0;
    for (int j = 0; j < n; ++j)
      expect += std::abs(a.positions[std::size_t(j)] - b.positions[std::size_t(j)]) / double(n);
    CHECK(w1_distance(dirac_empirical(a), dirac_empirical(b)) ==
          Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("Wasserstein across vacuum regions uses the jumpy pseudo-inverse") {
  const auto rb = InitialDensity(
      PiecewiseConstantFn(Domain::road, {0.0, 0.5, 1.0, 1.5}, {1.0, 0.0, 1.0}));
  const auto c4 = atomize_dfr(rb, 4);
  CHECK(c4.positions == std::vector<double>{0.0, 0.25, 0.5, 1.25, 1.5});
  const auto rho4 = eulerian_density(c4);
  const double w = w1_distance(rho4, rb.profile);  // both transform routes agree inside
  const double q = oracle::l1_quadrature(cumulative(rho4), cumulative(rb.profile), -0.2, 1.7,
                                         200000);
  CHECK(w == Catch::Approx(q).margin(1e-4));
  CHECK(w > 0.0);
}

TEST_CASE("total variation values") {
  CHECK(total_variation(PiecewiseConstantFn(Domain::road, {0.0, 1.0}, {1.0})) == 2.0);
  CHECK(total_variation(PiecewiseConstantFn(Domain::road, {0.0, 0.25, 1.0}, {2.0, 2.0 / 3.0})) ==
        Catch::Approx(4.0).margin(1e-14));
  const auto mid8 = atomize_midpoint_shift(atomize_dfr(block_density(), 8));
  CHECK(total_variation(eulerian_density(mid8)) ==
        Catch::Approx(1.0 + 7.0 * 2.0 / 3.0 + 1.0 / 3.0).margin(1e-12));
}

TEST_CASE("Oleinik residual signs") {
  const auto g = VelocityModel::greenshields();
  // densities non-decreasing in j: v drops ahead, all quotients <= 0
  const auto congesting = ParticleConfig({0.0, 0.8, 1.2, 1.55});
  CHECK(oleinik_residual(congesting, g, 1.0) <= 0.0);
  // rarefying profiles give positive quotients
  const auto rarefying = ParticleConfig({0.0, 0.35, 0.75, 1.55});
  CHECK(oleinik_residual(rarefying, g, 1.0) > 0.0);
  const auto uni = ParticleConfig({0.0, 0.5, 1.0});
  CHECK(oleinik_residual(uni, g, 0.3) == 0.0);
  CHECK_THROWS_AS(oleinik_residual(uni, g, 0.0), std::invalid_argument);
}

TEST_CASE("Lipschitz sup bound") {
  const auto zero = PiecewiseLinearFn::from_nodes({0.0, 1.0}, {0.0, 0.0}, 0.0, 0.0);
  const auto rz = lipschitz_sup_bound(zero);
  CHECK(rz.sup_norm == 0.0);
  CHECK(rz.l1_norm == 0.0);
  CHECK(rz.bound_ok);

  const double h = 0.73;
  const auto tent = PiecewiseLinearFn::from_nodes({0.0, h, 2 * h}, {0.0, h, 0.0}, 0.0, 0.0);
  const auto rt = lipschitz_sup_bound(tent);
  CHECK(rt.sup_norm == h);
  CHECK(rt.l1_norm == Catch::Approx(h * h).margin(1e-14));
  CHECK(rt.bound_ok);  // the extremal profile

  const auto steep = PiecewiseLinearFn::from_nodes({0.0, 0.1, 0.2}, {0.0, 1.0, 0.0}, 0.0, 0.0);
  CHECK_THROWS_AS(lipschitz_sup_bound(steep), std::invalid_argument);
}

TEST_CASE("Lipschitz sup bound holds for 200 random profiles") {
  std::mt19937 rng(2718);
  for (int i = 0; i < 200; ++i) {
    const auto f = oracle::random_lipschitz_fn(rng);
    const auto r = lipschitz_sup_bound(f);
    CHECK(r.bound_ok);
  }
}

TEST_CASE("W1 bound from gap differences with a shared leader") {
  std::mt19937 rng(31);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + int(rng() % 20);
    const auto a = oracle::random_config_with_leader(rng, n, 3.0);
    const auto b = oracle::random_config_with_leader(rng, n, 3.0);
    const double w = w1_distance(eulerian_density(a), eulerian_density(b));
    CHECK(w <= 2.0 * gap_difference_sum(a, b) + 1e-12);
  }
}

TEST_CASE("Wasserstein stability bound along paired runs") {
  const auto g = VelocityModel::greenshields();
  const auto a0 = atomize_dfr(block_density(), 10);
  const auto b0 = atomize_midpoint_shift(a0);
  const double T = 1.0;
  std::vector<double> times;
  for (int i = 0; i <= 10; ++i) times.push_back(T * i / 10.0);
  const auto ta = integrate(a0, g, T, {}, times);
  const auto tb = integrate(b0, g, T, {}, times);
  const double rhs = w1_distance(eulerian_density(a0), eulerian_density(b0)) +
                     2.0 * 1.0 * T * gap_difference_sum(a0, b0);
  for (std::size_t k = 0; k < times.size(); ++k)
    CHECK(w1_distance(eulerian_density(ta.states[k]), eulerian_density(tb.states[k])) <=
          rhs + 1e-6);
}

TEST_CASE("BV contraction and Eulerian-Lagrangian TV equality") {
  const auto g = VelocityModel::greenshields();
  const auto c0 = atomize_dfr(two_level_density(), 20);
  std::vector<double> times;
  for (int i = 0; i <= 8; ++i) times.push_back(1.6 * i / 8.0);
  const auto traj = integrate(c0, g, 1.6, {}, times);
  const double tv0 = total_variation(eulerian_density(c0));
  CHECK(tv0 == Catch::Approx(2.0).margin(1e-12));
  for (const auto& s : traj.states) {
    const double tv = total_variation(eulerian_density(s));
    CHECK(tv <= tv0 + 1e-8);
    CHECK(tv == Catch::Approx(total_variation(lagrangian_profiles(s).rho)).margin(1e-13));
  }
}

TEST_CASE("uniform BV bound on v(rho) for (V2) velocities") {
  const auto g = VelocityModel::greenshields();
  const auto c0 = atomize_midpoint_shift(atomize_dfr(block_density(), 40));
  const double delta = 0.25;
  const double measK = c0.positions.back() - c0.positions.front();
  std::vector<double> times{delta, 0.5, 1.0, 2.0};
  const auto traj = integrate(c0, g, 2.0, {}, times);
  for (const auto& s : traj.states)
    CHECK(velocity_profile_tv(s, g) <= 3.0 * g.v_max() + 2.0 * measK / delta);
}

TEST_CASE("interpolation bound with measured constants") {
  const auto g = VelocityModel::greenshields();
  const auto a0 = atomize_dfr(two_level_density(), 16);
  const auto b0 = atomize_midpoint_shift(a0);
  const double T = 1.0;
  std::vector<double> times;
  for (int i = 0; i <= 10; ++i) times.push_back(T * i / 10.0);
  const auto ta = integrate(a0, g, T, {}, times);
  const auto tb = integrate(b0, g, T, {}, times);

  const double measKT =
      (a0.positions.back() + T * g.v_max()) - a0.positions.front();
  double sup_w1 = 0.0, tv_sum_max = 0.0;
  std::vector<double> l1s;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto ra = eulerian_density(ta.states[k]);
    const auto rb = eulerian_density(tb.states[k]);
    sup_w1 = std::max(sup_w1, w1_distance(ra, rb));
    tv_sum_max = std::max(tv_sum_max, total_variation(ra) + total_variation(rb));
    l1s.push_back(l1_distance(ra, rb));
  }
  const double C_T = measKT * tv_sum_max / 2.0;
  for (double l1 : l1s) CHECK(l1 * l1 <= 2.0 * C_T * std::sqrt(sup_w1) + 1e-9);
}

TEST_CASE("identical runs give zero distances") {
  const auto g = VelocityModel::greenshields();
  const auto c0 = atomize_dfr(block_density(), 9);
  const auto t1 = integrate(c0, g, 1.0, {}, {0.0, 1.0});
  const auto t2 = integrate(c0, g, 1.0, {}, {0.0, 1.0});
  CHECK(w1_distance(eulerian_density(t1.states[1]), eulerian_density(t2.states[1])) == 0.0);
  CHECK(l1_distance(eulerian_density(t1.states[1]), eulerian_density(t2.states[1])) == 0.0);
}
