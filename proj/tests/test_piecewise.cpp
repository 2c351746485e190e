#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ftlab/piecewise.hpp"
#include "support/oracles.hpp"

using namespace ftlab;

namespace {
PiecewiseConstantFn box(double a, double b, double v = 1.0) {
  return PiecewiseConstantFn(Domain::road, {a, b}, {v});
}
}  // namespace

TEST_CASE("piecewise-constant basics") {
  const auto f = PiecewiseConstantFn(Domain::road, {0.0, 0.25, 1.0}, {2.0, 2.0 / 3.0});
  CHECK(f.value_at(0.1) == 2.0);
  CHECK(f.value_at(0.25) == 2.0 / 3.0);  // right-open cells
  CHECK(f.value_at(1.0) == 0.0);
  CHECK(f.value_at(-0.5) == 0.0);
  CHECK(f.integral() == Catch::Approx(1.0).margin(1e-15));

  CHECK_THROWS_AS(PiecewiseConstantFn(Domain::road, {0.0, 0.0, 1.0}, {1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseConstantFn(Domain::road, {0.0, 1.0}, {1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("total variation counts both boundary jumps") {
  CHECK(box(0, 1).total_variation() == 2.0);
  const auto f = PiecewiseConstantFn(Domain::road, {0.0, 0.25, 1.0}, {2.0, 2.0 / 3.0});
  CHECK(f.total_variation() == Catch::Approx(4.0).margin(1e-14));
  // zero cells at the edges do not change the variation
  const auto g = PiecewiseConstantFn(Domain::road, {-1.0, 0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
  CHECK(g.total_variation() == 2.0);
}

TEST_CASE("lp distances over merged breakpoints") {
  CHECK(lp_distance(box(0, 1), box(0, 1), 1.0) == 0.0);
  CHECK(lp_distance(box(0, 1), box(1, 2), 1.0) == 2.0);
  const auto f = PiecewiseConstantFn(Domain::road, {0.0, 0.25, 1.0}, {2.0, 2.0 / 3.0});
  CHECK(lp_distance(f, box(0, 1), 1.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(lp_distance(f, box(0, 1), std::numeric_limits<double>::infinity()) ==
        Catch::Approx(1.0).margin(1e-15));
  const double l2 = lp_distance(f, box(0, 1), 2.0);
  CHECK(l2 * l2 == Catch::Approx(0.25 + 0.75 / 9.0).margin(1e-14));

  auto mass_fn = PiecewiseConstantFn(Domain::mass, {0.0, 1.0}, {1.0});
  CHECK_THROWS_AS(lp_distance(mass_fn, box(0, 1), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lp_distance(box(0, 1), box(0, 1), 3.0), std::invalid_argument);
}

TEST_CASE("cumulative of a density is continuous piecewise linear") {
  const auto F = cumulative(box(0, 1));
  CHECK(F.value(-1.0) == 0.0);
  CHECK(F.value(0.5) == 0.5);
  CHECK(F.value(2.0) == 1.0);
  CHECK(F.is_continuous(0.0));
  CHECK(F.is_non_decreasing(0.0));

  CHECK_THROWS_AS(cumulative(box(0, 1, 0.7)), std::invalid_argument);  // mass != 1
}

TEST_CASE("pseudo-inverse of the identity cumulative is the identity") {
  const auto X = pseudo_inverse(cumulative(box(0, 1)));
  for (double z : {0.0, 0.125, 0.5, 0.99})
    CHECK(X.value(z) == Catch::Approx(z).margin(1e-15));
}

TEST_CASE("pseudo-inverse jumps across vacuum") {
  // density 1 on [0,1/2], vacuum on [1/2,1], 1 on [1,3/2]
  const auto rho =
      PiecewiseConstantFn(Domain::road, {0.0, 0.5, 1.0, 1.5}, {1.0, 0.0, 1.0});
  const auto X = pseudo_inverse(cumulative(rho));
  CHECK(X.value_left(0.5) == Catch::Approx(0.5).margin(1e-15));
  CHECK(X.value(0.5) == Catch::Approx(1.0).margin(1e-15));  // right limit after the jump
  CHECK(X.value(0.25) == Catch::Approx(0.25).margin(1e-15));
  CHECK(X.value(0.75) == Catch::Approx(1.25).margin(1e-15));
}

TEST_CASE("pseudo-inverse round trips at sample points") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto rho = PiecewiseConstantFn(Domain::road, {0.0, 0.5, 1.0, 1.5, 3.0},
                                       {0.8, 0.0, 0.6, 0.2});
  const auto F = cumulative(rho);
  const auto X = pseudo_inverse(F);
  // the inf definition reads X left-continuously at vacuum jumps
  for (int i = 0; i < 500; ++i) {
    const double z = u(rng);
    CHECK(F.value(X.value_left(z)) >= z - 1e-12);
    const double x = 3.0 * u(rng);
    CHECK(X.value_left(F.value(x)) <= x + 1e-12);
  }
}

TEST_CASE("atomic measure cumulative is a right-continuous step function") {
  const AtomicMeasure mu({0.0, 0.5});
  CHECK(mu.total_mass() == Catch::Approx(1.0).margin(1e-15));
  const auto F = cumulative(mu);
  CHECK(F.value(-0.1) == 0.0);
  CHECK(F.value(0.0) == 0.5);
  CHECK(F.value(0.3) == 0.5);
  CHECK(F.value(0.5) == 1.0);
  CHECK(F.value(9.0) == 1.0);

  CHECK_THROWS_AS(AtomicMeasure({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("piecewise-linear L1 distance agrees with quadrature") {
  std::mt19937 rng(123);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = oracle::random_config(rng, 5 + rep % 7);
    const auto b = oracle::random_config(rng, 5 + rep % 7);
    std::vector<double> na(a.positions), nb(b.positions);
    // compare cumulative-style functions built from the node sets
    std::vector<double> va(na.size()), vb(nb.size());
    for (std::size_t i = 0; i < va.size(); ++i) va[i] = double(i) / double(va.size() - 1);
    for (std::size_t i = 0; i < vb.size(); ++i) vb[i] = double(i) / double(vb.size() - 1);
    const auto fa = PiecewiseLinearFn::from_nodes(na, va, 0.0, 1.0);
    const auto fb = PiecewiseLinearFn::from_nodes(nb, vb, 0.0, 1.0);
    const double exact = l1_distance(fa, fb);
    const double lo = std::min(na.front(), nb.front()) - 0.5;
    const double hi = std::max(na.back(), nb.back()) + 0.5;
    const double approx = oracle::l1_quadrature(fa, fb, lo, hi, 200000);
    CHECK(exact == Catch::Approx(approx).margin(5e-4));
  }
}

TEST_CASE("l1_norm and sup_norm of a tent") {
  const auto tent = PiecewiseLinearFn::from_nodes({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}, 0.0, 0.0);
  CHECK(l1_norm(tent) == Catch::Approx(1.0).margin(1e-15));
  CHECK(sup_norm(tent) == 1.0);
  CHECK(tent.max_abs_slope() == Catch::Approx(1.0).margin(1e-15));
}
