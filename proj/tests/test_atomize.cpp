#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ftlab/atomize.hpp"
#include "ftlab/density.hpp"
#include "ftlab/metrics.hpp"

using namespace ftlab;

namespace {

void check_positions(const ParticleConfig& c, const std::vector<double>& expected,
                     double tol = 1e-12) {
  REQUIRE(c.positions.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(c.positions[i] == Catch::Approx(expected[i]).margin(tol));
}

// exact rho_bar mass of [a, b]
double profile_mass(const PiecewiseConstantFn& p, double a, double b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    const double lo = std::max(a, p.breaks[k]), hi = std::min(b, p.breaks[k + 1]);
    if (hi > lo) acc += p.values[k] * (hi - lo);
  }
  return acc;
}

InitialDensity random_profile(std::mt19937& rng) {
  std::uniform_int_distribution<int> ncells(1, 6);
  std::uniform_real_distribution<double> width(0.2, 1.5);
  std::uniform_real_distribution<double> level(0.05, 1.0);
  const int m = ncells(rng);
  std::vector<double> b{0.0}, v;
  for (int i = 0; i < m; ++i) {
    b.push_back(b.back() + width(rng));
    v.push_back(level(rng));
  }
  double mass = 0.0;
  for (int i = 0; i < m; ++i) mass += v[std::size_t(i)] * (b[std::size_t(i) + 1] - b[std::size_t(i)]);
  for (auto& x : b) x /= mass;  // stretch the axis so the mass is exactly 1, values unchanged
  return InitialDensity(PiecewiseConstantFn(Domain::road, std::move(b), std::move(v)));
}

}  // namespace

TEST_CASE("mass splitting of uniform profiles") {
  check_positions(atomize_dfr(uniform_density(), 2), {0.0, 0.5, 1.0});
  check_positions(atomize_dfr(block_density(), 2), {0.5, 1.5, 2.5});
  check_positions(atomize_dfr(block_density(), 4), {0.5, 1.0, 1.5, 2.0, 2.5});
}

TEST_CASE("mass splitting inverts the cumulative of a two-level profile") {
  const auto rb = InitialDensity(
      PiecewiseConstantFn(Domain::road, {0.0, 0.5, 1.5}, {1.0, 0.5}));
  check_positions(atomize_dfr(rb, 2), {0.0, 0.5, 1.5});
}

TEST_CASE("vehicles sit at the left edge of vacuum regions") {
  const auto rb = InitialDensity(
      PiecewiseConstantFn(Domain::road, {0.0, 0.5, 1.0, 1.5}, {1.0, 0.0, 1.0}));
  check_positions(atomize_dfr(rb, 2), {0.0, 0.5, 1.5});
  // leading and trailing zero cells are outside the support
  const auto padded = InitialDensity(
      PiecewiseConstantFn(Domain::road, {-1.0, 0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}));
  check_positions(atomize_dfr(padded, 4), {0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("mass splitting endpoints and exact per-cell masses") {
  std::mt19937 rng(2024);
  for (int rep = 0; rep < 40; ++rep) {
    const auto rb = random_profile(rng);
    const int n = 1 + int(rng() % 40);
    const auto cfg = atomize_dfr(rb, n);
    const auto supp = rb.support();
    CHECK(cfg.positions.front() == supp.first);
    CHECK(cfg.positions.back() == supp.second);
    for (int j = 0; j < cfg.n; ++j) {
      const double mass = profile_mass(rb.profile, cfg.positions[std::size_t(j)],
                                       cfg.positions[std::size_t(j) + 1]);
      CHECK(mass == Catch::Approx(1.0 / n).margin(1e-12));
    }
  }
}

TEST_CASE("midpoint shift formula") {
  std::vector<ConfigViolation> viol;
  const auto a = atomize_midpoint_shift(ParticleConfig({0.0, 0.5, 1.0}), &viol);
  check_positions(a, {0.0, 0.25, 1.0});
  CHECK_FALSE(viol.empty());  // gap 0.25 < l = 0.5 is reported, not repaired

  const auto b = atomize_midpoint_shift(ParticleConfig({0.0, 1.0, 2.0, 3.0}), &viol);
  check_positions(b, {0.0, 0.5, 2.0, 3.0});
  CHECK(viol.empty());

  const auto c = atomize_midpoint_shift(atomize_dfr(block_density(), 4));
  check_positions(c, {0.5, 0.75, 1.5, 1.75, 2.5});
}

TEST_CASE("midpoint shift fixes even indices and the leader; twice is not the identity") {
  const auto base = atomize_dfr(block_density(), 8);
  const auto once = atomize_midpoint_shift(base);
  const auto twice = atomize_midpoint_shift(once);
  for (int j = 0; j <= base.n; j += 2)
    CHECK(once.positions[std::size_t(j)] == base.positions[std::size_t(j)]);
  CHECK(once.positions.back() == base.positions.back());
  bool same = true;
  for (std::size_t i = 0; i < once.positions.size(); ++i)
    same = same && twice.positions[i] == base.positions[i];
  CHECK_FALSE(same);
  for (int j = 0; j <= base.n; j += 2)
    CHECK(twice.positions[std::size_t(j)] == once.positions[std::size_t(j)]);
}

TEST_CASE("config validation lists violations") {
  CHECK(validate_config(ParticleConfig({0.0, 0.5, 1.0})).empty());
  const auto v1 = validate_config(ParticleConfig({0.0, 0.2, 1.0}));
  REQUIRE(v1.size() == 1);
  CHECK(v1[0].index == 0);
  CHECK(v1[0].magnitude == Catch::Approx(0.3).margin(1e-15));
  const auto v2 = validate_config(ParticleConfig({0.0, 0.0, 1.0}));
  REQUIRE_FALSE(v2.empty());
  CHECK(v2[0].what.find("increasing") != std::string::npos);
}

TEST_CASE("midpoint scheme total variation grows linearly in N") {
  double tv8 = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const auto cfg = atomize_midpoint_shift(atomize_dfr(block_density(), n));
    const double tv = total_variation(eulerian_density(cfg));
    CHECK(tv >= double(n) / 4.0);
    if (n == 8) tv8 = tv;
  }
  // alternating cells at 1 and 1/3: N-1 interior jumps of 2/3 plus boundaries
  CHECK(tv8 == Catch::Approx(1.0 + 7.0 * (2.0 / 3.0) + 1.0 / 3.0).margin(1e-12));
}

TEST_CASE("initial density validation") {
  CHECK_THROWS_AS(
      InitialDensity(PiecewiseConstantFn(Domain::road, {0.0, 1.0}, {0.5})),  // mass 1/2
      std::invalid_argument);
  CHECK_THROWS_AS(
      InitialDensity(PiecewiseConstantFn(Domain::road, {0.0, 0.5}, {2.0})),  // value > 1
      std::invalid_argument);
  CHECK_THROWS_AS(atomize_dfr(uniform_density(), 0), std::invalid_argument);
}
