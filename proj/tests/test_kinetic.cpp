#include <doctest.h>

#include <cmath>
#include <random>

#include "oscillax/kinetic_tools.hpp"

using namespace oscillax;

namespace {

MeasureAtomic two_atoms(double x, double y, double wx) {
  return MeasureAtomic({{x, wx}, {y, 1 - wx}});
}

KineticField single_row(const Eigen::RowVectorXd& row, const XiGrid& xi) {
  KineticField f;
  f.x = Eigen::VectorXd::Zero(1);
  f.xi = xi;
  f.F = row;
  return f;
}

}  // namespace

TEST_CASE("covering grid lands on multiples of the step") {
  const XiGrid g = XiGrid::covering(-1.3, 2.2, 0.25);
  CHECK(g.lo == -1.5);
  CHECK(g.hi() == 2.25);
  CHECK(g.size == 16);
  CHECK_THROWS_AS(XiGrid::covering(1, 0, 0.1), std::invalid_argument);
}

TEST_CASE("on-node atoms project to the exact distribution function") {
  const XiGrid xi = XiGrid::covering(-2, 6, 0.25);
  const MeasureAtomic nu({{1.0, 0.25}, {2.5, 0.5}, {3.0, 0.25}});
  const Eigen::RowVectorXd F = cdf_from_measure(nu, xi);
  for (int k = 0; k < xi.size; ++k) CHECK(F(k) == doctest::Approx(nu.cdf(xi.node(k))).epsilon(1e-15));
}

TEST_CASE("cloud-in-cell projection preserves the mean") {
  const XiGrid xi = XiGrid::covering(-2, 6, 0.1);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.5, 5.5);
  for (int trial = 0; trial < 20; ++trial) {
    const MeasureAtomic nu({{U(rng), 0.2}, {U(rng), 0.3}, {U(rng), 0.5}});
    const Eigen::RowVectorXd F = cdf_from_measure(nu, xi);
    CHECK(mean_from_row(F, xi) == doctest::Approx(nu.mean()).epsilon(1e-12));
    CHECK(atomic_moment_row(F, xi, [](double s) { return s; }) == doctest::Approx(nu.mean()).epsilon(1e-12));
  }
}

TEST_CASE("values outside the grid are rejected") {
  const XiGrid xi{0, 1, 5};
  CHECK_THROWS_AS(cdf_from_measure(MeasureAtomic({{0.5, 1}}), xi), std::domain_error);
  CHECK_THROWS_AS(cdf_from_measure(MeasureAtomic({{4.5, 1}}), xi), std::domain_error);
  CHECK_NOTHROW(cdf_from_measure(MeasureAtomic({{4.0, 1}}), xi));
  Eigen::RowVectorXd bad = Eigen::RowVectorXd::Zero(5);
  CHECK_THROWS_AS(mean_from_row(bad, xi), std::domain_error);
}

TEST_CASE("empirical kinetic function counts window values") {
  Grid1D g{16};
  Eigen::VectorXd u(16);
  for (int i = 0; i < 16; ++i) u(i) = (i % 4 == 0) ? 1.0 : 3.0;
  const XiGrid xi = XiGrid::covering(-1, 5, 0.5);
  const KineticField f = empirical_kinetic_function(u, g, xi, 8, 4, 4);
  REQUIRE(f.rows() == 3);
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < xi.size; ++k) {
      // counting oracle
      int below = 0;
      for (int i = 4 * r; i < 4 * r + 8; ++i) below += u(i) <= xi.node(k);
      CHECK(f.F(r, k) == doctest::Approx(below / 8.0).epsilon(1e-15));
    }
    CHECK(f.x(r) == doctest::Approx((4 * r + 4) / 16.0));
  }
  CHECK_THROWS_AS(empirical_kinetic_function(u, g, xi, 6, 1, 4), std::invalid_argument);
  CHECK_THROWS_AS(empirical_kinetic_function(u, g, xi, 17), std::invalid_argument);
}

TEST_CASE("mean of the empirical function equals the window average") {
  Grid1D g{64};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.7, 3.9);
  Eigen::VectorXd u(64);
  for (auto& x : u) x = U(rng);
  const XiGrid xi = XiGrid::covering(-1, 4, 1.0 / 64);
  const KineticField f = empirical_kinetic_function(u, g, xi, 16, 3);
  const Eigen::VectorXd avg = window_average(u, 16, 3, [](double s) { return s; });
  CHECK((mean_from_F(f) - avg).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("means of simple measures") {
  const XiGrid xi = XiGrid::covering(-1, 4, 0.25);
  CHECK(mean_from_row(cdf_from_measure(MeasureAtomic({{2.5, 1}}), xi), xi) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(mean_from_row(cdf_from_measure(two_atoms(1, 3, 0.5), xi), xi) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mean_from_row(cdf_from_measure(two_atoms(1, 3, 0.75), xi), xi) == doctest::Approx(1.5).epsilon(1e-15));
  // grids entirely on one side of zero
  const XiGrid pos{0.5, 0.25, 20}, neg{-6, 0.25, 20};
  CHECK(mean_from_row(cdf_from_measure(two_atoms(1, 3, 0.75), pos), pos) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(mean_from_row(cdf_from_measure(two_atoms(-5, -2, 0.5), neg), neg) == doctest::Approx(-3.5).epsilon(1e-14));
}

TEST_CASE("duality: moments by parts against moments by summation and against the measure") {
  // bumps c (s - a)^2 (b - s)^2 on [a, b] with a, b on nodes
  const double step = 1.0 / 32;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.5, 4.5), C(-2, 2);
  for (const XiGrid xi : {XiGrid::covering(-2, 5, step), XiGrid{0.25, step, 200}, XiGrid{-8, step, 200}}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::uniform_int_distribution<int> node(0, xi.size - 1);
      int ka = node(rng), kb = node(rng);
      if (ka == kb) kb = ka > 7 ? ka - 7 : ka + 7;
      const double a = xi.node(std::min(ka, kb)), b = xi.node(std::max(ka, kb)), c = C(rng);
      auto f = [=](double s) { return s <= a || s >= b ? 0.0 : c * (s - a) * (s - a) * (b - s) * (b - s); };
      auto fp = [=](double s) {
        return s <= a || s >= b ? 0.0 : c * 2 * (s - a) * (b - s) * ((b - s) - (s - a));
      };
      // |f''| <= 2 |c| (b - a)^2 on [a, b]
      const double f2max = 2 * std::abs(c) * (b - a) * (b - a);
      std::vector<Atom> atoms;
      for (int i = 0; i < 5; ++i) {
        double loc = U(rng);
        loc = std::clamp(loc, xi.node(1), xi.hi());
        atoms.push_back({loc, 0.2});
      }
      const MeasureAtomic nu(atoms);
      const Eigen::RowVectorXd F = cdf_from_measure(nu, xi);
      const double by_parts = moment_row(F, xi, f, fp);
      const double by_sum = atomic_moment_row(F, xi, f);
      CHECK(by_parts == doctest::Approx(by_sum).epsilon(1e-12).scale(1 + std::abs(c)));
      CHECK(std::abs(by_sum - nu.expect(f)) <= step * step / 8 * f2max + 1e-13);
    }
  }
}

TEST_CASE("measure distance matches the exact W1 and is one between unit-apart Diracs") {
  const XiGrid xi = XiGrid::covering(-1, 5, 0.125);
  const MeasureAtomic p({{0.5, 0.25}, {2.0, 0.75}}), q({{1.0, 0.5}, {3.25, 0.5}});
  const auto A = single_row(cdf_from_measure(p, xi), xi);
  const auto B = single_row(cdf_from_measure(q, xi), xi);
  CHECK(measure_distance(A, B) == doctest::Approx(wasserstein1(p, q)).epsilon(1e-14));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  const auto H0 = heaviside_field(x, Eigen::VectorXd::Constant(1, 0.0), xi);
  const auto H1 = heaviside_field(x, Eigen::VectorXd::Constant(1, 1.0), xi);
  CHECK(measure_distance(H0, H1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(measure_distance(H0, H0) == 0);
  CHECK(check_invariants(H0).total() == 0);
  CHECK(check_invariants_active(H1).total() == 0);
}

TEST_CASE("isotonic projection") {
  const XiGrid xi{0, 1, 6};
  Eigen::RowVectorXd row(6);
  row << 0, 0.6, 0.4, 0.5, 1.2, 1;
  KineticField f = single_row(row, xi);
  CHECK(check_invariants(f).range == 1);
  CHECK(check_invariants(f).monotone == 2);
  CHECK(isotonic_projection(f) == 1);
  // PAV: (0.6, 0.4, 0.5) pools to 0.5, (1.2, 1) pools to 1.1, then clamps to 1
  CHECK(f.F(0, 1) == doctest::Approx(0.5));
  CHECK(f.F(0, 2) == doctest::Approx(0.5));
  CHECK(f.F(0, 3) == doctest::Approx(0.5));
  CHECK(f.F(0, 4) == 1.0);
  CHECK(check_invariants(f).total() == 0);
  const RowMatrix before = f.F;
  CHECK(isotonic_projection(f) == 0);
  CHECK(f.F == before);
}
