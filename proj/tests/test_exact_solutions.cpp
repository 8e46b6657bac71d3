#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oscillax/exact_solutions.hpp"
#include "oscillax/quadrature.hpp"
#include "oscillax/weak_verifier.hpp"

using namespace oscillax;

namespace {

// int_0^x W(t, s) ds by Gauss-Legendre split at the phase boundaries
double flow_map_oracle(const ExactSolutionParams& p, double t, double x) {
  std::vector<double> cuts{0.0};
  for (int k = 0; k <= std::ceil(x); ++k) {
    for (double c : {double(k), k + p.theta}) {
      if (c > 0 && c < x) cuts.push_back(c);
    }
  }
  cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  const GaussLegendre<double> gl(2);
  double s = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    s += gl.integrate([&](double z) { return lagrangian_periodic(p, t, z).W; }, cuts[i], cuts[i + 1]);
  }
  return s;
}

double ball_volume(int d, double r) {
  const double unit = d == 1 ? 2.0 : d == 2 ? std::numbers::pi : 4 * std::numbers::pi / 3;
  return unit * std::pow(r, d);
}

}  // namespace

TEST_CASE("Lagrangian solution: strain is a t or b t by phase") {
  const ExactSolutionParams p{1, 3, 0.4, 1, 1, 0};
  const auto s = lagrangian_periodic(p, 1.5, 2.1);
  CHECK(s.phase == Phase::A);
  CHECK(s.W == doctest::Approx(1.5));
  CHECK(lagrangian_periodic(p, 1.5, 2.7).W == doctest::Approx(4.5));
  const ExactSolutionParams half{1, 3, 0.5, 1, 1, 0};
  CHECK(lagrangian_periodic(half, 1.5, 2.5).phase == Phase::Interface);
  CHECK(lagrangian_periodic(half, 1.5, 3.0).phase == Phase::Interface);
}

TEST_CASE("Lagrangian flow map integrates the strain and its time derivative is the velocity") {
  const ExactSolutionParams p{1, 8, 0.5, 1, 1, 0};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> X(0, 4), T(1.01, 1.99);
  for (int i = 0; i < 200; ++i) {
    const double x = X(rng), t = T(rng);
    const auto s = lagrangian_periodic(p, t, x);
    CHECK(s.Y == doctest::Approx(flow_map_oracle(p, t, x)).epsilon(1e-12));
    const double h = 1e-6;
    const double Yt = (lagrangian_periodic(p, t + h, x).Y - lagrangian_periodic(p, t - h, x).Y) / (2 * h);
    CHECK(s.V == doctest::Approx(Yt).epsilon(1e-8));
    // mass conservation in Lagrangian form: W_t = V_x
    const double Wt = (lagrangian_periodic(p, t + h, x).W - lagrangian_periodic(p, t - h, x).W) / (2 * h);
    CHECK(s.V_x == doctest::Approx(Wt).epsilon(1e-8));
  }
}

TEST_CASE("one-sided limits pick the neighbouring phases") {
  const ExactSolutionParams p{1, 3, 0.5, 1, 1, 0};
  CHECK(lagrangian_one_sided(p, 1, 2.0, Side::Left).W == doctest::Approx(3));
  CHECK(lagrangian_one_sided(p, 1, 2.0, Side::Right).W == doctest::Approx(1));
  CHECK(lagrangian_one_sided(p, 1, 2.5, Side::Left).W == doctest::Approx(1));
  CHECK(lagrangian_one_sided(p, 1, 2.5, Side::Right).W == doctest::Approx(3));
  // the flow map is continuous across interfaces
  CHECK(lagrangian_one_sided(p, 1.3, 2.5, Side::Left).Y ==
        doctest::Approx(lagrangian_one_sided(p, 1.3, 2.5, Side::Right).Y));
}

TEST_CASE("Eulerian 1D fields are the Lagrangian ones pushed through the flow map") {
  const ExactSolutionParams p{1, 3, 0.3, 1, 1, 0};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> X(0, 5), T(1, 2);
  for (int i = 0; i < 300; ++i) {
    const double x = X(rng), t = T(rng);
    const auto L = lagrangian_periodic(p, t, x);
    if (L.phase == Phase::Interface) continue;
    const auto E = eulerian_1d(p, t, L.Y);
    CHECK(E.rho == doctest::Approx(1 / L.W).epsilon(1e-13));
    CHECK(E.u == doctest::Approx(L.V).epsilon(1e-13));
  }
}

TEST_CASE("mass in a ball matches the closed form of the annulus structure") {
  for (int d : {1, 2, 3}) {
    const ExactSolutionParams p{1, 9, 0.5, d, 1, 0};
    for (int n : {1, 3}) {
      for (double t : {1.0, 1.37, 2.0}) {
        const double R = 1.73;
        // oracle: sum over whole and partial annuli, radii (k + {0, theta}) t / n
        double oracle = 0;
        const double td = std::pow(t, d);
        for (int k = 0; k * t / n < R; ++k) {
          const double r0 = k * t / n, r1 = std::min((k + p.theta) * t / n, R), r2 = std::min((k + 1) * t / n, R);
          oracle += p.a / td * (ball_volume(d, r1) - ball_volume(d, r0));
          if (r2 > r1) oracle += p.b / td * (ball_volume(d, r2) - ball_volume(d, r1));
        }
        const double got = integrate_density_ball(p, n, t, R, QuadratureSpec{});
        CHECK(got == doctest::Approx(oracle).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("radial solution: velocity y/t and density by annulus") {
  const ExactSolutionParams p{1, 8, 0.5, 2, 1, 0};
  Point y(2);
  y << 0.3, 0.4;  // |y| = 0.5
  const auto s = radial_md(p, 1.0, y);
  CHECK(s.phase == Phase::Interface);
  CHECK(s.rho == doctest::Approx(8.0));  // right limit
  CHECK((s.u - y).norm() < 1e-15);
  y << 0.3, 0.0;
  CHECK(radial_md(p, 1.0, y).rho == doctest::Approx(1.0));
  CHECK(rescale_eulerian(p, 2, 1.0, y).rho == doctest::Approx(8.0));  // 2 * 0.3 = 0.6 -> second half of a period
  CHECK(rescale_eulerian(p, 4, 1.0, y).rho == doctest::Approx(1.0));  // 1.2 -> first half
  CHECK(rescale_eulerian(p, 4, 1.0, y).u(0) == doctest::Approx(0.3));
}

TEST_CASE("pressureless uniform expansion and the Young-measure limit") {
  Point y(3);
  y << 1, 2, 2;
  const auto s = pressureless_uniform(2.0, 3, 2.0, y);
  CHECK(s.rho == doctest::Approx(0.25));
  CHECK(s.u(2) == doctest::Approx(1.0));
  const ExactSolutionParams p{1, 8, 0.25, 2, 1, 0};
  const MeasureAtomic nu = young_measure_limit(p, 2.0);
  REQUIRE(nu.atoms().size() == 2);
  CHECK(nu.atoms()[0].location == doctest::Approx(0.25));
  CHECK(nu.atoms()[1].location == doctest::Approx(2.0));
  CHECK(nu.atoms()[0].weight == doctest::Approx(0.25));
}

TEST_CASE("exact solutions live on t in [1, 2] and validate their parameters") {
  const ExactSolutionParams p{};
  CHECK_THROWS_AS(lagrangian_periodic(p, 0.5, 0.1), std::domain_error);
  CHECK_THROWS_AS(eulerian_1d(p, 2.5, 0.1), std::domain_error);
  CHECK_THROWS_AS((ExactSolutionParams{3, 1, 0.5, 1, 1, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ExactSolutionParams{1, 3, 0.5, 2, 1, 0}.validate(true)), std::invalid_argument);
  CHECK_NOTHROW((ExactSolutionParams{1, 8, 0.5, 2, 1, 0}.validate(true)));
}
