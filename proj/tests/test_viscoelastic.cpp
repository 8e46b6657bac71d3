#include <doctest.h>

#include <cmath>
#include <random>

#include "oscillax/quadrature.hpp"
#include "oscillax/stress_models.hpp"
#include "oscillax/viscoelastic_solver.hpp"

using namespace oscillax;

namespace {

const StressLaw& law133() {
  static const StressLaw law = make_two_phase_stress(1, 3, 3);
  return law;
}

SolverState smooth_state(const Grid1D& g, double amp = 0.5) {
  SolverState s;
  s.u.resize(g.n_cells);
  s.v.resize(g.n_cells + 1);
  for (int i = 0; i < g.n_cells; ++i) s.u(i) = 2 + amp * std::cos(M_PI * g.cell_center(i));
  for (int j = 0; j <= g.n_cells; ++j) s.v(j) = 0.2 * std::sin(M_PI * g.node(j));
  return s;
}

}  // namespace

TEST_CASE("secant stress is the mean of the law, across knots and for tiny intervals") {
  const StressLaw& law = law133();
  GaussLegendre<double> gl(8);
  auto oracle = [&](double x, double y) {
    // composite rule split at every knot, independent of the antiderivative
    const double lo = std::min(x, y), hi = std::max(x, y);
    std::vector<double> cuts{lo};
    for (double k : law.knots()) if (k > lo && k < hi) cuts.push_back(k);
    cuts.push_back(hi);
    double s = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      s += gl.integrate([&](double u) { return law.value(u); }, cuts[i], cuts[i + 1]);
    return s / (hi - lo);
  };
  for (auto [x, y] : std::vector<std::pair<double, double>>{{0.5, 4.5}, {1.9, 2.1}, {2.0, 2.0 + 1e-7},
                                                            {5.9999, 6.0001}, {-3, 9}, {3.0, 1.0}}) {
    CHECK(secant_stress(law, x, y) == doctest::Approx(oracle(x, y)).epsilon(1e-11));
  }
  CHECK(secant_stress(law, 2.5, 2.5) == law.value(2.5));
}

TEST_CASE("discrete operators match explicit loops") {
  Grid1D g{20};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  SolverState s;
  s.u.resize(20);
  s.v.resize(21);
  for (auto& x : s.u) x = 2 + U(rng);
  for (auto& x : s.v) x = U(rng);
  const StressLaw& law = law133();

  const Eigen::VectorXd G = velocity_gradient(s.v, g);
  const Eigen::VectorXd S = total_stress(s, law, g);
  const Eigen::VectorXd A = momentum_integral(s.v, g);
  double pot = 0, kin = 0, acc = 0;
  for (int i = 0; i < 20; ++i) {
    const double grad = (s.v(i + 1) - s.v(i)) * 20;
    CHECK(G(i) == doctest::Approx(grad).epsilon(1e-14));
    CHECK(S(i) == doctest::Approx(law.value(s.u(i)) + grad).epsilon(1e-13));
    acc += (i == 0 ? 0.025 : 0.05) * s.v(i);
    CHECK(A(i) == doctest::Approx(acc).epsilon(1e-13));
    pot += 0.05 * law.antiderivative(s.u(i));
  }
  for (int j = 0; j <= 20; ++j) kin += 0.5 * (j == 0 || j == 20 ? 0.025 : 0.05) * s.v(j) * s.v(j);
  CHECK(energy(s, law, g) == doctest::Approx(pot + kin).epsilon(1e-13));
}

TEST_CASE("one implicit step satisfies the discrete equations and the energy identity") {
  Grid1D g{32};
  const StressLaw& law = law133();
  SolverState s = smooth_state(g, 1.2);  // crosses the unstable bridge
  const double dt = 2e-4;
  const SolverState n = advance(s, law, g, dt);
  const Eigen::VectorXd G = velocity_gradient(n.v, g);
  const double dx = g.dx();
  Eigen::VectorXd S(32);
  for (int i = 0; i < 32; ++i) {
    CHECK(n.u(i) == doctest::Approx(s.u(i) + dt * G(i)).epsilon(1e-14));
    S(i) = secant_stress(law, s.u(i), n.u(i)) + G(i);
  }
  double res = 0;
  for (int j = 0; j <= 32; ++j) {
    const double right = j < 32 ? S(j) : 0.0, left = j > 0 ? S(j - 1) : 0.0;
    res = std::max(res, std::abs(n.v(j) - s.v(j) - dt * (right - left) / g.node_weight(j)));
  }
  CHECK(res < 1e-11);

  // E' - E = -dt dx |G|^2 - 1/2 sum w (v' - v)^2, exactly for the scheme
  double jump = 0;
  for (int j = 0; j <= 32; ++j) jump += 0.5 * g.node_weight(j) * std::pow(n.v(j) - s.v(j), 2);
  const double lhs = energy(n, law, g) - energy(s, law, g);
  const double rhs = -dt * dx * G.squaredNorm() - jump;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));

  // walls carry no stress, so total momentum is conserved
  double m0 = 0, m1 = 0;
  for (int j = 0; j <= 32; ++j) {
    m0 += g.node_weight(j) * s.v(j);
    m1 += g.node_weight(j) * n.v(j);
  }
  CHECK(std::abs(m1 - m0) < 1e-13);
  CHECK(n.time == doctest::Approx(dt));
}

TEST_CASE("advance rejects bad input") {
  Grid1D g{16};
  SolverState s = smooth_state(g);
  CHECK_THROWS_AS(advance(s, law133(), g, 0.0), std::invalid_argument);
  s.v.resize(3);
  CHECK_THROWS_AS(advance(s, law133(), g, 1e-3), std::invalid_argument);
}

TEST_CASE("smooth data converge at second order in dx") {
  const StressLaw& law = law133();
  std::vector<SolveResult> runs;
  for (int n : {32, 64, 128}) {
    SolverConfig c;
    c.grid = Grid1D{n};
    c.T = 0.01;
    c.dt = 0.25 / (128.0 * 128.0) * (n / 128.0) * (n / 128.0);
    runs.push_back(solve(c, law, smooth_state(c.grid)));
  }
  auto coarse_u = [](const Eigen::VectorXd& u) {
    Eigen::VectorXd r(u.size() / 2);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = 0.5 * (u(2 * i) + u(2 * i + 1));
    return r;
  };
  auto err = [&](int k) {
    const Eigen::VectorXd& a = runs[k].snapshots.back().u;
    const Eigen::VectorXd& b = runs[k + 1].snapshots.back().u;
    return (a - coarse_u(b)).lpNorm<Eigen::Infinity>();
  };
  const double e0 = err(0), e1 = err(1);
  CHECK(e1 < e0);
  CHECK(e0 / e1 > 3.0);
  for (const auto& r : runs) CHECK(r.energy.max_excess <= 1e-10);
}

TEST_CASE("oscillatory data: phase fractions and validation") {
  Grid1D g{96};
  const OscillatoryData d = make_oscillatory_data(g, 1.0 / 8, 1, 3, 0.25, nullptr);
  CHECK(d.n_osc == 8);
  int alpha = 0;
  for (int i = 0; i < 96; ++i) alpha += d.initial.u(i) == 1.0;
  CHECK(alpha == 24);
  CHECK(d.initial.u(0) == 1.0);
  CHECK(d.initial.u(3) == 3.0);
  CHECK(d.initial.v.isZero());
  CHECK_THROWS_AS(make_oscillatory_data(g, 1.0 / 7, 1, 3, 0.5, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(make_oscillatory_data(g, 1.0 / 24, 1, 3, 0.5, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(make_oscillatory_data(Grid1D{8}, 0.5, 1, 3, 0.5, nullptr), std::invalid_argument);
}

TEST_CASE("solver ledgers: energy decays, strain stays inside the certified bound") {
  Grid1D g{128};
  const auto d = make_oscillatory_data(g, 1.0 / 8, 1, 3, 0.5, [](double x) { return 0.3 * std::sin(M_PI * x); });
  SolverConfig c;
  c.grid = g;
  c.T = 0.01;
  c.snapshots = {0.0, 0.005};
  const SolveResult r = solve(c, law133(), d.initial);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[0].time == 0);
  CHECK(r.snapshots[1].time == doctest::Approx(0.005).epsilon(1e-14));
  CHECK(r.snapshots[2].time == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(r.energy.max_excess <= 1e-10);
  for (std::size_t k = 1; k < r.energy.energy.size(); ++k) CHECK(r.energy.energy[k] <= r.energy.energy[k - 1] + 1e-12);
  CHECK(r.strain.K_ok);
  CHECK(r.strain.max_abs_u <= r.strain.K_certified);
  CHECK(r.strain.momentum_violations == 0);
  CHECK(r.strain.max_abs_A <= r.strain.M + 1e-6);

  c.energy_tol = -1;  // any step with dissipation now counts as a violation of the slack
  CHECK_THROWS_AS(solve(c, law133(), d.initial), EnergyViolation);
}

TEST_CASE("stress residual is small for resolved smooth data") {
  Grid1D g{64};
  SolverConfig c;
  c.grid = g;
  c.T = 0.002;
  c.dt = 1e-5;
  c.history_stride = 1;
  c.history_until = 1;
  const SolveResult r = solve(c, law133(), smooth_state(g));
  const auto res = stress_pde_residual(r.history, law133(), g);
  REQUIRE(!res.empty());
  double scale = 0;
  for (const auto& f : r.history) scale = std::max(scale, f.S.lpNorm<Eigen::Infinity>());
  // first-order-in-time scheme: the residual relative to |S_xx| ~ pi^2 |S| is O(dt) plus O(dx^2)
  CHECK(res.back().l2 < 0.05 * M_PI * M_PI * scale);
}
