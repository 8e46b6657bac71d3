// One line per acceptance criterion; exit 0 iff every line passes.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>

#include "oscillax/effective_solver.hpp"
#include "oscillax/harness.hpp"
#include "oscillax/stress_models.hpp"
#include "oscillax/viscoelastic_solver.hpp"
#include "oscillax/weak_verifier.hpp"

using namespace oscillax;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
  int id;
  std::string name;
  bool passed;
  std::string detail;
};

std::vector<Line> lines;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
  lines.push_back({id, name, passed, detail});
  std::fprintf(stderr, "[criterion %d done]\n", id);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double scalar(const RunReport& r, const std::string& name) {
  for (const auto& [k, v] : r.scalars) {
    if (k == name) return v;
  }
  throw std::runtime_error("missing scalar " + name);
}

const Check* find_check(const RunReport& r, const std::string& name) {
  for (const Check& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool check_passed(const RunReport& r, const std::string& name) {
  const Check* c = find_check(r, name);
  return c && c->passed;
}

ScenarioConfig load(const fs::path& file, Mode mode) { return scenario_from_json(load_config(file), mode); }

// Worst E + D - E(0), relative, over every direct run the suite performs.
double worst_energy_excess = 0;
int energy_runs = 0;

void note_energy(double excess) {
  worst_energy_excess = std::max(worst_energy_excess, excess);
  ++energy_runs;
}

// ---- 1-4: exact solutions

void exact_solution_criteria(const fs::path& scen, const fs::path& out) {
  auto t0 = Clock::now();
  const ScenarioConfig cfg = load(scen / "verify_exact.toml", Mode::VerifyExact);
  const RunReport rep = run_verify_exact(cfg);
  write_artifacts(rep, cfg, out / "verify_exact");
  const double verify_seconds = seconds_since(t0);

  // falsification: the same solution with p = rho
  const ScenarioConfig mono = load(scen / "verify_monotone.toml", Mode::VerifyExact);
  const RunReport mrep = run_verify_exact(mono);
  write_artifacts(mrep, mono, out / "verify_monotone");
  const PressureLaw p = *mono.pressure.build(mono.params);
  const double floor = std::abs(p.value(1.0) - p.value(8.0)) - 1e-10;
  const double mono_residual = scalar(mrep, "radial_momentum_max");
  const double seconds = seconds_since(t0);

  {
    const bool rh = check_passed(rep, "radial_mass_jump") && check_passed(rep, "radial_momentum_jump");
    const bool weak = check_passed(rep, "weak_mass_residual") && check_passed(rep, "weak_momentum_residual");
    const bool ok = rh && weak && mono_residual >= floor && floor > 0 && seconds <= 60;
    report(1, "exact-solution certification", ok,
           fmt("RH mass %.3g momentum %.3g (<= 1e-12); weak mass %.3g momentum %.3g (<= 1e-8); ",
               scalar(rep, "radial_mass_max"), scalar(rep, "radial_momentum_max"), scalar(rep, "weak_mass_max"),
               scalar(rep, "weak_momentum_max")) +
               fmt("monotone residual %.6g >= %.6g; %.1f s (<= 60)", mono_residual, floor, seconds));
  }
  {
    // the viscous part cancels for any law, here an affine one
    const StressLaw affine = make_affine_law(2.0, -1.0, -100.0, 100.0);
    ExactSolutionParams lp = cfg.params;
    lp.d = 1;
    auto t1 = Clock::now();
    const ResidualReport other = rh_residual_lagrangian(lp, affine, cfg.verify.times, cfg.verify.k_max);
    double visc = 0;
    for (const auto& ir : other.per_interface) visc = std::max(visc, ir.viscous);
    const double s = seconds_since(t1);
    const double jump = scalar(rep, "lagrangian_momentum_max");
    const double vmatched = scalar(rep, "lagrangian_viscous_max");
    const bool ok = jump <= 1e-12 && vmatched <= 1e-12 && visc <= 1e-12 && s <= 1;
    report(2, "Lagrangian interface condition", ok,
           fmt("total-stress jump %.3g, viscous jump %.3g (matched law), %.3g (affine law), all <= 1e-12", jump,
               vmatched, visc));
  }
  {
    const double slope = scalar(rep, "young_w1_slope");
    const bool ok = slope >= -1.3 && slope <= -0.7 && verify_seconds <= 30;
    std::string means;
    for (int n : cfg.verify.young_n) means += fmt("%.4g ", scalar(rep, "young_w1_mean_n" + std::to_string(n)));
    report(3, "Young-measure convergence", ok,
           "W1 by n=8..64: " + means + fmt("slope %.4f in [-1.3, -0.7]; %.1f s (<= 30)", slope, verify_seconds));
  }
  {
    const double gap = scalar(rep, "commutation_gap");
    const double ratio = scalar(rep, "commutation_gap_over_max_p");
    const bool ok = gap > 0 && ratio > 0.01;
    report(4, "non-commutation of p and the weak limit", ok,
           fmt("|q_bar - p(rho_bar)| = %.6g (q_bar %.6g, p(rho_bar) %.6g), ", gap, scalar(rep, "q_bar"),
               scalar(rep, "p_of_rho_bar")) +
               fmt("max|p| = %.6g, ratio %.4g > 0.01", scalar(rep, "max_abs_p_between_phases"), ratio));
  }
}

// ---- 7: randomized kinetic property suite

KineticField random_field(const Grid1D& g, const XiGrid& xi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.5, 4.0), W(0.1, 1.0);
  std::uniform_int_distribution<int> count(1, 4);
  KineticField f{Eigen::VectorXd(g.n_cells), xi, RowMatrix(g.n_cells, xi.size)};
  for (int i = 0; i < g.n_cells; ++i) {
    f.x(i) = g.cell_center(i);
    std::vector<Atom> atoms;
    double total = 0;
    for (int a = count(rng); a > 0; --a) {
      atoms.push_back({U(rng), W(rng)});
      total += atoms.back().weight;
    }
    double sum = 0;
    for (std::size_t a = 0; a + 1 < atoms.size(); ++a) sum += (atoms[a].weight /= total);
    atoms.back().weight = 1 - sum;
    f.F.row(i) = cdf_from_measure(MeasureAtomic(atoms), xi);
  }
  return f;
}

void kinetic_property_suite(std::uint64_t seed) {
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> V(-0.5, 0.5);
  const XiGrid xi = XiGrid::covering(-16, 16, 1.0 / 64);
  const Grid1D g{32};
  long steps = 0, violations = 0;
  InvariantCheck kinds;
  auto tally = [&](const KineticField& F) {
    const InvariantCheck c = check_invariants(F);
    kinds.range += c.range;
    kinds.monotone += c.monotone;
    kinds.boundary += c.boundary;
    violations += c.total();
    ++steps;
  };
  const double dt_max = 0.25 * g.dx() * g.dx();
  for (int trial = 0; steps < 1000; ++trial) {
    KineticField F = random_field(g, xi, rng);
    Eigen::VectorXd v(g.n_cells + 1);
    for (auto& x : v) x = V(rng);
    Eigen::VectorXd S = mean_stress(F, law) + velocity_gradient(v, g);
    KineticField F2 = F;
    const ReactionRule rule = trial % 2 ? ReactionRule::Upwind : ReactionRule::Exact;
    // first system: kinetic then velocity; second: stress then kinetic
    for (int k = 0; k < 125; ++k) {
      const Eigen::VectorXd S1 = mean_stress(F, law) + velocity_gradient(v, g);
      const double h1 = std::min(0.9 * kinetic_time_limit(F, S1, law), dt_max);
      F = step_kinetic(F, S1, law, h1);
      v = step_velocity(v, F, law, g, h1);
      tally(F);
      const double h2 = std::min(0.9 * kinetic_time_limit(F2, S, law), dt_max);
      const Eigen::VectorXd Sn = step_stress(S, F2, law, g, h2, rule);
      F2 = step_kinetic(F2, S, law, h2);
      S = Sn;
      tally(F2);
    }
  }
  report(7, "kinetic-field invariants", violations == 0,
         fmt("%.0f randomized steps (both systems), violations: range %.0f, monotone %.0f, boundary %.0f",
             double(steps), double(kinds.range), double(kinds.monotone), double(kinds.boundary)));
}

// ---- 8, 10: effective runs

void effective_criteria(const fs::path& scen, const fs::path& out) {
  const ScenarioConfig dirac = load(scen / "effective_dirac.toml", Mode::Effective);
  const RunReport rd = run_effective(dirac);
  write_artifacts(rd, dirac, out / "effective_dirac");
  const ScenarioConfig smooth = load(scen / "effective_smooth.toml", Mode::Effective);
  const RunReport rs = run_effective(smooth);
  write_artifacts(rs, smooth, out / "effective_smooth");
  {
    const double base = scalar(rd, "direct_u_rel_base");
    const double order = scalar(rd, "direct_self_convergence_order");
    const bool ok = base <= 0.05 && check_passed(rd, "direct_difference_decreasing") && order >= 0.8 &&
                    check_passed(rd, "kinetic_invariants");
    report(8, "Dirac-closure equivalence", ok,
           fmt("L2 rel difference %.3g (<= 0.05) at %.0f cells, decreasing, order %.3f (>= 0.8)", base,
               double(dirac.effective.cells), order));
  }
  {
    bool ok = true;
    std::string detail;
    for (const auto* r : {&rd, &rs}) {
      const double base = scalar(*r, "cross_S_rel_base");
      const double fine = scalar(*r, "cross_S_rel_finest");
      ok = ok && base <= 1e-3 && check_passed(*r, "cross_system_decreasing");
      detail += fmt("%.3g -> %.3g; ", base, fine);
    }
    report(10, "cross-system consistency", ok, "relative L2 of S, base -> finest: " + detail + "base <= 1e-3");
  }
}

// ---- 5, 6, 9: oscillating runs against the effective system

void homogenization_criteria(const fs::path& scen, const fs::path& out) {
  auto t0 = Clock::now();
  const ScenarioConfig cfg = load(scen / "compare_homog.toml", Mode::CompareHomog);
  const RunReport rep = run_compare_homog(cfg);
  write_artifacts(rep, cfg, out / "compare_homog");
  const double seconds = seconds_since(t0);
  {
    const bool ok = check_passed(rep, "strain_within_certified_K") && check_passed(rep, "momentum_bound_violations");
    report(6, "uniform strain bound", ok && seconds <= 300,
           fmt("max|u|/K over eps = 1/8, 1/16, 1/32: %.4f (<= 1), momentum bound violations %.0f, %.0f s",
               scalar(rep, "max_strain_over_K"), scalar(rep, "momentum_bound_violations"), seconds));
  }
  note_energy(scalar(rep, "energy_max_relative_excess"));
  {
    const bool ok = check_passed(rep, "w1_strictly_decreasing") && check_passed(rep, "u_l2_strictly_decreasing") &&
                    check_passed(rep, "S_l2_strictly_decreasing") && check_passed(rep, "finest_u_rel") &&
                    seconds <= 600;
    std::string d;
    for (const char* m : {"w1", "u_l2", "S_l2"}) {
      d += m;
      d += " ";
      for (int n : {8, 16, 32}) d += fmt("%.4g ", scalar(rep, std::string(m) + "_eps" + std::to_string(n)));
      d += "; ";
    }
    report(9, "homogenization match", ok,
           d + fmt("finest u rel %.4f (<= 0.1), %.0f s (<= 600)", scalar(rep, "finest_u_rel"), seconds));
  }
}

// ---- 5: energy inequality, aggregated

void energy_criterion(const fs::path& scen) {
  // the simulate scenario plus short runs on random smooth data
  const ScenarioConfig sim = load(scen / "simulate_two_state.toml", Mode::Simulate);
  const StressLaw law = sim.law.build();
  std::mt19937_64 rng(sim.seed);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 6; ++trial) {
    const Grid1D g{64};
    SolverState s;
    s.u.resize(g.n_cells);
    s.v.resize(g.n_cells + 1);
    const double c = 2 + U(rng), a = U(rng), b = 0.5 * U(rng);
    for (int i = 0; i < g.n_cells; ++i) s.u(i) = c + a * std::cos(M_PI * g.cell_center(i));
    for (int j = 0; j <= g.n_cells; ++j) s.v(j) = b * std::sin(2 * M_PI * g.node(j));
    SolverConfig cfg;
    cfg.grid = g;
    cfg.T = 0.05;
    cfg.energy_tol = 1e-8;
    note_energy(solve(cfg, law, s).energy.max_excess);
  }
  for (double eps : {1.0 / 8, 1.0 / 16}) {
    const Grid1D g{256};
    const OscillatoryData d = make_oscillatory_data(g, eps, 1, 3, 0.5, [](double x) { return 0.3 * std::sin(M_PI * x); });
    SolverConfig cfg;
    cfg.grid = g;
    cfg.T = 0.02;
    note_energy(solve(cfg, law, d.initial).energy.max_excess);
  }
  report(5, "discrete energy inequality", worst_energy_excess <= 1e-8,
         fmt("max (E + D - E0)/E0 over %.0f runs, every step: %.3g (<= 1e-8)", double(energy_runs),
             worst_energy_excess));
}

// ---- 11: moment identities

void moment_criterion(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> C(-2, 2), L(-1.5, 4.5);
  const double step = 1.0 / 64;
  const XiGrid xi = XiGrid::covering(-2, 6, step);
  std::uniform_int_distribution<int> node(0, xi.size - 1);
  double worst_parts = 0, worst_ratio = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int ka = node(rng), kb = node(rng);
    if (ka == kb) kb = ka > 9 ? ka - 9 : ka + 9;
    const double a = xi.node(std::min(ka, kb)), b = xi.node(std::max(ka, kb)), c = C(rng);
    auto f = [=](double s) { return s <= a || s >= b ? 0.0 : c * (s - a) * (s - a) * (b - s) * (b - s); };
    auto fp = [=](double s) { return s <= a || s >= b ? 0.0 : c * 2 * (s - a) * (b - s) * ((b - s) - (s - a)); };
    const double window = step * step / 8 * 2 * std::abs(c) * (b - a) * (b - a);
    std::vector<Atom> atoms;
    for (int i = 0; i < 4; ++i) atoms.push_back({L(rng), 0.25});
    const MeasureAtomic nu(atoms);
    const Eigen::RowVectorXd F = cdf_from_measure(nu, xi);
    const double parts = moment_row(F, xi, f, fp), sum = atomic_moment_row(F, xi, f);
    worst_parts = std::max(worst_parts, std::abs(parts - sum) / (1 + std::abs(c)));
    worst_ratio = std::max(worst_ratio, std::abs(sum - nu.expect(f)) / (window + 1e-15));
  }

  // d/dt u-bar = v_x along an effs1 trajectory: exact against v_x at the old
  // time level, first order in dt against the new one
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  std::vector<double> lagged;
  double same_level = 0;
  for (double dt : {4e-5, 2e-5, 1e-5}) {
    const Grid1D g{32};
    std::mt19937_64 r2(seed + 1);
    KineticField F = random_field(g, XiGrid::covering(-16, 16, 1.0 / 64), r2);
    Eigen::VectorXd v(g.n_cells + 1);
    for (int j = 0; j <= g.n_cells; ++j) v(j) = 0.3 * std::sin(M_PI * g.node(j));
    double t = 0, worst = 0;
    while (t < 2e-3 - 1e-15) {
      const Eigen::VectorXd S = mean_stress(F, law) + velocity_gradient(v, g);
      const double h = std::min({dt, 0.9 * kinetic_time_limit(F, S, law), 2e-3 - t});
      const Eigen::VectorXd before = mean_from_F(F);
      const Eigen::VectorXd vx_old = velocity_gradient(v, g);
      F = step_kinetic(F, S, law, h);
      v = step_velocity(v, F, law, g, h);
      const Eigen::VectorXd rate = (mean_from_F(F) - before) / h;
      same_level = std::max(same_level, (rate - vx_old).lpNorm<Eigen::Infinity>());
      worst = std::max(worst, (rate - velocity_gradient(v, g)).lpNorm<Eigen::Infinity>());
      t += h;
    }
    lagged.push_back(worst);
  }
  const double order = std::log(lagged[0] / lagged[2]) / std::log(4.0);
  const bool ok = worst_parts <= 1e-12 && worst_ratio <= 1 && same_level <= 1e-8 && order >= 0.8;
  report(11, "moment-calculus identities", ok,
         fmt("20 polynomials: by-parts vs summation %.2g, error/window bound %.3f (<= 1); ", worst_parts,
             worst_ratio) +
             fmt("mean rate vs v_x %.2g, against v_x(t+dt) %.3g -> %.3g (order %.2f >= 0.8)", same_level, lagged[0],
                 lagged[2], order));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string scenarios = "tools/scenarios", out = "acceptance-out";
  std::uint64_t seed = 20240531;
  app.add_option("--scenarios", scenarios, "directory with the scenario files");
  app.add_option("--out", out, "directory for the artifacts of each run");
  app.add_option("--seed", seed, "seed for the randomized suites");
  CLI11_PARSE(app, argc, argv);

  const fs::path scen(scenarios), dir(out);
  try {
    exact_solution_criteria(scen, dir);
    effective_criteria(scen, dir);
    kinetic_property_suite(seed);
    moment_criterion(seed);
    homogenization_criteria(scen, dir);
    energy_criterion(scen);
  } catch (const std::exception& e) {
    for (const Line& l : lines) {
      std::printf("%s %2d %s: %s\n", l.passed ? "PASS" : "FAIL", l.id, l.name.c_str(), l.detail.c_str());
    }
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
  int failed = 0;
  for (const Line& l : lines) {
    std::printf("%s %2d %s: %s\n", l.passed ? "PASS" : "FAIL", l.id, l.name.c_str(), l.detail.c_str());
    failed += !l.passed;
  }
  std::printf("%d of %zu criteria passed\n", int(lines.size()) - failed, lines.size());
  return failed == 0 && lines.size() == 11 ? 0 : 1;
}
