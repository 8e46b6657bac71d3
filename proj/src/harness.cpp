#include "oscillax/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include "oscillax/effective_solver.hpp"
#include "oscillax/kinetic_tools.hpp"
#include "oscillax/viscoelastic_solver.hpp"

namespace oscillax {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- artifacts

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

Table::Table(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {}

void Table::add(const std::vector<Cell>& row) {
  if (row.size() != columns_.size()) throw std::logic_error("Table " + name_ + ": row width mismatch");
  std::string line;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) line += ',';
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            line += format_number(v);
          } else if constexpr (std::is_same_v<T, long>) {
            line += std::to_string(v);
          } else {
            line += csv_field(v);
          }
        },
        row[i]);
  }
  rows_.push_back(std::move(line));
}

std::string Table::csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + csv_field(columns_[i]);
  out += '\n';
  for (const auto& r : rows_) out += r + '\n';
  return out;
}

const Check& RunReport::check(const std::string& name, double value, const std::string& relation, double threshold) {
  bool ok = false;
  if (relation == "<=") ok = value <= threshold;
  else if (relation == ">=") ok = value >= threshold;
  else if (relation == "<") ok = value < threshold;
  else if (relation == ">") ok = value > threshold;
  else if (relation == "==") ok = value == threshold;
  else throw std::logic_error("unknown relation " + relation);
  return check(name, value, relation, threshold, ok);
}

const Check& RunReport::check(const std::string& name, double value, const std::string& relation, double threshold,
                              bool passed) {
  checks.push_back({name, value, threshold, relation, passed && std::isfinite(value)});
  return checks.back();
}

bool RunReport::passed() const {
  return errors.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

json RunReport::summary(const ScenarioConfig& config) const {
  json scal = json::object();
  for (const auto& [k, v] : scalars) scal[k] = number_or_null(v);
  json chk = json::array();
  for (const Check& c : checks) {
    chk.push_back({{"name", c.name},
                   {"value", number_or_null(c.value)},
                   {"relation", c.relation},
                   {"threshold", number_or_null(c.threshold)},
                   {"passed", c.passed}});
  }
  json files = json::array({"scalars.csv", "checks.csv"});
  for (const Table& t : tables) files.push_back(t.file());
  return {{"mode", mode_name(mode)},
          {"seed", config.seed},
          {"threads", config.threads},
          {"passed", passed()},
          {"exit_code", passed() ? kExitPass : kExitFail},
          {"scalars", scal},
          {"checks", chk},
          {"errors", errors},
          {"artifacts", files},
          {"config", config.source}};
}

void write_artifacts(const RunReport& report, const ScenarioConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  Table scal("scalars", {"name", "value"});
  for (const auto& [k, v] : report.scalars) scal.add({k, v});
  Table chk("checks", {"name", "value", "relation", "threshold", "passed"});
  for (const Check& c : report.checks) chk.add({c.name, c.value, c.relation, c.threshold, long(c.passed)});
  atomic_write(dir / scal.file(), scal.csv());
  atomic_write(dir / chk.file(), chk.csv());
  for (const Table& t : report.tables) atomic_write(dir / t.file(), t.csv());
  // summary last: its presence marks a complete output directory
  atomic_write(dir / "summary.json", report.summary(config).dump(2) + "\n");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) return std::nan("");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// Runs fn(0..count-1) on up to `threads` workers; results come back in index
// order whatever the scheduling, so output does not depend on the worker count.
template <class Fn>
auto parallel_map(int count, int threads, Fn&& fn) -> std::vector<decltype(fn(0))> {
  using R = decltype(fn(0));
  std::vector<std::optional<R>> slots(count);
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) slots[i].emplace(fn(i));
  } else {
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int i = w; i < count; i += workers) slots[i].emplace(fn(i));
      }));
    }
    for (auto& j : jobs) j.get();
  }
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return !v.empty();
}

double rms(const Eigen::VectorXd& x) { return x.size() ? x.norm() / std::sqrt(double(x.size())) : 0.0; }

std::vector<double> snapshot_times(double T, int count) {
  std::vector<double> t;
  for (int k = 0; k <= count; ++k) t.push_back(k == count ? T : T * k / count);
  return t;
}

Eigen::VectorXd sample_cells(const Grid1D& g, const ProfileSpec& f) {
  Eigen::VectorXd u(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) u(i) = f(g.cell_center(i));
  return u;
}

Eigen::VectorXd sample_nodes(const Grid1D& g, const ProfileSpec& f) {
  Eigen::VectorXd v(g.n_cells + 1);
  for (int j = 0; j <= g.n_cells; ++j) v(j) = f(g.node(j));
  return v;
}

// Two-atom CDF rows; the atoms must sit on xi nodes for the comparison to be
// free of deposit error, which the caller arranges through the xi step.
KineticField two_state_field(const Grid1D& g, const XiGrid& xi, const InitialSpec& in) {
  const MeasureAtomic nu({{in.alpha, in.theta}, {in.beta, 1 - in.theta}});
  const Eigen::RowVectorXd row = cdf_from_measure(nu, xi);
  KineticField F;
  F.xi = xi;
  F.x.resize(g.n_cells);
  F.F.resize(g.n_cells, xi.size);
  for (int i = 0; i < g.n_cells; ++i) {
    F.x(i) = g.cell_center(i);
    F.F.row(i) = row;
  }
  return F;
}

// Energy of the limit data: cell potential is the theta-average of W.
double limit_energy(const StressLaw& law, const Grid1D& g, const InitialSpec& in, const Eigen::VectorXd& v) {
  double e = 0;
  for (int i = 0; i < g.n_cells; ++i) {
    e += g.dx() * (in.theta * law.antiderivative(in.alpha) + (1 - in.theta) * law.antiderivative(in.beta));
  }
  for (int j = 0; j <= g.n_cells; ++j) e += 0.5 * g.node_weight(j) * v(j) * v(j);
  return e;
}

// xi grid [-K - 1, K + 1] with K certified from M = sqrt(E0); aligned so that
// integers (and the two-state values when they are multiples of step) are nodes.
XiGrid certified_xi(const StressLaw& law, double E0, double data_bound, double step, double* K_out = nullptr) {
  CoercivityOptions opt;
  opt.data_bound = data_bound;
  const CoercivityReport rep = certify_coercivity(law, std::sqrt(std::max(E0, 0.0)), opt);
  if (!rep.ok) throw std::runtime_error("strain bound not certified: " + rep.message);
  if (K_out) *K_out = rep.K;
  const double reach = std::ceil(rep.K + 1);
  return XiGrid::covering(-reach, reach, step);
}

}  // namespace

// ---------------------------------------------------------------- verify-exact

namespace {

struct YoungWindow {
  int n;
  int window;
  double r_lo, r_hi;
  double fraction_a;
  double w1;
};

// Empirical law of rho_n on the shell r_lo < |y| < r_hi, sampled at cell
// centres along a ray with the volume weight r^(d-1).
YoungWindow young_window(const ExactSolutionParams& p, int n, double t, int cells, int first, int width) {
  const double h = 1.0 / cells;
  std::map<double, double> mass;
  double total = 0, in_a = 0;
  Point y = Point::Zero(p.d);
  for (int i = first; i < first + width; ++i) {
    const double r = (i + 0.5) * h;
    y(0) = r;
    const RadialSample s = rescale_eulerian(p, n, t, y);
    const double w = std::pow(r, p.d - 1);
    mass[s.rho] += w;
    total += w;
    if (s.rho == p.a / std::pow(t, p.d)) in_a += w;
  }
  std::vector<Atom> atoms;
  for (const auto& [rho, w] : mass) atoms.push_back({rho, w / total});
  // renormalize exactly against rounding in the weights
  double sum = 0;
  for (const Atom& a : atoms) sum += a.weight;
  for (Atom& a : atoms) a.weight /= sum;
  const MeasureAtomic empirical(std::move(atoms));
  return {n, 0, first * h, (first + width) * h, in_a / total, wasserstein1(empirical, young_measure_limit(p, t))};
}

}  // namespace

RunReport run_verify_exact(const ScenarioConfig& c) {
  RunReport rep;
  rep.mode = Mode::VerifyExact;
  const ExactSolutionParams& p = c.params;
  const VerifySpec& v = c.verify;
  const std::optional<PressureLaw> pressure = c.pressure.build(p);

  // 1D Lagrangian interfaces: the two-phase law is built for the solution's
  // own phase values
  LawSpec ls = c.law;
  if (ls.kind == "two-phase") {
    ls.a = p.a;
    ls.b = p.b;
  }
  Table rh("rh_interfaces", {"family", "interface", "mass", "momentum", "viscous"});
  if (ls.kind != "two-phase" || 2 * p.a < p.b) {
    const StressLaw law = ls.build();
    const ResidualReport lag = rh_residual_lagrangian(p, law, v.times, v.k_max);
    double visc = 0;
    for (const auto& ir : lag.per_interface) {
      rh.add({"lagrangian", ir.id, ir.mass, ir.momentum, ir.viscous});
      visc = std::max(visc, ir.viscous);
    }
    rep.scalar("lagrangian_mass_max", lag.mass_residual);
    rep.scalar("lagrangian_momentum_max", lag.max_momentum());
    rep.scalar("lagrangian_viscous_max", visc);
    rep.check("lagrangian_momentum_jump", lag.max_momentum(), "<=", v.rh_tol);
    rep.check("lagrangian_viscous_jump", visc, "<=", v.rh_tol);
  }

  const ResidualReport rad = rh_residual_md(p, pressure, v.times, v.k_max);
  for (const auto& ir : rad.per_interface) rh.add({rad.label, ir.id, ir.mass, ir.momentum, ir.viscous});
  rep.scalar("radial_mass_max", rad.mass_residual);
  rep.scalar("radial_momentum_max", rad.max_momentum());
  if (pressure) {
    const double td = std::pow(v.times.front(), p.d);
    rep.scalar("pressure_jump_first_time", std::abs(pressure->value(p.a / td) - pressure->value(p.b / td)));
  }
  rep.check("radial_mass_jump", rad.mass_residual, "<=", v.rh_tol);
  rep.check("radial_momentum_jump", rad.max_momentum(), "<=", v.rh_tol);
  rep.tables.push_back(std::move(rh));

  if (v.tests > 0) {
    const std::vector<TestFunction> tests = random_tests(v.tests, p.d, c.seed, v.ball_radius);
    const std::vector<ResidualReport> wf = weak_form_residual_md(p, pressure, tests, v.quad, v.n, c.threads);
    Table t("weak_residuals", {"test", "t0", "r_t", "y0_norm", "r_y", "mass", "momentum", "mass_rel", "momentum_rel",
                               "normalization", "sub_cells"});
    double worst_mass = 0, worst_mom = 0, worst_rel = 0;
    for (std::size_t i = 0; i < wf.size(); ++i) {
      const ResidualReport& r = wf[i];
      t.add({long(i), tests[i].t0, tests[i].r_t, tests[i].y0.norm(), tests[i].r_y, r.mass_residual, r.max_momentum(),
             r.mass_relative, r.momentum_relative, r.normalization, long(r.sub_cells)});
      worst_mass = std::max(worst_mass, r.mass_residual);
      worst_mom = std::max(worst_mom, r.max_momentum());
      worst_rel = std::max({worst_rel, r.mass_relative, r.momentum_relative});
    }
    rep.tables.push_back(std::move(t));
    rep.scalar("weak_mass_max", worst_mass);
    rep.scalar("weak_momentum_max", worst_mom);
    rep.scalar("weak_relative_max", worst_rel);
    rep.check("weak_mass_residual", worst_mass, "<=", v.weak_tol);
    rep.check("weak_momentum_residual", worst_mom, "<=", v.weak_tol);
  }

  // Young measure of rho_n: W1 to the two-atom limit on fixed shells
  if (!v.young_n.empty()) {
    Table t("young_measure", {"n", "window", "r_lo", "r_hi", "fraction_a", "w1"});
    std::vector<double> ns, w1s;
    for (int n : v.young_n) {
      double mean_w1 = 0;
      int count = 0;
      for (int first = 0; first + v.young_window <= v.young_cells; first += v.young_window, ++count) {
        YoungWindow w = young_window(p, n, v.young_time, v.young_cells, first, v.young_window);
        w.window = count;
        t.add({long(n), long(count), w.r_lo, w.r_hi, w.fraction_a, w.w1});
        mean_w1 += w.w1;
      }
      mean_w1 /= count;
      ns.push_back(n);
      w1s.push_back(mean_w1);
      rep.scalar("young_w1_mean_n" + std::to_string(n), mean_w1);
    }
    rep.tables.push_back(std::move(t));
    if (ns.size() >= 3) {
      const double slope = loglog_slope(ns, w1s);
      rep.scalar("young_w1_slope", slope);
      rep.check("young_w1_slope_in_[-1.3,-0.7]", slope, "in [-1.3, -0.7]", -1.0, slope >= -1.3 && slope <= -0.7);
    }
  }

  // p does not commute with the weak limit
  if (pressure && p.theta < 1) {
    const double t = v.young_time;
    const double td = std::pow(t, p.d);
    const double ra = p.a / td, rb = p.b / td;
    const double rho_bar = p.theta * ra + (1 - p.theta) * rb;
    const double q_bar = p.theta * pressure->value(ra) + (1 - p.theta) * pressure->value(rb);
    const double gap = std::abs(q_bar - pressure->value(rho_bar));
    double pmax = 0;
    for (int k = 0; k <= 1000; ++k) pmax = std::max(pmax, std::abs(pressure->value(ra + (rb - ra) * k / 1000.0)));
    rep.scalar("young_time", t);
    rep.scalar("rho_bar", rho_bar);
    rep.scalar("q_bar", q_bar);
    rep.scalar("p_of_rho_bar", pressure->value(rho_bar));
    rep.scalar("commutation_gap", gap);
    rep.scalar("max_abs_p_between_phases", pmax);
    rep.scalar("commutation_gap_over_max_p", gap / pmax);
    rep.check("commutation_gap_positive", gap, ">", 0.0);

    if (!v.young_n.empty()) {
      TestFunction phi;
      phi.t0 = 1.5;
      phi.r_t = 0.25;
      phi.y0 = Point::Zero(p.d);
      phi.y0(0) = 0.75;
      phi.r_y = 0.5;
      const WeakLimitTable wl = weak_limit_table(p, *pressure, phi, v.young_n, v.quad);
      Table t2("weak_limit", {"n", "rho_pairing", "pressure_pairing", "rho_bar_pairing", "q_bar_pairing",
                              "pressure_of_mean_pairing"});
      for (const auto& r : wl.rows) {
        t2.add({long(r.n), r.rho_pairing, r.pressure_pairing, wl.rho_bar_pairing, wl.q_bar_pairing,
                wl.pressure_of_mean_pairing});
      }
      rep.tables.push_back(std::move(t2));
      rep.scalar("pairing_q_bar", wl.q_bar_pairing);
      rep.scalar("pairing_p_of_rho_bar", wl.pressure_of_mean_pairing);
    }
  }
  return rep;
}

// ---------------------------------------------------------------- simulate

namespace {

struct SimRun {
  double epsilon{0};
  SolveResult result;
  std::string error;
};

SolverState initial_state(const Grid1D& g, const InitialSpec& in, double eps) {
  if (in.kind == "two-state") {
    return make_oscillatory_data(g, eps, in.alpha, in.beta, in.theta, [&](double x) { return in.v0(x); }).initial;
  }
  return SolverState{0, sample_cells(g, in.u0), sample_nodes(g, in.v0)};
}

}  // namespace

RunReport run_simulate(const ScenarioConfig& c) {
  RunReport rep;
  rep.mode = Mode::Simulate;
  const SimulateSpec& s = c.simulate;
  const StressLaw law = c.law.build();
  const Grid1D g{s.cells};
  std::vector<double> eps = s.initial.kind == "two-state" ? s.epsilons : std::vector<double>{0.0};

  const auto runs = parallel_map(static_cast<int>(eps.size()), c.threads, [&](int i) {
    SimRun r;
    r.epsilon = eps[i];
    SolverConfig cfg;
    cfg.grid = g;
    cfg.T = s.T;
    cfg.dt = s.dt;
    cfg.snapshots = snapshot_times(s.T, s.snapshots);
    cfg.energy_tol = s.energy_tol;
    cfg.ledger_stride = 1;
    try {
      r.result = solve(cfg, law, initial_state(g, s.initial, eps[i]));
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  });

  Table fields("simulate_fields", {"epsilon", "time", "x", "u", "S"});
  Table vel("simulate_velocity", {"epsilon", "time", "x", "v"});
  Table en("simulate_energy", {"epsilon", "time", "energy", "dissipation", "relative_excess"});
  Table st("simulate_strain", {"epsilon", "M", "M_rigorous", "K_certified", "K_ok", "max_abs_u", "max_abs_A",
                               "max_abs_g", "momentum_violations", "energy_max_excess", "dt", "steps"});
  double worst_excess = 0, worst_ratio = 0;
  long violations = 0;
  bool all_certified = true;
  for (const SimRun& r : runs) {
    if (!r.error.empty()) {
      rep.errors.push_back("epsilon=" + format_number(r.epsilon) + ": " + r.error);
      continue;
    }
    const SolveResult& res = r.result;
    for (const Frame& f : res.snapshots) {
      for (int i = 0; i < g.n_cells; ++i) fields.add({r.epsilon, f.time, g.cell_center(i), f.u(i), f.S(i)});
      for (int j = 0; j <= g.n_cells; ++j) vel.add({r.epsilon, f.time, g.node(j), f.v(j)});
    }
    // the ledger is per step; keep about 1000 rows per run
    const std::size_t n = res.energy.time.size();
    const std::size_t stride = std::max<std::size_t>(1, n / 1000);
    const double E0 = res.energy.initial;
    for (std::size_t k = 0; k < n; ++k) {
      if (k % stride != 0 && k + 1 != n) continue;
      const double ex = (res.energy.energy[k] + res.energy.dissipation[k] - E0) / std::abs(E0);
      en.add({r.epsilon, res.energy.time[k], res.energy.energy[k], res.energy.dissipation[k], ex});
    }
    const StrainBoundLedger& sl = res.strain;
    st.add({r.epsilon, sl.M, sl.M_rigorous, sl.K_certified, long(sl.K_ok), sl.max_abs_u, sl.max_abs_A, sl.max_abs_g,
            long(sl.momentum_violations), res.energy.max_excess, res.dt, res.steps});
    worst_excess = std::max(worst_excess, res.energy.max_excess);
    worst_ratio = std::max(worst_ratio, sl.max_abs_u / sl.K_certified);
    violations += sl.momentum_violations;
    all_certified = all_certified && sl.K_ok;
  }
  rep.tables.push_back(std::move(fields));
  rep.tables.push_back(std::move(vel));
  rep.tables.push_back(std::move(en));
  rep.tables.push_back(std::move(st));
  rep.scalar("energy_max_relative_excess", worst_excess);
  rep.scalar("max_strain_over_K", worst_ratio);
  rep.scalar("momentum_bound_violations", violations);
  rep.check("energy_inequality", worst_excess, "<=", s.energy_tol);
  rep.check("strain_within_certified_K", worst_ratio, "<=", 1.0, all_certified && worst_ratio <= 1.0);
  rep.check("momentum_bound_violations", violations, "==", 0.0);
  return rep;
}

// ---------------------------------------------------------------- effective

namespace {

struct EffLevel {
  int cells{0};
  double dt{0};
  EffectiveResult1 r1;
  EffectiveResult2 r2;
  bool has1{false}, has2{false};
  double u_direct_rel{NAN}, v_direct_rel{NAN}, S_cross_rel{NAN};
  double direct_excess{NAN};
};

EffLevel run_effective_level(const ScenarioConfig& c, const StressLaw& law, int level) {
  const EffectiveSpec& e = c.effective;
  EffLevel out;
  out.cells = e.cells << level;
  const Grid1D g{out.cells};
  const double xi_step = (e.xi_step > 0 ? e.xi_step : 1.0 / e.cells) / (1 << level);
  const InitialSpec& in = e.initial;
  const Eigen::VectorXd v0 = sample_nodes(g, in.v0);

  KineticField F0;
  if (in.kind == "profile") {
    const Eigen::VectorXd u0 = sample_cells(g, in.u0);
    const double E0 = energy(SolverState{0, u0, v0}, law, g);
    const XiGrid xi = certified_xi(law, E0, u0.lpNorm<Eigen::Infinity>(), xi_step);
    Eigen::VectorXd x(g.n_cells);
    for (int i = 0; i < g.n_cells; ++i) x(i) = g.cell_center(i);
    F0 = heaviside_field(x, u0, xi);
  } else {
    const double E0 = limit_energy(law, g, in, v0);
    const XiGrid xi = certified_xi(law, E0, std::max(std::abs(in.alpha), std::abs(in.beta)), xi_step);
    F0 = two_state_field(g, xi, in);
  }

  EffectiveOptions opt;
  opt.T = e.T;
  opt.cfl = e.cfl;
  opt.dt_max = e.dt_factor * g.dx() * g.dx();
  opt.snapshots = snapshot_times(e.T, e.snapshots);
  opt.rule = e.rule;
  out.dt = *opt.dt_max;
  if (e.system != "effs2") {
    out.r1 = solve_effs1(F0, v0, law, g, opt);
    out.has1 = true;
  }
  if (e.system != "effs1") {
    const Eigen::VectorXd S0 = mean_stress(F0, law) + velocity_gradient(v0, g);
    out.r2 = solve_effs2(F0, S0, law, g, opt);
    out.has2 = true;
  }
  if (out.has1 && out.has2) {
    const Eigen::VectorXd S1 = effective_stress(out.r1.snapshots.back(), law, g);
    const Eigen::VectorXd& S2 = out.r2.snapshots.back().S;
    out.S_cross_rel = (S1 - S2).norm() / S1.norm();
  }
  if (e.compare_direct && out.has1) {
    SolverConfig cfg;
    cfg.grid = g;
    cfg.T = e.T;
    cfg.dt = std::min(*opt.dt_max, default_time_step(g, law, sample_cells(g, in.u0)));
    const SolveResult d = solve(cfg, law, SolverState{0, sample_cells(g, in.u0), v0});
    const EffectiveState1& s = out.r1.snapshots.back();
    const Eigen::VectorXd u = mean_from_F(s.F);
    out.u_direct_rel = (u - d.snapshots.back().u).norm() / d.snapshots.back().u.norm();
    out.v_direct_rel = (s.v - d.snapshots.back().v).norm() / std::max(d.snapshots.back().v.norm(), 1e-300);
    out.direct_excess = d.energy.max_excess;
  }
  return out;
}

void add_effective_fields(Table& t, Table& vt, const EffLevel& L, const StressLaw& law) {
  const Grid1D g{L.cells};
  if (L.has1) {
    for (const EffectiveState1& s : L.r1.snapshots) {
      const Eigen::VectorXd u = mean_from_F(s.F);
      const Eigen::VectorXd S = effective_stress(s, law, g);
      for (int i = 0; i < g.n_cells; ++i) t.add({1L, long(L.cells), s.time, g.cell_center(i), u(i), S(i)});
      for (int j = 0; j <= g.n_cells; ++j) vt.add({long(L.cells), s.time, g.node(j), s.v(j)});
    }
  }
  if (L.has2) {
    for (const EffectiveState2& s : L.r2.snapshots) {
      const Eigen::VectorXd u = mean_from_F(s.F);
      for (int i = 0; i < g.n_cells; ++i) t.add({2L, long(L.cells), s.time, g.cell_center(i), u(i), s.S(i)});
    }
  }
}

}  // namespace

RunReport run_effective(const ScenarioConfig& c) {
  RunReport rep;
  rep.mode = Mode::Effective;
  const EffectiveSpec& e = c.effective;
  const StressLaw law = c.law.build();
  const auto levels =
      parallel_map(e.refinements + 1, c.threads, [&](int l) { return run_effective_level(c, law, l); });

  Table fields("effective_fields", {"system", "cells", "time", "x", "u", "S"});
  Table vel("effective_velocity", {"cells", "time", "x", "v"});
  Table conv("effective_levels", {"cells", "dt_max", "steps1", "steps2", "invariant_violations", "max_cfl",
                                  "mean_rate_residual", "u_direct_rel", "v_direct_rel", "S_cross_rel"});
  Table kin("effective_kinetic", {"system", "x", "xi", "F"});
  long violations = 0;
  double worst_cfl = 0, worst_rate = 0;
  std::vector<double> ns, du, dS;
  for (const EffLevel& L : levels) {
    add_effective_fields(fields, vel, L, law);
    const long viol = L.r1.ledger.invariant_violations + L.r2.ledger.invariant_violations;
    const double cfl = std::max(L.r1.ledger.max_cfl, L.r2.ledger.max_cfl);
    conv.add({long(L.cells), L.dt, L.r1.ledger.steps, L.r2.ledger.steps, viol, cfl, L.r1.ledger.max_mean_rate_residual,
              L.u_direct_rel, L.v_direct_rel, L.S_cross_rel});
    violations += viol;
    worst_cfl = std::max(worst_cfl, cfl);
    worst_rate = std::max(worst_rate, L.r1.ledger.max_mean_rate_residual);
    ns.push_back(L.cells);
    du.push_back(L.u_direct_rel);
    dS.push_back(L.S_cross_rel);
  }
  // transition band of the final base-level field, for plotting
  {
    const EffLevel& L = levels.front();
    auto dump = [&](long sys, const KineticField& F) {
      for (int i = 0; i < F.rows(); ++i) {
        for (int k = 0; k < F.xi.size; ++k) {
          const double f = F.F(i, k);
          if (f > 0 && f < 1) kin.add({sys, F.x(i), F.xi.node(k), f});
        }
      }
    };
    if (L.has1) dump(1, L.r1.snapshots.back().F);
    if (L.has2) dump(2, L.r2.snapshots.back().F);
  }
  rep.tables.push_back(std::move(fields));
  rep.tables.push_back(std::move(vel));
  rep.tables.push_back(std::move(conv));
  rep.tables.push_back(std::move(kin));

  rep.scalar("invariant_violations", violations);
  rep.scalar("max_cfl", worst_cfl);
  rep.scalar("mean_rate_residual_max", worst_rate);
  rep.check("kinetic_invariants", violations, "==", 0.0);
  rep.check("cfl_respected", worst_cfl, "<=", 1.0 + 1e-12);
  if (e.compare_direct) {
    rep.scalar("direct_u_rel_base", du.front());
    rep.check("direct_match_base", du.front(), "<=", e.direct_tol);
    if (ns.size() >= 2) {
      const double slope = -loglog_slope(ns, du);
      rep.scalar("direct_self_convergence_order", slope);
      rep.check("direct_difference_decreasing", du.back(), "<", du.front(), strictly_decreasing(du));
      rep.check("direct_self_convergence_order", slope, ">=", e.min_slope);
    }
  }
  if (e.system == "both") {
    rep.scalar("cross_S_rel_base", dS.front());
    rep.check("cross_system_base", dS.front(), "<=", e.cross_tol);
    if (ns.size() >= 2) {
      rep.scalar("cross_S_rel_finest", dS.back());
      rep.check("cross_system_decreasing", dS.back(), "<", dS.front(), strictly_decreasing(dS));
    }
  }
  return rep;
}

// ---------------------------------------------------------------- compare-homog

ComparisonReport compare_homogenization(const ScenarioConfig& c) {
  const HomogSpec& h = c.homog;
  if (h.epsilons.empty()) throw ConfigError("homog.epsilons: must not be empty");
  const StressLaw law = c.law.build();
  const InitialSpec& in = h.initial;
  const Grid1D gf{h.fine_cells}, ge{h.effective_cells};
  const int we = static_cast<int>(std::lround(h.window * ge.n_cells));
  const int se = static_cast<int>(std::lround(h.stride * ge.n_cells));
  const int ratio = gf.n_cells / ge.n_cells;
  const int wf = we * ratio, sf = se * ratio;

  ComparisonReport rep;
  const Eigen::VectorXd v0e = sample_nodes(ge, in.v0);
  const double E0 = limit_energy(law, ge, in, v0e);
  const XiGrid xi = certified_xi(law, E0, std::max(std::abs(in.alpha), std::abs(in.beta)), h.xi_step);
  const KineticField F0 = two_state_field(ge, xi, in);

  EffectiveOptions opt;
  opt.T = h.T;
  opt.dt_max = h.dt_factor * ge.dx() * ge.dx();

  // the effective run and the direct runs are independent; the effective one
  // goes first in the task list so it overlaps with the direct ones
  struct Task {
    std::optional<EffectiveResult1> eff;
    std::optional<EffectiveResult2> eff2;
    std::optional<SolveResult> direct;
  };
  const int n_eps = static_cast<int>(h.epsilons.size());
  const int n_tasks = n_eps + 1 + (h.effs2 ? 1 : 0);
  auto tasks = parallel_map(n_tasks, c.threads, [&](int i) {
    Task t;
    if (i == 0) {
      t.eff = solve_effs1(F0, v0e, law, ge, opt);
    } else if (i <= n_eps) {
      const OscillatoryData data =
          make_oscillatory_data(gf, h.epsilons[i - 1], in.alpha, in.beta, in.theta, [&](double x) { return in.v0(x); });
      SolverConfig cfg;
      cfg.grid = gf;
      cfg.T = h.T;
      cfg.ledger_stride = 1 << 30;
      try {
        t.direct = solve(cfg, law, data.initial);
      } catch (const std::exception& e) {
        throw std::runtime_error("direct run at epsilon = " + format_number(h.epsilons[i - 1]) + ": " + e.what());
      }
    } else {
      const Eigen::VectorXd S0 = mean_stress(F0, law) + velocity_gradient(v0e, ge);
      t.eff2 = solve_effs2(F0, S0, law, ge, opt);
    }
    return t;
  });

  const EffectiveResult1& eff = *tasks[0].eff;
  const EffectiveState1& fe = eff.snapshots.back();
  rep.effective_steps = eff.ledger.steps;
  rep.invariant_violations = eff.ledger.invariant_violations;
  rep.effective_dt = eff.ledger.max_dt;
  rep.effective_max_cfl = eff.ledger.max_cfl;
  const Eigen::VectorXd ue = mean_from_F(fe.F);
  const Eigen::VectorXd Se = effective_stress(fe, law, ge);
  auto id = [](double x) { return x; };
  const Eigen::VectorXd ueW = window_average(ue, we, se, id);
  const Eigen::VectorXd SeW = window_average(Se, we, se, id);
  const int rows = static_cast<int>(ueW.size());
  KineticField FeW;
  FeW.xi = xi;
  FeW.x.resize(rows);
  FeW.F.resize(rows, xi.size);
  for (int r = 0; r < rows; ++r) {
    FeW.F.row(r) = fe.F.F.middleRows(r * se, we).colwise().mean();
    FeW.x(r) = (r * se + 0.5 * we) * ge.dx();
  }
  Eigen::VectorXd S2W;
  if (h.effs2) {
    S2W = window_average(tasks.back().eff2->snapshots.back().S, we, se, id);
    rep.invariant_violations += tasks.back().eff2->ledger.invariant_violations;
    const Eigen::VectorXd& S2 = tasks.back().eff2->snapshots.back().S;
    rep.cross_S_rel = (Se - S2).norm() / Se.norm();
  }

  for (int i = 0; i < n_eps; ++i) {
    const SolveResult& d = *tasks[i + 1].direct;
    const Frame& f = d.snapshots.back();
    ComparisonRow row;
    row.epsilon = h.epsilons[i];
    const KineticField Fd = empirical_kinetic_function(f.u, gf, xi, wf, sf);
    const Eigen::VectorXd w1 = measure_distance_rows(Fd, FeW);
    const Eigen::VectorXd uW = window_average(f.u, wf, sf, id);
    const Eigen::VectorXd SW = window_average(f.S, wf, sf, id);
    row.w1 = w1.maxCoeff();
    row.u_l2 = rms(uW - ueW);
    row.u_rel = row.u_l2 / rms(ueW);
    row.S_l2 = rms(SW - SeW);
    row.S_rel = row.S_l2 / rms(SeW);
    if (h.effs2) row.S2_l2 = rms(SW - S2W);
    row.max_abs_u = d.strain.max_abs_u;
    row.K_certified = d.strain.K_certified;
    row.K_ok = d.strain.K_ok;
    row.momentum_violations = d.strain.momentum_violations;
    row.energy_excess = d.energy.max_excess;
    row.steps = d.steps;
    rep.rows.push_back(row);
    for (int r = 0; r < rows; ++r) rep.windows.add({row.epsilon, FeW.x(r), uW(r), ueW(r), SW(r), SeW(r), w1(r)});
  }
  if (n_eps >= 3) {
    std::vector<double> e, a, b, s;
    for (const auto& r : rep.rows) {
      e.push_back(r.epsilon);
      a.push_back(r.w1);
      b.push_back(r.u_l2);
      s.push_back(r.S_l2);
    }
    rep.slope_w1 = loglog_slope(e, a);
    rep.slope_u = loglog_slope(e, b);
    rep.slope_S = loglog_slope(e, s);
  }
  return rep;
}

RunReport run_compare_homog(const ScenarioConfig& c) {
  RunReport rep;
  rep.mode = Mode::CompareHomog;
  const ComparisonReport cr = compare_homogenization(c);
  Table t("homog_distances", {"epsilon", "inverse_epsilon", "w1", "u_l2", "u_rel", "S_l2", "S_rel", "S_effs2_l2",
                              "max_abs_u", "K_certified", "momentum_violations", "energy_max_excess", "steps"});
  std::vector<double> w1, u, S;
  double worst_excess = 0, worst_ratio = 0;
  long viol = 0;
  bool certified = true;
  for (const auto& r : cr.rows) {
    t.add({r.epsilon, std::round(1 / r.epsilon), r.w1, r.u_l2, r.u_rel, r.S_l2, r.S_rel,
           c.homog.effs2 ? r.S2_l2 : NAN, r.max_abs_u, r.K_certified, long(r.momentum_violations), r.energy_excess,
           r.steps});
    w1.push_back(r.w1);
    u.push_back(r.u_l2);
    S.push_back(r.S_l2);
    const std::string tag = "_eps" + std::to_string(std::lround(1 / r.epsilon));
    rep.scalar("w1" + tag, r.w1);
    rep.scalar("u_l2" + tag, r.u_l2);
    rep.scalar("S_l2" + tag, r.S_l2);
    worst_excess = std::max(worst_excess, r.energy_excess);
    worst_ratio = std::max(worst_ratio, r.max_abs_u / r.K_certified);
    viol += r.momentum_violations;
    certified = certified && r.K_ok;
  }
  rep.tables.push_back(std::move(t));
  rep.tables.push_back(cr.windows);
  if (cr.slope_w1) {
    rep.scalar("slope_w1", *cr.slope_w1);
    rep.scalar("slope_u", *cr.slope_u);
    rep.scalar("slope_S", *cr.slope_S);
  }
  rep.scalar("effective_steps", cr.effective_steps);
  rep.scalar("effective_dt", cr.effective_dt);
  rep.scalar("effective_max_cfl", cr.effective_max_cfl);
  rep.scalar("finest_u_rel", cr.rows.back().u_rel);
  if (cr.cross_S_rel) rep.scalar("cross_S_rel", *cr.cross_S_rel);
  rep.scalar("invariant_violations", cr.invariant_violations);
  rep.scalar("energy_max_relative_excess", worst_excess);
  rep.scalar("max_strain_over_K", worst_ratio);
  rep.scalar("momentum_bound_violations", viol);

  const bool several = cr.rows.size() >= 2;
  if (several) {
    rep.check("w1_strictly_decreasing", w1.back(), "<", w1.front(), strictly_decreasing(w1));
    rep.check("u_l2_strictly_decreasing", u.back(), "<", u.front(), strictly_decreasing(u));
    rep.check("S_l2_strictly_decreasing", S.back(), "<", S.front(), strictly_decreasing(S));
  }
  rep.check("finest_u_rel", cr.rows.back().u_rel, "<=", c.homog.u_rel_tol);
  rep.check("kinetic_invariants", cr.invariant_violations, "==", 0.0);
  rep.check("energy_inequality", worst_excess, "<=", 1e-8);
  rep.check("strain_within_certified_K", worst_ratio, "<=", 1.0, certified && worst_ratio <= 1.0);
  rep.check("momentum_bound_violations", viol, "==", 0.0);
  return rep;
}

RunReport run_mode(const ScenarioConfig& config) {
  switch (config.mode) {
    case Mode::VerifyExact: return run_verify_exact(config);
    case Mode::Simulate: return run_simulate(config);
    case Mode::Effective: return run_effective(config);
    case Mode::CompareHomog: return run_compare_homog(config);
  }
  throw std::logic_error("run_mode: bad mode");
}

int run(Mode mode, const fs::path& config_path, const std::optional<fs::path>& out, std::optional<std::uint64_t> seed,
        std::optional<int> threads) {
  ScenarioConfig cfg;
  try {
    cfg = scenario_from_json(load_config(config_path), mode);
    if (seed) cfg.seed = *seed;
    if (threads) {
      if (*threads < 1) throw ConfigError("--threads: must be >= 1");
      cfg.threads = *threads;
    }
    if (out) cfg.out = *out;
    // build the laws now so bad law files count as configuration errors
    if (mode != Mode::VerifyExact) cfg.law.build();
    if (mode == Mode::VerifyExact) cfg.pressure.build(cfg.params);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  RunReport rep;
  rep.mode = mode;
  try {
    rep = run_mode(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    rep.errors.push_back(e.what());
  }
  try {
    write_artifacts(rep, cfg, cfg.out);
  } catch (const std::exception& e) {
    std::cerr << "cannot write artifacts: " << e.what() << "\n";
    return kExitFail;
  }

  std::cout << mode_name(mode) << " -> " << cfg.out.string() << "\n";
  for (const Check& ch : rep.checks) {
    std::cout << (ch.passed ? "  PASS  " : "  FAIL  ") << ch.name << ": " << format_number(ch.value) << " "
              << ch.relation << " " << format_number(ch.threshold) << "\n";
  }
  for (const std::string& e : rep.errors) std::cout << "  ERROR " << e << "\n";
  return rep.passed() ? kExitPass : kExitFail;
}

}  // namespace oscillax
