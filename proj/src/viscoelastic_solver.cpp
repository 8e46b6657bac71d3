#include "oscillax/viscoelastic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oscillax/quadrature.hpp"
#include "oscillax/stress_models.hpp"
#include "oscillax/tridiagonal.hpp"

namespace oscillax {

Eigen::VectorXd velocity_gradient(const Eigen::VectorXd& v, const Grid1D& grid) {
  const int n = grid.n_cells;
  return (v.tail(n) - v.head(n)) / grid.dx();
}

Eigen::VectorXd total_stress(const SolverState& s, const StressLaw& law, const Grid1D& grid) {
  Eigen::VectorXd S = velocity_gradient(s.v, grid);
  for (int i = 0; i < grid.n_cells; ++i) S(i) += law.value(s.u(i));
  return S;
}

double energy(const SolverState& s, const StressLaw& law, const Grid1D& grid) {
  double potential = 0;
  for (int i = 0; i < grid.n_cells; ++i) potential += law.antiderivative(s.u(i));
  double kinetic = 0;
  for (int j = 0; j <= grid.n_cells; ++j) kinetic += grid.node_weight(j) * s.v(j) * s.v(j);
  return grid.dx() * potential + 0.5 * kinetic;
}

Eigen::VectorXd momentum_integral(const Eigen::VectorXd& v, const Grid1D& grid) {
  Eigen::VectorXd A(grid.n_cells);
  double acc = 0;
  for (int i = 0; i < grid.n_cells; ++i) {
    acc += grid.node_weight(i) * v(i);
    A(i) = acc;
  }
  return A;
}

OscillatoryData make_oscillatory_data(const Grid1D& grid, double epsilon, double alpha, double beta, double theta,
                                      const Profile& v0) {
  grid.validate();
  if (!(epsilon > 0)) throw std::invalid_argument("make_oscillatory_data: need epsilon > 0");
  const int n_osc = static_cast<int>(std::lround(1.0 / epsilon));
  if (n_osc < 1 || std::abs(n_osc * epsilon - 1.0) > 1e-9) {
    throw std::invalid_argument("make_oscillatory_data: epsilon must be 1/n_osc");
  }
  if (grid.n_cells % n_osc != 0 || grid.n_cells / n_osc < 8) {
    throw std::invalid_argument("make_oscillatory_data: grid does not resolve epsilon (need n_osc | n_cells, >= 8 cells per period)");
  }
  if (!(theta >= 0 && theta <= 1)) throw std::invalid_argument("make_oscillatory_data: need theta in [0, 1]");
  OscillatoryData data;
  data.grid = grid;
  data.epsilon = epsilon;
  data.n_osc = n_osc;
  data.alpha = alpha;
  data.beta = beta;
  data.theta = theta;
  data.initial.u.resize(grid.n_cells);
  const int per = grid.n_cells / n_osc;
  for (int i = 0; i < grid.n_cells; ++i) {
    const double frac = ((i % per) + 0.5) / per;
    data.initial.u(i) = frac < theta ? alpha : beta;
  }
  data.initial.v.resize(grid.n_cells + 1);
  for (int j = 0; j <= grid.n_cells; ++j) data.initial.v(j) = v0 ? v0(grid.node(j)) : 0.0;
  return data;
}

double secant_stress(const StressLaw& law, double x, double y) {
  const double delta = y - x;
  if (std::abs(delta) > 1e-3 * (1 + std::abs(x) + std::abs(y))) {
    return (law.antiderivative(y) - law.antiderivative(x)) / delta;
  }
  if (delta == 0) return law.value(x);
  // Short interval: Gauss-Legendre between knots (exact on cubic pieces).
  static const GaussLegendre<double> gl(4);
  const double lo = std::min(x, y), hi = std::max(x, y);
  double sum = 0, a = lo;
  for (double k : law.knots()) {
    if (k > a && k < hi) {
      sum += gl.integrate([&](double s) { return law.value(s); }, a, k);
      a = k;
    }
  }
  sum += gl.integrate([&](double s) { return law.value(s); }, a, hi);
  return sum / (hi - lo);
}

SolverState advance(const SolverState& s, const StressLaw& law, const Grid1D& grid, double dt,
                    const StepOptions& options) {
  const int n = grid.n_cells;
  if (s.u.size() != n || s.v.size() != n + 1) throw std::invalid_argument("advance: field sizes do not match grid");
  if (!(dt > 0)) throw std::invalid_argument("advance: need dt > 0");
  const double dx = grid.dx();

  Eigen::VectorXd V = s.v;
  Eigen::VectorXd Gv(n), unew(n), S(n), R(n + 1), lower(n + 1), diag(n + 1), upper(n + 1);
  auto residual = [&]() {
    Gv = velocity_gradient(V, grid);
    unew = s.u + dt * Gv;
    for (int i = 0; i < n; ++i) S(i) = secant_stress(law, s.u(i), unew(i)) + Gv(i);
    for (int j = 0; j <= n; ++j) {
      const double right = j < n ? S(j) : 0.0;
      const double left = j > 0 ? S(j - 1) : 0.0;
      R(j) = V(j) - s.v(j) - dt * (right - left) / grid.node_weight(j);
    }
    return R.lpNorm<Eigen::Infinity>();
  };

  double rn = residual();
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  const double scale = 1 + s.v.lpNorm<Eigen::Infinity>();
  for (; it < options.max_newton; ++it) {
    if (!std::isfinite(rn)) break;
    if (rn <= options.newton_tol * scale) break;
    // roundoff plateau
    if (rn <= 1e-11 * scale && rn >= 0.5 * prev) break;
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c(i) = 1 + dt * 0.5 * law.derivative(0.5 * (s.u(i) + unew(i)));
    for (int j = 0; j <= n; ++j) {
      const double w = grid.node_weight(j);
      const double cr = j < n ? c(j) : 0.0;
      const double cl = j > 0 ? c(j - 1) : 0.0;
      diag(j) = 1 + dt * (cr + cl) / (dx * w);
      upper(j) = -dt * cr / (dx * w);
      lower(j) = -dt * cl / (dx * w);
    }
    try {
      V -= solve_tridiagonal<double>(lower, diag, upper, R);
    } catch (const std::runtime_error& e) {
      throw StepRejected(std::string("advance: ") + e.what());
    }
    prev = rn;
    rn = residual();
  }
  if (!std::isfinite(rn) || rn > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "advance: Newton failed at t=" << s.time << " (residual " << rn << " after " << it << " iterations)";
    throw StepRejected(msg.str());
  }
  return SolverState{s.time + dt, unew, V};
}

double default_time_step(const Grid1D& grid, const StressLaw& law, const Eigen::VectorXd& u) {
  const double dx = grid.dx();
  const double lo = u.minCoeff(), hi = u.maxCoeff();
  const double slope = std::max(law.max_abs_derivative(lo, hi), 1e-12);
  return std::min(0.25 * dx * dx, dx / std::sqrt(slope));
}

namespace {

Frame make_frame(const SolverState& s, const StressLaw& law, const Grid1D& grid) {
  return {s.time, s.u, s.v, total_stress(s, law, grid)};
}

double infimum_of_potential(const StressLaw& law) {
  double best = 0;  // W(0) = 0
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double u = law.range_lo() + (law.range_hi() - law.range_lo()) * i / n;
    best = std::min(best, law.antiderivative(u));
  }
  for (double k : law.knots()) best = std::min(best, law.antiderivative(k));
  return best;
}

}  // namespace

SolveResult solve(const SolverConfig& config, const StressLaw& law, const SolverState& initial) {
  const Grid1D& grid = config.grid;
  grid.validate();
  if (!(config.T > 0)) throw std::invalid_argument("solve: need T > 0");
  SolveResult out;
  out.dt = config.dt.value_or(default_time_step(grid, law, initial.u));
  if (!(out.dt > 0)) throw std::invalid_argument("solve: need dt > 0");

  std::vector<double> targets;
  for (double t : config.snapshots) {
    if (t >= 0 && t <= config.T) targets.push_back(t);
  }
  targets.push_back(config.T);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  SolverState state = initial;
  state.time = 0;
  const double E0 = energy(state, law, grid);
  EnergyLedger& el = out.energy;
  el.initial = E0;
  el.time.push_back(0);
  el.energy.push_back(E0);
  el.dissipation.push_back(0);

  StrainBoundLedger& sl = out.strain;
  sl.M = std::sqrt(std::max(E0, 0.0));
  sl.M_rigorous = std::sqrt(2 * std::max(E0 - infimum_of_potential(law), 0.0));
  {
    const CoercivityReport rep = certify_coercivity(law, sl.M);
    sl.K_ok = rep.ok;
    sl.K_certified = rep.K;
  }
  auto track_strain = [&](const SolverState& s) {
    const Eigen::VectorXd A = momentum_integral(s.v, grid);
    const double a = A.lpNorm<Eigen::Infinity>();
    sl.max_abs_A = std::max(sl.max_abs_A, a);
    sl.max_abs_u = std::max(sl.max_abs_u, s.u.lpNorm<Eigen::Infinity>());
    sl.max_abs_g = std::max(sl.max_abs_g, (s.u - A).lpNorm<Eigen::Infinity>());
    if (a > sl.M + 1e-6) ++sl.momentum_violations;
  };
  track_strain(state);

  std::size_t next = 0;
  if (targets[0] == 0) {
    out.snapshots.push_back(make_frame(state, law, grid));
    ++next;
  }
  if (config.history_stride > 0) out.history.push_back(make_frame(state, law, grid));

  double D = 0;
  const double slack = config.energy_tol * std::abs(E0);
  while (next < targets.size()) {
    const double target = targets[next];
    double h = out.dt;
    bool lands = false;
    if (state.time + h >= target - 1e-12 * out.dt) {
      h = target - state.time;
      lands = true;
    }
    if (h > 0) {
      SolverState fresh = advance(state, law, grid, h);
      const Eigen::VectorXd Gv = velocity_gradient(fresh.v, grid);
      D += h * grid.dx() * Gv.squaredNorm();
      if (lands) fresh.time = target;
      state = std::move(fresh);
      ++out.steps;
      const double E = energy(state, law, grid);
      const double excess = E + D - E0;
      el.max_excess = std::max(el.max_excess, excess / std::max(std::abs(E0), 1e-300));
      if (excess > slack) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "energy inequality violated at step " << out.steps << ", t=" << state.time << ": E=" << E << " D=" << D
            << " E0=" << E0;
        throw EnergyViolation(msg.str());
      }
      if (out.steps % std::max(config.ledger_stride, 1) == 0 || lands) {
        el.time.push_back(state.time);
        el.energy.push_back(E);
        el.dissipation.push_back(D);
      }
      track_strain(state);
      if (config.history_stride > 0 && out.steps % config.history_stride == 0 &&
          state.time <= config.history_until + 1e-15) {
        out.history.push_back(make_frame(state, law, grid));
      }
    }
    if (lands) {
      if (std::find(config.snapshots.begin(), config.snapshots.end(), target) != config.snapshots.end() ||
          target == config.T) {
        out.snapshots.push_back(make_frame(state, law, grid));
      }
      ++next;
    }
  }
  return out;
}

Eigen::VectorXd stress_reaction(const Eigen::VectorXd& u, const Eigen::VectorXd& S, const StressLaw& law) {
  Eigen::VectorXd r(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) r(i) = law.derivative(u(i)) * (S(i) - law.value(u(i)));
  return r;
}

std::vector<StressResidual> stress_pde_residual(const std::vector<Frame>& frames, const StressLaw& law,
                                                const Grid1D& grid) {
  std::vector<StressResidual> out;
  const int n = grid.n_cells;
  const double dx = grid.dx();
  for (std::size_t k = 1; k + 1 < frames.size(); ++k) {
    const double h0 = frames[k].time - frames[k - 1].time;
    const double h1 = frames[k + 1].time - frames[k].time;
    if (!(h0 > 0) || std::abs(h1 - h0) > 1e-9 * h0) continue;
    const Eigen::VectorXd& S = frames[k].S;
    StressResidual r;
    r.time = frames[k].time;
    r.field = (frames[k + 1].S - frames[k - 1].S) / (2 * h0) - stress_reaction(frames[k].u, S, law);
    for (int i = 0; i < n; ++i) {
      const double left = i > 0 ? S(i - 1) : -S(0);
      const double right = i + 1 < n ? S(i + 1) : -S(n - 1);
      r.field(i) -= (left - 2 * S(i) + right) / (dx * dx);
    }
    r.l2 = std::sqrt(dx) * r.field.norm();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace oscillax
