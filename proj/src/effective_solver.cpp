#include "oscillax/effective_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oscillax/tridiagonal.hpp"

namespace oscillax {

namespace {

// Nodes [first, last] of a row that can carry mass: F(first) > 0 is the first
// positive entry and F(last) = 1 the first saturated one.
std::pair<int, int> mass_band(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  const double* begin = row.data();
  const double* end = begin + row.size();
  const int first = static_cast<int>(std::upper_bound(begin, end, 0.0) - begin);
  const int last = static_cast<int>(std::lower_bound(begin, end, 1.0) - begin);
  return {first, std::min(last, static_cast<int>(row.size()) - 1)};
}

std::vector<double> merged_targets(const std::vector<double>& snapshots, double T) {
  std::vector<double> targets;
  for (double t : snapshots) {
    if (t >= 0 && t <= T) targets.push_back(t);
  }
  targets.push_back(T);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  return targets;
}

bool is_requested(const std::vector<double>& snapshots, double t, double T) {
  return t == T || std::find(snapshots.begin(), snapshots.end(), t) != snapshots.end();
}

void check_sizes(const KineticField& F, const Grid1D& grid) {
  if (F.rows() != grid.n_cells) throw std::invalid_argument("effective solver: F needs one row per cell");
}

void check_kinetic_step(const KineticField& F, const Eigen::VectorXd& S, const StressLaw& law, double dt) {
  if (S.size() != F.rows()) throw std::invalid_argument("step_kinetic: one stress value per row required");
  if (!(dt > 0)) throw std::invalid_argument("step_kinetic: need dt > 0");
  const XiGrid& xi = F.xi;
  const int m = xi.size;
  const double ratio = dt / xi.step;
  // CFL check over the whole field before touching anything
  for (int i = 0; i < F.rows(); ++i) {
    const auto row = F.F.row(i);
    const auto [first, last] = mass_band(row);
    for (int k = first; k <= last; ++k) {
      const double w = row(k) - (k > 0 ? row(k - 1) : 0.0);
      if (w <= 0) continue;
      const double lambda = ratio * (S(i) - law.value(xi.node(k)));
      if (std::abs(lambda) > 1 + 1e-12) {
        std::ostringstream msg;
        msg << "step_kinetic: CFL violated (|lambda| = " << std::abs(lambda) << " at row " << i << ", xi = "
            << xi.node(k) << ")";
        throw CflError(msg.str());
      }
      if ((lambda > 0 && k == m - 1) || (lambda < 0 && k <= 1)) {
        std::ostringstream msg;
        msg << "step_kinetic: mass would leave the xi-grid at row " << i << ", xi = " << xi.node(k);
        throw KineticInvariantError(msg.str());
      }
    }
  }
}

constexpr double kTailCut = 1e-16;

void apply_kinetic_update(KineticField& F, const Eigen::VectorXd& S, const StressLaw& law, double dt) {
  const XiGrid& xi = F.xi;
  const double ratio = dt / xi.step;
  thread_local std::vector<double> old;
  for (int i = 0; i < F.rows(); ++i) {
    auto row = F.F.row(i);
    const auto [first, last] = mass_band(row);
    if (first == 0) throw KineticInvariantError("step_kinetic: F(xi_lo) must vanish");
    old.assign(row.data() + first - 1, row.data() + last + 1);
    for (int k = first; k <= last; ++k) {
      const double w = old[k - first + 1] - old[k - first];
      if (w <= 0) continue;
      const double lambda = ratio * (S(i) - law.value(xi.node(k)));
      if (lambda > 0) {
        row(k) -= lambda * w;  // mass crosses from k to k + 1
      } else if (lambda < 0) {
        row(k - 1) -= lambda * w;  // mass crosses from k to k - 1
      }
    }
    // Upwinding leaves geometric tails; mass below the cut is pushed one node
    // inward so the band stays finite (and away from subnormals).
    int lo = std::max(first - 1, 1);
    while (lo < last && row(lo) > 0 && row(lo) < kTailCut) row(lo++) = 0;
    int hi = std::min(last, static_cast<int>(row.size()) - 1) - 1;
    while (hi > lo && row(hi) < 1 && row(hi) > 1 - kTailCut) row(hi--) = 1;
  }
}

}  // namespace

Eigen::VectorXd mean_stress(const KineticField& F, const StressLaw& law) {
  Eigen::VectorXd out(F.rows());
  for (int i = 0; i < F.rows(); ++i) {
    const auto row = F.F.row(i);
    const auto [first, last] = mass_band(row);
    double s = 0;
    for (int k = first; k <= last; ++k) {
      const double w = row(k) - (k > 0 ? row(k - 1) : 0.0);
      if (w != 0) s += w * law.value(F.xi.node(k));
    }
    out(i) = s;
  }
  return out;
}

double kinetic_time_limit(const KineticField& F, const Eigen::VectorXd& S, const StressLaw& law) {
  double speed = 0;
  for (int i = 0; i < F.rows(); ++i) {
    const auto row = F.F.row(i);
    const auto [first, last] = mass_band(row);
    for (int k = first; k <= last; ++k) {
      const double w = row(k) - (k > 0 ? row(k - 1) : 0.0);
      if (w > 0) speed = std::max(speed, std::abs(S(i) - law.value(F.xi.node(k))));
    }
  }
  return speed > 0 ? F.xi.step / speed : std::numeric_limits<double>::infinity();
}

KineticField step_kinetic(const KineticField& F, const Eigen::VectorXd& S, const StressLaw& law, double dt) {
  check_kinetic_step(F, S, law, dt);
  KineticField out = F;
  apply_kinetic_update(out, S, law, dt);
  return out;
}

Eigen::VectorXd step_velocity(const Eigen::VectorXd& v, const KineticField& F, const StressLaw& law,
                              const Grid1D& grid, double dt) {
  check_sizes(F, grid);
  const int n = grid.n_cells;
  if (v.size() != n + 1) throw std::invalid_argument("step_velocity: velocity lives on the n + 1 nodes");
  const Eigen::VectorXd sigma = mean_stress(F, law);
  const double dx = grid.dx();
  Eigen::VectorXd lower(n + 1), diag(n + 1), upper(n + 1), rhs(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double w = grid.node_weight(j);
    const double right = j < n ? 1.0 : 0.0;
    const double left = j > 0 ? 1.0 : 0.0;
    diag(j) = 1 + dt * (right + left) / (dx * w);
    upper(j) = -dt * right / (dx * w);
    lower(j) = -dt * left / (dx * w);
    rhs(j) = v(j) + dt * ((j < n ? sigma(j) : 0.0) - (j > 0 ? sigma(j - 1) : 0.0)) / w;
  }
  return solve_tridiagonal<double>(lower, diag, upper, rhs);
}

Eigen::VectorXd stress_reaction_kinetic(const KineticField& F, const Eigen::VectorXd& S, const StressLaw& law,
                                        ReactionRule rule) {
  const XiGrid& xi = F.xi;
  Eigen::VectorXd out(F.rows());
  for (int i = 0; i < F.rows(); ++i) {
    const auto row = F.F.row(i);
    const auto [first, last] = mass_band(row);
    double r = 0;
    for (int k = first; k <= last; ++k) {
      const double w = row(k) - (k > 0 ? row(k - 1) : 0.0);
      if (w == 0) continue;
      const double sk = law.value(xi.node(k));
      const double c = S(i) - sk;
      double slope;
      if (rule == ReactionRule::Exact) {
        slope = law.derivative(xi.node(k));
      } else if (c > 0) {
        slope = (law.value(xi.node(k + 1)) - sk) / xi.step;
      } else if (c < 0) {
        slope = (sk - law.value(xi.node(k - 1))) / xi.step;
      } else {
        slope = 0;
      }
      r += w * slope * c;
    }
    out(i) = r;
  }
  return out;
}

Eigen::VectorXd step_stress(const Eigen::VectorXd& S, const KineticField& F, const StressLaw& law,
                            const Grid1D& grid, double dt, ReactionRule rule) {
  check_sizes(F, grid);
  const int n = grid.n_cells;
  if (S.size() != n) throw std::invalid_argument("step_stress: stress lives on cells");
  const double k = dt / (grid.dx() * grid.dx());
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -k);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, -k);
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 1 + 2 * k);
  diag(0) = diag(n - 1) = 1 + 3 * k;  // S = 0 on the walls
  const Eigen::VectorXd rhs = S + dt * stress_reaction_kinetic(F, S, law, rule);
  return solve_tridiagonal<double>(lower, diag, upper, rhs);
}

Eigen::VectorXd effective_stress(const EffectiveState1& s, const StressLaw& law, const Grid1D& grid) {
  const int n = grid.n_cells;
  return mean_stress(s.F, law) + (s.v.tail(n) - s.v.head(n)) / grid.dx();
}

namespace {

template <class State, class Advance, class Stress>
void run_to_targets(State& state, const EffectiveOptions& options, const StressLaw& law, EffectiveLedger& ledger,
                    std::vector<State>& snapshots, std::vector<State>& steps, Stress&& stress, Advance&& advance) {
  if (!(options.T > 0)) throw std::invalid_argument("effective solver: need T > 0");
  if (!(options.cfl > 0 && options.cfl <= 1)) throw std::invalid_argument("effective solver: cfl must be in (0, 1]");
  const std::vector<double> targets = merged_targets(options.snapshots, options.T);
  std::size_t next = 0;
  if (targets[0] == 0) {
    snapshots.push_back(state);
    ++next;
  }
  if (options.record_steps) steps.push_back(state);
  ledger.min_dt = std::numeric_limits<double>::infinity();
  while (next < targets.size()) {
    const double target = targets[next];
    const Eigen::VectorXd S = stress(state);
    const double limit = kinetic_time_limit(state.F, S, law);
    double h = options.cfl * limit;
    if (options.dt_max) h = std::min(h, *options.dt_max);
    bool lands = false;
    if (state.time + h >= target - 1e-12 * h) {
      h = target - state.time;
      lands = true;
    }
    if (h > 0) {
      advance(state, S, h);
      state.time = lands ? target : state.time + h;
      ++ledger.steps;
      ledger.max_cfl = std::max(ledger.max_cfl, std::isfinite(limit) ? h / limit : 0.0);
      ledger.min_dt = std::min(ledger.min_dt, h);
      ledger.max_dt = std::max(ledger.max_dt, h);
      if (options.check_invariants) ledger.invariant_violations += check_invariants_active(state.F).total();
      if (options.record_steps) steps.push_back(state);
    }
    if (lands) {
      if (is_requested(options.snapshots, target, options.T)) snapshots.push_back(state);
      ++next;
    }
  }
}

}  // namespace

EffectiveResult1 solve_effs1(const KineticField& F0, const Eigen::VectorXd& v0, const StressLaw& law,
                             const Grid1D& grid, const EffectiveOptions& options) {
  grid.validate();
  check_sizes(F0, grid);
  if (v0.size() != grid.n_cells + 1) throw std::invalid_argument("solve_effs1: v0 lives on the n + 1 nodes");
  EffectiveResult1 out;
  EffectiveState1 state{0.0, F0, v0};
  const int n = grid.n_cells;
  auto stress = [&](const EffectiveState1& s) { return effective_stress(s, law, grid); };
  auto advance = [&](EffectiveState1& s, const Eigen::VectorXd& S, double h) {
    const Eigen::VectorXd mean_before = mean_from_F(s.F);
    const Eigen::VectorXd vx = (s.v.tail(n) - s.v.head(n)) / grid.dx();
    check_kinetic_step(s.F, S, law, h);
    apply_kinetic_update(s.F, S, law, h);
    const Eigen::VectorXd mean_after = mean_from_F(s.F);
    out.ledger.max_mean_rate_residual = std::max(
        out.ledger.max_mean_rate_residual, ((mean_after - mean_before) / h - vx).lpNorm<Eigen::Infinity>());
    s.v = step_velocity(s.v, s.F, law, grid, h);
  };
  run_to_targets(state, options, law, out.ledger, out.snapshots, out.steps, stress, advance);
  return out;
}

EffectiveResult2 solve_effs2(const KineticField& F0, const Eigen::VectorXd& S0, const StressLaw& law,
                             const Grid1D& grid, const EffectiveOptions& options) {
  grid.validate();
  check_sizes(F0, grid);
  if (S0.size() != grid.n_cells) throw std::invalid_argument("solve_effs2: S0 lives on cells");
  EffectiveResult2 out;
  EffectiveState2 state{0.0, F0, S0};
  auto stress = [](const EffectiveState2& s) { return s.S; };
  auto advance = [&](EffectiveState2& s, const Eigen::VectorXd& S, double h) {
    s.S = step_stress(S, s.F, law, grid, h, options.rule);
    check_kinetic_step(s.F, S, law, h);
    apply_kinetic_update(s.F, S, law, h);
  };
  run_to_targets(state, options, law, out.ledger, out.snapshots, out.steps, stress, advance);
  return out;
}

VelocityReconstruction reconstruct_velocity(const std::vector<EffectiveState2>& steps, const StressLaw& law,
                                            const Grid1D& grid, double v_left0, double tolerance) {
  VelocityReconstruction out;
  if (steps.empty()) return out;
  const int n = grid.n_cells;
  const double dx = grid.dx();
  double gauge = v_left0;
  double worst = 0, scale = 0;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const EffectiveState2& st = steps[s];
    if (s > 0) gauge += (st.time - steps[s - 1].time) * 2 * st.S(0) / dx;
    const Eigen::VectorXd vx = st.S - mean_stress(st.F, law);
    Eigen::VectorXd v(n + 1);
    v(0) = gauge;
    for (int i = 0; i < n; ++i) v(i + 1) = v(i) + dx * vx(i);
    if (s > 0) {
      const double h = st.time - steps[s - 1].time;
      for (int j = 1; j <= n; ++j) {
        const double right = j < n ? st.S(j) : 0.0;
        const double DS = (right - st.S(j - 1)) / grid.node_weight(j);
        worst = std::max(worst, std::abs((v(j) - out.v.back()(j)) / h - DS));
        scale = std::max(scale, std::abs(DS));
      }
    }
    out.time.push_back(st.time);
    out.v.push_back(std::move(v));
  }
  out.compatibility_residual = scale > 0 ? worst / scale : worst;
  out.flagged = out.compatibility_residual > tolerance;
  return out;
}

}  // namespace oscillax
