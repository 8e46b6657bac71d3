#ifndef OSCILLAX_VISCOELASTIC_SOLVER_HPP
#define OSCILLAX_VISCOELASTIC_SOLVER_HPP

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscillax/grid.hpp"
#include "oscillax/law.hpp"

namespace oscillax {

/// Strain u on cells, velocity v on nodes.
struct SolverState {
  double time{0};
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

/// (v_{i+1} - v_i) / dx on cells.
Eigen::VectorXd velocity_gradient(const Eigen::VectorXd& v, const Grid1D& grid);
/// S = law(u) + v_x on cells.
Eigen::VectorXd total_stress(const SolverState& s, const StressLaw& law, const Grid1D& grid);
/// E = sum dx W(u_i) + 1/2 sum w_j v_j^2.
double energy(const SolverState& s, const StressLaw& law, const Grid1D& grid);
/// A_i = int_0^{x_i} v at cell centers, i.e. sum_{j <= i} w_j v_j.
Eigen::VectorXd momentum_integral(const Eigen::VectorXd& v, const Grid1D& grid);

using Profile = std::function<double(double)>;

struct OscillatoryData {
  Grid1D grid;
  double epsilon{0};
  int n_osc{0};
  double alpha{0}, beta{0}, theta{0};
  SolverState initial;
};

/// u0 = alpha on the first theta-fraction of each epsilon-period, beta on the
/// rest (classified by cell center); v0 sampled at the nodes.
OscillatoryData make_oscillatory_data(const Grid1D& grid, double epsilon, double alpha, double beta, double theta,
                                      const Profile& v0);

class StepRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnergyViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepOptions {
  double newton_tol{1e-14};
  int max_newton{50};
};

/// Mean of law over [x, y], i.e. (W(y) - W(x)) / (y - x), evaluated without
/// cancellation when y is close to x.
double secant_stress(const StressLaw& law, double x, double y);

/// One implicit step: u' = u + dt G v', v' = v + dt D(secant(u, u') + G v'),
/// with S = 0 at both walls. Solved by Newton with a tridiagonal Jacobian.
SolverState advance(const SolverState& s, const StressLaw& law, const Grid1D& grid, double dt,
                    const StepOptions& options = {});

/// min(0.25 dx^2, dx / sqrt(max|law'|)) over the range of u.
double default_time_step(const Grid1D& grid, const StressLaw& law, const Eigen::VectorXd& u);

struct Frame {
  double time{0};
  Eigen::VectorXd u, v, S;
};

struct EnergyLedger {
  double initial{0};
  std::vector<double> time, energy, dissipation;
  double max_excess{0};  // max of E + D - E(0), relative to |E(0)|
};

struct StrainBoundLedger {
  double M{0};            // sqrt(E(0))
  double M_rigorous{0};   // sqrt(2 (E(0) - inf W)), from Cauchy-Schwarz
  double K_certified{0};  // from certify_coercivity(M)
  bool K_ok{false};
  double max_abs_u{0};
  double max_abs_A{0};
  double max_abs_g{0};
  int momentum_violations{0};  // steps with max|A| > M + 1e-6
};

struct SolverConfig {
  Grid1D grid;
  double T{0.1};
  std::optional<double> dt;
  std::vector<double> snapshots;
  double energy_tol{1e-8};
  int ledger_stride{1};     // record E(t) every stride steps
  int history_stride{0};    // keep every stride-th step as a frame (0 = none)
  double history_until{0};  // stop keeping history frames after this time
};

struct SolveResult {
  std::vector<Frame> snapshots;
  std::vector<Frame> history;
  EnergyLedger energy;
  StrainBoundLedger strain;
  double dt{0};
  long steps{0};
};

SolveResult solve(const SolverConfig& config, const StressLaw& law, const SolverState& initial);

struct StressResidual {
  double time{0};
  Eigen::VectorXd field;
  double l2{0};
};

/// Residual of S_t = S_xx + law'(u)(S - law(u)) from consecutive equally
/// spaced frames (central in time, S = 0 at the walls).
std::vector<StressResidual> stress_pde_residual(const std::vector<Frame>& frames, const StressLaw& law,
                                                const Grid1D& grid);

/// law'(u)(S - law(u)) per cell.
Eigen::VectorXd stress_reaction(const Eigen::VectorXd& u, const Eigen::VectorXd& S, const StressLaw& law);

}  // namespace oscillax

#endif  // OSCILLAX_VISCOELASTIC_SOLVER_HPP
