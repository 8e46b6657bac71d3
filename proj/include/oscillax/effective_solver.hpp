#ifndef OSCILLAX_EFFECTIVE_SOLVER_HPP
#define OSCILLAX_EFFECTIVE_SOLVER_HPP

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <vector>

#include "oscillax/grid.hpp"
#include "oscillax/kinetic_tools.hpp"
#include "oscillax/law.hpp"

namespace oscillax {

class CflError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when mass would leave the xi-grid or an invariant of F breaks.
class KineticInvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// sigma-bar per row, as the direct sum over the atoms of the row.
Eigen::VectorXd mean_stress(const KineticField& F, const StressLaw& law);

/// Largest dt with dt |S_i - law(xi_k)| <= dxi on every node carrying mass.
double kinetic_time_limit(const KineticField& F, const Eigen::VectorXd& S, const StressLaw& law);

/// dt F + (S - law(xi)) d_xi F = 0, first-order upwind. Each atom sends the
/// fraction dt |S - law(xi_k)| / dxi of its mass to the downstream node, so
/// range, monotonicity and total mass are preserved and the mean of each row
/// moves by exactly dt (S - sigma-bar).
KineticField step_kinetic(const KineticField& F, const Eigen::VectorXd& S, const StressLaw& law, double dt);

/// (I - dt D G) v' = v + dt D sigma-bar with S = sigma-bar + G v' = 0 at both walls.
Eigen::VectorXd step_velocity(const Eigen::VectorXd& v, const KineticField& F, const StressLaw& law,
                              const Grid1D& grid, double dt);

enum class ReactionRule {
  Exact,   // sum_k w_k law'(xi_k) (S - law(xi_k))
  Upwind,  // law' replaced by the upwind difference quotient of the kinetic step
};

Eigen::VectorXd stress_reaction_kinetic(const KineticField& F, const Eigen::VectorXd& S, const StressLaw& law,
                                        ReactionRule rule = ReactionRule::Exact);

/// (I - dt L) S' = S + dt reaction(F, S), L the Dirichlet (S = 0 at the walls) Laplacian.
Eigen::VectorXd step_stress(const Eigen::VectorXd& S, const KineticField& F, const StressLaw& law,
                            const Grid1D& grid, double dt, ReactionRule rule = ReactionRule::Exact);

struct EffectiveState1 {
  double time{0};
  KineticField F;
  Eigen::VectorXd v;  // nodes
};

struct EffectiveState2 {
  double time{0};
  KineticField F;
  Eigen::VectorXd S;  // cells
};

struct EffectiveOptions {
  double T{0.1};
  double cfl{0.9};
  std::optional<double> dt_max;
  std::vector<double> snapshots;
  bool record_steps{false};  // keep every step (needed for reconstruct_velocity)
  bool check_invariants{true};
  ReactionRule rule{ReactionRule::Exact};
};

struct EffectiveLedger {
  long steps{0};
  long invariant_violations{0};
  double max_cfl{0};  // max over steps of dt |S - law| / dxi on active nodes
  double min_dt{0}, max_dt{0};
  double max_mean_rate_residual{0};  // max |(u' - u)/dt - G v| for effs1
};

struct EffectiveResult1 {
  std::vector<EffectiveState1> snapshots;
  std::vector<EffectiveState1> steps;
  EffectiveLedger ledger;
};

struct EffectiveResult2 {
  std::vector<EffectiveState2> snapshots;
  std::vector<EffectiveState2> steps;
  EffectiveLedger ledger;
};

/// Total stress sigma-bar + G v on cells.
Eigen::VectorXd effective_stress(const EffectiveState1& s, const StressLaw& law, const Grid1D& grid);

EffectiveResult1 solve_effs1(const KineticField& F0, const Eigen::VectorXd& v0, const StressLaw& law,
                             const Grid1D& grid, const EffectiveOptions& options);
EffectiveResult2 solve_effs2(const KineticField& F0, const Eigen::VectorXd& S0, const StressLaw& law,
                             const Grid1D& grid, const EffectiveOptions& options);

struct VelocityReconstruction {
  std::vector<double> time;
  std::vector<Eigen::VectorXd> v;
  double compatibility_residual{0};  // max |(v' - v)/dt - D S'| relative to max |D S'|
  bool flagged{false};
};

/// v from v_x = S - sigma-bar, gauge at x = 0 from v_t = S_x there.
VelocityReconstruction reconstruct_velocity(const std::vector<EffectiveState2>& steps, const StressLaw& law,
                                            const Grid1D& grid, double v_left0, double tolerance = 5e-2);

}  // namespace oscillax

#endif  // OSCILLAX_EFFECTIVE_SOLVER_HPP
