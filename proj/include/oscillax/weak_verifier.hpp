#ifndef OSCILLAX_WEAK_VERIFIER_HPP
#define OSCILLAX_WEAK_VERIFIER_HPP

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oscillax/exact_solutions.hpp"
#include "oscillax/law.hpp"

namespace oscillax {

/// phi(t, y) = bump((t - t0) / r_t) * bump(|y - y0| / r_y), bump(s) = (1 - s^2)^degree.
struct TestFunction {
  double t0{1.5};
  double r_t{0.25};
  Point y0;
  double r_y{0.5};
  int degree{4};

  struct Value {
    double phi;
    double dt;
    Point grad;
  };

  Value eval(double t, const Point& y) const;
  /// Support strictly inside (1, 2) in time.
  bool inside_time_window() const { return t0 - r_t > 1 && t0 + r_t < 2; }
};

/// Fixed-seed bump functions: centers in (1.3, 1.7) x B_{ball_radius}.
std::vector<TestFunction> random_tests(int count, int d, std::uint64_t seed, double ball_radius = 1.5);

struct QuadratureSpec {
  int order{8};
  int t_cells{16};
  int angle_cells{32};
  int radial_cells{1};
};

struct InterfaceResidual {
  std::string id;
  double mass{0};
  double momentum{0};
  double viscous{0};  // jump of the viscous part alone
};

struct ResidualReport {
  std::string label;
  double mass_residual{0};
  std::vector<double> momentum_residual;  // per component (normal only for jump reports)
  double mass_relative{0};
  double momentum_relative{0};
  double normalization{0};  // int int |rho| |phi_t|
  std::vector<InterfaceResidual> per_interface;
  QuadratureSpec quadrature{};
  int sub_cells{0};  // radial pieces visited, after interface subdivision

  double max_momentum() const;
};

/// Jumps of velocity and of law(W) + mu V_x / W across x = k and x = k + theta.
ResidualReport rh_residual_lagrangian(const ExactSolutionParams& p, const StressLaw& law,
                                      const std::vector<double>& t_samples, int k_max = 3);

/// Mass and normal-momentum jumps across the spheres |y| = k t and (k + theta) t.
/// No pressure means the pressureless system (no pressure, no viscosity).
ResidualReport rh_residual_md(const ExactSolutionParams& p, const std::optional<PressureLaw>& pressure,
                              const std::vector<double>& t_samples, int k_max);

/// Calls visit(t, y, rho, weight) on the interface-aware quadrature of the
/// support of phi for the n-rescaled radial solution.
using QuadratureVisitor = std::function<void(double t, const Point& y, double rho, double weight)>;
int for_each_quadrature_node(const ExactSolutionParams& p, int n, const TestFunction& phi,
                             const QuadratureSpec& quad, const QuadratureVisitor& visit);

/// Integral of the piecewise-constant rho_n over the ball |y| <= radius at time t.
double integrate_density_ball(const ExactSolutionParams& p, int n, double t, double radius, const QuadratureSpec& quad);

std::vector<ResidualReport> weak_form_residual_md(const ExactSolutionParams& p,
                                                  const std::optional<PressureLaw>& pressure,
                                                  const std::vector<TestFunction>& tests,
                                                  const QuadratureSpec& quad, int n = 1, int threads = 1);

struct WeakLimitRow {
  int n;
  double rho_pairing;
  double pressure_pairing;
};

struct WeakLimitTable {
  std::vector<WeakLimitRow> rows;
  double rho_bar_pairing{0};           // <theta a/t^d + (1-theta) b/t^d, phi>
  double q_bar_pairing{0};             // <theta p(a/t^d) + (1-theta) p(b/t^d), phi>
  double pressure_of_mean_pairing{0};  // <p(rho_bar), phi>
};

WeakLimitTable weak_limit_table(const ExactSolutionParams& p, const PressureLaw& pressure, const TestFunction& phi,
                                const std::vector<int>& n_list, const QuadratureSpec& quad);

nlohmann::json to_json(const ResidualReport& r);

}  // namespace oscillax

#endif  // OSCILLAX_WEAK_VERIFIER_HPP
