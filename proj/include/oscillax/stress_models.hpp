#ifndef OSCILLAX_STRESS_MODELS_HPP
#define OSCILLAX_STRESS_MODELS_HPP

#include <Eigen/Core>
#include <json.hpp>

#include <optional>
#include <string>

#include "oscillax/law.hpp"

namespace oscillax {

struct TwoPhaseOptions {
  double slope = 1.0;       // law' on [a, 2a]
  double tail_coeff = 1.0;  // coefficient of the power tails
  /// law(a) = law(b). Default: chosen so that law(0) = 0, which keeps W >= 0
  /// for the default parameters.
  std::optional<double> level;
  double range_factor = 50.0;  // certified range is +-range_factor * 2b
};

/// Non-monotone stress with law(t a) = law(t b) for t in [1, 2]:
/// affine on [a, 2a], the rescaled copy on [b, 2b], a C^1 cubic bridge on
/// (2a, b), and power tails of degree p - 1 outside [a, 2b].
StressLaw make_two_phase_stress(double a, double b, double growth_exponent,
                                const TwoPhaseOptions& options = {});

struct PressureOptions {
  double slope = 1.0;
  double tail_coeff = 1.0;
  double tail_exponent = 2.0;  // right tail grows like rho^tail_exponent
  double floor = 1.0;          // min of p over the certified range
  double range_factor = 8.0;   // certified range is [0, range_factor * b]
};

/// Pressure with p(a / t^d) = p(b / t^d) for t in [1, 2], positive on [0, range].
PressureLaw make_nonmonotone_pressure(double a, double b, int d, const PressureOptions& options = {});

inline LawSample<double> eval(const StressLaw& law, double u) { return law.eval(u); }

struct CoercivityOptions {
  int samples = 20001;
  /// Extra bound on |u0|: the trap argument needs |g(0)| = |u0| <= K - M too.
  double data_bound = 0.0;
};

struct CoercivityReport {
  double M{0};
  double g_plus{0};
  double g_minus{0};
  double K{0};
  bool ok{false};
  std::string message;
  Eigen::VectorXd samples;  // search grid for g
  Eigen::VectorXd bound;    // B(g, M) on the grid
};

/// B(u, M) = M * max_{|z| <= M} |law'(u + z)|, maximized exactly.
double coercivity_bound(const StressLaw& law, double u, double M);

CoercivityReport certify_coercivity(const StressLaw& law, double M, const CoercivityOptions& options = {});

nlohmann::json law_to_json(const StressLaw& law);
StressLaw law_from_json(const nlohmann::json& doc);

}  // namespace oscillax

#endif  // OSCILLAX_STRESS_MODELS_HPP
