#ifndef OSCILLAX_EXACT_SOLUTIONS_HPP
#define OSCILLAX_EXACT_SOLUTIONS_HPP

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "oscillax/measure.hpp"

namespace oscillax {

/// Position or velocity in d <= 3 dimensions; fixed capacity so evaluators
/// never touch the heap.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

enum class Phase { A, B, Interface };

struct ExactSolutionParams {
  double a{1};
  double b{3};
  double theta{0.5};
  int d{1};
  double mu{1};
  double lambda{0};

  /// Mean cell width theta a + (1 - theta) b; also the Eulerian cell period.
  double c_theta() const { return theta * a + (1 - theta) * b; }

  void validate(bool multi_d = false) const {
    if (!(a > 0 && a < b)) throw std::invalid_argument("ExactSolutionParams: need 0 < a < b");
    if (!(theta > 0 && theta <= 1)) throw std::invalid_argument("ExactSolutionParams: need theta in (0, 1]");
    if (d < 1 || d > 3) throw std::invalid_argument("ExactSolutionParams: d must be 1, 2 or 3");
    if (!(mu > 0 && lambda + mu > 0)) throw std::invalid_argument("ExactSolutionParams: need mu > 0, lambda + mu > 0");
    if (multi_d && !(a < std::ldexp(b, -d))) throw std::invalid_argument("ExactSolutionParams: need a < b / 2^d");
  }
};

enum class Side { Left, Right };

struct LagrangianSample {
  double W;    // strain
  double V;    // velocity
  double Y;    // flow map
  double V_x;  // velocity gradient (one-sided at interfaces)
  Phase phase;
};

/// Periodic Lagrangian solution: W = a t on (k, k + theta), b t on
/// (k + theta, k + 1). At interfaces the tag is Interface and the values are
/// the right limits.
LagrangianSample lagrangian_periodic(const ExactSolutionParams& p, double t, double x);

/// One-sided limit of the Lagrangian fields at x.
LagrangianSample lagrangian_one_sided(const ExactSolutionParams& p, double t, double x, Side side);

struct EulerianSample {
  double rho;
  double u;
  Phase phase;
};

/// 1D Eulerian form: u = y / t, rho = 1/(t a) or 1/(t b) by the cell of y/t
/// modulo c_theta.
EulerianSample eulerian_1d(const ExactSolutionParams& p, double t, double y);

struct RadialSample {
  double rho;
  Point u;
  Phase phase;
};

/// Phase of the annulus structure with n annuli per unit of |y|/t; s = n|y|/t.
inline Phase annulus_phase(double s, double theta) {
  if (s <= 0) return Phase::A;
  const double k = std::floor(s);
  const double f = s - k;
  if (f == 0 || f == theta) return Phase::Interface;
  return f < theta ? Phase::A : Phase::B;
}

/// Right-limit phase (the one used for values at interfaces).
inline Phase annulus_side(double s, double theta) {
  const double f = s - std::floor(s);
  return (theta == 1 || f < theta) ? Phase::A : Phase::B;
}

/// Density of the rescaled radial solution as a function of |y|.
inline double radial_density(const ExactSolutionParams& p, int n, double t, double r) {
  const double td = std::pow(t, p.d);
  return annulus_side(n * r / t, p.theta) == Phase::A ? p.a / td : p.b / td;
}

RadialSample radial_md(const ExactSolutionParams& p, double t, const Point& y);
RadialSample pressureless_uniform(double rho0, int d, double t, const Point& y);
/// rho_n(t, y) = rho(t, n y), u_n(t, y) = u(t, n y) / n = y / t.
RadialSample rescale_eulerian(const ExactSolutionParams& p, int n, double t, const Point& y);

MeasureAtomic young_measure_limit(const ExactSolutionParams& p, double t);

}  // namespace oscillax

#endif  // OSCILLAX_EXACT_SOLUTIONS_HPP
