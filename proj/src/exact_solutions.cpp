#include "oscillax/exact_solutions.hpp"

#include <cmath>
#include <stdexcept>

namespace oscillax {

namespace {

void check_time(double t) {
  if (!(t >= 1 && t <= 2)) throw std::domain_error("exact solutions are defined for t in [1, 2]");
}

void check_point(const ExactSolutionParams& p, const Point& y) {
  if (y.size() != p.d) throw std::invalid_argument("point dimension does not match params.d");
}

LagrangianSample lagrangian_cell(const ExactSolutionParams& p, double t, double k, double f, bool in_a, Phase tag) {
  LagrangianSample s;
  s.W = (in_a ? p.a : p.b) * t;
  s.V_x = in_a ? p.a : p.b;
  const double within = f <= p.theta ? f * p.a : p.theta * p.a + (f - p.theta) * p.b;
  s.Y = k * p.c_theta() * t + within * t;
  s.V = s.Y / t;
  s.phase = tag;
  return s;
}

}  // namespace

LagrangianSample lagrangian_periodic(const ExactSolutionParams& p, double t, double x) {
  check_time(t);
  const double k = std::floor(x);
  const double f = x - k;
  const bool at_interface = f == 0 || f == p.theta;
  const bool in_a = p.theta == 1 || f < p.theta;
  return lagrangian_cell(p, t, k, f, in_a, at_interface ? Phase::Interface : (in_a ? Phase::A : Phase::B));
}

LagrangianSample lagrangian_one_sided(const ExactSolutionParams& p, double t, double x, Side side) {
  check_time(t);
  double k = std::floor(x);
  double f = x - k;
  if (side == Side::Left && f == 0) {
    k -= 1;
    f = 1;
  }
  const bool in_a = side == Side::Left ? f <= p.theta && f > 0 : (p.theta == 1 || f < p.theta);
  return lagrangian_cell(p, t, k, f, in_a, in_a ? Phase::A : Phase::B);
}

EulerianSample eulerian_1d(const ExactSolutionParams& p, double t, double y) {
  check_time(t);
  const double z = y / t;
  const double c = p.c_theta();
  const double k = std::floor(z / c);
  const double f = z - k * c;
  const double edge = p.a * p.theta;
  const bool in_a = p.theta == 1 || f < edge;
  EulerianSample s;
  s.rho = 1.0 / (t * (in_a ? p.a : p.b));
  s.u = z;
  s.phase = (f == 0 || f == edge) ? Phase::Interface : (in_a ? Phase::A : Phase::B);
  return s;
}

RadialSample rescale_eulerian(const ExactSolutionParams& p, int n, double t, const Point& y) {
  check_time(t);
  check_point(p, y);
  if (n < 1) throw std::invalid_argument("rescale_eulerian: need n >= 1");
  const double s = n * y.norm() / t;
  RadialSample out;
  out.rho = radial_density(p, n, t, y.norm());
  out.u = y / t;
  out.phase = annulus_phase(s, p.theta);
  return out;
}

RadialSample radial_md(const ExactSolutionParams& p, double t, const Point& y) {
  return rescale_eulerian(p, 1, t, y);
}

RadialSample pressureless_uniform(double rho0, int d, double t, const Point& y) {
  if (!(t > 0)) throw std::domain_error("pressureless_uniform: need t > 0");
  if (y.size() != d) throw std::invalid_argument("pressureless_uniform: point dimension mismatch");
  return {rho0 / std::pow(t, d), y / t, Phase::A};
}

MeasureAtomic young_measure_limit(const ExactSolutionParams& p, double t) {
  check_time(t);
  const double td = std::pow(t, p.d);
  if (p.theta == 1) return MeasureAtomic({{p.a / td, 1.0}});
  return MeasureAtomic({{p.a / td, p.theta}, {p.b / td, 1 - p.theta}});
}

}  // namespace oscillax
