#include "oscillax/weak_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Geometry>

#include "oscillax/quadrature.hpp"

namespace oscillax {

namespace {

constexpr double kPi = std::numbers::pi;

// Calls piece(lo, hi) for each sub-interval of [lo, hi] between consecutive
// interface radii (k + {0, theta}) t / n.
template <class Piece>
int split_at_interfaces(const ExactSolutionParams& p, int n, double t, double lo, double hi, Piece&& piece) {
  thread_local std::vector<double> breaks;
  breaks.clear();
  breaks.push_back(lo);
  const double scale = t / n;
  const long k0 = static_cast<long>(std::floor(lo / scale));
  const long k1 = static_cast<long>(std::ceil(hi / scale));
  for (long k = k0; k <= k1; ++k) {
    for (double r : {k * scale, (k + p.theta) * scale}) {
      if (r > lo && r < hi) breaks.push_back(r);
    }
  }
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const int count = static_cast<int>(breaks.size()) - 1;
  for (int i = 0; i < count; ++i) piece(breaks[i], breaks[i + 1]);
  return count;
}

// Integrates along the ray r e, r in [lo, hi], with Jacobian r^(d-1).
int integrate_ray(const ExactSolutionParams& p, int n, double t, const Point& e, double lo, double hi, double weight,
                  const GaussLegendre<double>& gl, int radial_cells, const QuadratureVisitor& visit) {
  const int d = p.d;
  return split_at_interfaces(p, n, t, lo, hi, [&](double r0, double r1) {
    if (!(r1 > r0)) return;
    const double s_lo = n * (r0 + 0.25 * (r1 - r0)) / t;
    const double s_hi = n * (r0 + 0.75 * (r1 - r0)) / t;
    if (annulus_side(s_lo, p.theta) != annulus_side(s_hi, p.theta)) {
      throw std::logic_error("quadrature piece straddles a density interface");
    }
    const double rho = radial_density(p, n, t, 0.5 * (r0 + r1));
    Point y(d);
    gl.for_each(r0, r1, radial_cells, [&](double r, double wr) {
      y = r * e;
      visit(t, y, rho, weight * wr * std::pow(r, d - 1));
    });
  });
}

// Orthonormal frame with first axis along `axis` (d = 3).
void frame(const Point& axis, Eigen::Vector3d& e1, Eigen::Vector3d& e2, Eigen::Vector3d& e3) {
  const double len = axis.norm();
  e1 = Eigen::Vector3d::UnitZ();
  if (len > 0) e1 = Eigen::Vector3d(axis(0), axis(1), axis(2)) / len;
  const Eigen::Vector3d pick = std::abs(e1.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  e2 = (pick - pick.dot(e1) * e1).normalized();
  e3 = e1.cross(e2);
}

double bump(double s2, int degree) { return std::pow(1 - s2, degree); }

}  // namespace

TestFunction::Value TestFunction::eval(double t, const Point& y) const {
  Value v{0.0, 0.0, Point::Zero(y.size())};
  const double st = (t - t0) / r_t;
  if (std::abs(st) >= 1) return v;
  const Point dy = y - y0;
  const double sy2 = dy.squaredNorm() / (r_y * r_y);
  if (sy2 >= 1) return v;
  const double bt = bump(st * st, degree);
  const double dbt = -2.0 * degree * st * bump(st * st, degree - 1) / r_t;
  const double by = bump(sy2, degree);
  const double dby = -2.0 * degree * bump(sy2, degree - 1) / (r_y * r_y);
  v.phi = bt * by;
  v.dt = dbt * by;
  v.grad = (bt * dby) * dy;
  return v;
}

std::vector<TestFunction> random_tests(int count, int d, std::uint64_t seed, double ball_radius) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TestFunction> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    TestFunction f;
    f.t0 = 1.3 + 0.4 * unit(gen);
    f.r_t = 0.25;
    f.r_y = 0.5;
    // uniform in the ball: direction from normals, radius from r^d law
    std::normal_distribution<double> normal(0.0, 1.0);
    Point dir(d);
    for (int c = 0; c < d; ++c) dir(c) = normal(gen);
    const double len = dir.norm();
    const double r = ball_radius * std::pow(unit(gen), 1.0 / d);
    f.y0 = len > 0 ? Point(dir * (r / len)) : Point(Point::Zero(d));
    out.push_back(f);
  }
  return out;
}

int for_each_quadrature_node(const ExactSolutionParams& p, int n, const TestFunction& phi, const QuadratureSpec& quad,
                             const QuadratureVisitor& visit) {
  if (phi.y0.size() != p.d) throw std::invalid_argument("test function dimension does not match params.d");
  if (!phi.inside_time_window()) throw std::invalid_argument("test function support must lie inside 1 < t < 2");
  const GaussLegendre<double> gl(quad.order);
  const double c0 = phi.y0.norm();
  const double ry = phi.r_y;
  int pieces = 0;

  auto ray = [&](double t, const Point& e, double weight) {
    const double proj = e.dot(phi.y0);
    const double disc = ry * ry - (c0 * c0 - proj * proj);
    if (disc <= 0) return;
    const double h = std::sqrt(disc);
    const double lo = std::max(0.0, proj - h);
    const double hi = proj + h;
    if (hi <= lo) return;
    pieces += integrate_ray(p, n, t, e, lo, hi, weight, gl, quad.radial_cells, visit);
  };

  gl.for_each(phi.t0 - phi.r_t, phi.t0 + phi.r_t, quad.t_cells, [&](double t, double wt) {
    if (p.d == 1) {
      ray(t, Point::Constant(1, 1.0), wt);
      ray(t, Point::Constant(1, -1.0), wt);
    } else if (p.d == 2) {
      double a0 = 0, a1 = 2 * kPi;
      if (c0 > ry) {
        const double mid = std::atan2(phi.y0(1), phi.y0(0));
        const double half = std::asin(ry / c0);
        a0 = mid - half;
        a1 = mid + half;
      }
      Point e(2);
      gl.for_each(a0, a1, quad.angle_cells, [&](double alpha, double wa) {
        e << std::cos(alpha), std::sin(alpha);
        ray(t, e, wt * wa);
      });
    } else {
      Eigen::Vector3d e1, e2, e3;
      frame(phi.y0, e1, e2, e3);
      const double beta_max = c0 > ry ? std::asin(ry / c0) : kPi;
      Point e(3);
      gl.for_each(0.0, beta_max, quad.angle_cells, [&](double beta, double wb) {
        gl.for_each(0.0, 2 * kPi, quad.angle_cells, [&](double gamma, double wg) {
          e = std::cos(beta) * e1 + std::sin(beta) * (std::cos(gamma) * e2 + std::sin(gamma) * e3);
          ray(t, e, wt * wb * wg * std::sin(beta));
        });
      });
    }
  });
  return pieces;
}

double integrate_density_ball(const ExactSolutionParams& p, int n, double t, double radius, const QuadratureSpec& quad) {
  const GaussLegendre<double> gl(quad.order);
  double sum = 0;
  const QuadratureVisitor acc = [&](double, const Point&, double rho, double w) { sum += rho * w; };
  if (p.d == 1) {
    integrate_ray(p, n, t, Point::Constant(1, 1.0), 0.0, radius, 1.0, gl, quad.radial_cells, acc);
    integrate_ray(p, n, t, Point::Constant(1, -1.0), 0.0, radius, 1.0, gl, quad.radial_cells, acc);
    return sum;
  }
  // The density is radial, so one ray times the sphere area suffices.
  const double sphere = p.d == 2 ? 2 * kPi : 4 * kPi;
  Point e = Point::Zero(p.d);
  e(0) = 1;
  integrate_ray(p, n, t, e, 0.0, radius, sphere, gl, quad.radial_cells, acc);
  return sum;
}

double ResidualReport::max_momentum() const {
  double m = 0;
  for (double v : momentum_residual) m = std::max(m, v);
  return m;
}

ResidualReport rh_residual_lagrangian(const ExactSolutionParams& p, const StressLaw& law,
                                      const std::vector<double>& t_samples, int k_max) {
  ResidualReport rep;
  rep.label = "lagrangian";
  rep.momentum_residual.assign(1, 0.0);
  auto total = [&](const LagrangianSample& s) { return law.value(s.W) + p.mu * s.V_x / s.W; };
  auto viscous = [&](const LagrangianSample& s) { return p.mu * s.V_x / s.W; };
  for (int k = 0; k <= k_max; ++k) {
    for (int family = 0; family < 2; ++family) {
      if (family == 1 && p.theta == 1) continue;
      const double x = family == 0 ? k : k + p.theta;
      InterfaceResidual ir;
      ir.id = family == 0 ? "x=" + std::to_string(k) : "x=" + std::to_string(k) + "+theta";
      for (double t : t_samples) {
        const auto L = lagrangian_one_sided(p, t, x, Side::Left);
        const auto R = lagrangian_one_sided(p, t, x, Side::Right);
        ir.mass = std::max(ir.mass, std::abs(R.V - L.V));
        ir.momentum = std::max(ir.momentum, std::abs(total(R) - total(L)));
        ir.viscous = std::max(ir.viscous, std::abs(viscous(R) - viscous(L)));
      }
      rep.mass_residual = std::max(rep.mass_residual, ir.mass);
      rep.momentum_residual[0] = std::max(rep.momentum_residual[0], ir.momentum);
      rep.per_interface.push_back(ir);
    }
  }
  return rep;
}

ResidualReport rh_residual_md(const ExactSolutionParams& p, const std::optional<PressureLaw>& pressure,
                              const std::vector<double>& t_samples, int k_max) {
  ResidualReport rep;
  rep.label = pressure ? "radial" : "radial-pressureless";
  rep.momentum_residual.assign(1, 0.0);
  for (int k = 0; k <= k_max; ++k) {
    for (int family = 0; family < 2; ++family) {
      if (family == 0 && k == 0) continue;  // the origin is not an interface
      if (family == 1 && p.theta == 1) continue;
      const double speed = family == 0 ? k : k + p.theta;
      InterfaceResidual ir;
      ir.id = family == 0 ? "S_" + std::to_string(k) : "S_" + std::to_string(k) + "+theta";
      for (double t : t_samples) {
        const double td = std::pow(t, p.d);
        const double rho_inner = (family == 0 ? p.b : p.a) / td;
        const double rho_outer = (family == 0 ? p.a : p.b) / td;
        const double r = speed * t;
        const double un = r / t;
        const double jump_rho = rho_outer - rho_inner;
        // u = y / t on both sides: grad u + grad u^T = (2/t) I, div u = d / t
        const double tau_inner = pressure ? 2 * p.mu / t + p.lambda * p.d / t : 0.0;
        const double tau_outer = tau_inner;
        const double jump_p = pressure ? pressure->value(rho_outer) - pressure->value(rho_inner) : 0.0;
        const double mass = std::abs((un - speed) * jump_rho);
        const double mom = std::abs(un * (un - speed) * jump_rho + jump_p - (tau_outer - tau_inner));
        ir.mass = std::max(ir.mass, mass);
        ir.momentum = std::max(ir.momentum, mom);
        ir.viscous = std::max(ir.viscous, std::abs(tau_outer - tau_inner));
      }
      rep.mass_residual = std::max(rep.mass_residual, ir.mass);
      rep.momentum_residual[0] = std::max(rep.momentum_residual[0], ir.momentum);
      rep.per_interface.push_back(ir);
    }
  }
  return rep;
}

namespace {

ResidualReport weak_form_single(const ExactSolutionParams& p, const std::optional<PressureLaw>& pressure,
                                const TestFunction& phi, const QuadratureSpec& quad, int n) {
  const int d = p.d;
  double mass = 0, norm = 0;
  Eigen::Vector3d mom = Eigen::Vector3d::Zero();
  const int pieces = for_each_quadrature_node(p, n, phi, quad, [&](double t, const Point& y, double rho, double w) {
    const TestFunction::Value f = phi.eval(t, y);
    if (f.phi == 0 && f.dt == 0) return;
    const Point u = y / t;
    const double u_grad = u.dot(f.grad);
    mass += w * rho * (f.dt + u_grad);
    norm += w * std::abs(rho) * std::abs(f.dt);
    const double pr = pressure ? pressure->value(rho) : 0.0;
    const double visc = pressure ? 2 * p.mu / t + p.lambda * d / t : 0.0;
    for (int c = 0; c < d; ++c) mom(c) += w * (rho * u(c) * (f.dt + u_grad) + (pr - visc) * f.grad(c));
  });
  ResidualReport rep;
  rep.label = pressure ? "weak-form" : "weak-form-pressureless";
  rep.mass_residual = std::abs(mass);
  rep.momentum_residual.resize(d);
  for (int c = 0; c < d; ++c) rep.momentum_residual[c] = std::abs(mom(c));
  rep.normalization = norm;
  rep.mass_relative = norm > 0 ? rep.mass_residual / norm : 0.0;
  rep.momentum_relative = norm > 0 ? rep.max_momentum() / norm : 0.0;
  rep.quadrature = quad;
  rep.sub_cells = pieces;
  return rep;
}

}  // namespace

std::vector<ResidualReport> weak_form_residual_md(const ExactSolutionParams& p,
                                                  const std::optional<PressureLaw>& pressure,
                                                  const std::vector<TestFunction>& tests, const QuadratureSpec& quad,
                                                  int n, int threads) {
  std::vector<ResidualReport> out(tests.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tests.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < tests.size(); ++i) out[i] = weak_form_single(p, pressure, tests[i], quad, n);
  } else {
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < tests.size(); i += workers) out[i] = weak_form_single(p, pressure, tests[i], quad, n);
      }));
    }
    for (auto& j : jobs) j.get();
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].label += "#" + std::to_string(i);
  return out;
}

WeakLimitTable weak_limit_table(const ExactSolutionParams& p, const PressureLaw& pressure, const TestFunction& phi,
                                const std::vector<int>& n_list, const QuadratureSpec& quad) {
  if (!std::is_sorted(n_list.begin(), n_list.end())) throw std::invalid_argument("weak_limit_table: n_list must ascend");
  WeakLimitTable table;
  bool targets_done = false;
  for (int n : n_list) {
    WeakLimitRow row{n, 0.0, 0.0};
    for_each_quadrature_node(p, n, phi, quad, [&](double t, const Point& y, double rho, double w) {
      const double f = phi.eval(t, y).phi;
      row.rho_pairing += w * rho * f;
      row.pressure_pairing += w * pressure.value(rho) * f;
      if (!targets_done) {
        const double td = std::pow(t, p.d);
        const double ra = p.a / td, rb = p.b / td;
        const double mean = p.theta * ra + (1 - p.theta) * rb;
        table.rho_bar_pairing += w * mean * f;
        table.q_bar_pairing += w * (p.theta * pressure.value(ra) + (1 - p.theta) * pressure.value(rb)) * f;
        table.pressure_of_mean_pairing += w * pressure.value(mean) * f;
      }
    });
    targets_done = true;
    table.rows.push_back(row);
  }
  return table;
}

nlohmann::json to_json(const ResidualReport& r) {
  nlohmann::json ifaces = nlohmann::json::array();
  for (const auto& i : r.per_interface) {
    ifaces.push_back({{"id", i.id}, {"mass", i.mass}, {"momentum", i.momentum}, {"viscous", i.viscous}});
  }
  return {{"label", r.label},
          {"mass_residual", r.mass_residual},
          {"momentum_residual", r.momentum_residual},
          {"mass_relative", r.mass_relative},
          {"momentum_relative", r.momentum_relative},
          {"normalization", r.normalization},
          {"per_interface", ifaces},
          {"quadrature", {{"order", r.quadrature.order},
                          {"t_cells", r.quadrature.t_cells},
                          {"angle_cells", r.quadrature.angle_cells},
                          {"radial_cells", r.quadrature.radial_cells},
                          {"sub_cells", r.sub_cells}}}};
}

}  // namespace oscillax
