#ifndef OSCILLAX_KINETIC_TOOLS_HPP
#define OSCILLAX_KINETIC_TOOLS_HPP

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "oscillax/grid.hpp"
#include "oscillax/measure.hpp"
#include "oscillax/quadrature.hpp"

namespace oscillax {

/// Uniform nodes lo + k step, k = 0 .. size - 1.
struct XiGrid {
  double lo{0};
  double step{1};
  int size{2};

  double node(int k) const { return lo + k * step; }
  double hi() const { return node(size - 1); }
  bool operator==(const XiGrid& o) const { return lo == o.lo && step == o.step && size == o.size; }

  /// Smallest grid with the given step whose nodes cover [lo, hi] and land on
  /// integer multiples of step (so dyadic data values fall on nodes).
  static XiGrid covering(double lo, double hi, double step);
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Distribution functions on an xi-grid, one row per x location. Row values
/// are nu((-inf, xi_k]); between nodes F is read as a right-continuous step
/// function, so the measure of a row is sum_k (F_k - F_{k-1}) delta_{xi_k}.
struct KineticField {
  Eigen::VectorXd x;
  XiGrid xi;
  RowMatrix F;

  int rows() const { return static_cast<int>(F.rows()); }
};

struct InvariantCheck {
  long range{0};      // entries outside [0, 1]
  long monotone{0};   // decreasing neighbours
  long boundary{0};   // rows with F(xi_lo) != 0 or F(xi_hi) != 1
  long total() const { return range + monotone + boundary; }
};

InvariantCheck check_invariants(const KineticField& field, double tol = 1e-12);
/// Same checks restricted to the band of nodes that carry mass (plus one
/// node on each side); the kinetic step never touches anything else.
InvariantCheck check_invariants_active(const KineticField& field, double tol = 1e-12);

/// Cloud-in-cell projection of a measure on the grid (mean preserving).
/// Throws if an atom lies outside [xi_1, xi_hi].
Eigen::RowVectorXd cdf_from_measure(const MeasureAtomic& nu, const XiGrid& xi);

/// Row-wise Dirac at u(i).
KineticField heaviside_field(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const XiGrid& xi);

/// Empirical distribution of the cell values over windows of `window_cells`
/// consecutive cells, advanced by `stride` cells; only windows fully inside
/// the domain are returned. period_cells > 0 checks window >= 2 periods.
KineticField empirical_kinetic_function(const Eigen::VectorXd& u, const Grid1D& grid, const XiGrid& xi,
                                        int window_cells, int stride = 1, int period_cells = 0);

/// Box average of f(u) over the same windows as empirical_kinetic_function.
template <class F>
Eigen::VectorXd window_average(const Eigen::VectorXd& u, int window_cells, int stride, F&& f) {
  const int n = static_cast<int>(u.size());
  if (window_cells < 1 || window_cells > n) throw std::invalid_argument("window_average: bad window");
  const int rows = (n - window_cells) / stride + 1;
  Eigen::VectorXd out(rows);
  for (int r = 0; r < rows; ++r) {
    double s = 0;
    for (int i = r * stride; i < r * stride + window_cells; ++i) s += f(u(i));
    out(r) = s / window_cells;
  }
  return out;
}

namespace detail {
void check_support(const Eigen::Ref<const Eigen::RowVectorXd>& row, double tol = 1e-12);
}

/// f-bar = f(0) - int_{-inf}^0 f' F - int_0^inf f' (F - 1), with F the step
/// function of the row and f' integrated by Gauss-Legendre on each step.
template <class Fn, class Fp>
double moment_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const XiGrid& xi, Fn&& f, Fp&& fprime) {
  detail::check_support(row);
  static const GaussLegendre<double> gl(4);
  auto integral = [&](double a, double b) { return gl.integrate(fprime, a, b); };
  double total = f(0.0);
  auto piece = [&](double l, double r, double value) {
    if (l < 0 && value != 0) total -= value * integral(l, std::min(r, 0.0));
    if (r > 0 && value != 1) total -= (value - 1) * integral(std::max(l, 0.0), r);
  };
  if (xi.lo > 0) piece(0.0, xi.lo, 0.0);
  for (int k = 0; k + 1 < xi.size; ++k) piece(xi.node(k), xi.node(k + 1), row(k));
  if (xi.hi() < 0) piece(xi.hi(), 0.0, 1.0);
  return total;
}

template <class Fn, class Fp>
Eigen::VectorXd moment(const KineticField& field, Fn&& f, Fp&& fprime) {
  Eigen::VectorXd out(field.rows());
  for (int i = 0; i < field.rows(); ++i) out(i) = moment_row(field.F.row(i), field.xi, f, fprime);
  return out;
}

/// sum_k f(xi_k) (F_k - F_{k-1}): the same moment by direct summation.
template <class Fn>
double atomic_moment_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const XiGrid& xi, Fn&& f) {
  double total = 0, prev = 0;
  for (int k = 0; k < xi.size; ++k) {
    const double w = row(k) - prev;
    if (w != 0) total += w * f(xi.node(k));
    prev = row(k);
  }
  return total;
}

template <class Fn>
Eigen::VectorXd atomic_moment(const KineticField& field, Fn&& f) {
  Eigen::VectorXd out(field.rows());
  for (int i = 0; i < field.rows(); ++i) out(i) = atomic_moment_row(field.F.row(i), field.xi, f);
  return out;
}

/// u = -int_{-inf}^0 F - int_0^inf (F - 1), exact for step functions.
double mean_from_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const XiGrid& xi);
Eigen::VectorXd mean_from_F(const KineticField& field);

/// Wasserstein-1 distance per row, int |F1 - F2| d xi.
Eigen::VectorXd measure_distance_rows(const KineticField& a, const KineticField& b);
double measure_distance(const KineticField& a, const KineticField& b);

/// Clamp to [0, 1] and project each row onto non-decreasing sequences
/// (pool adjacent violators). Returns the number of rows that changed.
int isotonic_projection(KineticField& field);

}  // namespace oscillax

#endif  // OSCILLAX_KINETIC_TOOLS_HPP
