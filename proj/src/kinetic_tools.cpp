#include "oscillax/kinetic_tools.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace oscillax {

XiGrid XiGrid::covering(double lo, double hi, double step) {
  if (!(step > 0) || !(hi > lo)) throw std::invalid_argument("XiGrid::covering: need step > 0 and hi > lo");
  const double k0 = std::floor(lo / step);
  const double k1 = std::ceil(hi / step);
  return XiGrid{k0 * step, step, static_cast<int>(k1 - k0) + 1};
}

namespace detail {

void check_support(const Eigen::Ref<const Eigen::RowVectorXd>& row, double tol) {
  if (std::abs(row(0)) > tol || std::abs(row(row.size() - 1) - 1) > tol) {
    std::ostringstream msg;
    msg << "kinetic field violates the support condition: F(xi_lo) = " << row(0)
        << ", F(xi_hi) = " << row(row.size() - 1);
    throw std::domain_error(msg.str());
  }
}

}  // namespace detail

namespace {

// Adds weight at value u to the density vector w (cloud in cell).
void deposit(Eigen::RowVectorXd& w, const XiGrid& xi, double u, double weight) {
  const double s = (u - xi.lo) / xi.step;
  if (!(s >= 1 && s <= xi.size - 1)) {
    std::ostringstream msg;
    msg << "value " << u << " outside the xi-range [" << xi.node(1) << ", " << xi.hi() << "]";
    throw std::domain_error(msg.str());
  }
  const int k = std::min(static_cast<int>(std::floor(s)), xi.size - 1);
  const double frac = s - k;
  w(k) += weight * (1 - frac);
  if (frac > 0) w(k + 1) += weight * frac;
}

void cumulate(Eigen::RowVectorXd& w) {
  for (Eigen::Index k = 1; k < w.size(); ++k) w(k) += w(k - 1);
  // exact closure against accumulated roundoff
  if (std::abs(w(w.size() - 1) - 1) < 1e-12) w(w.size() - 1) = 1;
}

}  // namespace

InvariantCheck check_invariants_active(const KineticField& field, double tol) {
  InvariantCheck c;
  const int m = static_cast<int>(field.F.cols());
  for (int i = 0; i < field.rows(); ++i) {
    const auto row = field.F.row(i);
    const double* begin = row.data();
    const int first = static_cast<int>(std::upper_bound(begin, begin + m, tol) - begin);
    const int last = static_cast<int>(std::lower_bound(begin, begin + m, 1.0 - tol) - begin);
    for (int k = std::max(first - 1, 0); k <= std::min(last + 1, m - 1); ++k) {
      const double v = row(k);
      if (!(v >= -tol && v <= 1 + tol)) ++c.range;
      if (k > 0 && v < row(k - 1) - tol) ++c.monotone;
    }
    if (std::abs(row(0)) > tol || std::abs(row(m - 1) - 1) > tol) ++c.boundary;
  }
  return c;
}

InvariantCheck check_invariants(const KineticField& field, double tol) {
  InvariantCheck c;
  const Eigen::Index m = field.F.cols();
  for (int i = 0; i < field.rows(); ++i) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double v = field.F(i, k);
      if (!(v >= -tol && v <= 1 + tol)) ++c.range;
      if (k > 0 && v < field.F(i, k - 1) - tol) ++c.monotone;
    }
    if (std::abs(field.F(i, 0)) > tol || std::abs(field.F(i, m - 1) - 1) > tol) ++c.boundary;
  }
  return c;
}

Eigen::RowVectorXd cdf_from_measure(const MeasureAtomic& nu, const XiGrid& xi) {
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(xi.size);
  for (const Atom& a : nu.atoms()) deposit(w, xi, a.location, a.weight);
  cumulate(w);
  return w;
}

KineticField heaviside_field(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const XiGrid& xi) {
  if (x.size() != u.size()) throw std::invalid_argument("heaviside_field: size mismatch");
  KineticField out{x, xi, RowMatrix::Zero(u.size(), xi.size)};
  Eigen::RowVectorXd w(xi.size);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    w.setZero();
    deposit(w, xi, u(i), 1.0);
    cumulate(w);
    out.F.row(i) = w;
  }
  return out;
}

KineticField empirical_kinetic_function(const Eigen::VectorXd& u, const Grid1D& grid, const XiGrid& xi,
                                        int window_cells, int stride, int period_cells) {
  const int n = grid.n_cells;
  if (u.size() != n) throw std::invalid_argument("empirical_kinetic_function: field size does not match grid");
  if (window_cells < 1 || window_cells > n) {
    throw std::invalid_argument("empirical_kinetic_function: window must fit inside the domain");
  }
  if (stride < 1) throw std::invalid_argument("empirical_kinetic_function: need stride >= 1");
  if (period_cells > 0 && window_cells < 2 * period_cells) {
    throw std::invalid_argument("empirical_kinetic_function: window must span at least two periods");
  }
  // per-cell deposits, then running window sums
  std::vector<int> k0(n);
  std::vector<double> frac(n);
  for (int i = 0; i < n; ++i) {
    const double s = (u(i) - xi.lo) / xi.step;
    if (!(s >= 1 && s <= xi.size - 1)) {
      std::ostringstream msg;
      msg << "empirical_kinetic_function: value " << u(i) << " outside the xi-range [" << xi.node(1) << ", "
          << xi.hi() << "]";
      throw std::domain_error(msg.str());
    }
    k0[i] = std::min(static_cast<int>(std::floor(s)), xi.size - 1);
    frac[i] = s - k0[i];
  }
  const int rows = (n - window_cells) / stride + 1;
  KineticField out;
  out.xi = xi;
  out.x.resize(rows);
  out.F.resize(rows, xi.size);
  Eigen::RowVectorXd w(xi.size);
  for (int r = 0; r < rows; ++r) {
    const int first = r * stride;
    w.setZero();
    for (int i = first; i < first + window_cells; ++i) {
      w(k0[i]) += 1 - frac[i];
      if (frac[i] > 0) w(k0[i] + 1) += frac[i];
    }
    w /= window_cells;
    cumulate(w);
    out.F.row(r) = w;
    out.x(r) = (first + 0.5 * window_cells) * grid.dx();
  }
  return out;
}

double mean_from_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const XiGrid& xi) {
  detail::check_support(row);
  double total = 0;
  auto piece = [&](double l, double r, double value) {
    if (l < 0) total -= value * (std::min(r, 0.0) - l);
    if (r > 0) total -= (value - 1) * (r - std::max(l, 0.0));
  };
  // F is 0 before the first positive entry and 1 from the first saturated
  // one on; those runs are integrated in one piece each.
  const double* begin = row.data();
  const double* end = begin + row.size();
  const int first = std::max(static_cast<int>(std::upper_bound(begin, end, 0.0) - begin), 1);
  const int last = static_cast<int>(std::lower_bound(begin, end, 1.0) - begin);
  if (xi.lo > 0) piece(0.0, xi.lo, 0.0);
  piece(xi.node(0), xi.node(first - 1), 0.0);
  for (int k = first - 1; k < last && k + 1 < xi.size; ++k) piece(xi.node(k), xi.node(k + 1), row(k));
  if (last < xi.size - 1) piece(xi.node(last), xi.hi(), 1.0);
  if (xi.hi() < 0) piece(xi.hi(), 0.0, 1.0);
  return total;
}

Eigen::VectorXd mean_from_F(const KineticField& field) {
  Eigen::VectorXd out(field.rows());
  for (int i = 0; i < field.rows(); ++i) out(i) = mean_from_row(field.F.row(i), field.xi);
  return out;
}

Eigen::VectorXd measure_distance_rows(const KineticField& a, const KineticField& b) {
  if (!(a.xi == b.xi) || a.rows() != b.rows()) throw std::invalid_argument("measure_distance: grid mismatch");
  // the last node carries F = 1 on both sides, so only the first size - 1 steps count
  const Eigen::Index m = a.xi.size - 1;
  return (a.F.leftCols(m) - b.F.leftCols(m)).cwiseAbs().rowwise().sum() * a.xi.step;
}

double measure_distance(const KineticField& a, const KineticField& b) {
  return measure_distance_rows(a, b).maxCoeff();
}

int isotonic_projection(KineticField& field) {
  int fired = 0;
  const Eigen::Index m = field.F.cols();
  std::vector<double> level(m);
  std::vector<Eigen::Index> count(m);
  for (int i = 0; i < field.rows(); ++i) {
    auto row = field.F.row(i);
    bool monotone = true;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (row(k) < 0 || row(k) > 1 || (k > 0 && row(k) < row(k - 1))) {
        monotone = false;
        break;
      }
    }
    if (monotone) continue;
    ++fired;
    // pool adjacent violators
    Eigen::Index blocks = 0;
    for (Eigen::Index k = 0; k < m; ++k) {
      level[blocks] = row(k);
      count[blocks] = 1;
      ++blocks;
      while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
        const double total = level[blocks - 2] * count[blocks - 2] + level[blocks - 1] * count[blocks - 1];
        count[blocks - 2] += count[blocks - 1];
        level[blocks - 2] = total / count[blocks - 2];
        --blocks;
      }
    }
    Eigen::Index k = 0;
    for (Eigen::Index b = 0; b < blocks; ++b) {
      for (Eigen::Index c = 0; c < count[b]; ++c) row(k++) = std::clamp(level[b], 0.0, 1.0);
    }
  }
  return fired;
}

}  // namespace oscillax
