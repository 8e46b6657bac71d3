#ifndef OSCILLAX_TRIDIAGONAL_HPP
#define OSCILLAX_TRIDIAGONAL_HPP

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace oscillax {

/// Thomas algorithm for lower(i) x(i-1) + diag(i) x(i) + upper(i) x(i+1) = rhs(i);
/// lower(0) and upper(n-1) are ignored.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_tridiagonal(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lower,
                                                           const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diag,
                                                           const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& upper,
                                                           const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = diag.size();
  Vec c(n), x(n);
  Scalar beta = diag(0);
  if (beta == Scalar(0)) throw std::runtime_error("tridiagonal solve: zero pivot");
  x(0) = rhs(0) / beta;
  for (Eigen::Index i = 1; i < n; ++i) {
    c(i) = upper(i - 1) / beta;
    beta = diag(i) - lower(i) * c(i);
    if (beta == Scalar(0) || !std::isfinite(static_cast<double>(beta))) {
      throw std::runtime_error("tridiagonal solve: zero pivot");
    }
    x(i) = (rhs(i) - lower(i) * x(i - 1)) / beta;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) x(i) -= c(i + 1) * x(i + 1);
  return x;
}

}  // namespace oscillax

#endif  // OSCILLAX_TRIDIAGONAL_HPP
