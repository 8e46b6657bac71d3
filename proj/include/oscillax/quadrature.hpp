#ifndef OSCILLAX_QUADRATURE_HPP
#define OSCILLAX_QUADRATURE_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oscillax {

/// Gauss-Legendre rule on [-1, 1], nodes from Newton iteration on P_n.
template <typename Scalar>
class GaussLegendre {
 public:
  explicit GaussLegendre(int order) : nodes_(order), weights_(order) {
    if (order < 1) throw std::invalid_argument("GaussLegendre: order must be >= 1");
    const int n = order;
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    for (int i = 0; i < (n + 1) / 2; ++i) {
      using std::abs;
      using std::cos;
      Scalar z = cos(pi * (i + Scalar(0.75)) / (n + Scalar(0.5)));
      Scalar dp = 0;
      for (int it = 0; it < 100; ++it) {
        Scalar p0 = 1, p1 = 0;
        for (int j = 1; j <= n; ++j) {
          const Scalar p2 = p1;
          p1 = p0;
          p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
        }
        dp = n * (z * p0 - p1) / (z * z - 1);
        const Scalar dz = p0 / dp;
        z -= dz;
        if (abs(dz) <= 4 * eps) break;
      }
      // refresh derivative at the converged root
      {
        Scalar p0 = 1, p1 = 0;
        for (int j = 1; j <= n; ++j) {
          const Scalar p2 = p1;
          p1 = p0;
          p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
        }
        dp = n * (z * p0 - p1) / (z * z - 1);
      }
      nodes_[i] = -z;
      nodes_[n - 1 - i] = z;
      weights_[i] = 2 / ((1 - z * z) * dp * dp);
      weights_[n - 1 - i] = weights_[i];
    }
    if (n % 2 == 1) nodes_[n / 2] = 0;
  }

  int order() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Scalar>& nodes() const { return nodes_; }
  const std::vector<Scalar>& weights() const { return weights_; }

  /// Calls visit(x, w) for each node mapped onto [lo, hi] split into `cells`.
  template <class Visit>
  void for_each(Scalar lo, Scalar hi, int cells, Visit&& visit) const {
    const Scalar h = (hi - lo) / cells;
    for (int c = 0; c < cells; ++c) {
      const Scalar mid = lo + (c + Scalar(0.5)) * h;
      const Scalar half = h / 2;
      for (std::size_t q = 0; q < nodes_.size(); ++q) visit(mid + half * nodes_[q], half * weights_[q]);
    }
  }

  template <class F>
  Scalar integrate(F&& f, Scalar lo, Scalar hi, int cells = 1) const {
    Scalar sum = 0;
    for_each(lo, hi, cells, [&](Scalar x, Scalar w) { sum += w * f(x); });
    return sum;
  }

 private:
  std::vector<Scalar> nodes_;
  std::vector<Scalar> weights_;
};

}  // namespace oscillax

#endif  // OSCILLAX_QUADRATURE_HPP
