#ifndef OSCILLAX_MEASURE_HPP
#define OSCILLAX_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace oscillax {

struct Atom {
  double location;
  double weight;
};

/// Finitely supported probability measure.
class MeasureAtomic {
 public:
  MeasureAtomic() = default;
  explicit MeasureAtomic(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    double total = 0;
    for (const Atom& a : atoms_) {
      if (!(a.weight > 0)) throw std::invalid_argument("MeasureAtomic: weights must be positive");
      total += a.weight;
    }
    if (atoms_.empty() || std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("MeasureAtomic: weights must sum to 1");
    }
  }

  const std::vector<Atom>& atoms() const { return atoms_; }

  template <class F>
  double expect(F&& f) const {
    double s = 0;
    for (const Atom& a : atoms_) s += a.weight * f(a.location);
    return s;
  }
  double mean() const {
    return expect([](double x) { return x; });
  }
  /// Right-continuous distribution function nu((-inf, xi]).
  double cdf(double xi) const {
    double s = 0;
    for (const Atom& a : atoms_) {
      if (a.location <= xi) s += a.weight;
    }
    return s;
  }

 private:
  std::vector<Atom> atoms_;
};

/// Exact W1 = int |F_a - F_b| for atomic measures.
inline double wasserstein1(const MeasureAtomic& a, const MeasureAtomic& b) {
  std::vector<double> pts;
  for (const Atom& x : a.atoms()) pts.push_back(x.location);
  for (const Atom& x : b.atoms()) pts.push_back(x.location);
  std::sort(pts.begin(), pts.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double gap = pts[i + 1] - pts[i];
    if (gap > 0) total += gap * std::abs(a.cdf(pts[i]) - b.cdf(pts[i]));
  }
  return total;
}

}  // namespace oscillax

#endif  // OSCILLAX_MEASURE_HPP
