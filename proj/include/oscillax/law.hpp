#ifndef OSCILLAX_LAW_HPP
#define OSCILLAX_LAW_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oscillax {

/// Thrown when a constitutive law is evaluated outside its certified range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Power tail attached at an outer knot:
///   right:  value + slope*h + coeff*h^power,  h = u - anchor >= 0
///   left:   value - slope*h - coeff*h^power,  h = anchor - u >= 0
/// so the law and its first derivative are continuous at the anchor
/// whenever power > 1.
template <typename Scalar>
struct PowerTail {
  Scalar anchor{0};
  Scalar value{0};
  Scalar slope{0};
  Scalar coeff{0};
  Scalar power{1};
};

template <typename Scalar>
struct LawSample {
  Scalar value;
  Scalar derivative;
  Scalar antiderivative;
};

/// Envelope c_lo |u|^p <= W(u) <= c_hi |u|^p certified on start <= |u| <= range.
template <typename Scalar>
struct GrowthEnvelope {
  Scalar exponent{0};
  Scalar c_lo{0};
  Scalar c_hi{0};
  Scalar start{0};
};

/// Phase values a law was built to match.
struct Provenance {
  double a{0};
  double b{0};
  std::optional<int> d;
};

/// C^1 piecewise-cubic law with power tails, normalized so that W(0) = 0.
///
/// Pieces are stored in the local variable s = u - knots[i]; a piece holds
/// the coefficients (c0, c1, c2, c3) of c0 + c1 s + c2 s^2 + c3 s^3.
template <typename Scalar>
class PiecewiseLaw {
 public:
  using Cubic = Eigen::Matrix<Scalar, 4, 1>;

  PiecewiseLaw(std::vector<Scalar> knots, std::vector<Cubic> pieces, PowerTail<Scalar> left,
               PowerTail<Scalar> right, Scalar range_lo, Scalar range_hi)
      : knots_(std::move(knots)),
        pieces_(std::move(pieces)),
        left_(left),
        right_(right),
        range_lo_(range_lo),
        range_hi_(range_hi) {
    if (knots_.size() < 2 || pieces_.size() + 1 != knots_.size()) {
      throw std::invalid_argument("PiecewiseLaw: need n+1 knots for n pieces");
    }
    if (!std::is_sorted(knots_.begin(), knots_.end()) ||
        std::adjacent_find(knots_.begin(), knots_.end()) != knots_.end()) {
      throw std::invalid_argument("PiecewiseLaw: knots must be strictly ascending");
    }
    if (!(range_lo_ <= knots_.front() && knots_.back() <= range_hi_)) {
      throw std::invalid_argument("PiecewiseLaw: certified range must contain every knot");
    }
    left_.anchor = knots_.front();
    right_.anchor = knots_.back();
    prefix_.assign(knots_.size(), Scalar(0));
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      prefix_[i + 1] = prefix_[i] + piece_integral(i, knots_[i + 1] - knots_[i]);
    }
    offset_ = integral_from_first_knot(Scalar(0));
  }

  const std::vector<Scalar>& knots() const { return knots_; }
  const std::vector<Cubic>& pieces() const { return pieces_; }
  const PowerTail<Scalar>& left_tail() const { return left_; }
  const PowerTail<Scalar>& right_tail() const { return right_; }
  Scalar range_lo() const { return range_lo_; }
  Scalar range_hi() const { return range_hi_; }

  const GrowthEnvelope<Scalar>& growth() const { return growth_; }
  void set_growth(const GrowthEnvelope<Scalar>& g) { growth_ = g; }
  const Provenance& provenance() const { return provenance_; }
  void set_provenance(const Provenance& p) { provenance_ = p; }

  bool in_range(Scalar u) const { return range_lo_ <= u && u <= range_hi_; }

  Scalar value(Scalar u) const {
    check(u);
    return value_unchecked(u);
  }
  Scalar derivative(Scalar u) const {
    check(u);
    return derivative_unchecked(u);
  }
  /// W(u) = int_0^u law.
  Scalar antiderivative(Scalar u) const {
    check(u);
    return integral_from_first_knot(u) - offset_;
  }
  LawSample<Scalar> eval(Scalar u) const {
    check(u);
    return {value_unchecked(u), derivative_unchecked(u), integral_from_first_knot(u) - offset_};
  }

  Scalar operator()(Scalar u) const { return value(u); }

  /// Second derivative; one-sided (right) at knots.
  Scalar second_derivative(Scalar u) const {
    check(u);
    if (u < knots_.front()) {
      const Scalar h = left_.anchor - u;
      return left_.coeff == Scalar(0) ? Scalar(0)
                                      : -left_.coeff * left_.power * (left_.power - 1) *
                                            pow_nonneg(h, left_.power - 2);
    }
    if (u >= knots_.back()) {
      const Scalar h = u - right_.anchor;
      return right_.coeff == Scalar(0) ? Scalar(0)
                                       : right_.coeff * right_.power * (right_.power - 1) *
                                             pow_nonneg(h, right_.power - 2);
    }
    const std::size_t i = locate(u);
    const Scalar s = u - knots_[i];
    const Cubic& c = pieces_[i];
    return 2 * c(2) + 6 * c(3) * s;
  }

  /// Exact max of |law'| over [lo, hi]: law' is quadratic on each cubic piece
  /// and monotone on each tail, so the max sits at an endpoint, a knot, or a
  /// stationary point of a quadratic.
  Scalar max_abs_derivative(Scalar lo, Scalar hi) const {
    check(lo);
    check(hi);
    if (hi < lo) std::swap(lo, hi);
    Scalar best = std::max(std::abs(derivative_unchecked(lo)), std::abs(derivative_unchecked(hi)));
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      const Scalar k = knots_[i];
      if (lo < k && k < hi) best = std::max(best, std::abs(derivative_unchecked(k)));
      if (i < pieces_.size() && pieces_[i](3) != Scalar(0)) {
        const Scalar s = -pieces_[i](2) / (3 * pieces_[i](3));
        const Scalar u = k + s;
        if (s > 0 && u < knots_[i + 1] && lo < u && u < hi) {
          best = std::max(best, std::abs(derivative_unchecked(u)));
        }
      }
    }
    return best;
  }

  Scalar value_unchecked(Scalar u) const {
    if (u < knots_.front()) {
      const Scalar h = left_.anchor - u;
      return left_.value - left_.slope * h - tail_power(left_, h);
    }
    if (u >= knots_.back()) {
      const Scalar h = u - right_.anchor;
      return right_.value + right_.slope * h + tail_power(right_, h);
    }
    const std::size_t i = locate(u);
    const Scalar s = u - knots_[i];
    const Cubic& c = pieces_[i];
    return c(0) + s * (c(1) + s * (c(2) + s * c(3)));
  }

  Scalar derivative_unchecked(Scalar u) const {
    if (u < knots_.front()) {
      const Scalar h = left_.anchor - u;
      return left_.slope + tail_power_derivative(left_, h);
    }
    if (u >= knots_.back()) {
      const Scalar h = u - right_.anchor;
      return right_.slope + tail_power_derivative(right_, h);
    }
    const std::size_t i = locate(u);
    const Scalar s = u - knots_[i];
    const Cubic& c = pieces_[i];
    return c(1) + s * (2 * c(2) + s * 3 * c(3));
  }

  Scalar antiderivative_unchecked(Scalar u) const { return integral_from_first_knot(u) - offset_; }

 private:
  void check(Scalar u) const {
    if (!(range_lo_ <= u && u <= range_hi_)) {
      std::ostringstream msg;
      msg << "law evaluated at " << static_cast<double>(u) << " outside certified range ["
          << static_cast<double>(range_lo_) << ", " << static_cast<double>(range_hi_) << "]";
      throw RangeError(msg.str());
    }
  }

  std::size_t locate(Scalar u) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
    return static_cast<std::size_t>(std::distance(knots_.begin(), it)) - 1;
  }

  static Scalar pow_nonneg(Scalar h, Scalar e) {
    using std::pow;
    return h <= Scalar(0) ? (e == Scalar(0) ? Scalar(1) : Scalar(0)) : pow(h, e);
  }

  static Scalar tail_power(const PowerTail<Scalar>& t, Scalar h) {
    return t.coeff == Scalar(0) ? Scalar(0) : t.coeff * pow_nonneg(h, t.power);
  }
  static Scalar tail_power_derivative(const PowerTail<Scalar>& t, Scalar h) {
    return t.coeff == Scalar(0) ? Scalar(0) : t.coeff * t.power * pow_nonneg(h, t.power - 1);
  }
  static Scalar tail_integral(const PowerTail<Scalar>& t, Scalar h) {
    // int_0^h (value + slope s + coeff s^power) ds
    Scalar r = t.value * h + t.slope * h * h / 2;
    if (t.coeff != Scalar(0)) r += t.coeff * pow_nonneg(h, t.power + 1) / (t.power + 1);
    return r;
  }

  Scalar piece_integral(std::size_t i, Scalar s) const {
    const Cubic& c = pieces_[i];
    return s * (c(0) + s * (c(1) / 2 + s * (c(2) / 3 + s * c(3) / 4)));
  }

  Scalar integral_from_first_knot(Scalar u) const {
    if (u < knots_.front()) {
      // int_u^{k0} (value - slope h - coeff h^p) with h = k0 - x
      const Scalar h = left_.anchor - u;
      Scalar r = left_.value * h - left_.slope * h * h / 2;
      if (left_.coeff != Scalar(0)) r -= left_.coeff * pow_nonneg(h, left_.power + 1) / (left_.power + 1);
      return -r;
    }
    if (u >= knots_.back()) return prefix_.back() + tail_integral(right_, u - right_.anchor);
    const std::size_t i = locate(u);
    return prefix_[i] + piece_integral(i, u - knots_[i]);
  }

  std::vector<Scalar> knots_;
  std::vector<Cubic> pieces_;
  PowerTail<Scalar> left_;
  PowerTail<Scalar> right_;
  Scalar range_lo_;
  Scalar range_hi_;
  std::vector<Scalar> prefix_;
  Scalar offset_{0};
  GrowthEnvelope<Scalar> growth_{};
  Provenance provenance_{};
};

using StressLaw = PiecewiseLaw<double>;
using PressureLaw = PiecewiseLaw<double>;

/// Affine law slope*u + intercept on [lo, hi]; used for monotone comparisons.
template <typename Scalar>
PiecewiseLaw<Scalar> make_affine_law(Scalar slope, Scalar intercept, Scalar lo, Scalar hi) {
  using Cubic = typename PiecewiseLaw<Scalar>::Cubic;
  const Scalar k0 = lo;
  const Scalar k1 = hi;
  std::vector<Cubic> pieces{Cubic(intercept + slope * k0, slope, Scalar(0), Scalar(0))};
  PowerTail<Scalar> left{k0, intercept + slope * k0, slope, Scalar(0), Scalar(2)};
  PowerTail<Scalar> right{k1, intercept + slope * k1, slope, Scalar(0), Scalar(2)};
  return PiecewiseLaw<Scalar>({k0, k1}, std::move(pieces), left, right, lo, hi);
}

}  // namespace oscillax

#endif  // OSCILLAX_LAW_HPP
