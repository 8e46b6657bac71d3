#include "oscillax/stress_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oscillax {

namespace {

using Cubic = StressLaw::Cubic;

// Hermite cubic on [0, L] with end values p0, p1 and end slopes m0, m1.
Cubic hermite(double p0, double m0, double p1, double m1, double L) {
  const double delta = (p1 - p0) / L;
  return Cubic(p0, m0, (3 * delta - 2 * m0 - m1) / L, (m0 + m1 - 2 * delta) / (L * L));
}

struct Bridge {
  double lo, hi, ratio, slope, level, left_coeff, left_power, right_coeff, right_power;
  double range_lo, range_hi;
};

// Affine on [lo, hi], its copy under u -> ratio * u on [ratio lo, ratio hi],
// a Hermite bridge in between and power tails outside.
StressLaw copy_and_bridge(const Bridge& c) {
  const double top = c.level + c.slope * (c.hi - c.lo);
  const double copy_slope = c.slope / c.ratio;
  const double k2 = c.ratio * c.lo;
  const double k3 = c.ratio * c.hi;
  std::vector<double> knots{c.lo, c.hi, k2, k3};
  std::vector<Cubic> pieces{Cubic(c.level, c.slope, 0, 0), hermite(top, c.slope, c.level, copy_slope, k2 - c.hi),
                            Cubic(c.level, copy_slope, 0, 0)};
  PowerTail<double> left{c.lo, c.level, c.slope, c.left_coeff, c.left_power};
  PowerTail<double> right{k3, top, copy_slope, c.right_coeff, c.right_power};
  return StressLaw(std::move(knots), std::move(pieces), left, right, c.range_lo, c.range_hi);
}

// Smallest value of the law over [lo, hi]: endpoints, knots and the
// stationary points of every cubic piece.
double law_minimum(const StressLaw& law, double lo, double hi) {
  double best = std::min(law.value(lo), law.value(hi));
  const auto& knots = law.knots();
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (lo <= knots[i] && knots[i] <= hi) best = std::min(best, law.value(knots[i]));
    if (i + 1 == knots.size()) break;
    const Cubic& c = law.pieces()[i];
    // c1 + 2 c2 s + 3 c3 s^2 = 0
    const double A = 3 * c(3), B = 2 * c(2), C = c(1);
    std::vector<double> roots;
    if (A == 0) {
      if (B != 0) roots.push_back(-C / B);
    } else {
      const double disc = B * B - 4 * A * C;
      if (disc >= 0) {
        roots.push_back((-B + std::sqrt(disc)) / (2 * A));
        roots.push_back((-B - std::sqrt(disc)) / (2 * A));
      }
    }
    for (double s : roots) {
      const double u = knots[i] + s;
      if (s > 0 && u < knots[i + 1] && lo <= u && u <= hi) best = std::min(best, law.value(u));
    }
  }
  return best;
}

// Envelope of W / |u|^p sampled log-uniformly on start <= |u| <= extent,
// widened by a small relative pad.
GrowthEnvelope<double> sample_growth(const StressLaw& law, double p, double start, double extent, bool both_sides) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const int n = 4000;
  const double l0 = std::log(start), l1 = std::log(extent);
  for (int i = 0; i <= n; ++i) {
    const double r = std::exp(l0 + (l1 - l0) * i / n);
    for (double u : {r, -r}) {
      if (u < 0 && !both_sides) continue;
      if (!law.in_range(u)) continue;
      const double ratio = law.antiderivative(u) / std::pow(std::abs(u), p);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  const double pad = 1e-3;
  return {p, lo - pad * std::abs(lo), hi + pad * std::abs(hi), start};
}

}  // namespace

StressLaw make_two_phase_stress(double a, double b, double growth_exponent, const TwoPhaseOptions& options) {
  if (!(a > 0)) throw std::invalid_argument("make_two_phase_stress: need a > 0");
  if (!(2 * a < b)) throw std::invalid_argument("make_two_phase_stress: need 2a < b, phase intervals overlap");
  if (!(growth_exponent > 2)) throw std::invalid_argument("make_two_phase_stress: growth exponent must exceed 2");
  if (!(options.slope > 0) || !(options.tail_coeff > 0)) {
    throw std::invalid_argument("make_two_phase_stress: slope and tail coefficient must be positive");
  }
  const double q = growth_exponent - 1;
  const double level = options.level.value_or(options.slope * a + options.tail_coeff * std::pow(a, q));
  const double R = options.range_factor * 2 * b;
  StressLaw law = copy_and_bridge({a, 2 * a, b / a, options.slope, level, options.tail_coeff, q, options.tail_coeff, q,
                                   -R, R});
  law.set_provenance({a, b, std::nullopt});
  law.set_growth(sample_growth(law, growth_exponent, b, R, true));
  return law;
}

PressureLaw make_nonmonotone_pressure(double a, double b, int d, const PressureOptions& options) {
  if (d < 1) throw std::invalid_argument("make_nonmonotone_pressure: need d >= 1");
  if (!(a > 0)) throw std::invalid_argument("make_nonmonotone_pressure: need a > 0");
  const double scale = std::ldexp(1.0, d);
  if (!(a < b / scale)) throw std::invalid_argument("make_nonmonotone_pressure: need a < b / 2^d");
  if (!(options.tail_exponent > 1)) throw std::invalid_argument("make_nonmonotone_pressure: tail exponent must exceed 1");
  const double R = options.range_factor * b;
  Bridge c{a / scale, a, b / a, options.slope, 0.0, 0.0, 2.0, options.tail_coeff, options.tail_exponent, 0.0, R};
  const double shift = options.floor - law_minimum(copy_and_bridge(c), 0.0, R);
  c.level += shift;
  PressureLaw law = copy_and_bridge(c);
  law.set_provenance({a, b, d});
  law.set_growth(sample_growth(law, options.tail_exponent + 1, b, R, false));
  return law;
}

double coercivity_bound(const StressLaw& law, double u, double M) {
  if (M == 0) return 0.0;
  return M * law.max_abs_derivative(u - M, u + M);
}

CoercivityReport certify_coercivity(const StressLaw& law, double M, const CoercivityOptions& options) {
  if (!(M >= 0)) throw std::invalid_argument("certify_coercivity: need M >= 0");
  if (options.samples < 3) throw std::invalid_argument("certify_coercivity: need at least 3 samples");
  CoercivityReport rep;
  rep.M = M;
  const double lo = law.range_lo() + M;
  const double hi = law.range_hi() - M;
  if (!(lo < 0 && 0 < hi)) {
    rep.message = "certified range too narrow for M";
    return rep;
  }
  const int n = options.samples;
  rep.samples = Eigen::VectorXd::LinSpaced(n, lo, hi);
  rep.bound.resize(n);
  for (int i = 0; i < n; ++i) rep.bound(i) = coercivity_bound(law, rep.samples(i), M);

  // Upper threshold: scan down from the top while law - B stays positive.
  int top = n;
  for (int i = n - 1; i >= 0 && rep.samples(i) >= 0; --i) {
    if (law.value(rep.samples(i)) - rep.bound(i) > 0) {
      top = i;
    } else {
      break;
    }
  }
  int bottom = -1;
  for (int i = 0; i < n && rep.samples(i) <= 0; ++i) {
    if (law.value(rep.samples(i)) + rep.bound(i) < 0) {
      bottom = i;
    } else {
      break;
    }
  }
  if (top == n || bottom == -1) {
    rep.message = top == n ? "no upper threshold inside the certified range"
                           : "no lower threshold inside the certified range";
    return rep;
  }
  rep.g_plus = rep.samples(top);
  rep.g_minus = rep.samples(bottom);
  rep.K = std::max({std::abs(rep.g_minus), rep.g_plus, options.data_bound + M}) + M;
  rep.ok = true;
  return rep;
}

nlohmann::json law_to_json(const StressLaw& law) {
  using nlohmann::json;
  json coeffs = json::array();
  for (const auto& c : law.pieces()) coeffs.push_back({c(0), c(1), c(2), c(3)});
  auto tail = [](const PowerTail<double>& t) {
    return json{{"value", t.value}, {"slope", t.slope}, {"coeff", t.coeff}, {"power", t.power}};
  };
  const auto& g = law.growth();
  json prov{{"a", law.provenance().a}, {"b", law.provenance().b}};
  if (law.provenance().d) prov["d"] = *law.provenance().d;
  return json{{"breakpoints", law.knots()},
              {"coefficients", coeffs},
              {"tails", {{"left", tail(law.left_tail())}, {"right", tail(law.right_tail())}}},
              {"range", {law.range_lo(), law.range_hi()}},
              {"growth", {{"p", g.exponent}, {"c_lo", g.c_lo}, {"c_hi", g.c_hi}, {"start", g.start}}},
              {"provenance", prov}};
}

StressLaw law_from_json(const nlohmann::json& doc) {
  try {
    std::vector<double> knots = doc.at("breakpoints").get<std::vector<double>>();
    std::vector<Cubic> pieces;
    for (const auto& c : doc.at("coefficients")) {
      const auto v = c.get<std::vector<double>>();
      if (v.size() != 4) throw std::invalid_argument("law json: each piece needs 4 coefficients");
      pieces.emplace_back(v[0], v[1], v[2], v[3]);
    }
    auto tail = [](const nlohmann::json& t) {
      return PowerTail<double>{0.0, t.at("value").get<double>(), t.at("slope").get<double>(),
                               t.at("coeff").get<double>(), t.at("power").get<double>()};
    };
    const auto range = doc.at("range").get<std::vector<double>>();
    if (range.size() != 2) throw std::invalid_argument("law json: range needs two entries");
    StressLaw law(std::move(knots), std::move(pieces), tail(doc.at("tails").at("left")),
                  tail(doc.at("tails").at("right")), range[0], range[1]);
    if (doc.contains("growth")) {
      const auto& g = doc["growth"];
      law.set_growth({g.value("p", 0.0), g.value("c_lo", 0.0), g.value("c_hi", 0.0), g.value("start", 0.0)});
    }
    if (doc.contains("provenance")) {
      const auto& p = doc["provenance"];
      Provenance prov{p.value("a", 0.0), p.value("b", 0.0), std::nullopt};
      if (p.contains("d")) prov.d = p["d"].get<int>();
      law.set_provenance(prov);
    }
    return law;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("law json: ") + e.what());
  }
}

}  // namespace oscillax
