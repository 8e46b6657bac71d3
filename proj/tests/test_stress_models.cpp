#include <doctest.h>

#include <cmath>
#include <random>

#include "oscillax/quadrature.hpp"
#include "oscillax/stress_models.hpp"

using namespace oscillax;

namespace {

// int_0^u law, by Gauss-Legendre split at the knots (exact on polynomial pieces)
double integral_oracle(const StressLaw& law, double u) {
  std::vector<double> cuts{0.0, u};
  for (double k : law.knots()) {
    if ((k - 0) * (k - u) < 0) cuts.push_back(k);
  }
  std::sort(cuts.begin(), cuts.end());
  const GaussLegendre<double> gl(8);
  double s = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    s += gl.integrate([&](double x) { return law.value(x); }, cuts[i], cuts[i + 1], 512);
  }
  return u >= 0 ? s : -s;
}

}  // namespace

TEST_CASE("derivative agrees with central differences away from knots") {
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-20, 20);
  for (int i = 0; i < 400; ++i) {
    const double u = U(rng);
    const double h = 1e-6;
    bool near_knot = false;
    for (double k : law.knots()) near_knot = near_knot || std::abs(u - k) < 10 * h;
    if (near_knot) continue;
    const double fd = (law.value(u + h) - law.value(u - h)) / (2 * h);
    CHECK(law.derivative(u) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    const double fd2 = (law.derivative(u + h) - law.derivative(u - h)) / (2 * h);
    CHECK(law.second_derivative(u) == doctest::Approx(fd2).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("antiderivative is the integral from zero") {
  const StressLaw law = make_two_phase_stress(1, 3, 3.5);
  for (double u : {-37.0, -4.2, -0.5, 0.0, 0.7, 1.5, 2.6, 3.3, 5.9, 12.0, 80.0}) {
    const double oracle = integral_oracle(law, u);
    CHECK(law.antiderivative(u) == doctest::Approx(oracle).epsilon(1e-11).scale(1.0));
  }
}

TEST_CASE("the law is C1 across its knots") {
  const StressLaw law = make_two_phase_stress(0.5, 2, 4);
  for (double k : law.knots()) {
    const double h = 1e-9;
    CHECK(law.value(k - h) == doctest::Approx(law.value(k + h)).epsilon(1e-7).scale(1.0));
    CHECK(law.derivative(k - h) == doctest::Approx(law.derivative(k + h)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("max_abs_derivative bounds a dense sample and is attained") {
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  for (auto [lo, hi] : {std::pair{-5.0, 7.0}, std::pair{1.2, 2.9}, std::pair{2.1, 2.2}}) {
    double sampled = 0;
    const int n = 200000;
    for (int i = 0; i <= n; ++i) sampled = std::max(sampled, std::abs(law.derivative(lo + (hi - lo) * i / n)));
    const double exact = law.max_abs_derivative(lo, hi);
    CHECK(exact >= sampled - 1e-12);
    CHECK(exact <= sampled * (1 + 1e-6) + 1e-12);
  }
}

TEST_CASE("two-phase stress matches across the phase intervals") {
  for (auto [a, b] : {std::pair{1.0, 3.0}, std::pair{1.0, 8.0}, std::pair{0.4, 5.0}}) {
    const StressLaw law = make_two_phase_stress(a, b, 3);
    for (int i = 0; i <= 100; ++i) {
      const double t = 1 + i / 100.0;
      CHECK(law.value(a * t) == doctest::Approx(law.value(b * t)).epsilon(1e-12));
    }
    // the law must descend somewhere between the phases to allow the match
    double min_slope = 0;
    for (int i = 1; i < 1000; ++i) min_slope = std::min(min_slope, law.derivative(2 * a + (b - 2 * a) * i / 1000.0));
    CHECK(min_slope < 0);
    CHECK(law.value(0) == doctest::Approx(0).scale(1.0));
    CHECK(law.antiderivative(0) == 0);
  }
}

TEST_CASE("two-phase stress potential is non-negative and inside its growth envelope") {
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  const auto& g = law.growth();
  CHECK(g.exponent == 3);
  for (int i = -4000; i <= 4000; ++i) {
    const double u = 0.07 * i;
    if (!law.in_range(u)) continue;
    CHECK(law.antiderivative(u) >= -1e-12);
    if (std::abs(u) >= g.start) {
      const double r = law.antiderivative(u) / std::pow(std::abs(u), g.exponent);
      CHECK(r >= g.c_lo);
      CHECK(r <= g.c_hi);
    }
  }
}

TEST_CASE("two-phase stress rejects overlapping phases and weak growth") {
  CHECK_THROWS_AS(make_two_phase_stress(0, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_two_phase_stress(1, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_two_phase_stress(1, 3, 2), std::invalid_argument);
}

TEST_CASE("evaluation outside the certified range throws") {
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  CHECK_THROWS_AS(law.value(law.range_hi() + 1), RangeError);
  CHECK_THROWS_AS(eval(law, law.range_lo() - 1), RangeError);
  CHECK_NOTHROW(law.value(law.range_hi()));
}

TEST_CASE("matched pressure is equal on the compressed phases and floored") {
  for (int d : {1, 2, 3}) {
    const double a = 1, b = 8.5 * std::ldexp(1.0, d - 1);
    const PressureLaw p = make_nonmonotone_pressure(a, b, d);
    for (int i = 0; i <= 100; ++i) {
      const double td = std::pow(1 + i / 100.0, d);
      CHECK(p.value(a / td) == doctest::Approx(p.value(b / td)).epsilon(1e-12));
    }
    double lowest = 1e300;
    for (int i = 0; i <= 80000; ++i) lowest = std::min(lowest, p.value(p.range_hi() * i / 80000.0));
    CHECK(lowest >= 1 - 1e-12);
    CHECK(lowest == doctest::Approx(1).epsilon(1e-6));
  }
  CHECK_THROWS_AS(make_nonmonotone_pressure(1, 4, 2), std::invalid_argument);
}

TEST_CASE("coercivity threshold: law minus the bound stays positive beyond g_plus") {
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  const double M = 1.9;
  const CoercivityReport rep = certify_coercivity(law, M);
  REQUIRE(rep.ok);
  // oracle: bound from a dense derivative sample, not from max_abs_derivative
  auto sampled_bound = [&](double u) {
    double m = 0;
    for (int i = 0; i <= 2000; ++i) m = std::max(m, std::abs(law.derivative(u - M + 2 * M * i / 2000.0)));
    return M * m;
  };
  for (double u = rep.g_plus; u < rep.g_plus + 30; u += 0.37) CHECK(law.value(u) - sampled_bound(u) > 0);
  for (double u = rep.g_minus; u > rep.g_minus - 30; u -= 0.37) CHECK(law.value(u) + sampled_bound(u) < 0);
  CHECK(rep.K >= std::max(std::abs(rep.g_minus), rep.g_plus) + M);
}

TEST_CASE("coercivity fails for a bounded law") {
  const StressLaw flat = make_affine_law(0.0, 1.0, -100.0, 100.0);
  const CoercivityReport rep = certify_coercivity(flat, 1.0);
  CHECK_FALSE(rep.ok);
  CHECK_FALSE(rep.message.empty());
}

TEST_CASE("law JSON round trip reproduces values bit for bit") {
  const StressLaw law = make_two_phase_stress(1, 3, 3);
  const StressLaw back = law_from_json(nlohmann::json::parse(law_to_json(law).dump()));
  for (int i = -500; i <= 500; ++i) {
    const double u = 0.113 * i;
    CHECK(back.value(u) == law.value(u));
    CHECK(back.antiderivative(u) == law.antiderivative(u));
  }
  CHECK(back.provenance().a == 1);
  CHECK(back.growth().c_hi == law.growth().c_hi);
}

TEST_CASE("affine law") {
  const StressLaw l = make_affine_law(2.0, -1.0, -5.0, 5.0);
  CHECK(l.value(3) == doctest::Approx(5));
  CHECK(l.antiderivative(2) == doctest::Approx(2.0));  // u^2 - u
  CHECK(l.max_abs_derivative(-1, 1) == 2);
}
