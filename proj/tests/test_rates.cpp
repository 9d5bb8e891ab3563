#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "shelab/error.hpp"
#include "shelab/rates.hpp"

using namespace shelab;

namespace {

const double kR2 = std::sqrt(2.0);

// Independent oracle: brute-force Legendre transform on a fine p mesh.
double brute_rate(double s, const std::function<double(double)>& g) {
  double best = 0.0;
  for (int i = 1; i <= 400000; ++i) {
    const double p = i * 1e-4;
    best = std::max(best, s * p - p * p * p / 24.0 - g(p));
  }
  return best;
}

}  // namespace

TEST_CASE("lyapunov examples") {
  CHECK(lyapunov(3.0, 0.0) == 1.0);
  CHECK(lyapunov(1.0, 0.0) == 0.0);
  CHECK(lyapunov(2.0, g_brownian(2.0, 0.0, 0.0)) == 1.25);
  CHECK(g_brownian(2.0, 0, 0) == 1.0);
  CHECK(g_brownian(1.0, -1, -1) == 0.0);
  CHECK(g_brownian(1.0, 1, -2) == 1.125);
  const LyapunovCurve c = lyapunov_curve(std::vector<double>{0.5, 1.0, 2.0}, Family::brownian(0.5));
  for (const auto& r : c.rows) CHECK(r.lya == (r.p * r.p * r.p - r.p) / 24.0 + r.g);
}

TEST_CASE("g_brownian derivative matches finite differences") {
  for (double a : {-1.0, -0.3, 0.0, 0.8}) {
    for (double p = 0.1; p < 5; p += 0.37) {
      const double h = 1e-6;
      const double fd = (g_brownian(p + h, a, a) - g_brownian(p - h, a, a)) / (2 * h);
      CHECK(g_brownian_derivative(p, a, a) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("rate_function examples") {
  const RateResult d = rate_function(1.0, GFunction::zero(), 0.0);
  CHECK(d.rate == doctest::Approx(4 * kR2 / 3).epsilon(1e-10));
  CHECK(d.p_star == doctest::Approx(2 * kR2).epsilon(1e-7));
  const Family b1 = Family::brownian(1.0);
  CHECK(rate_function(1.0, b1.g(), b1.zeta()).rate == doctest::Approx(2 * kR2 / 3 - 1 + 1.0 / 6).epsilon(1e-9));
  const Family bm = Family::brownian(-1.0);
  CHECK(rate_function(0.3, bm.g(), bm.zeta()).rate == doctest::Approx(4 * kR2 / 3 * std::pow(0.3, 1.5)).epsilon(1e-9));
}

TEST_CASE("closed forms") {
  CHECK(closed_form_rate(2.0, Family::deterministic()) == doctest::Approx(16.0 / 3).epsilon(1e-14));
  CHECK(closed_form_rate(1.0, Family::brownian(0.0)) == doctest::Approx(2 * kR2 / 3).epsilon(1e-14));
  const Family f = Family::brownian(-1.0);
  const double s = 0.5;
  const double lower = 4 * kR2 / 3 * std::pow(s, 1.5);
  const double upper = 2 * kR2 / 3 * std::pow(s, 1.5) - s * (-1.0) + (-1.0) / 6.0;
  CHECK(std::fabs(lower - upper) < 1e-12);
  CHECK(std::fabs(closed_form_rate(s, f) - lower) < 1e-12);
  CHECK(std::fabs(closed_form_rate(std::nextafter(s, 1.0), f) - lower) < 1e-12);
  CHECK(Family::brownian(0.7).zeta() == doctest::Approx(0.245));
  CHECK(Family::brownian(-0.7).zeta() == 0.0);
  CHECK(Family::deterministic().zeta() == 0.0);
}

TEST_CASE("duality matches closed forms and a brute-force transform") {
  std::mt19937_64 gen(17);
  for (double a : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const Family f = Family::brownian(a);
    std::uniform_real_distribution<double> us(f.zeta() + 1e-3, 3.0);
    for (int i = 0; i < 40; ++i) {
      const double s = us(gen);
      const double r = rate_function(s, f.g(), f.zeta()).rate;
      CHECK(std::fabs(r - closed_form_rate(s, f)) <= 1e-6);
    }
    const double s = f.zeta() + 1.0;
    CHECK(std::fabs(rate_function(s, f.g(), f.zeta()).rate -
                    brute_rate(s, [&](double p) { return g_brownian(p, a, a); })) < 1e-6);
  }
}

TEST_CASE("envelope condition: d rate / ds = p*") {
  for (double a : {-1.0, 0.0, 1.0}) {
    const Family f = Family::brownian(a);
    for (double s = f.zeta() + 0.2; s < 3; s += 0.4) {
      const double h = 1e-5;
      const double d = (closed_form_rate(s + h, f) - closed_form_rate(s - h, f)) / (2 * h);
      CHECK(d == doctest::Approx(rate_function(s, f.g(), f.zeta()).p_star).epsilon(1e-5));
    }
  }
}

TEST_CASE("rate curves are non-decreasing, convex, and vanish at zeta") {
  std::vector<double> s;
  for (int i = 1; i <= 60; ++i) s.push_back(0.05 * i);
  for (const Family& f : {Family::deterministic(), Family::brownian(-1.0), Family::brownian(0.0), Family::brownian(1.0)}) {
    std::vector<double> grid;
    for (double v : s) if (v > f.zeta()) grid.push_back(v);
    const RateCurve c = rate_curve(grid, f);
    for (std::size_t i = 1; i < c.rows.size(); ++i) CHECK(c.rows[i].rate >= c.rows[i - 1].rate - 1e-12);
    for (std::size_t i = 1; i + 1 < c.rows.size(); ++i) {
      CHECK(c.rows[i + 1].rate - 2 * c.rows[i].rate + c.rows[i - 1].rate >= -1e-9);
    }
    CHECK(closed_form_rate(f.zeta() + 1e-8, f) < 1e-6);
  }
}

TEST_CASE("rate_function rejects s below zeta") {
  const Family f = Family::brownian(1.0);
  CHECK_THROWS_AS(rate_function(0.5, f.g(), f.zeta()), ValidationError);
}

TEST_CASE("ldp_from_lyapunov examples") {
  std::vector<double> p;
  for (int i = 1; i <= 600; ++i) p.push_back(0.01 * i);
  auto tab = [&](auto h) {
    std::vector<double> v;
    for (double x : p) v.push_back(h(x));
    return v;
  };
  const auto gauss = tab([](double x) { return x * x / 2; });
  const auto r = ldp_from_lyapunov(p, gauss, 1.0);
  CHECK(r.rate == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.q == doctest::Approx(1.0).epsilon(1e-4));
  const auto cubic = tab([](double x) { return x * x * x / 24; });
  CHECK(std::fabs(ldp_from_lyapunov(p, cubic, 1.0).rate - 4 * kR2 / 3) < 1e-4);
  const auto brown = tab([](double x) { return x * x * x / 24 + x / 2 * (x / 2) * (x / 2); });
  CHECK(std::fabs(ldp_from_lyapunov(p, brown, 1.0).rate - closed_form_rate(1.0, Family::brownian(0.0))) < 1e-4);

  const LdpFromSamples l(p, gauss);
  CHECK(std::fabs(l.zeta()) < 1e-3);
  CHECK(l.zeta_uncertainty() < 1e-3);
  for (double s = 0.2; s <= 2.0; s += 0.05) CHECK(std::fabs(l.at(s).rate - s * s / 2) < 1e-4);
  CHECK_THROWS_AS(l.at(100.0), ValidationError);

  const auto not_convex = tab([](double x) { return std::sin(x); });
  CHECK_THROWS_AS(LdpFromSamples(p, not_convex), ValidationError);
}

TEST_CASE("cramer toy") {
  const std::vector<double> s{0.0, 1.0};
  const CramerReport r = cramer_toy_validate(s, 200, 20000, 3, 0.1, 2);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].exact_rate == doctest::Approx(std::log(2.0) / 200));
  CHECK(r.rows[0].ldp_rate == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.rows[0].hits > 9000);
  CHECK(r.rows[1].too_few_hits);
  CHECK(r.rows[1].hits == 0);
  const double exact1 = -std::log(0.5 * std::erfc(std::sqrt(100.0))) / 200;
  CHECK(r.rows[1].exact_rate == doctest::Approx(exact1).epsilon(1e-12));
  CHECK(r.rows[1].tilted_rate == doctest::Approx(exact1).epsilon(0.02));

  const CramerReport again = cramer_toy_validate(s, 200, 20000, 3, 0.1, 1);
  CHECK(again.rows[1].tilted_rate == r.rows[1].tilted_rate);
  CHECK(again.rows[0].hits == r.rows[0].hits);
}
