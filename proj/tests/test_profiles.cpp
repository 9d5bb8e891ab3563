#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "shelab/error.hpp"
#include "shelab/profiles.hpp"

using namespace shelab;

TEST_CASE("log_mgf examples") {
  CHECK(log_mgf(Profile::brownian(0, 0), 1.0, 3.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(log_mgf(Profile::brownian(0, 0), 1.0, 3.0, 0.0) == 0.0);
  CHECK(log_mgf(Profile::power_law(0.5, 1.0), 2.0, 1.0, 4.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(log_mgf(Profile::brownian(1.0, -2.0), 2.0, 1.0, -1.5) == doctest::Approx(0.5 * 4 * 1.5 - 2 * 2 * 1.5));
  CHECK_THROWS_AS(log_mgf(Profile::flat(), 0.0, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(log_mgf(Profile::flat(), 1.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("log_mgf is convex in p") {
  // Brownian log-MGF at fixed x, checked by second differences on random points.
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ux(-20, 20), up(0.05, 6), ua(-2, 2);
  for (int i = 0; i < 2000; ++i) {
    const Profile prof = Profile::brownian(ua(gen), ua(gen));
    const double x = ux(gen), p = up(gen), h = 1e-2;
    const double second = log_mgf(prof, p + h, 1.0, x) + log_mgf(prof, p - h, 1.0, x) - 2 * log_mgf(prof, p, 1.0, x);
    CHECK(second >= -1e-9 * (1 + std::fabs(log_mgf(prof, p, 1.0, x))));
  }
}

TEST_CASE("profile values and trust-but-verify") {
  CHECK(Profile::parabolic(0.5).value(2.0, 2.0) == doctest::Approx(0.5));
  CHECK(Profile::cosine(0.1, 0.3, 2.0).value(1.0, 0.0) == doctest::Approx(0.4));
  CHECK_THROWS(Profile::brownian(0, 0).value(1.0, 0.0));
  const Profile liar = Profile::bounded([](double x) { return x; }, 1.0, "liar");
  CHECK(liar.value(1.0, 0.5) == 0.5);
  CHECK_THROWS_AS(liar.value(1.0, 5.0), ValidationError);
  const Profile custom = Profile::custom([](double, double x) { return x * x; }, 1.0, 0.5, 0.0);
  CHECK_THROWS_AS(custom.value(1.0, 100.0), ValidationError);
}

TEST_CASE("json round trip") {
  for (const Profile& p : {Profile::flat(0.3), Profile::cosine(0.1, 0.2, 3.0), Profile::power_law(0.25, 2.0),
                           Profile::parabolic(0.4), Profile::brownian(1.0, -0.5)}) {
    const auto j = p.to_json();
    CHECK(Profile::from_json(j).to_json() == j);
  }
  CHECK_THROWS_AS(Profile::from_json({{"kind", "lognormal"}}), ValidationError);
  CHECK_THROWS_AS(Profile::from_json({{"kind", "power_law"}, {"delta", "x"}}), ValidationError);
  CHECK_THROWS_AS(Profile::from_json(nlohmann::json::array()), ValidationError);
}

TEST_CASE("grids") {
  const GridPoints unit = unit_grid();
  CHECK(unit(2) == 2.0);
  CHECK(unit(-3) == -3.0);
  CHECK(default_grid(Profile::flat())(2) == 2.0);
  const GridPoints sq = default_grid(Profile::parabolic(0.5));
  CHECK(sq(2) - sq(1) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-15));
  for (long long n = 1; n <= 10000; ++n) {
    const double gap = std::sqrt(double(n + 1)) - std::sqrt(double(n));
    REQUIRE(gap >= std::min(1.0, 0.25 / std::sqrt(double(n))));
  }
}

TEST_CASE("grid axioms") {
  CHECK(check_grid_axioms(unit_grid(), -100, 100).pass);
  CHECK(check_grid_axioms(sqrt_grid(), -10000, 10000).pass);
  const GridPoints square{[](long long n) { return static_cast<double>(n < 0 ? -n * n : n * n); }, 1.0, 0.5, "square"};
  const GridReport r = check_grid_axioms(square, -10, 10);
  CHECK_FALSE(r.pass);
  bool upper_at_1 = false;
  for (const auto& v : r.violations) upper_at_1 = upper_at_1 || (v.rule == "spacing_upper" && v.n == 1);
  CHECK(upper_at_1);
  // c = 1 asks for spacing >= |n|^{-1/2}, which sqrt(2) - 1 misses at n = 1.
  GridPoints tight = sqrt_grid();
  tight.c = 1.0;
  const GridReport rt = check_grid_axioms(tight, -10, 10);
  CHECK_FALSE(rt.pass);
  CHECK(rt.violations.front().rule == "spacing_lower");
  const GridPoints shifted{[](long long n) { return n + 0.5; }, 1.0, 0.5, "shifted"};
  CHECK(check_grid_axioms(shifted, -3, 3).violations.front().rule == "theta0");
}

TEST_CASE("grid axioms hold for random increasing grids with bounded gaps") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.3, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos(201, 0.0), neg(201, 0.0);
    for (int i = 1; i <= 200; ++i) {
      pos[i] = pos[i - 1] + u(gen);
      neg[i] = neg[i - 1] - u(gen);
    }
    const GridPoints g{[&](long long n) { return n >= 0 ? pos[n] : neg[-n]; }, 1.0, 0.5, "random"};
    // spacing >= 0.3 >= (c|n|)^{-1/2} only for |n| >= 12
    const GridReport r = check_grid_axioms(g, -200, 200);
    for (const auto& v : r.violations) {
      CHECK(v.rule == "spacing_lower");
      CHECK(std::llabs(v.n) < 12);
    }
  }
}

TEST_CASE("brownian path sampler") {
  const BrownianDrift flat{0, 0};
  const std::vector<double> zero{0.0};
  CHECK(sample_brownian_path(flat, zero, 5)[0] == 0.0);

  const BrownianDrift drift{1.0, 0.0};
  const std::vector<double> mesh{0.0, 1.0};
  const int n = 100000;
  double sum = 0, sum2 = 0;
  for (int s = 0; s < n; ++s) {
    const double v = sample_brownian_path(drift, mesh, static_cast<std::uint64_t>(s))[1];
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::fabs(mean - 1.0) <= 3 * se);
  CHECK(std::fabs(sum2 / n - mean * mean - 1.0) < 0.03);

  const std::vector<double> m2{-2.0, -0.5, 0.0, 0.25, 3.0};
  const auto a = sample_brownian_path({0.3, -0.2}, m2, 77);
  const auto b = sample_brownian_path({0.3, -0.2}, m2, 77);
  CHECK(a == b);
  CHECK(a[2] == 0.0);
  CHECK(sample_brownian_path({0.3, -0.2}, m2, 77, 1) != a);
  const std::vector<double> bad{0.0, 0.0};
  CHECK_THROWS_AS(sample_brownian_path(flat, bad, 1), ValidationError);
  CHECK(interpolate_path(m2, a, 0.125) == doctest::Approx(0.5 * (a[2] + a[3])));
}

TEST_CASE("brownian path increments have the mesh variance on both sides") {
  // Var(f(-2) - f(-0.5)) = 1.5 with a_minus = 0.
  const std::vector<double> mesh{-2.0, -0.5, 0.0};
  const int n = 50000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_brownian_path({0, 0}, mesh, 1000 + i);
    const double d = p[0] - p[1];
    s += d;
    s2 += d * d;
  }
  CHECK(std::fabs(s / n) < 4 * std::sqrt(1.5 / n));
  CHECK(s2 / n == doctest::Approx(1.5).epsilon(0.03));
}

TEST_CASE("envelope bounds log_mgf") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> ux(-500, 500), ut(0.5, 1000);
  for (const Profile& prof : {Profile::cosine(0.5, 1.0, 2.0), Profile::power_law(0.75, 2.0), Profile::parabolic(0.5),
                              Profile::brownian(1.0, -1.0)}) {
    for (double p : {0.5, 1.0, 3.0}) {
      const GrowthEnvelope e = prof.envelope(p);
      for (int i = 0; i < 500; ++i) {
        const double x = ux(gen), t = ut(gen);
        CHECK(log_mgf(prof, p, t, x) <= e.offset + e.slope * std::fabs(x) + e.alpha * p * x * x / (2 * t) + 1e-9);
      }
    }
  }
}
