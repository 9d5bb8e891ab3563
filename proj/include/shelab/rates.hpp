#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace shelab {

// Lya_p = (p^3 - p)/24 + g(p)
double lyapunov(double p, double g_of_p);
double lyapunov(double p, const std::function<double(double)>& g);

// (p/2) * max(p/2 + a, 0)^2 with a = max(a_plus, a_minus)
double g_brownian(double p, double a_plus, double a_minus);
double g_brownian_derivative(double p, double a_plus, double a_minus);

// g together with an optional derivative; a centred difference is used when
// the derivative is absent.
struct GFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  static GFunction zero();
  static GFunction brownian(double a_plus, double a_minus);
  double slope(double p) const;
};

// Rates are reported as positive numbers; the tail probability decays like
// exp(-rate * t).
struct RateResult {
  double rate = 0.0;
  double p_star = 0.0;
};

// sup_{p >= 0} { s p - p^3/24 - g(p) }
RateResult rate_function(double s, const GFunction& g, double zeta);

struct Family {
  enum class Kind { deterministic, brownian };
  Kind kind = Kind::deterministic;
  double a = 0.0;

  static Family deterministic() { return {}; }
  static Family brownian(double a) { return {Kind::brownian, a}; }
  // Left edge of the rate function's domain: lim_{p -> 0} g'(p).
  double zeta() const;
  GFunction g() const;
  std::string name() const;
  nlohmann::json to_json() const;
};

double closed_form_rate(double s, const Family& family);

struct LyapunovRow {
  double p, lya, g;
};
struct LyapunovCurve {
  std::vector<LyapunovRow> rows;
  std::string g_source;
};
LyapunovCurve lyapunov_curve(std::span<const double> p_grid, const Family& family);

struct RateRow {
  double s, rate, p_star;
};
struct RateCurve {
  std::vector<RateRow> rows;
  double zeta = 0.0;
};
RateCurve rate_curve(std::span<const double> s_grid, const Family& family);

// Legendre transform of a tabulated convex h via a monotone interpolant of h'.
class LdpFromSamples {
 public:
  LdpFromSamples(std::vector<double> p, std::vector<double> h);

  double zeta() const { return zeta_; }
  // |quadratic - linear| extrapolation of h' to 0.
  double zeta_uncertainty() const { return zeta_err_; }
  double slope_max() const { return slope_.back(); }
  double h_prime(double p) const;
  double h(double p) const;

  struct Result {
    double rate = 0.0;
    double q = 0.0;
  };
  // Requires zeta < s <= h'(p_max).
  Result at(double s) const;

 private:
  std::vector<double> p_, h_, slope_;
  std::function<double(double)> slope_interp_;
  std::function<double(double)> h_interp_;
  double zeta_ = 0.0;
  double zeta_err_ = 0.0;
};

LdpFromSamples::Result ldp_from_lyapunov(std::span<const double> p, std::span<const double> h, double s);

// Toy process X(t) = sum of t independent N(0,1), for which h(p) = p^2/2.
struct CramerRow {
  double s = 0.0;
  std::uint64_t hits = 0;
  bool too_few_hits = false;
  double direct_rate = 0.0;       // -(1/t) log(hits/n); +inf when no hits
  double tilted_rate = 0.0;       // same quantity from the exponentially tilted estimator
  double tilted_rel_stderr = 0.0; // stderr of the tilted probability estimate over the estimate
  double exact_rate = 0.0;        // -(1/t) log P(N(0,t) > s t)
  double ldp_rate = 0.0;          // Legendre transform of h at s
  double empirical_rate = 0.0;    // direct when hits are sufficient, tilted otherwise
  double rel_error = 0.0;         // |empirical - ldp| / ldp
  bool pass = false;
};

struct CramerReport {
  int t = 0;
  std::uint64_t n_replicas = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.1;
  std::vector<CramerRow> rows;

  nlohmann::json to_json() const;
};

CramerReport cramer_toy_validate(std::span<const double> s_list, int t, std::uint64_t n_replicas,
                                 std::uint64_t seed, double rel_tolerance = 0.1, unsigned threads = 0);

}  // namespace shelab
