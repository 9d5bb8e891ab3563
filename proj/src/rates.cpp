#include "shelab/rates.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

// Boost 1.74's pchip.hpp calls an unqualified isnan.
using std::isnan;
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "shelab/error.hpp"

namespace shelab {

namespace {

constexpr double kInvGolden = 0.6180339887498949;

double cubic_part(double p) { return p * p * p / 24.0; }

}  // namespace

double lyapunov(double p, double g_of_p) {
  if (!(p > 0.0)) throw ValidationError("lyapunov: p must be > 0");
  return (p * p * p - p) / 24.0 + g_of_p;
}

double lyapunov(double p, const std::function<double(double)>& g) {
  if (!(p > 0.0)) throw ValidationError("lyapunov: p must be > 0");
  return lyapunov(p, g(p));
}

double g_brownian(double p, double a_plus, double a_minus) {
  if (!(p > 0.0)) throw ValidationError("g_brownian: p must be > 0");
  const double m = std::max(0.5 * p + std::max(a_plus, a_minus), 0.0);
  return 0.5 * p * m * m;
}

double g_brownian_derivative(double p, double a_plus, double a_minus) {
  if (!(p > 0.0)) throw ValidationError("g_brownian_derivative: p must be > 0");
  const double m = std::max(0.5 * p + std::max(a_plus, a_minus), 0.0);
  return 0.5 * m * m + 0.5 * p * m;
}

GFunction GFunction::zero() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

GFunction GFunction::brownian(double a_plus, double a_minus) {
  return {[=](double p) { return g_brownian(p, a_plus, a_minus); },
          [=](double p) { return g_brownian_derivative(p, a_plus, a_minus); }};
}

double GFunction::slope(double p) const {
  if (derivative) return derivative(p);
  const double h = 1e-6 * std::max(1.0, p);
  const double lo = std::max(p - h, 0.5 * p);
  return (value(p + h) - value(lo)) / (p + h - lo);
}

RateResult rate_function(double s, const GFunction& g, double zeta) {
  if (!(s > zeta)) throw ValidationError("rate_function: s must exceed zeta");
  auto objective = [&](double p) { return p > 0.0 ? s * p - cubic_part(p) - g.value(p) : 0.0; };
  auto dobj = [&](double p) { return s - p * p / 8.0 - g.slope(p); };

  double hi = 1.0;
  while (dobj(hi) >= 0.0) {
    hi *= 2.0;
    if (hi > 1e8) throw ValidationError("rate_function: no finite maximiser (g grows too slowly?)");
  }
  double lo = 0.0;
  double c = hi - kInvGolden * (hi - lo), d = lo + kInvGolden * (hi - lo);
  double fc = objective(c), fd = objective(d);
  while (hi - lo > 1e-10) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvGolden * (hi - lo);
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvGolden * (hi - lo);
      fd = objective(d);
    }
  }
  // Polish on the first-order condition inside the golden bracket.
  double a = std::max(lo - 1e-9, 0.0), b = hi + 1e-9;
  if (a > 0.0 && dobj(a) > 0.0 && dobj(b) < 0.0) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      (dobj(mid) > 0.0 ? a : b) = mid;
    }
    lo = hi = 0.5 * (a + b);
  }
  const double p_star = 0.5 * (lo + hi);
  return {objective(p_star), p_star};
}

double Family::zeta() const {
  if (kind == Kind::brownian && a > 0.0) return 0.5 * a * a;
  return 0.0;
}

GFunction Family::g() const { return kind == Kind::brownian ? GFunction::brownian(a, a) : GFunction::zero(); }

std::string Family::name() const {
  if (kind == Kind::deterministic) return "deterministic";
  std::ostringstream os;
  os << "brownian(a=" << a << ")";
  return os.str();
}

nlohmann::json Family::to_json() const {
  if (kind == Kind::deterministic) return {{"family", "deterministic"}};
  return {{"family", "brownian"}, {"a", a}};
}

double closed_form_rate(double s, const Family& family) {
  const double k = 4.0 * std::sqrt(2.0) / 3.0;
  if (family.kind == Family::Kind::deterministic) {
    if (!(s > 0.0)) throw ValidationError("closed_form_rate: deterministic family needs s > 0");
    return k * s * std::sqrt(s);
  }
  const double a = family.a;
  if (a >= 0.0 && !(s > 0.5 * a * a)) throw ValidationError("closed_form_rate: brownian a >= 0 needs s > a^2/2");
  if (a < 0.0 && !(s > 0.0)) throw ValidationError("closed_form_rate: brownian a < 0 needs s > 0");
  if (a < 0.0 && s <= 0.5 * a * a) return k * s * std::sqrt(s);
  return 0.5 * k * s * std::sqrt(s) - s * a + a * a * a / 6.0;
}

LyapunovCurve lyapunov_curve(std::span<const double> p_grid, const Family& family) {
  LyapunovCurve c;
  c.g_source = family.kind == Family::Kind::deterministic ? "closed_form_zero" : "closed_form_brownian";
  const GFunction g = family.g();
  for (double p : p_grid) {
    const double gp = g.value(p);
    c.rows.push_back({p, lyapunov(p, gp), gp});
  }
  return c;
}

RateCurve rate_curve(std::span<const double> s_grid, const Family& family) {
  RateCurve c;
  c.zeta = family.zeta();
  const GFunction g = family.g();
  for (double s : s_grid) {
    const RateResult r = rate_function(s, g, c.zeta);
    c.rows.push_back({s, r.rate, r.p_star});
  }
  return c;
}

LdpFromSamples::LdpFromSamples(std::vector<double> p, std::vector<double> h) : p_(std::move(p)), h_(std::move(h)) {
  const std::size_t n = p_.size();
  if (n != h_.size() || n < 5) throw ValidationError("ldp_from_lyapunov: need >= 5 (p, h) samples of equal length");
  if (!(p_.front() > 0.0)) throw ValidationError("ldp_from_lyapunov: p grid must be positive");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(p_[i] > p_[i - 1])) throw ValidationError("ldp_from_lyapunov: p grid must be increasing");
  }
  slope_.resize(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // Three-point derivative on a possibly non-uniform grid.
    const double h0 = p_[i] - p_[i - 1], h1 = p_[i + 1] - p_[i];
    slope_[i] = (h0 * h0 * (h_[i + 1] - h_[i]) + h1 * h1 * (h_[i] - h_[i - 1])) / (h0 * h1 * (h0 + h1));
  }
  auto one_sided = [&](std::size_t i0, std::size_t i1, std::size_t i2) {
    const double x0 = p_[i0], x1 = p_[i1], x2 = p_[i2];
    // Derivative at x0 of the quadratic through the three points.
    return h_[i0] * (2 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2)) + h_[i1] * (x0 - x2) / ((x1 - x0) * (x1 - x2)) +
           h_[i2] * (x0 - x1) / ((x2 - x0) * (x2 - x1));
  };
  slope_[0] = one_sided(0, 1, 2);
  slope_[n - 1] = one_sided(n - 1, n - 2, n - 3);
  for (std::size_t i = 1; i < n; ++i) {
    if (!(slope_[i] > slope_[i - 1])) {
      throw ValidationError("ldp_from_lyapunov: fitted h' is not increasing near p=" + std::to_string(p_[i]));
    }
  }
  {
    // Quadratic through the three smallest points, evaluated at 0.
    const double x0 = p_[0], x1 = p_[1], x2 = p_[2];
    const double y0 = slope_[0], y1 = slope_[1], y2 = slope_[2];
    const double quad = y0 * (x1 * x2) / ((x0 - x1) * (x0 - x2)) + y1 * (x0 * x2) / ((x1 - x0) * (x1 - x2)) +
                        y2 * (x0 * x1) / ((x2 - x0) * (x2 - x1));
    const double lin = y0 - x0 * (y1 - y0) / (x1 - x0);
    zeta_ = quad;
    zeta_err_ = std::abs(quad - lin);
  }
  using boost::math::interpolators::cubic_hermite;
  using boost::math::interpolators::pchip;
  auto sl = std::make_shared<pchip<std::vector<double>>>(std::vector<double>(p_), std::vector<double>(slope_));
  slope_interp_ = [sl](double x) { return (*sl)(x); };
  auto hi = std::make_shared<cubic_hermite<std::vector<double>>>(std::vector<double>(p_), std::vector<double>(h_),
                                                                 std::vector<double>(slope_));
  h_interp_ = [hi](double x) { return (*hi)(x); };
}

double LdpFromSamples::h_prime(double p) const { return slope_interp_(std::clamp(p, p_.front(), p_.back())); }
double LdpFromSamples::h(double p) const { return h_interp_(std::clamp(p, p_.front(), p_.back())); }

LdpFromSamples::Result LdpFromSamples::at(double s) const {
  if (!(s > zeta_)) throw ValidationError("ldp_from_lyapunov: s must exceed the fitted zeta");
  if (s > slope_.back()) throw ValidationError("ldp_from_lyapunov: s beyond the tabulated range of h'");
  double q;
  if (s <= slope_.front()) {
    // Below the first sample: linear continuation of h' towards zeta.
    q = p_.front() * (s - zeta_) / (slope_.front() - zeta_);
    const double hq = h_[0] - (p_[0] - q) * 0.5 * (slope_.front() + s);
    return {s * q - hq, q};
  }
  double lo = p_.front(), hi = p_.back();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (h_prime(mid) < s ? lo : hi) = mid;
  }
  q = 0.5 * (lo + hi);
  return {s * q - h(q), q};
}

LdpFromSamples::Result ldp_from_lyapunov(std::span<const double> p, std::span<const double> h, double s) {
  return LdpFromSamples({p.begin(), p.end()}, {h.begin(), h.end()}).at(s);
}

}  // namespace shelab
