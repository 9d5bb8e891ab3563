#include "shelab/extrapolate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shelab/error.hpp"

namespace shelab {

namespace {

struct LinearFit {
  double a = 0.0;
  double b = 0.0;
  double sse = 0.0;
};

// Least squares y = a + b*u.
LinearFit fit_line(std::span<const double> u, std::span<const double> y) {
  const double n = static_cast<double>(u.size());
  double su = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    su += u[i];
    sy += y[i];
  }
  const double mu = su / n, my = sy / n;
  double suu = 0.0, suy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suy += (u[i] - mu) * (y[i] - my);
  }
  LinearFit f;
  f.b = suu > 0.0 ? suy / suu : 0.0;
  f.a = my - f.b * mu;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = y[i] - (f.a + f.b * u[i]);
    f.sse += r * r;
  }
  return f;
}

TailFit fit_tail(std::span<const double> t, std::span<const double> phi, int k) {
  const auto n = t.size();
  auto ts = t.subspan(n - static_cast<std::size_t>(k));
  auto ys = phi.subspan(n - static_cast<std::size_t>(k));
  // Normalise t so that t^(-gamma) stays O(1).
  const double t_ref = ts.back();
  std::vector<double> u(ts.size());
  auto sse_at = [&](double gamma) {
    for (std::size_t i = 0; i < ts.size(); ++i) u[i] = std::pow(ts[i] / t_ref, -gamma);
    return fit_line(u, ys);
  };

  constexpr double kGammaLo = 0.02, kGammaHi = 4.0;
  constexpr int kCoarse = 200;
  double best_gamma = kGammaLo;
  double best_sse = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i <= kCoarse; ++i) {
    const double gamma = kGammaLo * std::pow(kGammaHi / kGammaLo, static_cast<double>(i) / kCoarse);
    const double sse = sse_at(gamma).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best_gamma = gamma;
      best_i = i;
    }
  }
  auto gamma_at = [&](int i) {
    i = std::clamp(i, 0, kCoarse);
    return kGammaLo * std::pow(kGammaHi / kGammaLo, static_cast<double>(i) / kCoarse);
  };
  double lo = gamma_at(best_i - 1), hi = gamma_at(best_i + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
  double fc = sse_at(c).sse, fd = sse_at(d).sse;
  for (int it = 0; it < 80 && hi - lo > 1e-12 * hi; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = sse_at(c).sse;
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = sse_at(d).sse;
    }
  }
  const double g_mid = 0.5 * (lo + hi);
  if (sse_at(g_mid).sse < best_sse) best_gamma = g_mid;
  const LinearFit f = sse_at(best_gamma);

  TailFit out;
  out.k = k;
  out.limit = f.a;
  out.b = f.b * std::pow(t_ref, best_gamma);
  out.gamma = best_gamma;
  out.rms = std::sqrt(f.sse / k);
  return out;
}

}  // namespace

nlohmann::json Extrapolation::to_json() const {
  nlohmann::json fj = nlohmann::json::array();
  for (const auto& f : fits) {
    fj.push_back({{"k", f.k}, {"limit", f.limit}, {"b", f.b}, {"gamma", f.gamma}, {"rms", f.rms}});
  }
  return {{"limit", limit}, {"converged", converged}, {"spread", spread}, {"fits", fj}};
}

Extrapolation extrapolate_limit(std::span<const double> t, std::span<const double> phi, double tol) {
  if (t.size() != phi.size() || t.empty()) throw ValidationError("extrapolate_limit: size mismatch or empty input");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw ValidationError("extrapolate_limit: schedule must be increasing");
  }
  Extrapolation out;
  const std::size_t tail = std::min<std::size_t>(3, phi.size());
  const bool constant_tail =
      std::all_of(phi.end() - static_cast<std::ptrdiff_t>(tail), phi.end(), [&](double v) { return v == phi.back(); });
  if (constant_tail && phi.size() >= 2) {
    out.limit = phi.back();
    out.converged = true;
    return out;
  }
  if (phi.size() < 3) {
    out.limit = phi.back();
    return out;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int k = 3; k <= 5 && static_cast<std::size_t>(k) <= phi.size(); ++k) {
    out.fits.push_back(fit_tail(t, phi, k));
    lo = std::min(lo, out.fits.back().limit);
    hi = std::max(hi, out.fits.back().limit);
  }
  out.limit = out.fits.front().limit;
  out.spread = hi - lo;
  out.converged = out.fits.size() >= 2 && std::isfinite(out.spread) && out.spread <= tol;
  return out;
}

std::vector<double> geometric_schedule(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ValidationError("geometric_schedule: need 0 < lo < hi and n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  out.back() = hi;
  return out;
}

}  // namespace shelab
