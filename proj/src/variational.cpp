#include "shelab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shelab/error.hpp"

namespace shelab {

namespace {

constexpr int kMeshPoints = 4096;
constexpr double kInvGolden = 0.6180339887498949;

void check_args(const Profile& profile, double p, double t) {
  if (!(p > 0.0)) throw ValidationError("sup_phi: p must be > 0");
  if (!(t > 0.0)) throw ValidationError("sup_phi: t must be > 0");
  if (profile.envelope(p).alpha >= 1.0) throw ValidationError("sup_phi: growth alpha >= 1, the sup may be infinite");
}

// Denser near 0, where power-law cusps sit.
std::vector<double> search_mesh(double w) {
  std::vector<double> x(kMeshPoints + 1);
  for (int i = 0; i <= kMeshPoints; ++i) {
    const double u = -1.0 + 2.0 * static_cast<double>(i) / kMeshPoints;
    x[static_cast<std::size_t>(i)] = w * u * std::abs(u);
  }
  return x;
}

template <class F>
double golden_max(F&& f, double lo, double hi, double& fbest) {
  double c = hi - kInvGolden * (hi - lo), d = lo + kInvGolden * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200; ++it) {
    if (hi - lo <= 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi))) break;
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvGolden * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvGolden * (hi - lo);
      fd = f(d);
    }
  }
  if (fc > fd) {
    fbest = fc;
    return c;
  }
  fbest = fd;
  return d;
}

struct Peak {
  double x;
  double value;
};

// Every refined local maximum of phi on the mesh.
std::vector<Peak> local_peaks(const Profile& profile, double p, double t, const std::vector<double>& x) {
  auto phi = [&](double y) { return sup_objective(profile, p, t, y); };
  std::vector<double> f(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) f[i] = phi(x[i]);
  std::vector<Peak> peaks;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || f[i] >= f[i - 1];
    const bool right_ok = i + 1 == n || f[i] >= f[i + 1];
    if (!left_ok || !right_ok) continue;
    // Skip the interior of flat runs.
    if (i > 0 && f[i] == f[i - 1]) continue;
    const double lo = x[i == 0 ? 0 : i - 1];
    const double hi = x[i + 1 == n ? n - 1 : i + 1];
    double fr = 0.0;
    const double xr = golden_max(phi, lo, hi, fr);
    peaks.push_back(fr > f[i] ? Peak{xr, fr} : Peak{x[i], f[i]});
  }
  // phi(0) matters for cusps at the origin.
  peaks.push_back({0.0, phi(0.0)});
  return peaks;
}

}  // namespace

double sup_objective(const Profile& profile, double p, double t, double x) {
  return -p * x * x / (2.0 * t) + log_mgf(profile, p, t, x);
}

double search_half_width(const Profile& profile, double p, double t) {
  const GrowthEnvelope env = profile.envelope(p);
  const double k = p * (1.0 - env.alpha) / t;  // phi(x) <= offset + slope |x| - k x^2 / 2
  const double gap = std::max(0.0, env.offset - sup_objective(profile, p, t, 0.0));
  const double root = (env.slope + std::sqrt(env.slope * env.slope + 2.0 * k * gap)) / k;
  return std::max({10.0, 4.0 * env.slope / k, root});
}

SupResult sup_phi(const Profile& profile, double p, double t) {
  check_args(profile, p, t);
  SupResult r;
  r.p = p;
  r.t = t;
  const double w = search_half_width(profile, p, t);
  r.bracket_lo = -w;
  r.bracket_hi = w;
  if (const auto* b = profile.brownian()) {
    const double m = std::max(0.5 * p + b->a(), 0.0);
    r.value = t * (0.5 * p * m * m);
    r.closed_form = true;
    if (m > 0.0) r.argmax = b->a_plus >= b->a_minus ? t * (0.5 * p + b->a_plus) : -t * (0.5 * p + b->a_minus);
    return r;
  }
  const auto peaks = local_peaks(profile, p, t, search_mesh(w));
  Peak best{0.0, -std::numeric_limits<double>::infinity()};
  for (const auto& pk : peaks) {
    const bool better = pk.value > best.value ||
                        (pk.value == best.value && (std::abs(pk.x) < std::abs(best.x) ||
                                                    (std::abs(pk.x) == std::abs(best.x) && pk.x > best.x)));
    if (better) best = pk;
  }
  r.value = best.value;
  r.argmax = best.x;
  return r;
}

GEstimate g_estimate(const Profile& profile, double p, std::span<const double> t_schedule, double tol) {
  if (t_schedule.empty()) throw ValidationError("g_estimate: empty t schedule");
  GEstimate out;
  for (double t : t_schedule) {
    const SupResult s = sup_phi(profile, p, t);
    out.t.push_back(t);
    out.phi.push_back(s.value / t);
  }
  if (profile.brownian()) {
    out.g = out.phi.back();
    out.exact = true;
    out.converged = true;
    out.extrapolation.limit = out.g;
    out.extrapolation.converged = true;
    return out;
  }
  out.extrapolation = extrapolate_limit(out.t, out.phi, tol);
  out.g = out.extrapolation.limit;
  out.converged = out.extrapolation.converged;
  return out;
}

MaxSet max_set(const Profile& profile, double p, double omega, double t) {
  if (!(omega > 0.0)) throw ValidationError("max_set: omega must be > 0");
  check_args(profile, p, t);
  auto phi = [&](double y) { return sup_objective(profile, p, t, y); };
  const SupResult s = sup_phi(profile, p, t);
  const double w = std::max({search_half_width(profile, p, t), 2.0 * std::abs(s.argmax), 10.0});
  const auto mesh = search_mesh(w);
  auto peaks = local_peaks(profile, p, t, mesh);
  if (s.closed_form) {
    peaks.push_back({s.argmax, phi(s.argmax)});
    if (const auto* b = profile.brownian(); b && s.argmax != 0.0) {
      // The other side's vertex may tie.
      const double other = s.argmax > 0.0 ? -t * (0.5 * p + b->a_minus) : t * (0.5 * p + b->a_plus);
      if ((s.argmax > 0.0) == (other < 0.0)) peaks.push_back({other, phi(other)});
    }
  }
  MaxSet out;
  out.t = t;
  out.omega = omega;
  out.sup = s.value;
  for (const auto& pk : peaks) out.sup = std::max(out.sup, pk.value);
  const double level = out.sup - omega;

  auto boundary = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      (phi(mid) >= level ? inside : outside) = mid;
    }
    return inside;
  };

  for (const auto& pk : peaks) {
    if (pk.value < level) continue;
    double hi = pk.x;
    for (auto it = std::upper_bound(mesh.begin(), mesh.end(), pk.x); it != mesh.end(); ++it) {
      if (phi(*it) < level) {
        hi = boundary(hi, *it);
        break;
      }
      hi = *it;
    }
    double lo = pk.x;
    for (auto it = std::lower_bound(mesh.begin(), mesh.end(), pk.x); it != mesh.begin();) {
      --it;
      if (phi(*it) < level) {
        lo = boundary(lo, *it);
        break;
      }
      lo = *it;
    }
    out.intervals.emplace_back(lo, hi);
  }
  std::sort(out.intervals.begin(), out.intervals.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : out.intervals) {
    if (!merged.empty() && iv.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, iv.second);
    } else {
      merged.push_back(iv);
    }
  }
  out.intervals = std::move(merged);
  if (!out.intervals.empty()) {
    const double neg = out.intervals.front().first;
    const double pos = out.intervals.back().second;
    const double scale = std::max(1.0, std::max(std::abs(neg), std::abs(pos)));
    if (pos >= 0.0 && std::abs(pos) >= std::abs(neg) - 1e-12 * scale) {
      out.x_extreme = pos;
    } else {
      out.x_extreme = std::abs(pos) > std::abs(neg) ? pos : neg;
    }
  }
  return out;
}

ConvexityReport check_g_convexity(std::span<const double> p, std::span<const double> g, double tol) {
  if (p.size() != g.size() || p.size() < 3) throw ValidationError("check_g_convexity: need >= 3 (p, g) samples");
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (!(p[i] > p[i - 1])) throw ValidationError("check_g_convexity: p grid must be increasing");
  }
  ConvexityReport r;
  r.min_second_difference = std::numeric_limits<double>::infinity();
  r.min_value = *std::min_element(g.begin(), g.end());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < -tol) r.negative_at.push_back(i);
  }
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const double left = (g[i] - g[i - 1]) / (p[i] - p[i - 1]);
    const double right = (g[i + 1] - g[i]) / (p[i + 1] - p[i]);
    const double d2 = 2.0 * (right - left) / (p[i + 1] - p[i - 1]);
    r.min_second_difference = std::min(r.min_second_difference, d2);
    if (d2 < -tol) r.nonconvex_at.push_back(i);
  }
  r.pass = r.nonconvex_at.empty() && r.negative_at.empty();
  return r;
}

nlohmann::json SupResult::to_json() const {
  return {{"value", value}, {"argmax", argmax}, {"bracket", {bracket_lo, bracket_hi}},
          {"p", p}, {"t", t}, {"closed_form", closed_form}};
}

nlohmann::json GEstimate::to_json() const {
  return {{"g", g}, {"converged", converged}, {"exact", exact}, {"t", t}, {"phi", phi},
          {"extrapolation", extrapolation.to_json()}};
}

nlohmann::json MaxSet::to_json() const {
  nlohmann::json iv = nlohmann::json::array();
  for (const auto& [a, b] : intervals) iv.push_back({a, b});
  return {{"intervals", iv}, {"x_extreme", x_extreme}, {"sup", sup}, {"omega", omega}, {"t", t}};
}

nlohmann::json ConvexityReport::to_json() const {
  return {{"pass", pass}, {"min_second_difference", min_second_difference}, {"min_value", min_value},
          {"nonconvex_at", nonconvex_at}, {"negative_at", negative_at}};
}

}  // namespace shelab
