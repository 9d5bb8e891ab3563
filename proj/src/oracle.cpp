#include <cmath>

#include "shelab/error.hpp"
#include "shelab/kernels.hpp"
#include "shelab/sim.hpp"

namespace shelab {

namespace {

// E[e^{f(x)}] for Brownian data; deterministic data and the narrow wedge are their own mean.
std::vector<double> initial_mean(const Source& source, const Lattice& lat) {
  if (const auto* prof = std::get_if<Profile>(&source); prof && prof->brownian()) {
    const auto* b = prof->brownian();
    std::vector<double> m(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
      const double x = lat.x(i);
      const double drift = x > 0.0 ? b->a_plus * x : -b->a_minus * x;
      m[i] = std::exp(0.5 * std::abs(x) + drift);
    }
    return m;
  }
  return initial_field(source, lat, 0, 0);
}

}  // namespace

std::vector<double> mean_oracle(const Source& source, const LatticeConfig& config, double t) {
  LatticeConfig c = config;
  c.t_final = t;
  const Lattice lat = make_lattice(c, source);
  std::vector<double> m = initial_mean(source, lat), next(lat.size());
  for (std::size_t k = 0; k < lat.n_steps; ++k) {
    kernels::heat_apply(m, next, lat.r(), lat.periodic());
    m.swap(next);
  }
  return m;
}

SecondMomentOracle second_moment_oracle(const Source& source, const LatticeConfig& config, std::size_t record_every,
                                        std::size_t memory_limit_bytes) {
  if (record_every == 0) throw ValidationError("second_moment_oracle: record_every must be >= 1");
  SecondMomentOracle out;
  out.lattice = make_lattice(config, source);
  const Lattice& lat = out.lattice;
  const std::size_t n = lat.size();
  if (2.0 * 8.0 * static_cast<double>(n) * static_cast<double>(n) > static_cast<double>(memory_limit_bytes)) {
    throw ValidationError("second_moment_oracle: N^2 matrix exceeds the memory limit");
  }
  std::vector<double> c(n * n), tmp(n * n), diag(n);
  const auto* prof = std::get_if<Profile>(&source);
  if (prof && prof->brownian()) {
    const auto* b = prof->brownian();
    std::vector<double> drift(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = lat.x(i);
      drift[i] = x > 0.0 ? b->a_plus * x : -b->a_minus * x;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double xi = lat.x(i), xj = lat.x(j);
        const double cov = (xi > 0.0 && xj > 0.0) || (xi < 0.0 && xj < 0.0) ? std::min(std::abs(xi), std::abs(xj)) : 0.0;
        c[i * n + j] = std::exp(drift[i] + drift[j] + 0.5 * (std::abs(xi) + std::abs(xj) + 2.0 * cov));
      }
    }
  } else {
    const auto z = initial_field(source, lat, 0, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] = z[i] * z[j];
    }
  }
  const auto& kt = kernels::active();
  const double r = lat.r();
  const double inject = lat.config.dt / lat.config.dx;
  const std::size_t o = lat.n_half;
  out.times.push_back(0.0);
  out.c_origin.push_back(c[o * n + o]);
  for (std::size_t k = 0; k < lat.n_steps; ++k) {
    kt.heat_rows(c.data(), tmp.data(), n, n, r, lat.periodic());
    for (std::size_t i = 0; i < n; ++i) diag[i] = c[i * n + i];
    kt.heat_cols(tmp.data(), c.data(), n, n, r, lat.periodic());
    for (std::size_t i = 0; i < n; ++i) c[i * n + i] += inject * diag[i];
    if ((k + 1) % record_every == 0 || k + 1 == lat.n_steps) {
      out.times.push_back(static_cast<double>(k + 1) * lat.config.dt);
      out.c_origin.push_back(c[o * n + o]);
    }
  }
  out.final_matrix = std::move(c);
  return out;
}

nlohmann::json SlopeFit::to_json() const {
  nlohmann::json j{{"slope", slope}, {"stderr", std_error}, {"intercept", intercept}, {"n_points", n_points}};
  if (target) j["target"] = *target;
  return j;
}

SlopeFit lyapunov_slope_fit(std::span<const double> t, std::span<const double> y, double t_lo, double t_hi,
                            std::span<const double> sigma, std::optional<double> target) {
  if (t.size() != y.size() || (!sigma.empty() && sigma.size() != t.size())) {
    throw ValidationError("lyapunov_slope_fit: size mismatch");
  }
  std::vector<double> tw, yw, ww;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo - 1e-12 || t[i] > t_hi + 1e-12) continue;
    tw.push_back(t[i]);
    yw.push_back(y[i]);
    if (!sigma.empty() && !(sigma[i] > 0.0)) throw ValidationError("lyapunov_slope_fit: sigma must be > 0");
    ww.push_back(sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]));
  }
  if (tw.size() < 4) throw ValidationError("lyapunov_slope_fit: need at least 4 points in the window");
  double sw = 0, st = 0, sy = 0;
  for (std::size_t i = 0; i < tw.size(); ++i) {
    sw += ww[i];
    st += ww[i] * tw[i];
    sy += ww[i] * yw[i];
  }
  const double mt = st / sw, my = sy / sw;
  double stt = 0, sty = 0;
  for (std::size_t i = 0; i < tw.size(); ++i) {
    stt += ww[i] * (tw[i] - mt) * (tw[i] - mt);
    sty += ww[i] * (tw[i] - mt) * (yw[i] - my);
  }
  if (!(stt > 0.0)) throw ValidationError("lyapunov_slope_fit: degenerate time window");
  SlopeFit f;
  f.slope = sty / stt;
  f.intercept = my - f.slope * mt;
  f.n_points = tw.size();
  f.target = target;
  if (sigma.empty()) {
    double sse = 0;
    for (std::size_t i = 0; i < tw.size(); ++i) {
      const double r = yw[i] - (f.intercept + f.slope * tw[i]);
      sse += r * r;
    }
    f.std_error = std::sqrt(sse / static_cast<double>(tw.size() - 2) / stt);
  } else {
    f.std_error = std::sqrt(1.0 / stt);
  }
  return f;
}

}  // namespace shelab
