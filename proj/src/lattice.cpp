#include <algorithm>
#include <cmath>
#include <limits>

#include "shelab/error.hpp"
#include "shelab/kernels.hpp"
#include "shelab/parallel.hpp"
#include "shelab/sim.hpp"
#include "shelab/streams.hpp"

namespace shelab {

std::string_view to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "dirichlet_zero"; }

Boundary boundary_from_string(std::string_view s) {
  if (s == "dirichlet_zero" || s == "dirichlet") return Boundary::dirichlet_zero;
  if (s == "periodic") return Boundary::periodic;
  throw ValidationError("unknown boundary '" + std::string(s) + "'");
}

nlohmann::json LatticeConfig::to_json() const {
  return {{"dx", dx}, {"dt", dt}, {"half_width", half_width}, {"boundary", std::string(to_string(boundary))},
          {"t_final", t_final}};
}

LatticeConfig LatticeConfig::from_json(const nlohmann::json& j) {
  LatticeConfig c;
  c.dx = j.value("dx", c.dx);
  c.dt = j.value("dt", c.dt);
  c.half_width = j.value("half_width", c.half_width);
  c.boundary = boundary_from_string(j.value("boundary", std::string("dirichlet_zero")));
  c.t_final = j.value("t_final", c.t_final);
  return c;
}

std::string source_name(const Source& s) {
  if (std::holds_alternative<NarrowWedge>(s)) return "narrow_wedge";
  return std::get<Profile>(s).name();
}

nlohmann::json source_to_json(const Source& s) {
  if (std::holds_alternative<NarrowWedge>(s)) return {{"kind", "narrow_wedge"}};
  return std::get<Profile>(s).to_json();
}

double Lattice::x(std::size_t i) const {
  return (static_cast<double>(i) - static_cast<double>(n_half)) * config.dx;
}

std::size_t Lattice::index_of(double xv) const {
  const double k = std::round(xv / config.dx);
  if (std::abs(k * config.dx - xv) > 1e-9 * std::max(1.0, std::abs(xv)) || std::abs(k) > static_cast<double>(n_half)) {
    throw ValidationError("x = " + std::to_string(xv) + " is not a lattice site");
  }
  return static_cast<std::size_t>(static_cast<long long>(k) + static_cast<long long>(n_half));
}

std::size_t Lattice::step_of(double t) const {
  const double k = std::round(t / config.dt);
  if (t < 0.0 || k > static_cast<double>(n_steps)) throw ValidationError("time outside [0, t_final]");
  return static_cast<std::size_t>(k);
}

double Lattice::noise_scale() const { return std::sqrt(config.dt / config.dx); }

Lattice make_lattice(const LatticeConfig& config, const Source& source) {
  LatticeConfig c = config;
  if (!(c.dx > 0.0) || !std::isfinite(c.dx)) throw ValidationError("lattice: dx must be > 0");
  if (!(c.t_final > 0.0) || !std::isfinite(c.t_final)) throw ValidationError("lattice: t must be > 0");
  if (c.dt == 0.0) c.dt = 0.25 * c.dx * c.dx;
  if (!(c.dt > 0.0)) throw ValidationError("lattice: dt must be > 0");
  if (c.dt > 0.5 * c.dx * c.dx * (1.0 + 1e-12)) throw ValidationError("lattice: dt > dx^2/2 violates explicit-scheme stability");
  if (std::holds_alternative<NarrowWedge>(source) && c.t_final < 10.0 * c.dt) {
    throw ValidationError("lattice: narrow wedge needs t >= 10 dt");
  }
  if (c.half_width == 0.0) {
    double drift = 0.0;
    if (const auto* p = std::get_if<Profile>(&source); p && p->brownian()) {
      drift = std::max(std::abs(p->brownian()->a_plus), std::abs(p->brownian()->a_minus));
    }
    c.half_width = 6.0 * std::sqrt(c.t_final) + c.t_final * drift;
  }
  if (!(c.half_width >= c.dx)) throw ValidationError("lattice: half width must be at least dx");
  Lattice lat;
  const auto steps = static_cast<std::size_t>(std::ceil(c.t_final / c.dt - 1e-9));
  c.dt = c.t_final / static_cast<double>(steps);
  lat.n_steps = steps;
  lat.n_half = static_cast<std::size_t>(std::ceil(c.half_width / c.dx - 1e-9));
  c.half_width = static_cast<double>(lat.n_half) * c.dx;
  lat.config = c;
  return lat;
}

std::vector<double> initial_field(const Source& source, const Lattice& lat, std::uint64_t seed, std::uint32_t replica) {
  const std::size_t n = lat.size();
  std::vector<double> z(n, 0.0);
  if (std::holds_alternative<NarrowWedge>(source)) {
    z[lat.n_half] = 1.0 / lat.config.dx;
    return z;
  }
  const Profile& prof = std::get<Profile>(source);
  if (const auto* law = prof.brownian()) {
    std::vector<double> mesh(n);
    for (std::size_t i = 0; i < n; ++i) mesh[i] = lat.x(i);
    const auto f = sample_brownian_path(*law, mesh, seed, replica);
    for (std::size_t i = 0; i < n; ++i) z[i] = std::exp(f[i]);
    return z;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = std::exp(prof.value(lat.config.t_final, lat.x(i)));
  return z;
}

std::size_t step(std::span<const double> z, std::span<const double> noise, std::span<double> out, const Lattice& lat) {
  return kernels::heat_noise_step(z, noise, out, lat.r(), lat.noise_scale(), lat.periodic());
}

std::vector<double> Ensemble::column(std::size_t time, std::size_t site) const {
  std::vector<double> c(n_replicas);
  for (std::size_t r = 0; r < n_replicas; ++r) c[r] = value(r, time, site);
  return c;
}

nlohmann::json Ensemble::header() const {
  return {{"format", "shelab.ensemble"},
          {"version", 1},
          {"config", lattice.config.to_json()},
          {"n_sites", lattice.size()},
          {"n_steps", lattice.n_steps},
          {"source", source},
          {"seed", seed},
          {"n_replicas", n_replicas},
          {"times", times},
          {"sites", sites},
          {"has_final_fields", !final_fields.empty()},
          {"clamped", clamped},
          {"site_updates", site_updates}};
}

Ensemble run(const Source& source, const LatticeConfig& config, std::size_t n_replicas, std::uint64_t seed,
             const RunOptions& options) {
  if (n_replicas == 0) throw ValidationError("run: need at least one replica");
  if (n_replicas > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("run: too many replicas");
  Ensemble e;
  e.lattice = make_lattice(config, source);
  const Lattice& lat = e.lattice;
  e.source = source_to_json(source);
  e.seed = seed;
  e.n_replicas = n_replicas;
  e.sites = options.sites;
  std::vector<std::size_t> site_idx;
  for (double x : e.sites) site_idx.push_back(lat.index_of(x));
  std::vector<double> snaps = options.snapshot_times.empty() ? std::vector<double>{lat.config.t_final} : options.snapshot_times;
  std::vector<std::size_t> snap_steps;
  for (double t : snaps) snap_steps.push_back(lat.step_of(t));
  if (!std::is_sorted(snap_steps.begin(), snap_steps.end())) throw ValidationError("run: snapshot times must be sorted");
  for (std::size_t k : snap_steps) e.times.push_back(static_cast<double>(k) * lat.config.dt);

  const std::size_t n = lat.size();
  const double record_bytes = 8.0 * static_cast<double>(n_replicas) *
                              (static_cast<double>(e.times.size() * e.sites.size()) + (options.keep_final_field ? n : 0));
  if (record_bytes > static_cast<double>(options.memory_limit_bytes)) {
    throw ValidationError("run: ensemble needs " + std::to_string(record_bytes / 1e9) + " GB, above the memory limit");
  }
  e.values.assign(n_replicas * e.times.size() * e.sites.size(), 0.0);
  if (options.keep_final_field) e.final_fields.assign(n_replicas * n, 0.0);

  constexpr std::size_t kBlock = 64;
  const std::size_t n_blocks = (n_replicas + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> block_clamps(n_blocks, 0);
  const kernels::KernelTable& kt = kernels::active();
  const double r = lat.r(), s = lat.noise_scale();
  const bool periodic = lat.periodic();

  parallel_blocks(n_blocks, options.threads, [&](std::size_t b) {
    std::vector<double> z, next(n), noise(n, 0.0);
    std::uint64_t clamps = 0;
    const std::size_t end = std::min(n_replicas, (b + 1) * kBlock);
    for (std::size_t rep = b * kBlock; rep < end; ++rep) {
      const auto rid = static_cast<std::uint32_t>(rep);
      z = initial_field(source, lat, seed, rid);
      const kernels::StreamKey key{seed, rid, streams::kLatticeNoise};
      std::size_t snap = 0;
      auto record = [&](std::size_t k) {
        while (snap < snap_steps.size() && snap_steps[snap] == k) {
          double* dst = &e.values[(rep * e.times.size() + snap) * e.sites.size()];
          for (std::size_t j = 0; j < site_idx.size(); ++j) dst[j] = z[site_idx[j]];
          ++snap;
        }
      };
      record(0);
      for (std::size_t k = 0; k < lat.n_steps; ++k) {
        if (!options.zero_noise) kt.gaussian_fill(key, static_cast<std::uint32_t>(k), noise.data(), n);
        clamps += kt.heat_noise_step(z.data(), noise.data(), next.data(), n, r, s, periodic);
        z.swap(next);
        record(k + 1);
      }
      if (options.keep_final_field) std::copy(z.begin(), z.end(), e.final_fields.begin() + static_cast<std::ptrdiff_t>(rep * n));
    }
    block_clamps[b] = clamps;
  });
  for (auto c : block_clamps) e.clamped += c;
  e.site_updates = static_cast<std::uint64_t>(n_replicas) * lat.n_steps * n;
  return e;
}

nlohmann::json MomentEstimate::to_json() const {
  return {{"p", p}, {"t", t}, {"mean", mean}, {"stderr", std_error}, {"n_replicas", n_replicas}, {"seed", seed},
          {"log_mean", log_mean}, {"rate", rate}, {"rate_stderr", rate_stderr}};
}

MomentEstimate estimate_moment(std::span<const double> z, double p, double t, std::uint64_t seed) {
  if (z.empty()) throw ValidationError("estimate_moment: empty ensemble");
  if (!(p > 0.0)) throw ValidationError("estimate_moment: p must be > 0");
  MomentEstimate m;
  m.p = p;
  m.t = t;
  m.seed = seed;
  m.n_replicas = z.size();
  auto pw = [p](double v) { return v > 0.0 ? (p == 1.0 ? v : p == 2.0 ? v * v : std::pow(v, p)) : 0.0; };
  double sum = 0.0;
  bool any = false;
  for (double v : z) {
    sum += pw(v);
    any = any || v > 0.0;
  }
  if (!any) throw ValidationError("estimate_moment: all-zero ensemble");
  const double n = static_cast<double>(z.size());
  m.mean = sum / n;
  double ss = 0.0;
  for (double v : z) {
    const double d = pw(v) - m.mean;
    ss += d * d;
  }
  m.std_error = z.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  m.log_mean = std::log(m.mean);
  if (t > 0.0) {
    m.rate = m.log_mean / t;
    m.rate_stderr = m.std_error / (m.mean * t);
  }
  return m;
}

}  // namespace shelab
