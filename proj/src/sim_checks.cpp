#include <algorithm>
#include <cmath>

#include "shelab/error.hpp"
#include "shelab/sim.hpp"
#include "shelab/streams.hpp"

namespace shelab {

namespace {

struct Stats {
  double mean = 0.0;
  double var = 0.0;
  double se = 0.0;
};

Stats stats(std::span<const double> v) {
  Stats s;
  const double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  for (double x : v) s.var += (x - s.mean) * (x - s.mean);
  s.var /= std::max(n - 1.0, 1.0);
  s.se = std::sqrt(s.var / n);
  return s;
}

Comparison compare(std::string quantity, Stats a, Stats b, double sigma, double max_rel_halfwidth = 0.1) {
  Comparison c;
  c.quantity = std::move(quantity);
  c.left = a.mean;
  c.left_stderr = a.se;
  c.right = b.mean;
  c.right_stderr = b.se;
  const double se = std::sqrt(a.se * a.se + b.se * b.se);
  c.z = se > 0.0 ? std::abs(a.mean - b.mean) / se : (a.mean == b.mean ? 0.0 : INFINITY);
  c.status = c.z <= sigma ? Status::pass : Status::fail;
  const double scale = std::max(std::abs(a.mean), std::abs(b.mean));
  if (c.status == Status::pass && scale > 0.0 && sigma * se > max_rel_halfwidth * scale) c.status = Status::inconclusive;
  return c;
}

}  // namespace

nlohmann::json Comparison::to_json() const {
  return {{"quantity", quantity}, {"left", left},   {"left_stderr", left_stderr},        {"right", right},
          {"right_stderr", right_stderr}, {"z", z}, {"status", std::string(to_string(status))}};
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : comparisons) cj.push_back(c.to_json());
  return {{"check", check}, {"status", std::string(to_string(status))}, {"comparisons", cj}, {"extra", extra}};
}

CheckReport convolution_check(const Profile& profile, const LatticeConfig& config, std::size_t n_replicas,
                              std::uint64_t seed, double sigma, unsigned threads) {
  const Source src = profile;
  const Lattice lat = make_lattice(config, src);
  const LatticeConfig c = lat.config;
  RunOptions lo;
  lo.threads = threads;
  const Ensemble left = run(src, c, n_replicas, streams::derive_seed(seed, 1), lo);
  RunOptions ro;
  ro.threads = threads;
  ro.keep_final_field = true;
  const Ensemble right_nw = run(NarrowWedge{}, c, n_replicas, streams::derive_seed(seed, 2), ro);

  const std::size_t n = lat.size();
  const std::uint64_t f_seed = streams::derive_seed(seed, 3);
  std::vector<double> lhs = left.column(0, 0), rhs(n_replicas);
  std::vector<double> ef;
  if (!profile.brownian()) ef = initial_field(src, lat, 0, 0);
  for (std::size_t r = 0; r < n_replicas; ++r) {
    if (profile.brownian()) ef = initial_field(src, lat, f_seed, static_cast<std::uint32_t>(r));
    const double* z = &right_nw.final_fields[r * n];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += z[i] * ef[i];
    rhs[r] = acc * lat.config.dx;
  }
  std::vector<double> lhs2(lhs.size()), rhs2(rhs.size());
  std::transform(lhs.begin(), lhs.end(), lhs2.begin(), [](double v) { return v * v; });
  std::transform(rhs.begin(), rhs.end(), rhs2.begin(), [](double v) { return v * v; });

  CheckReport rep;
  rep.check = "convolution";
  rep.comparisons.push_back(compare("mean", stats(lhs), stats(rhs), sigma));
  rep.comparisons.push_back(compare("second_moment", stats(lhs2), stats(rhs2), sigma));
  rep.status = Status::pass;
  for (const auto& cmp : rep.comparisons) rep.status = combine(rep.status, cmp.status);
  nlohmann::json required = nlohmann::json::object();
  for (const auto& cmp : rep.comparisons) {
    const double se = std::hypot(cmp.left_stderr, cmp.right_stderr);
    const double target = 0.1 * std::max(std::abs(cmp.left), std::abs(cmp.right)) / sigma;
    if (target > 0.0 && se > target) {
      required[cmp.quantity] = static_cast<std::uint64_t>(std::ceil(static_cast<double>(n_replicas) * (se / target) * (se / target)));
    }
  }
  rep.extra = {{"profile", profile.to_json()}, {"config", c.to_json()}, {"n_replicas", n_replicas}, {"seed", seed},
               {"sigma", sigma}, {"clamp_rate_left", left.clamp_rate()}, {"clamp_rate_right", right_nw.clamp_rate()},
               {"required_replicas", required}};
  return rep;
}

CheckReport stationarity_check(const LatticeConfig& config, std::size_t n_replicas, std::span<const double> x_list,
                               std::uint64_t seed, double sigma, unsigned threads) {
  if (x_list.size() < 2) throw ValidationError("stationarity_check: need at least two x values");
  const Lattice lat = make_lattice(config, NarrowWedge{});
  for (double x : x_list) {
    if (std::abs(x) > 0.5 * lat.config.half_width + 1e-12) {
      throw ValidationError("stationarity_check: x outside the trusted interior |x| <= W/2");
    }
  }
  RunOptions opt;
  opt.sites.assign(x_list.begin(), x_list.end());
  opt.threads = threads;
  const Ensemble e = run(NarrowWedge{}, config, n_replicas, seed, opt);
  const double t = e.times.back();
  const std::size_t m = x_list.size();

  std::vector<std::vector<double>> y(m);
  std::size_t excluded = 0;
  for (std::size_t r = 0; r < n_replicas; ++r) {
    bool ok = true;
    for (std::size_t k = 0; k < m; ++k) ok = ok && e.value(r, 0, k) > 0.0;
    if (!ok) {
      ++excluded;
      continue;
    }
    for (std::size_t k = 0; k < m; ++k) y[k].push_back(std::log(e.value(r, 0, k)) + x_list[k] * x_list[k] / (2.0 * t));
  }
  CheckReport rep;
  rep.check = "stationarity";
  const double excluded_frac = static_cast<double>(excluded) / static_cast<double>(n_replicas);
  if (y[0].size() < 2) {
    rep.status = Status::inconclusive;
    rep.extra = {{"excluded_replicas", excluded}};
    return rep;
  }
  std::vector<Stats> st(m);
  for (std::size_t k = 0; k < m; ++k) st[k] = stats(y[k]);
  const double nn = static_cast<double>(y[0].size());
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      std::vector<double> d(y[a].size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = y[a][i] - y[b][i];
      const Stats sd = stats(d);
      Comparison c;
      c.quantity = "mean(x=" + std::to_string(x_list[a]) + ") - mean(x=" + std::to_string(x_list[b]) + ")";
      c.left = st[a].mean;
      c.left_stderr = st[a].se;
      c.right = st[b].mean;
      c.right_stderr = st[b].se;
      c.z = sd.se > 0.0 ? std::abs(sd.mean) / sd.se : 0.0;
      c.status = c.z <= sigma ? Status::pass : Status::fail;
      rep.comparisons.push_back(c);

      // log variance ratio with a paired delta-method standard error.
      double m4a = 0, m4b = 0, m22 = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double da = (y[a][i] - st[a].mean) * (y[a][i] - st[a].mean);
        const double db = (y[b][i] - st[b].mean) * (y[b][i] - st[b].mean);
        m4a += da * da;
        m4b += db * db;
        m22 += da * db;
      }
      m4a /= nn;
      m4b /= nn;
      m22 /= nn;
      const double va = st[a].var, vb = st[b].var;
      const double var_log = (m4a / (va * va) - 1.0 + m4b / (vb * vb) - 1.0 - 2.0 * (m22 / (va * vb) - 1.0)) / nn;
      Comparison v;
      v.quantity = "variance_ratio(x=" + std::to_string(x_list[a]) + ", x=" + std::to_string(x_list[b]) + ")";
      v.left = va;
      v.right = vb;
      v.left_stderr = std::sqrt(std::max(m4a - va * va, 0.0) / nn);
      v.right_stderr = std::sqrt(std::max(m4b - vb * vb, 0.0) / nn);
      const double se_log = std::sqrt(std::max(var_log, 0.0));
      v.z = se_log > 0.0 ? std::abs(std::log(va / vb)) / se_log : 0.0;
      v.status = v.z <= sigma ? Status::pass : Status::fail;
      rep.comparisons.push_back(v);
    }
  }
  // First moments against the scheme's heat recursion, and the continuum kernel.
  const auto mean_field = mean_oracle(NarrowWedge{}, lat.config, lat.config.t_final);
  nlohmann::json first = nlohmann::json::array();
  for (std::size_t k = 0; k < m; ++k) {
    const auto col = e.column(0, k);
    const Stats s = stats(col);
    const double oracle = mean_field[lat.index_of(x_list[k])];
    const double scale = std::exp(x_list[k] * x_list[k] / (2.0 * t)) * std::sqrt(2.0 * M_PI * t);
    Comparison c;
    c.quantity = "first_moment(x=" + std::to_string(x_list[k]) + ")";
    c.left = s.mean;
    c.left_stderr = s.se;
    c.right = oracle;
    c.z = s.se > 0.0 ? std::abs(s.mean - oracle) / s.se : 0.0;
    c.status = c.z <= sigma ? Status::pass : Status::fail;
    rep.comparisons.push_back(c);
    first.push_back({{"x", x_list[k]}, {"scaled_mc", s.mean * scale}, {"scaled_mc_stderr", s.se * scale},
                     {"scaled_oracle", oracle * scale}});
  }
  rep.status = Status::pass;
  for (const auto& c : rep.comparisons) rep.status = combine(rep.status, c.status);
  if (excluded_frac > 0.01 || e.clamp_rate() > 0.01) rep.status = combine(rep.status, Status::inconclusive);
  rep.extra = {{"config", lat.config.to_json()}, {"n_replicas", n_replicas}, {"seed", seed}, {"t", t},
               {"x", std::vector<double>(x_list.begin(), x_list.end())}, {"excluded_replicas", excluded},
               {"clamp_rate", e.clamp_rate()}, {"sigma", sigma}, {"scaled_first_moments", first}};
  return rep;
}

IncrementTable increment_diagnostic(const LatticeConfig& config, std::size_t n_replicas, double nu, std::uint64_t seed,
                                    std::span<const double> s_grid, unsigned threads) {
  if (config.t_final < 1.0) throw ValidationError("increment_diagnostic: needs t >= 1");
  RunOptions opt;
  opt.keep_final_field = true;
  opt.sites.clear();
  opt.threads = threads;
  const Ensemble e = run(NarrowWedge{}, config, n_replicas, seed, opt);
  const Lattice& lat = e.lattice;
  const double t = lat.config.t_final;
  IncrementTable tab;
  tab.nu = nu;
  tab.window = std::cbrt(t);
  const std::size_t o = lat.n_half;
  const std::size_t last = std::min(lat.size() - 1, o + static_cast<std::size_t>(std::floor(tab.window / lat.config.dx + 1e-9)));
  const std::size_t n = lat.size();
  std::vector<double> sups, infs;
  for (std::size_t r = 0; r < n_replicas; ++r) {
    const double* z = &e.final_fields[r * n];
    bool ok = true;
    for (std::size_t i = o; i <= last; ++i) ok = ok && z[i] > 0.0;
    if (!ok) {
      ++tab.excluded_replicas;
      continue;
    }
    const double h0 = std::log(z[o]);
    double sup = 0.0, inf = 0.0;
    for (std::size_t i = o; i <= last; ++i) {
      const double x = lat.x(i);
      const double dh = std::log(z[i]) - h0;
      sup = std::max(sup, dh - 0.5 * nu * x * x);
      inf = std::min(inf, dh + 0.5 * nu * x * x);
    }
    sups.push_back(sup);
    infs.push_back(inf);
  }
  tab.used_replicas = sups.size();
  for (double s : s_grid) {
    IncrementRow row;
    row.s = s;
    for (double v : sups) row.sup_count += v >= s;
    for (double v : infs) row.inf_count += v <= -s;
    if (tab.used_replicas) {
      row.sup_tail = static_cast<double>(row.sup_count) / tab.used_replicas;
      row.inf_tail = static_cast<double>(row.inf_count) / tab.used_replicas;
    }
    tab.rows.push_back(row);
  }
  return tab;
}

}  // namespace shelab
