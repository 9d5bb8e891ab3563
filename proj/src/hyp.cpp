#include "shelab/hyp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "shelab/error.hpp"
#include "shelab/extrapolate.hpp"
#include "shelab/parallel.hpp"
#include "shelab/variational.hpp"

namespace shelab {

namespace {

constexpr double kTruncation = 40.0;

double log_add_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double upper_tail_normal(double u) { return 0.5 * std::erfc(u / std::sqrt(2.0)); }

// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson(std::uint64_t k, std::uint64_t n, double z) {
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (ph + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<double> default_x_mesh() {
  std::vector<double> x;
  for (int i = -2000; i <= 2000; ++i) x.push_back(0.025 * i);
  for (double r = 60.0; r <= 1e5; r *= 1.1) {
    x.push_back(r);
    x.push_back(-r);
  }
  std::sort(x.begin(), x.end());
  return x;
}

HypEntry entry(std::string condition, Status status, nlohmann::json witness) {
  return {std::move(condition), status, std::move(witness)};
}

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
  }
  return "unknown";
}

Status combine(Status a, Status b) {
  if (a == Status::fail || b == Status::fail) return Status::fail;
  if (a == Status::inconclusive || b == Status::inconclusive) return Status::inconclusive;
  return Status::pass;
}

nlohmann::json HypEntry::to_json() const {
  return {{"condition", condition}, {"status", std::string(to_string(status))}, {"witness", witness}};
}

double tv_statistic(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v - values.front()));
  return m;
}

Tolerances Tolerances::from_env() {
  Tolerances t;
  auto read = [](const char* name, double& out) {
    if (const char* v = std::getenv(name)) {
      char* end = nullptr;
      const double x = std::strtod(v, &end);
      if (end == v || *end != '\0' || !(x > 0.0)) throw ValidationError(std::string(name) + " must be a positive number");
      out = x;
    }
  };
  read("SHELAB_TOL_LIMIT", t.limit);
  read("SHELAB_TOL_SIGMA", t.sigma);
  return t;
}

nlohmann::json Tolerances::to_json() const { return {{"limit", limit}, {"sigma", sigma}}; }

GrowthConstants default_growth_constants(const Profile& profile, double p) {
  const GrowthEnvelope env = profile.envelope(p);
  GrowthConstants k;
  k.c = std::max({2.0, std::exp(env.offset), env.slope + 1.0});
  k.alpha = env.alpha > 0.0 ? 0.5 * (1.0 + env.alpha) : 0.5;
  return k;
}

HypEntry verify_growth(const Profile& profile, double p, std::span<const double> t_list, std::span<const double> x_mesh,
                       GrowthConstants k) {
  if (!(k.alpha > 0.0 && k.alpha < 1.0)) throw ValidationError("verify_growth: alpha must lie in (0,1)");
  if (!(k.c > 0.0)) throw ValidationError("verify_growth: C must be > 0");
  double worst_margin = std::numeric_limits<double>::infinity();
  nlohmann::json offenders = nlohmann::json::array();
  for (double t : t_list) {
    for (double x : x_mesh) {
      const double lhs = log_mgf(profile, p, t, x);
      const double rhs = std::log(k.c) + log_add_exp(k.c * std::abs(x), k.alpha * p * x * x / (2.0 * t));
      const double margin = rhs - lhs;
      worst_margin = std::min(worst_margin, margin);
      if (margin < 0.0 && offenders.size() < 20) offenders.push_back({{"t", t}, {"x", x}, {"log_lhs", lhs}, {"log_rhs", rhs}});
    }
  }
  const Status st = offenders.empty() ? Status::pass : Status::fail;
  return entry("growth", st,
               {{"p", p}, {"C", k.c}, {"alpha", k.alpha}, {"t", t_list}, {"x_range", {x_mesh.front(), x_mesh.back()}},
                {"x_points", x_mesh.size()}, {"min_log_margin", worst_margin}, {"violations", offenders}});
}

HypEntry verify_lower_bound(const Profile& profile, double p, std::span<const double> t_list, double big_l,
                            double big_k) {
  if (!(big_l > 0.0) || !(big_k > 0.0)) throw ValidationError("verify_lower_bound: L and K must be > 0");
  Status st = Status::pass;
  nlohmann::json rows = nlohmann::json::array();
  for (double t : t_list) {
    double best = -std::numeric_limits<double>::infinity(), best_x = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = -big_l + 2.0 * big_l * i / 1000.0;
      const double v = log_mgf(profile, p, t, x);
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
    if (!(best > -big_k)) st = Status::fail;
    rows.push_back({{"t", t}, {"sup", best}, {"argsup", best_x}});
  }
  return entry("lower_bound", st, {{"p", p}, {"L", big_l}, {"K", big_k}, {"per_t", rows}});
}

HypEntry verify_pseudo_stationarity(const Profile& profile, const PseudoStationarityOptions& opt) {
  const GridPoints grid = opt.grid ? *opt.grid : default_grid(profile);
  const double s0 = opt.s0 ? *opt.s0 : profile.default_s0();
  nlohmann::json w{{"grid", grid.label}, {"c", grid.c}, {"beta", grid.beta}, {"s0", s0},
                   {"s0_is_default", !opt.s0.has_value()}};

  if (const auto* law = profile.brownian()) {
    const GridReport gr = check_grid_axioms(grid, opt.random_n_min, opt.random_n_max + 1);
    if (!gr.pass) throw ValidationError("verify_pseudo_stationarity: grid violates the grid-point axioms");
    if (opt.n_samples == 0 || opt.steps_per_cell < 1) throw ValidationError("verify_pseudo_stationarity: empty sample");
    const long long n_cells = opt.random_n_max - opt.random_n_min + 1;
    const auto steps = static_cast<std::size_t>(opt.steps_per_cell);
    std::vector<double> mesh;
    for (long long n = opt.random_n_min; n <= opt.random_n_max; ++n) {
      const double a = grid(n), b = grid(n + 1);
      for (std::size_t j = 0; j < steps; ++j) mesh.push_back(a + (b - a) * static_cast<double>(j) / steps);
    }
    mesh.push_back(grid(opt.random_n_max + 1));
    std::vector<double> s_list;
    for (double off : opt.s_offsets) s_list.push_back(s0 + off);
    const double a_abs = std::max(std::abs(law->a_plus), std::abs(law->a_minus));

    constexpr std::uint64_t kBlock = 1024;
    const std::uint64_t n_blocks = (opt.n_samples + kBlock - 1) / kBlock;
    const std::size_t n_counts = static_cast<std::size_t>(n_cells) * s_list.size();
    std::vector<std::vector<std::uint64_t>> counts(n_blocks, std::vector<std::uint64_t>(n_counts, 0));
    parallel_blocks(n_blocks, opt.threads, [&](std::size_t b) {
      const std::uint64_t end = std::min(opt.n_samples, (b + 1) * kBlock);
      for (std::uint64_t i = b * kBlock; i < end; ++i) {
        const auto path = sample_brownian_path(*law, mesh, opt.seed, static_cast<std::uint32_t>(i));
        for (long long c = 0; c < n_cells; ++c) {
          const auto cell = std::span<const double>(path).subspan(static_cast<std::size_t>(c) * steps, steps + 1);
          const double tv = tv_statistic(cell);
          for (std::size_t k = 0; k < s_list.size(); ++k) {
            if (tv >= s_list[k]) ++counts[b][static_cast<std::size_t>(c) * s_list.size() + k];
          }
        }
      }
    });

    Status st = Status::pass;
    nlohmann::json rows = nlohmann::json::array();
    for (long long c = 0; c < n_cells; ++c) {
      for (std::size_t k = 0; k < s_list.size(); ++k) {
        std::uint64_t hits = 0;
        for (const auto& blk : counts) hits += blk[static_cast<std::size_t>(c) * s_list.size() + k];
        // Reflection principle: P(sup_[0,1] |B| >= u) <= 4 P(N(0,1) >= u), shifted by the drift.
        const double bound = std::min(1.0, 4.0 * upper_tail_normal(s_list[k] - a_abs));
        const auto [lo, hi] = wilson(hits, opt.n_samples, opt.sigma);
        Status cell_st = Status::inconclusive;
        if (hi <= bound) cell_st = Status::pass;
        if (lo > bound) cell_st = Status::fail;
        st = combine(st, cell_st);
        rows.push_back({{"n", opt.random_n_min + c}, {"s", s_list[k]}, {"hits", hits},
                        {"p_hat", static_cast<double>(hits) / static_cast<double>(opt.n_samples)},
                        {"ci", {lo, hi}}, {"bound", bound}, {"status", std::string(to_string(cell_st))}});
      }
    }
    w["mode"] = "monte_carlo";
    w["n_samples"] = opt.n_samples;
    w["steps_per_cell"] = opt.steps_per_cell;
    w["seed"] = opt.seed;
    w["delta"] = 1.0;
    w["bound"] = "4*P(N(0,1) >= s - max(|a_plus|,|a_minus|))";
    w["tails"] = rows;
    return entry("pseudo_stationarity", st, w);
  }

  const GridReport gr = check_grid_axioms(grid, opt.n_min, opt.n_max + 1);
  if (!gr.pass) throw ValidationError("verify_pseudo_stationarity: grid violates the grid-point axioms");
  if (opt.points_per_cell < 1) throw ValidationError("verify_pseudo_stationarity: points_per_cell must be >= 1");
  Status st = Status::pass;
  nlohmann::json rows = nlohmann::json::array();
  for (double t : opt.t_list) {
    double worst = 0.0;
    long long worst_n = opt.n_min;
    for (long long n = opt.n_min; n <= opt.n_max; ++n) {
      const double a = grid(n), b = grid(n + 1);
      const double fa = profile.value(t, a);
      double dev = 0.0;
      for (int j = 1; j <= opt.points_per_cell + 1; ++j) {
        const double x = j == opt.points_per_cell + 1 ? b : a + (b - a) * j / (opt.points_per_cell + 1.0);
        dev = std::max(dev, std::abs(profile.value(t, x) - fa));
      }
      if (dev > worst) {
        worst = dev;
        worst_n = n;
      }
    }
    if (worst > s0) st = Status::fail;
    rows.push_back({{"t", t}, {"max_deviation", worst}, {"at_n", worst_n}});
  }
  w["mode"] = "dense_sampling";
  w["n_range"] = {opt.n_min, opt.n_max};
  w["points_per_cell"] = opt.points_per_cell;
  w["per_t"] = rows;
  return entry("pseudo_stationarity", st, w);
}

HypEntry verify_coherence_limit(const Profile& profile, double p, double g_claimed, std::span<const double> t_schedule,
                                double tol) {
  const GEstimate est = g_estimate(profile, p, t_schedule, tol);
  Status st = Status::inconclusive;
  if (est.converged) st = std::abs(est.g - g_claimed) <= tol ? Status::pass : Status::fail;
  return entry("coherence_limit", st,
               {{"p", p}, {"g_claimed", g_claimed}, {"tolerance", tol}, {"estimate", est.to_json()}});
}

double integral_rate(const Profile& profile, double p, double eps, double t) {
  if (!(p > 0.0) || !(t > 0.0)) throw ValidationError("integral_rate: p and t must be > 0");
  if (!(eps >= 0.0 && eps < 1.0)) throw ValidationError("integral_rate: eps must lie in [0,1)");
  const double q = p * (1.0 + eps);
  const GrowthEnvelope env = profile.envelope(q);
  const double k = (p * (1.0 - eps) - env.alpha * q) / t;
  if (!(k > 0.0)) throw ValidationError("integral_rate: integrand is not Gaussian-dominated for this eps");
  auto psi = [&](double x) { return -p * (1.0 - eps) * x * x / (2.0 * t) + log_mgf(profile, q, t, x); };

  // Coarse peak search over a window that provably holds the maximiser.
  const double psi0 = psi(0.0);
  const double gap0 = std::max(0.0, env.offset - psi0);
  const double w = std::max(10.0, (env.slope + std::sqrt(env.slope * env.slope + 2.0 * k * gap0)) / k);
  double x_pk = 0.0, m = psi0;
  constexpr int kMesh = 4096;
  for (int i = 0; i <= kMesh; ++i) {
    const double u = -1.0 + 2.0 * i / kMesh;
    const double x = w * u * std::abs(u);
    const double v = psi(x);
    if (v > m) {
      m = v;
      x_pk = x;
    }
  }
  {
    const double h = 2.0 * w * 2.0 / kMesh;
    double lo = x_pk - h, hi = x_pk + h;
    const double r = 0.6180339887498949;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(x_pk)); ++it) {
      const double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
      (psi(c) > psi(d) ? hi : lo) = psi(c) > psi(d) ? d : c;
    }
    const double xr = 0.5 * (lo + hi);
    if (psi(xr) > m) {
      m = psi(xr);
      x_pk = xr;
    }
  }
  // Beyond R the envelope is below m - 40.
  const double gap = std::max(0.0, env.offset - m + kTruncation);
  const double big_r = (env.slope + std::sqrt(env.slope * env.slope + 2.0 * k * gap)) / k + std::abs(x_pk);

  auto f = [&](double x) { return std::exp(psi(x) - m); };
  std::vector<double> cuts{-big_r, std::min(0.0, x_pk), std::max(0.0, x_pk), big_r};
  const double width = std::sqrt(t / (p * (1.0 - eps)));
  for (double d : {-20.0, -5.0, 5.0, 20.0}) {
    const double c = x_pk + d * width;
    if (c > -big_r && c < big_r) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 20, 1e-12);
  }
  return (m + std::log(total)) / t;
}

HypEntry verify_integral_bound(const Profile& profile, double p, double g_claimed, std::span<const double> eps_schedule,
                               std::span<const double> t_schedule, double tol) {
  if (eps_schedule.size() < 3 || t_schedule.size() < 3) {
    throw ValidationError("verify_integral_bound: need at least 3 eps and 3 t values");
  }
  for (std::size_t i = 1; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] < eps_schedule[i - 1])) throw ValidationError("verify_integral_bound: eps schedule must decrease");
  }
  if (const auto* b = profile.brownian(); b && b->a() < -0.5 * p) {
    // p^2(1+eps)^2/2 + a p (1+eps) < 0 iff eps < -2a/p - 1.
    const double eps0 = -2.0 * b->a() / p - 1.0;
    if (!(eps_schedule.front() < eps0)) {
      throw ValidationError("verify_integral_bound: eps must stay below " + std::to_string(eps0) + " for this drift");
    }
  }
  nlohmann::json per_eps = nlohmann::json::array();
  std::vector<double> inv_eps, limits;
  bool all_converged = true;
  for (double eps : eps_schedule) {
    std::vector<double> rates;
    for (double t : t_schedule) rates.push_back(integral_rate(profile, p, eps, t));
    const Extrapolation ex = extrapolate_limit(t_schedule, rates, tol);
    all_converged = all_converged && ex.converged;
    inv_eps.push_back(1.0 / eps);
    limits.push_back(ex.limit);
    per_eps.push_back({{"eps", eps}, {"rates", rates}, {"t_extrapolation", ex.to_json()}});
  }
  const Extrapolation eps_ex = extrapolate_limit(inv_eps, limits, tol);
  Status st = Status::inconclusive;
  if (all_converged && eps_ex.converged) st = eps_ex.limit <= g_claimed + tol ? Status::pass : Status::fail;
  return entry("integral_bound", st,
               {{"p", p}, {"g_claimed", g_claimed}, {"tolerance", tol}, {"t", t_schedule}, {"eps", eps_schedule},
                {"limit", eps_ex.limit}, {"per_eps", per_eps}, {"eps_extrapolation", eps_ex.to_json()},
                {"truncation", "integrand below peak * exp(-40) is dropped"}});
}

Status HypReport::overall() const {
  Status s = Status::pass;
  for (const auto& e : entries) s = combine(s, e.status);
  return s;
}

nlohmann::json HypReport::to_json() const {
  nlohmann::json ej = nlohmann::json::array();
  for (const auto& e : entries) ej.push_back(e.to_json());
  return {{"schema", "shelab.hyp_report"}, {"schema_version", kHypReportSchemaVersion},
          {"profile", profile}, {"p", p}, {"g_claimed", g_claimed},
          {"tolerances", tolerances.to_json()}, {"status", std::string(to_string(overall()))}, {"entries", ej}};
}

double claimed_g(const Profile& profile, double p) {
  if (const auto* b = profile.brownian()) {
    const double m = std::max(0.5 * p + b->a(), 0.0);
    return 0.5 * p * m * m;
  }
  return 0.0;
}

HypReport verify_hyp(const Profile& profile, double p, double g_claimed, const HypOptions& options) {
  HypReport rep;
  rep.profile = profile.to_json();
  rep.p = p;
  rep.g_claimed = g_claimed;
  rep.tolerances = options.tolerances;
  const auto t_sched = options.t_schedule.empty() ? geometric_schedule(10.0, 1e5, 9) : options.t_schedule;
  std::vector<double> eps = options.eps_schedule;
  if (eps.empty()) {
    double base = 0.1;
    if (const auto* b = profile.brownian(); b && b->a() < -0.5 * p) base = std::min(base, 0.5 * (-2.0 * b->a() / p - 1.0));
    for (int k = 0; k < 8; ++k) eps.push_back(base / std::pow(2.0, k));
  }
  const double tol = options.tolerances.limit;
  rep.entries.push_back(verify_coherence_limit(profile, p, g_claimed, t_sched, tol));
  rep.entries.push_back(verify_integral_bound(profile, p, g_claimed, eps, t_sched, tol));
  rep.entries.push_back(verify_growth(profile, p, t_sched, default_x_mesh(), default_growth_constants(profile, p)));
  const GrowthEnvelope env = profile.envelope(p);
  rep.entries.push_back(verify_lower_bound(profile, p, t_sched, 1.0, 1.0 + env.offset));
  PseudoStationarityOptions ps = options.pseudo;
  ps.sigma = options.tolerances.sigma;
  rep.entries.push_back(verify_pseudo_stationarity(profile, ps));
  return rep;
}

}  // namespace shelab
