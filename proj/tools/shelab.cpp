// shelab: command-line front end.
//
// Exit codes: 0 success, 1 verification failed, 2 invalid input, 3 inconclusive.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shelab/error.hpp"
#include "shelab/extrapolate.hpp"
#include "shelab/hyp.hpp"
#include "shelab/kernels.hpp"
#include "shelab/output.hpp"
#include "shelab/profiles.hpp"
#include "shelab/rates.hpp"
#include "shelab/sim.hpp"
#include "shelab/variational.hpp"

using nlohmann::json;
using namespace shelab;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInconclusive = 3;

const char* kSignNote =
    "Rates are printed as positive numbers: P(tail event at level s) ~ exp(-rate(s) t), i.e. the limit of "
    "(1/t) log P is -rate.";

// "lo:hi:step", "geom:lo:hi:n", or a comma list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ValidationError("bad number '" + s + "' in grid '" + text + "'");
    }
    if (used != s.size()) throw ValidationError("bad number '" + s + "' in grid '" + text + "'");
    return v;
  };
  std::vector<std::string> parts;
  {
    std::stringstream ss(text);
    std::string p;
    const char sep = text.find(':') != std::string::npos ? ':' : ',';
    while (std::getline(ss, p, sep)) parts.push_back(p);
  }
  if (parts.empty()) throw ValidationError("empty grid");
  if (parts[0] == "geom") {
    if (parts.size() != 4) throw ValidationError("geometric grid must be geom:lo:hi:n");
    return geometric_schedule(num(parts[1]), num(parts[2]), static_cast<int>(num(parts[3])));
  }
  if (text.find(':') != std::string::npos) {
    if (parts.size() != 3) throw ValidationError("range grid must be lo:hi:step");
    const double lo = num(parts[0]), hi = num(parts[1]), step = num(parts[2]);
    if (!(step > 0.0) || hi < lo) throw ValidationError("range grid needs step > 0 and hi >= lo");
    const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    if (n > 10000000) throw ValidationError("grid too large");
    for (long long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
  }
  for (const auto& p : parts) out.push_back(num(p));
  return out;
}

Profile load_profile(const std::string& arg) {
  json j;
  try {
    if (!arg.empty() && arg.front() == '{') {
      j = json::parse(arg);
    } else {
      std::ifstream is(arg);
      if (!is) throw ValidationError("cannot open profile file '" + arg + "'");
      j = json::parse(is);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("profile is not valid JSON: ") + e.what());
  }
  return Profile::from_json(j);
}

Family parse_family(const std::string& name, double a) {
  if (name == "deterministic") return Family::deterministic();
  if (name == "brownian") return Family::brownian(a);
  throw ValidationError("unknown family '" + name + "' (deterministic|brownian)");
}

struct Common {
  std::string out;
  bool as_json = false;
  unsigned threads = 0;
  std::string simd;
  std::vector<std::string> argv;
};

json header_for(const std::string& command, const json& config, const Common& c) {
  return {{"schema", "shelab." + command},
          {"schema_version", output::kSchemaVersion},
          {"command", command},
          {"argv", c.argv},
          {"run_config", config},
          {"simd_backend", std::string(kernels::to_string(kernels::active_backend()))}};
}

void emit_table(const output::Table& t, const Common& c) {
  if (!c.out.empty()) {
    std::ofstream os(c.out);
    if (!os) throw ValidationError("cannot open output file '" + c.out + "'");
    output::write_csv(os, t);
  }
  if (c.as_json) {
    json j = t.header;
    json rows = json::array();
    for (const auto& r : t.rows) {
      json o;
      for (std::size_t i = 0; i < r.size() && i < t.columns.size(); ++i) o[t.columns[i]] = r[i];
      rows.push_back(o);
    }
    j["rows"] = rows;
    std::cout << j.dump(2) << '\n';
    return;
  }
  if (!c.out.empty()) return;
  for (std::size_t i = 0; i < t.columns.size(); ++i) std::cout << ' ' << std::setw(17) << t.columns[i];
  std::cout << '\n';
  for (const auto& r : t.rows) {
    for (double v : r) std::cout << ' ' << std::setw(17) << std::setprecision(10) << v;
    std::cout << '\n';
  }
}

void emit_json(const json& j, const Common& c) {
  if (!c.out.empty()) {
    std::ofstream os(c.out);
    if (!os) throw ValidationError("cannot open output file '" + c.out + "'");
    os << j.dump(2) << '\n';
  }
  if (c.out.empty() || c.as_json) std::cout << j.dump(2) << '\n';
}

int status_exit(Status s) {
  switch (s) {
    case Status::pass: return 0;
    case Status::fail: return kExitFail;
    case Status::inconclusive: return kExitInconclusive;
  }
  return kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("Lyapunov exponents and upper-tail rate functions for the KPZ/SHE equation.\n") + kSignNote};
  app.require_subcommand(1);
  Common common;
  for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);
  app.add_option("--out", common.out, "Write output to this file (CSV with a '# {json}' header, or JSON)");
  app.add_flag("--json", common.as_json, "Print JSON instead of a table");
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  app.add_option("--simd", common.simd, "Kernel backend: scalar or avx2 (default: best available)");
  app.fallthrough();

  // rate
  std::string family = "deterministic", s_grid;
  double a = 0.0, s_single = NAN;
  auto* rate = app.add_subcommand("rate", std::string("Upper-tail rate function via Legendre duality. ") + kSignNote);
  rate->add_option("--family", family, "deterministic | brownian");
  rate->add_option("--a", a, "Brownian drift a = max(a_plus, a_minus)");
  auto* rate_s = rate->add_option("--s", s_single, "Single level s");
  rate->add_option("--s-grid", s_grid, "lo:hi:step, geom:lo:hi:n or a comma list")->excludes(rate_s);

  // lyapunov
  std::string p_grid;
  double p_single = NAN;
  auto* lya = app.add_subcommand("lyapunov", "Lya_p = (p^3 - p)/24 + g(p)");
  lya->add_option("--family", family, "deterministic | brownian");
  lya->add_option("--a", a, "Brownian drift");
  auto* lya_p = lya->add_option("--p", p_single, "Single p");
  lya->add_option("--p-grid", p_grid, "p grid")->excludes(lya_p);

  // g-estimate
  std::string profile_arg, t_sched = "geom:10:1e4:8";
  double tol = NAN;
  auto* gest = app.add_subcommand("g-estimate", "Variational estimate of g(p) with its convergence trace");
  gest->add_option("--profile", profile_arg, "Profile JSON file or inline JSON")->required();
  gest->add_option("--p-grid", p_grid, "p grid")->required();
  gest->add_option("--t-schedule", t_sched, "t schedule");
  gest->add_option("--tol", tol, "Extrapolation tolerance (default SHELAB_TOL_LIMIT or 1e-3)");

  // verify-hyp
  double g_claim = NAN;
  std::string eps_sched;
  std::uint64_t seed = 1;
  auto* vh = app.add_subcommand("verify-hyp", "Check the five membership conditions at finite resolution");
  vh->add_option("--profile", profile_arg, "Profile JSON file or inline JSON")->required();
  vh->add_option("--p", p_single, "Moment order p")->required();
  vh->add_option("--g", g_claim, "Claimed g(p) (default: the closed form for the family)");
  vh->add_option("--t-schedule", t_sched, "t schedule (default geom:10:1e5:9)");
  vh->add_option("--eps-schedule", eps_sched, "decreasing eps schedule");
  vh->add_option("--seed", seed, "Seed for the Monte Carlo pseudo-stationarity check");

  // simulate
  bool narrow_wedge = false;
  LatticeConfig lc;
  std::string boundary = "dirichlet_zero", p_list = "1,2", times_arg, sites_arg = "0", ensemble_out;
  std::size_t replicas = 10000;
  auto* sim = app.add_subcommand("simulate", "Lattice Monte Carlo for the SHE; prints moment estimates");
  auto* sim_prof = sim->add_option("--profile", profile_arg, "Profile JSON file or inline JSON");
  sim->add_flag("--narrow-wedge", narrow_wedge, "Delta initial data")->excludes(sim_prof);
  sim->add_option("--dx", lc.dx, "Space step");
  sim->add_option("--dt", lc.dt, "Time step (default dx^2/4)");
  sim->add_option("--t", lc.t_final, "Final time")->required();
  sim->add_option("--half-width", lc.half_width, "Domain half width (default 6 sqrt(t) + t * drift)");
  sim->add_option("--boundary", boundary, "dirichlet_zero | periodic");
  sim->add_option("--replicas", replicas, "Number of replicas");
  sim->add_option("--seed", seed, "Seed");
  sim->add_option("--p-list", p_list, "Moment orders");
  sim->add_option("--times", times_arg, "Snapshot times (default t)");
  sim->add_option("--sites", sites_arg, "Recorded x positions");
  sim->add_option("--ensemble-out", ensemble_out, "Also write the ensemble as a binary file");

  // oracle
  std::string mode = "second-moment", window;
  std::size_t record_every = 1;
  auto* orc = app.add_subcommand("oracle", "Deterministic moment recursions of the lattice scheme");
  orc->add_option("--mode", mode, "second-moment | mean");
  auto* orc_prof = orc->add_option("--profile", profile_arg, "Profile JSON file or inline JSON");
  orc->add_flag("--narrow-wedge", narrow_wedge, "Delta initial data")->excludes(orc_prof);
  orc->add_option("--dx", lc.dx, "Space step");
  orc->add_option("--dt", lc.dt, "Time step (default dx^2/4)");
  orc->add_option("--t", lc.t_final, "Final time")->required();
  orc->add_option("--half-width", lc.half_width, "Domain half width");
  orc->add_option("--boundary", boundary, "dirichlet_zero | periodic");
  orc->add_option("--record-every", record_every, "Record C(t,0,0) every k steps");
  orc->add_option("--fit-window", window, "lo:hi window for the log-slope fit");

  // ldp-toy
  std::string s_list = "0.5";
  int toy_t = 200;
  std::uint64_t toy_n = 1000000;
  double rel_tol = 0.1;
  auto* toy = app.add_subcommand("ldp-toy", "Monte Carlo check of the duality engine on sums of Gaussians");
  toy->add_option("--s-list", s_list, "Levels s");
  toy->add_option("--t", toy_t, "Number of summed Gaussians");
  toy->add_option("--replicas", toy_n, "Replicas");
  toy->add_option("--seed", seed, "Seed");
  toy->add_option("--rel-tol", rel_tol, "Relative tolerance against the duality rate");

  // report
  std::vector<std::string> inputs;
  auto* rep = app.add_subcommand("report", "Merge run outputs into one JSON bundle with a status summary");
  rep->add_option("inputs", inputs, "Output files from earlier runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (!common.simd.empty()) kernels::set_backend(kernels::backend_from_string(common.simd));

    if (rate->parsed()) {
      const Family fam = parse_family(family, a);
      std::vector<double> grid = s_grid.empty() ? std::vector<double>{} : parse_grid(s_grid);
      if (!std::isnan(s_single)) grid = {s_single};
      if (grid.empty()) throw ValidationError("rate: give --s or --s-grid");
      const RateCurve curve = rate_curve(grid, fam);
      output::Table t;
      t.header = header_for("rate", {{"family", fam.to_json()}, {"s", grid}}, common);
      t.header["zeta"] = curve.zeta;
      t.header["sign_convention"] = kSignNote;
      t.columns = {"s", "rate", "p_star", "closed_form"};
      for (const auto& r : curve.rows) t.rows.push_back({r.s, r.rate, r.p_star, closed_form_rate(r.s, fam)});
      emit_table(t, common);
      return 0;
    }

    if (lya->parsed()) {
      const Family fam = parse_family(family, a);
      std::vector<double> grid = p_grid.empty() ? std::vector<double>{} : parse_grid(p_grid);
      if (!std::isnan(p_single)) grid = {p_single};
      if (grid.empty()) throw ValidationError("lyapunov: give --p or --p-grid");
      const LyapunovCurve curve = lyapunov_curve(grid, fam);
      output::Table t;
      t.header = header_for("lyapunov", {{"family", fam.to_json()}, {"p", grid}}, common);
      t.header["g_source"] = curve.g_source;
      t.columns = {"p", "lya", "g"};
      for (const auto& r : curve.rows) t.rows.push_back({r.p, r.lya, r.g});
      emit_table(t, common);
      return 0;
    }

    if (gest->parsed()) {
      const Profile prof = load_profile(profile_arg);
      if (std::isnan(tol)) tol = Tolerances::from_env().limit;
      const auto ps = parse_grid(p_grid);
      const auto ts = parse_grid(t_sched);
      output::Table t;
      t.header = header_for("g-estimate", {{"profile", prof.to_json()}, {"p", ps}, {"t", ts}, {"tol", tol}}, common);
      t.columns = {"p", "g", "converged", "spread"};
      for (std::size_t i = 0; i < ts.size(); ++i) t.columns.push_back("phi_" + std::to_string(i));
      bool all_converged = true;
      for (double p : ps) {
        const GEstimate g = g_estimate(prof, p, ts, tol);
        all_converged = all_converged && g.converged;
        std::vector<double> row{p, g.g, g.converged ? 1.0 : 0.0, g.extrapolation.spread};
        row.insert(row.end(), g.phi.begin(), g.phi.end());
        t.rows.push_back(row);
      }
      t.header["status"] = all_converged ? "pass" : "inconclusive";
      emit_table(t, common);
      return all_converged ? 0 : kExitInconclusive;
    }

    if (vh->parsed()) {
      const Profile prof = load_profile(profile_arg);
      HypOptions opt;
      opt.tolerances = Tolerances::from_env();
      if (vh->count("--t-schedule")) opt.t_schedule = parse_grid(t_sched);
      if (!eps_sched.empty()) opt.eps_schedule = parse_grid(eps_sched);
      opt.pseudo.seed = seed;
      opt.pseudo.threads = common.threads;
      const double g = std::isnan(g_claim) ? claimed_g(prof, p_single) : g_claim;
      const HypReport report = verify_hyp(prof, p_single, g, opt);
      json j = report.to_json();
      j["argv"] = common.argv;
      emit_json(j, common);
      return status_exit(report.overall());
    }

    if (sim->parsed()) {
      if (!narrow_wedge && profile_arg.empty()) throw ValidationError("simulate: give --profile or --narrow-wedge");
      lc.boundary = boundary_from_string(boundary);
      const Source src = narrow_wedge ? Source{NarrowWedge{}} : Source{load_profile(profile_arg)};
      RunOptions ro;
      ro.threads = common.threads;
      ro.sites = parse_grid(sites_arg);
      if (!times_arg.empty()) ro.snapshot_times = parse_grid(times_arg);
      const auto ps = parse_grid(p_list);
      const Ensemble e = run(src, lc, replicas, seed, ro);
      if (!ensemble_out.empty()) write_ensemble(ensemble_out, e);
      output::Table t;
      t.header = header_for("simulate",
                            {{"source", source_to_json(src)}, {"config", e.lattice.config.to_json()},
                             {"replicas", replicas}, {"seed", seed}, {"p", ps}, {"times", e.times}, {"sites", e.sites}},
                            common);
      t.header["clamp_rate"] = e.clamp_rate();
      t.header["clamped"] = e.clamped;
      t.columns = {"t", "x", "p", "mean", "stderr", "log_mean", "rate", "rate_stderr"};
      for (std::size_t k = 0; k < e.times.size(); ++k) {
        for (std::size_t j = 0; j < e.sites.size(); ++j) {
          const auto col = e.column(k, j);
          for (double p : ps) {
            const MomentEstimate m = estimate_moment(col, p, e.times[k], seed);
            t.rows.push_back({e.times[k], e.sites[j], p, m.mean, m.std_error, m.log_mean, m.rate, m.rate_stderr});
          }
        }
      }
      emit_table(t, common);
      return 0;
    }

    if (orc->parsed()) {
      if (!narrow_wedge && profile_arg.empty()) throw ValidationError("oracle: give --profile or --narrow-wedge");
      lc.boundary = boundary_from_string(boundary);
      const Source src = narrow_wedge ? Source{NarrowWedge{}} : Source{load_profile(profile_arg)};
      output::Table t;
      json cfg{{"source", source_to_json(src)}, {"mode", mode}};
      if (mode == "second-moment") {
        const SecondMomentOracle o = second_moment_oracle(src, lc, record_every);
        cfg["config"] = o.lattice.config.to_json();
        cfg["record_every"] = record_every;
        t.header = header_for("oracle", cfg, common);
        t.columns = {"t", "c00", "log_c00"};
        for (std::size_t i = 0; i < o.times.size(); ++i) t.rows.push_back({o.times[i], o.c_origin[i], std::log(o.c_origin[i])});
        if (!window.empty()) {
          const auto w = parse_grid(window);
          if (w.size() != 2) throw ValidationError("--fit-window must be lo,hi");
          std::vector<double> ly;
          for (double v : o.c_origin) ly.push_back(std::log(v));
          const SlopeFit f = lyapunov_slope_fit(o.times, ly, w[0], w[1], {}, 0.25);
          t.header["slope_fit"] = f.to_json();
        }
      } else if (mode == "mean") {
        const Lattice lat = make_lattice(lc, src);
        const auto m = mean_oracle(src, lc, lc.t_final);
        cfg["config"] = lat.config.to_json();
        t.header = header_for("oracle", cfg, common);
        t.columns = {"x", "mean"};
        for (std::size_t i = 0; i < m.size(); ++i) t.rows.push_back({lat.x(i), m[i]});
      } else {
        throw ValidationError("oracle: unknown mode '" + mode + "'");
      }
      emit_table(t, common);
      return 0;
    }

    if (toy->parsed()) {
      const auto ss = parse_grid(s_list);
      const CramerReport r = cramer_toy_validate(ss, toy_t, toy_n, seed, rel_tol, common.threads);
      output::Table t;
      t.header = header_for("ldp-toy", {{"s", ss}, {"t", toy_t}, {"replicas", toy_n}, {"seed", seed}, {"rel_tol", rel_tol}},
                            common);
      t.header["sign_convention"] = kSignNote;
      bool all = true;
      t.columns = {"s", "hits", "too_few_hits", "direct_rate", "tilted_rate", "tilted_rel_stderr", "exact_rate",
                   "ldp_rate", "empirical_rate", "rel_error", "pass"};
      for (const auto& row : r.rows) {
        all = all && row.pass;
        t.rows.push_back({row.s, static_cast<double>(row.hits), row.too_few_hits ? 1.0 : 0.0, row.direct_rate,
                          row.tilted_rate, row.tilted_rel_stderr, row.exact_rate, row.ldp_rate, row.empirical_rate,
                          row.rel_error, row.pass ? 1.0 : 0.0});
      }
      t.header["status"] = all ? "pass" : "fail";
      emit_table(t, common);
      return all ? 0 : kExitFail;
    }

    if (rep->parsed()) {
      std::vector<json> docs;
      for (const auto& path : inputs) docs.push_back(output::load_output(path));
      emit_json(output::merge_bundle(docs, inputs), common);
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return 0;
}
