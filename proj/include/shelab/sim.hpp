#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "shelab/hyp.hpp"
#include "shelab/profiles.hpp"

namespace shelab {

enum class Boundary { dirichlet_zero, periodic };
std::string_view to_string(Boundary b);
Boundary boundary_from_string(std::string_view s);

// Lattice for dZ = (1/2) Z_xx dt + Z xi on [-W, W]. Zero fields mean "use the
// default": dt = dx^2/4, W = 6 sqrt(t_final) + t_final * drift.
struct LatticeConfig {
  double dx = 0.25;
  double dt = 0.0;
  double half_width = 0.0;
  Boundary boundary = Boundary::dirichlet_zero;
  double t_final = 1.0;

  nlohmann::json to_json() const;
  static LatticeConfig from_json(const nlohmann::json& j);
};

struct NarrowWedge {};
using Source = std::variant<NarrowWedge, Profile>;
std::string source_name(const Source& s);
nlohmann::json source_to_json(const Source& s);

// LatticeConfig with defaults filled in and the step count fixed; dt is
// shrunk slightly so that t_final is a whole number of steps.
struct Lattice {
  LatticeConfig config;
  std::size_t n_half = 0;   // sites at (i - n_half) dx, i = 0 .. 2 n_half
  std::size_t n_steps = 0;

  std::size_t size() const { return 2 * n_half + 1; }
  double x(std::size_t i) const;
  std::size_t index_of(double x) const;  // throws unless x is a lattice site
  std::size_t step_of(double t) const;   // nearest step; throws beyond t_final
  double r() const { return config.dt / (2.0 * config.dx * config.dx); }
  double noise_scale() const;
  bool periodic() const { return config.boundary == Boundary::periodic; }
};

// Validates and resolves. Throws ValidationError for dx <= 0, dt > dx^2/2,
// t_final <= 0, or a narrow wedge with t_final < 10 dt.
Lattice make_lattice(const LatticeConfig& config, const Source& source);

// Initial field for one replica (Brownian data samples a path keyed by replica).
std::vector<double> initial_field(const Source& source, const Lattice& lat, std::uint64_t seed, std::uint32_t replica);

// One Euler-Maruyama step with caller-supplied standard normals; returns the clamp count.
std::size_t step(std::span<const double> z, std::span<const double> noise, std::span<double> out, const Lattice& lat);

struct RunOptions {
  std::vector<double> snapshot_times;  // default {t_final}
  std::vector<double> sites{0.0};      // x positions recorded at each snapshot
  bool keep_final_field = false;
  bool zero_noise = false;
  unsigned threads = 0;
  std::size_t memory_limit_bytes = std::size_t{4} << 30;
};

struct Ensemble {
  Lattice lattice;
  nlohmann::json source;
  std::uint64_t seed = 0;
  std::size_t n_replicas = 0;
  std::vector<double> times;        // actual snapshot times
  std::vector<double> sites;
  std::vector<double> values;       // [replica][time][site]
  std::vector<double> final_fields; // [replica][lattice site] when kept
  std::uint64_t clamped = 0;
  std::uint64_t site_updates = 0;

  double value(std::size_t replica, std::size_t time, std::size_t site) const {
    return values[(replica * times.size() + time) * sites.size() + site];
  }
  std::vector<double> column(std::size_t time, std::size_t site) const;
  double clamp_rate() const { return site_updates ? static_cast<double>(clamped) / site_updates : 0.0; }
  nlohmann::json header() const;
};

// Bit-identical for a given (source, config, n_replicas, seed), whatever the thread count or SIMD backend.
Ensemble run(const Source& source, const LatticeConfig& config, std::size_t n_replicas, std::uint64_t seed,
             const RunOptions& options = {});

struct MomentEstimate {
  double p = 1.0;
  double t = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_replicas = 0;
  std::uint64_t seed = 0;
  double log_mean = 0.0;
  double rate = 0.0;         // log(mean) / t
  double rate_stderr = 0.0;  // delta method

  nlohmann::json to_json() const;
};

MomentEstimate estimate_moment(std::span<const double> z, double p, double t = 0.0, std::uint64_t seed = 0);

// E Z(t, x) of the scheme without clamping: the heat recursion applied to E Z(0, .).
std::vector<double> mean_oracle(const Source& source, const LatticeConfig& config, double t);

struct SecondMomentOracle {
  Lattice lattice;
  std::vector<double> times;
  std::vector<double> c_origin;   // C(t, 0, 0) at each recorded time
  std::vector<double> final_matrix;  // C(t_final, x_i, x_j), row-major

  double at(std::size_t i, std::size_t j) const { return final_matrix[i * lattice.size() + j]; }
};

// Exact two-point recursion C_{n+1} = (L x L) C_n + (dt/dx) diag(C_n), recording
// C(0,0) every `record_every` steps.
SecondMomentOracle second_moment_oracle(const Source& source, const LatticeConfig& config, std::size_t record_every = 1,
                                        std::size_t memory_limit_bytes = std::size_t{2} << 30);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
  std::size_t n_points = 0;
  std::optional<double> target;

  nlohmann::json to_json() const;
};

// Least-squares slope of y against t over [t_lo, t_hi]; weighted by 1/sigma^2 when sigma is given.
SlopeFit lyapunov_slope_fit(std::span<const double> t, std::span<const double> y, double t_lo, double t_hi,
                            std::span<const double> sigma = {}, std::optional<double> target = std::nullopt);

struct Comparison {
  std::string quantity;
  double left = 0.0, left_stderr = 0.0;
  double right = 0.0, right_stderr = 0.0;
  double z = 0.0;
  Status status = Status::inconclusive;

  nlohmann::json to_json() const;
};

struct CheckReport {
  std::string check;
  Status status = Status::pass;
  std::vector<Comparison> comparisons;
  nlohmann::json extra;

  nlohmann::json to_json() const;
};

// Z^f(t,0) against sum_y Z^nw(t,y) e^{f(y)} dx with independent noise (and
// independent Brownian samples) on each side.
CheckReport convolution_check(const Profile& profile, const LatticeConfig& config, std::size_t n_replicas,
                              std::uint64_t seed, double sigma = 3.0, unsigned threads = 0);

// log Z^nw(t,x) + x^2/(2t) across x: paired mean differences and variance ratios.
CheckReport stationarity_check(const LatticeConfig& config, std::size_t n_replicas, std::span<const double> x_list,
                               std::uint64_t seed, double sigma = 3.0, unsigned threads = 0);

struct IncrementRow {
  double s = 0.0;
  std::uint64_t sup_count = 0;  // sup_x {H(x) - H(0) - nu x^2/2} >= s
  std::uint64_t inf_count = 0;  // inf_x {H(x) - H(0) + nu x^2/2} <= -s
  double sup_tail = 0.0;
  double inf_tail = 0.0;
};

struct IncrementTable {
  double nu = 0.0;
  double window = 0.0;  // statistics over x in [0, t^{1/3}]
  std::size_t used_replicas = 0;
  std::size_t excluded_replicas = 0;
  std::vector<IncrementRow> rows;
};

IncrementTable increment_diagnostic(const LatticeConfig& config, std::size_t n_replicas, double nu, std::uint64_t seed,
                                    std::span<const double> s_grid, unsigned threads = 0);

// Flat binary ensemble: one JSON header line, then little-endian doubles, replica-major.
void write_ensemble(const std::string& path, const Ensemble& e);
Ensemble read_ensemble(const std::string& path);

}  // namespace shelab
