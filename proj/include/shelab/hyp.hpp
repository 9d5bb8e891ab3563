#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shelab/profiles.hpp"

namespace shelab {

inline constexpr int kHypReportSchemaVersion = 1;

enum class Status { pass, fail, inconclusive };
std::string_view to_string(Status s);
Status combine(Status a, Status b);

struct HypEntry {
  std::string condition;  // coherence_limit, integral_bound, growth, lower_bound, pseudo_stationarity
  Status status = Status::inconclusive;
  nlohmann::json witness;

  nlohmann::json to_json() const;
};

struct TVStatistic {
  long long n = 0;
  double value = 0.0;
};

// sup over the sampled points of |f(x_i) - f(x_0)|; values[0] is f at theta_n.
double tv_statistic(std::span<const double> values);

struct Tolerances {
  double limit = 1e-3;
  double sigma = 3.0;

  // SHELAB_TOL_LIMIT / SHELAB_TOL_SIGMA override the defaults.
  static Tolerances from_env();
  nlohmann::json to_json() const;
};

struct GrowthConstants {
  double c = 2.0;
  double alpha = 0.5;
};
GrowthConstants default_growth_constants(const Profile& profile, double p);

// M_p(t,x) <= C (e^{C|x|} + e^{alpha p x^2/(2t)}) on the mesh, compared in the log domain.
HypEntry verify_growth(const Profile& profile, double p, std::span<const double> t_list,
                       std::span<const double> x_mesh, GrowthConstants k);

// sup_{x in [-L, L]} log M_p(t,x) > -K for every t.
HypEntry verify_lower_bound(const Profile& profile, double p, std::span<const double> t_list, double big_l,
                            double big_k);

struct PseudoStationarityOptions {
  std::optional<GridPoints> grid;
  std::vector<double> t_list{10.0, 100.0, 1000.0};
  std::optional<double> s0;
  long long n_min = -200;
  long long n_max = 200;
  // Deterministic profiles: sample points per cell (plus both endpoints).
  int points_per_cell = 1000;
  // Brownian profiles.
  long long random_n_min = -2;
  long long random_n_max = 1;
  std::uint64_t n_samples = 100000;
  int steps_per_cell = 256;
  std::vector<double> s_offsets{1.0, 2.0, 3.0};
  std::uint64_t seed = 20240611;
  unsigned threads = 0;
  double sigma = 3.0;
};

HypEntry verify_pseudo_stationarity(const Profile& profile, const PseudoStationarityOptions& opt);

HypEntry verify_coherence_limit(const Profile& profile, double p, double g_claimed, std::span<const double> t_schedule,
                                double tol = 1e-3);

// (1/t) log of the integral of exp(-p(1-eps) x^2/(2t)) M_{p(1+eps)}(t,x) over the real line.
double integral_rate(const Profile& profile, double p, double eps, double t);

HypEntry verify_integral_bound(const Profile& profile, double p, double g_claimed, std::span<const double> eps_schedule,
                               std::span<const double> t_schedule, double tol = 1e-3);

struct HypReport {
  nlohmann::json profile;
  double p = 1.0;
  double g_claimed = 0.0;
  Tolerances tolerances;
  std::vector<HypEntry> entries;

  Status overall() const;
  nlohmann::json to_json() const;
};

struct HypOptions {
  std::vector<double> t_schedule;    // defaults to geometric 10 .. 1e5, 9 points
  std::vector<double> eps_schedule;  // defaults to 0.1 / 2^k, 8 points
  Tolerances tolerances;
  PseudoStationarityOptions pseudo;
};

// Runs all five conditions with defaults derived from the profile.
HypReport verify_hyp(const Profile& profile, double p, double g_claimed, const HypOptions& options = {});

// g(p) for the built-in families: (p/2)max(p/2+a,0)^2 for Brownian data, 0 otherwise.
double claimed_g(const Profile& profile, double p);

}  // namespace shelab
