#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace shelab {

// Initial-data families f_t. Deterministic kinds expose f_t(x) directly; the
// Brownian kind is a law and only exposes its log moment generating function
// and a path sampler.

struct BoundedDeterministic {
  std::function<double(double)> h;
  double bound = 0.0;
  std::string label = "custom";
  // Parameters of the JSON-constructible family h(x) = constant + amplitude*cos(frequency*x).
  double constant = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
};

// f_t(x) = scale * |x|^delta, independent of t.
struct PowerLaw {
  double delta = 0.5;
  double scale = 1.0;
};

// f_t(x) = alpha * x^2 / (2t).
struct Parabolic {
  double alpha = 0.5;
};

// f(x) = B(x) + a_plus*x*1{x>0} - a_minus*x*1{x<0}, B a two-sided Brownian motion.
struct BrownianDrift {
  double a_plus = 0.0;
  double a_minus = 0.0;
  double a() const { return a_plus > a_minus ? a_plus : a_minus; }
};

// User-supplied f(t, x) with declared growth |f_t(x)| <= C(1+|x|^delta) + alpha x^2/(2t).
struct CustomDeterministic {
  std::function<double(double, double)> f;
  double growth_c = 1.0;
  double delta = 0.5;
  double alpha = 0.0;
  std::string label = "custom";
};

// Upper envelope log M_p(t,x) <= offset + slope*|x| + alpha*p*x^2/(2t), valid for all t > 0.
struct GrowthEnvelope {
  double offset = 0.0;
  double slope = 0.0;
  double alpha = 0.0;
};

class Profile {
 public:
  using Kind = std::variant<BoundedDeterministic, PowerLaw, Parabolic, BrownianDrift, CustomDeterministic>;

  static Profile flat(double level = 0.0);
  static Profile bounded(std::function<double(double)> h, double bound, std::string label = "custom");
  static Profile cosine(double constant, double amplitude, double frequency);
  static Profile power_law(double delta, double scale = 1.0);
  static Profile parabolic(double alpha);
  static Profile brownian(double a_plus, double a_minus);
  static Profile custom(std::function<double(double, double)> f, double growth_c, double delta,
                        double alpha, std::string label = "custom");

  // {"kind": "flat"|"bounded"|"power_law"|"parabolic"|"brownian", ...}
  static Profile from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const Kind& kind() const { return kind_; }
  std::string name() const;
  bool is_random() const { return std::holds_alternative<BrownianDrift>(kind_); }
  const BrownianDrift* brownian() const { return std::get_if<BrownianDrift>(&kind_); }

  // Deterministic f_t(x). Throws for the Brownian law, and when a declared
  // bound or growth constant is violated at the queried point.
  double value(double t, double x) const;

  GrowthEnvelope envelope(double p) const;

  // Default s0 for the deterministic pseudo-stationarity check.
  double default_s0() const;

 private:
  explicit Profile(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

// log M_p^{f_t}(t,x): p*f_t(x) for deterministic data, the exact Gaussian
// log-MGF for Brownian data.
double log_mgf(const Profile& profile, double p, double t, double x);

// Grid points theta_n with spacing constants (c, beta).
struct GridPoints {
  std::function<double(long long)> theta;
  double c = 1.0;
  double beta = 0.5;
  std::string label;

  double operator()(long long n) const { return theta(n); }
};

GridPoints unit_grid();
// theta_n = sign(n)|n|^{1/2}; c = 16 gives the lower bound |n|^{-1/2}/4.
GridPoints sqrt_grid();
GridPoints default_grid(const Profile& profile);

struct GridViolation {
  long long n = 0;
  std::string rule;  // "theta0", "monotone", "spacing_lower", "spacing_upper"
  double observed = 0.0;
  double bound = 0.0;
};

struct GridReport {
  bool pass = true;
  long long n_min = 0;
  long long n_max = 0;
  std::vector<GridViolation> violations;

  nlohmann::json to_json() const;
};

GridReport check_grid_axioms(const GridPoints& grid, long long n_min, long long n_max);

// One Brownian-with-drift path on a strictly increasing mesh: two independent
// one-sided walks glued at 0 with increments of variance equal to the mesh
// step, plus the exact drift. `stream` selects an independent path for the
// same seed.
std::vector<double> sample_brownian_path(const BrownianDrift& law, std::span<const double> mesh,
                                         std::uint64_t seed, std::uint32_t stream = 0);

// Linear interpolation of a sampled path (mesh, values) at x inside the mesh.
double interpolate_path(std::span<const double> mesh, std::span<const double> values, double x);

}  // namespace shelab
