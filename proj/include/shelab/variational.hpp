#pragma once

#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shelab/extrapolate.hpp"
#include "shelab/profiles.hpp"

namespace shelab {

// phi(x) = -p x^2 / (2t) + log M_p(t, x)
double sup_objective(const Profile& profile, double p, double t, double x);

// Half-width W of a search window [-W, W] that provably contains every
// maximiser of sup_objective, from the profile's growth envelope.
double search_half_width(const Profile& profile, double p, double t);

struct SupResult {
  double value = 0.0;
  double argmax = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double p = 0.0;
  double t = 0.0;
  bool closed_form = false;

  nlohmann::json to_json() const;
};

SupResult sup_phi(const Profile& profile, double p, double t);

struct GEstimate {
  double g = 0.0;
  bool converged = false;
  bool exact = false;
  std::vector<double> t;
  std::vector<double> phi;  // sup_phi(t) / t
  Extrapolation extrapolation;

  nlohmann::json to_json() const;
};

GEstimate g_estimate(const Profile& profile, double p, std::span<const double> t_schedule, double tol = 1e-3);

struct MaxSet {
  std::vector<std::pair<double, double>> intervals;
  double x_extreme = 0.0;
  double sup = 0.0;
  double omega = 0.0;
  double t = 0.0;

  bool empty() const { return intervals.empty(); }
  nlohmann::json to_json() const;
};

// {x : phi(x) >= sup phi - omega} as disjoint intervals. Interval ends are
// located by bisection between mesh points; dips narrower than the search mesh
// are not resolved.
MaxSet max_set(const Profile& profile, double p, double omega, double t);

struct ConvexityReport {
  bool pass = true;
  double min_second_difference = 0.0;
  double min_value = 0.0;
  std::vector<std::size_t> nonconvex_at;  // middle index of each failing triple
  std::vector<std::size_t> negative_at;

  nlohmann::json to_json() const;
};

ConvexityReport check_g_convexity(std::span<const double> p, std::span<const double> g, double tol = 1e-9);

}  // namespace shelab
