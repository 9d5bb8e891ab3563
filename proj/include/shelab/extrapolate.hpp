#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace shelab {

// Fit of phi(t) = limit + b * t^(-gamma) to the tail of a sequence.
struct TailFit {
  int k = 0;
  double limit = 0.0;
  double b = 0.0;
  double gamma = 0.0;
  double rms = 0.0;
};

struct Extrapolation {
  double limit = 0.0;
  bool converged = false;
  // max - min of the fitted limits over the window sizes that were used.
  double spread = 0.0;
  std::vector<TailFit> fits;

  nlohmann::json to_json() const;
};

// Fits the last k points for k in {3, 4, 5} (those available) with gamma free
// and least squares in (limit, b); converged when the fitted limits agree to
// within tol. The reported limit is the k = 3 fit. A sequence that is constant
// in its tail is returned exactly.
Extrapolation extrapolate_limit(std::span<const double> t, std::span<const double> phi, double tol);

// Geometric schedule of n points from lo to hi inclusive.
std::vector<double> geometric_schedule(double lo, double hi, int n);

}  // namespace shelab
