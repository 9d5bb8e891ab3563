#include "shelab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shelab/error.hpp"
#include "shelab/kernels.hpp"
#include "shelab/streams.hpp"

namespace shelab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

double bound_slack(double bound) { return 1e-12 * std::max(1.0, std::abs(bound)); }

}  // namespace

Profile Profile::flat(double level) {
  BoundedDeterministic b;
  b.h = [level](double) { return level; };
  b.bound = std::abs(level);
  b.label = "flat";
  b.constant = level;
  return Profile(std::move(b));
}

Profile Profile::bounded(std::function<double(double)> h, double bound, std::string label) {
  require(static_cast<bool>(h), "bounded profile needs a callable h");
  require(bound >= 0.0 && std::isfinite(bound), "bounded profile needs a finite bound >= 0");
  return Profile(BoundedDeterministic{std::move(h), bound, std::move(label)});
}

Profile Profile::cosine(double constant, double amplitude, double frequency) {
  BoundedDeterministic b;
  b.h = [=](double x) { return constant + amplitude * std::cos(frequency * x); };
  b.bound = std::abs(constant) + std::abs(amplitude);
  b.label = amplitude == 0.0 ? "flat" : "cosine";
  b.constant = constant;
  b.amplitude = amplitude;
  b.frequency = frequency;
  return Profile(std::move(b));
}

Profile Profile::power_law(double delta, double scale) {
  require(delta > 0.0 && delta < 1.0, "power_law: delta must lie in (0,1)");
  require(scale >= 0.0 && std::isfinite(scale), "power_law: scale must be finite and >= 0");
  return Profile(PowerLaw{delta, scale});
}

Profile Profile::parabolic(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "parabolic: alpha must lie in (0,1)");
  return Profile(Parabolic{alpha});
}

Profile Profile::brownian(double a_plus, double a_minus) {
  require(std::isfinite(a_plus) && std::isfinite(a_minus), "brownian: drifts must be finite");
  return Profile(BrownianDrift{a_plus, a_minus});
}

Profile Profile::custom(std::function<double(double, double)> f, double growth_c, double delta,
                        double alpha, std::string label) {
  require(static_cast<bool>(f), "custom profile needs a callable f(t,x)");
  require(growth_c >= 0.0, "custom profile: growth constant C must be >= 0");
  require(delta > 0.0 && delta < 1.0, "custom profile: delta must lie in (0,1)");
  require(alpha >= 0.0 && alpha < 1.0, "custom profile: alpha must lie in [0,1)");
  return Profile(CustomDeterministic{std::move(f), growth_c, delta, alpha, std::move(label)});
}

Profile Profile::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("kind") && j["kind"].is_string(),
          "profile descriptor must be an object with a string \"kind\"");
  const std::string kind = j["kind"].get<std::string>();
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    require(j[key].is_number(), std::string("profile field '") + key + "' must be a number");
    return j[key].get<double>();
  };
  if (kind == "flat") return flat(num("level", 0.0));
  if (kind == "bounded") return cosine(num("constant", 0.0), num("amplitude", 0.0), num("frequency", 1.0));
  if (kind == "power_law") return power_law(num("delta", 0.5), num("scale", 1.0));
  if (kind == "parabolic") return parabolic(num("alpha", 0.5));
  if (kind == "brownian") return brownian(num("a_plus", 0.0), num("a_minus", 0.0));
  throw ValidationError("unknown profile kind '" + kind + "'");
}

nlohmann::json Profile::to_json() const {
  return std::visit(
      overloaded{
          [](const BoundedDeterministic& b) -> nlohmann::json {
            if (b.label == "flat") return {{"kind", "flat"}, {"level", b.constant}};
            if (b.label == "cosine") {
              return {{"kind", "bounded"}, {"constant", b.constant}, {"amplitude", b.amplitude},
                      {"frequency", b.frequency}};
            }
            return {{"kind", "bounded_callable"}, {"label", b.label}, {"bound", b.bound}};
          },
          [](const PowerLaw& p) -> nlohmann::json {
            return {{"kind", "power_law"}, {"delta", p.delta}, {"scale", p.scale}};
          },
          [](const Parabolic& p) -> nlohmann::json { return {{"kind", "parabolic"}, {"alpha", p.alpha}}; },
          [](const BrownianDrift& b) -> nlohmann::json {
            return {{"kind", "brownian"}, {"a_plus", b.a_plus}, {"a_minus", b.a_minus}};
          },
          [](const CustomDeterministic& c) -> nlohmann::json {
            return {{"kind", "custom"}, {"label", c.label}, {"growth_c", c.growth_c},
                    {"delta", c.delta}, {"alpha", c.alpha}};
          },
      },
      kind_);
}

std::string Profile::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const BoundedDeterministic& b) { os << "bounded(" << b.label << ")"; },
                 [&](const PowerLaw& p) { os << "power_law(delta=" << p.delta << ",scale=" << p.scale << ")"; },
                 [&](const Parabolic& p) { os << "parabolic(alpha=" << p.alpha << ")"; },
                 [&](const BrownianDrift& b) {
                   os << "brownian(a_plus=" << b.a_plus << ",a_minus=" << b.a_minus << ")";
                 },
                 [&](const CustomDeterministic& c) { os << "custom(" << c.label << ")"; },
             },
             kind_);
  return os.str();
}

double Profile::value(double t, double x) const {
  return std::visit(
      overloaded{
          [&](const BoundedDeterministic& b) {
            const double v = b.h(x);
            if (std::abs(v) > b.bound + bound_slack(b.bound)) {
              throw ValidationError("bounded profile '" + b.label + "' exceeds its declared bound at x=" +
                                    std::to_string(x));
            }
            return v;
          },
          [&](const PowerLaw& p) { return p.scale * std::pow(std::abs(x), p.delta); },
          [&](const Parabolic& p) { return p.alpha * x * x / (2.0 * t); },
          [&](const BrownianDrift&) -> double {
            throw ValidationError("brownian profile is a law; sample a path instead of evaluating it");
          },
          [&](const CustomDeterministic& c) {
            const double v = c.f(t, x);
            const double envelope = c.growth_c * (1.0 + std::pow(std::abs(x), c.delta)) + c.alpha * x * x / (2.0 * t);
            if (!std::isfinite(v) || std::abs(v) > envelope + bound_slack(envelope)) {
              throw ValidationError("custom profile '" + c.label + "' violates its declared growth at t=" +
                                    std::to_string(t) + ", x=" + std::to_string(x));
            }
            return v;
          },
      },
      kind_);
}

GrowthEnvelope Profile::envelope(double p) const {
  return std::visit(overloaded{
                        [&](const BoundedDeterministic& b) { return GrowthEnvelope{p * b.bound, 0.0, 0.0}; },
                        // |x|^delta <= 1 + |x|
                        [&](const PowerLaw& q) { return GrowthEnvelope{p * q.scale, p * q.scale, 0.0}; },
                        [&](const Parabolic& q) { return GrowthEnvelope{0.0, 0.0, q.alpha}; },
                        [&](const BrownianDrift& b) {
                          return GrowthEnvelope{0.0, std::max(0.0, 0.5 * p * p + p * b.a()), 0.0};
                        },
                        [&](const CustomDeterministic& c) {
                          return GrowthEnvelope{p * c.growth_c, p * c.growth_c, c.alpha};
                        },
                    },
                    kind_);
}

double Profile::default_s0() const {
  return std::visit(overloaded{
                        [](const BoundedDeterministic& b) { return std::max(1.0, 2.0 * b.bound); },
                        [](const PowerLaw& q) { return std::max(1.0, q.scale); },
                        [](const Parabolic&) { return 1.0; },
                        [](const BrownianDrift& b) {
                          return std::max({std::abs(b.a_plus), std::abs(b.a_minus), 1.0});
                        },
                        [](const CustomDeterministic& c) { return 1.0 + 2.0 * c.growth_c; },
                    },
                    kind_);
}

double log_mgf(const Profile& profile, double p, double t, double x) {
  require(p > 0.0, "log_mgf: p must be > 0");
  require(t > 0.0, "log_mgf: t must be > 0");
  if (const auto* b = profile.brownian()) {
    const double drift = x >= 0.0 ? p * b->a_plus * x : -p * b->a_minus * x;
    return 0.5 * p * p * std::abs(x) + drift;
  }
  return p * profile.value(t, x);
}

GridPoints unit_grid() {
  return GridPoints{[](long long n) { return static_cast<double>(n); }, 1.0, 0.5, "unit"};
}

GridPoints sqrt_grid() {
  return GridPoints{[](long long n) {
                      const double a = std::sqrt(static_cast<double>(n < 0 ? -n : n));
                      return n < 0 ? -a : a;
                    },
                    16.0, 0.5, "sqrt"};
}

GridPoints default_grid(const Profile& profile) {
  return std::holds_alternative<Parabolic>(profile.kind()) ? sqrt_grid() : unit_grid();
}

nlohmann::json GridReport::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : violations) {
    v.push_back({{"n", x.n}, {"rule", x.rule}, {"observed", x.observed}, {"bound", x.bound}});
  }
  return {{"pass", pass}, {"n_min", n_min}, {"n_max", n_max}, {"violations", v}};
}

GridReport check_grid_axioms(const GridPoints& grid, long long n_min, long long n_max) {
  require(n_min <= n_max, "check_grid_axioms: empty index range");
  GridReport report;
  report.n_min = n_min;
  report.n_max = n_max;
  auto flag = [&](long long n, std::string rule, double observed, double bound) {
    report.violations.push_back({n, std::move(rule), observed, bound});
  };
  if (n_min <= 0 && n_max >= 0 && grid(0) != 0.0) flag(0, "theta0", grid(0), 0.0);
  double prev = grid(n_min);
  for (long long n = n_min; n < n_max; ++n) {
    const double next = grid(n + 1);
    const double gap = next - prev;
    if (!(gap > 0.0)) flag(n, "monotone", gap, 0.0);
    const double spacing = std::abs(gap);
    const double lower = std::pow(std::max(grid.c * std::abs(static_cast<double>(n)), 1.0), -grid.beta);
    const double tol = 1e-12;
    if (spacing < lower - tol) flag(n, "spacing_lower", spacing, lower);
    if (spacing > 1.0 + tol) flag(n, "spacing_upper", spacing, 1.0);
    prev = next;
  }
  report.pass = report.violations.empty();
  return report;
}

std::vector<double> sample_brownian_path(const BrownianDrift& law, std::span<const double> mesh,
                                         std::uint64_t seed, std::uint32_t stream) {
  for (std::size_t i = 1; i < mesh.size(); ++i) {
    if (!(mesh[i] > mesh[i - 1])) throw ValidationError("sample_brownian_path: mesh must be strictly increasing");
  }
  std::vector<double> out(mesh.size(), 0.0);
  if (mesh.empty()) return out;
  std::vector<double> noise(mesh.size());
  kernels::gaussian_fill({seed, stream, streams::kBrownianPath}, 0, noise);

  // First index with mesh >= 0; the positive walk starts there, the negative one just below.
  const auto split = static_cast<std::size_t>(std::lower_bound(mesh.begin(), mesh.end(), 0.0) - mesh.begin());
  double b = 0.0;
  double x_prev = 0.0;
  for (std::size_t i = split; i < mesh.size(); ++i) {
    b += std::sqrt(mesh[i] - x_prev) * noise[i];
    x_prev = mesh[i];
    out[i] = b + (mesh[i] > 0.0 ? law.a_plus * mesh[i] : 0.0);
  }
  b = 0.0;
  x_prev = 0.0;
  for (std::size_t i = split; i-- > 0;) {
    b += std::sqrt(x_prev - mesh[i]) * noise[i];
    x_prev = mesh[i];
    out[i] = b - law.a_minus * mesh[i];
  }
  return out;
}

double interpolate_path(std::span<const double> mesh, std::span<const double> values, double x) {
  require(mesh.size() == values.size() && !mesh.empty(), "interpolate_path: size mismatch");
  require(x >= mesh.front() && x <= mesh.back(), "interpolate_path: x outside the mesh");
  const auto it = std::upper_bound(mesh.begin(), mesh.end(), x);
  if (it == mesh.end()) return values.back();
  const auto i = static_cast<std::size_t>(it - mesh.begin());
  if (i == 0) return values.front();
  const double w = (x - mesh[i - 1]) / (mesh[i] - mesh[i - 1]);
  return values[i - 1] + w * (values[i] - values[i - 1]);
}

}  // namespace shelab
