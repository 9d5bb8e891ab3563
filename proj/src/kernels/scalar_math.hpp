#pragma once

// Scalar building blocks shared by the reference kernels and the scalar tails
// of the vector kernels. The log and sin/cos kernels are polynomial (fdlibm
// coefficients) instead of libm calls so that the AVX2 path can reproduce them
// operation for operation.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace shelab::kernels::detail {
// Internal linkage: this header is compiled under different ISA flags.
namespace {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> c,
                                                 std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k[0] += kPhiloxW0;
      k[1] += kPhiloxW1;
    }
    const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

// Maps 52 random bits onto the open interval (0, 1).
inline double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t x = (std::uint64_t{hi} << 32) | lo;
  const double one_to_two = std::bit_cast<double>(0x3FF0000000000000ull | (x >> 12));
  return (one_to_two - 1.0) + 0x1p-53;
}

inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kLg1 = 6.666666666666735130e-01;
inline constexpr double kLg2 = 3.999999999940941908e-01;
inline constexpr double kLg3 = 2.857142874366239149e-01;
inline constexpr double kLg4 = 2.222219843214978396e-01;
inline constexpr double kLg5 = 1.818357216161805012e-01;
inline constexpr double kLg6 = 1.531383769920937332e-01;
inline constexpr double kLg7 = 1.479819860511658591e-01;
inline constexpr double kSqrt2 = 1.41421356237309514547;
inline constexpr double kTwo52 = 0x1p52;

// Natural log for positive normal doubles.
inline double log_poly(double x) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const double biased = std::bit_cast<double>(0x4330000000000000ull | (bits >> 52)) - kTwo52;
  double k = biased - 1023.0;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
  if (m > kSqrt2) {
    m = m * 0.5;
    k = k + 1.0;
  }
  const double f = m - 1.0;
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg2 + w * (kLg4 + w * kLg6));
  const double t2 = z * (kLg1 + w * (kLg3 + w * (kLg5 + w * kLg7)));
  const double r = t2 + t1;
  const double hfsq = 0.5 * (f * f);
  return k * kLn2Hi - ((hfsq - (s * (hfsq + r) + k * kLn2Lo)) - f);
}

inline constexpr double kS1 = -1.66666666666666324348e-01;
inline constexpr double kS2 = 8.33333333332248946124e-03;
inline constexpr double kS3 = -1.98412698298579493134e-04;
inline constexpr double kS4 = 2.75573137070700676789e-06;
inline constexpr double kS5 = -2.50507602534068634195e-08;
inline constexpr double kS6 = 1.58969099521155010221e-10;
inline constexpr double kC1 = 4.16666666666666019037e-02;
inline constexpr double kC2 = -1.38888888888741095749e-03;
inline constexpr double kC3 = 2.48015872894767294178e-05;
inline constexpr double kC4 = -2.75573143513906633035e-07;
inline constexpr double kC5 = 2.08757232129817482790e-09;
inline constexpr double kC6 = -1.13596475577881948265e-11;
inline constexpr double kTwoPi = 6.28318530717958647692;

// sin and cos on |x| <= pi/4.
inline double sin_kernel(double x) {
  const double z = x * x;
  const double v = z * x;
  const double r = kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6)));
  return x + v * (kS1 + z * r);
}

inline double cos_kernel(double x) {
  const double z = x * x;
  const double r = z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6)))));
  const double hz = 0.5 * z;
  const double w = 1.0 - hz;
  return w + (((1.0 - w) - hz) + z * r);
}

// (cos 2 pi v, sin 2 pi v) for v in [0, 1].
inline void sincos_turns(double v, double& c, double& s) {
  const double q = std::nearbyint(4.0 * v);
  const double y = v - 0.25 * q;
  const double theta = kTwoPi * y;
  const double ck = cos_kernel(theta);
  const double sk = sin_kernel(theta);
  const double quadrant = q - 4.0 * std::floor(q * 0.25);
  if (quadrant == 0.0) {
    c = ck;
    s = sk;
  } else if (quadrant == 1.0) {
    c = -sk;
    s = ck;
  } else if (quadrant == 2.0) {
    c = -ck;
    s = -sk;
  } else {
    c = sk;
    s = -ck;
  }
}

inline void gaussian_pair(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key,
                          double& z0, double& z1) {
  const auto b = philox_block(counter, key);
  const double u1 = open_unit(b[0], b[1]);
  const double u2 = open_unit(b[2], b[3]);
  const double rad = std::sqrt(-2.0 * log_poly(u1));
  double c = 0.0;
  double s = 0.0;
  sincos_turns(u2, c, s);
  z0 = rad * c;
  z1 = rad * s;
}

inline double heat_point(double left, double mid, double right, double r) {
  const double lap = (left + right) - 2.0 * mid;
  return mid + r * lap;
}

inline double heat_noise_point(double left, double mid, double right, double xi, double r,
                               double noise_scale) {
  const double drift = heat_point(left, mid, right, r);
  return drift + (mid * xi) * noise_scale;
}

}  // namespace
}  // namespace shelab::kernels::detail
