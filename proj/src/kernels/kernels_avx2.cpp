// AVX2 variants. Each function mirrors its scalar twin in kernels_scalar.cpp
// operation for operation; this file is built with -mavx2 and no FMA.

#include <immintrin.h>

#include <bit>

#include "kernels/kernels_internal.hpp"
#include "kernels/scalar_math.hpp"

namespace shelab::kernels::detail {

namespace {

inline __m256d neg(__m256d x) { return _mm256_xor_pd(x, _mm256_set1_pd(-0.0)); }

inline __m256d open_unit4(__m256i hi, __m256i lo) {
  const __m256i x = _mm256_or_si256(_mm256_slli_epi64(hi, 32), lo);
  const __m256i mant = _mm256_or_si256(_mm256_srli_epi64(x, 12),
                                       _mm256_set1_epi64x(0x3FF0000000000000ll));
  const __m256d one_to_two = _mm256_castsi256_pd(mant);
  return _mm256_add_pd(_mm256_sub_pd(one_to_two, _mm256_set1_pd(1.0)), _mm256_set1_pd(0x1p-53));
}

inline __m256d log4(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i expo = _mm256_srli_epi64(bits, 52);
  const __m256d biased = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(expo, _mm256_set1_epi64x(0x4330000000000000ll))),
      _mm256_set1_pd(kTwo52));
  __m256d k = _mm256_sub_pd(biased, _mm256_set1_pd(1023.0));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
                      _mm256_set1_epi64x(0x3FF0000000000000ll)));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  k = _mm256_blendv_pd(k, _mm256_add_pd(k, _mm256_set1_pd(1.0)), big);

  const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  const __m256d t1 = _mm256_mul_pd(
      w, _mm256_add_pd(_mm256_set1_pd(kLg2),
                       _mm256_mul_pd(w, _mm256_add_pd(_mm256_set1_pd(kLg4),
                                                      _mm256_mul_pd(w, _mm256_set1_pd(kLg6))))));
  const __m256d t2 = _mm256_mul_pd(
      z, _mm256_add_pd(
             _mm256_set1_pd(kLg1),
             _mm256_mul_pd(
                 w, _mm256_add_pd(_mm256_set1_pd(kLg3),
                                  _mm256_mul_pd(w, _mm256_add_pd(_mm256_set1_pd(kLg5),
                                                                 _mm256_mul_pd(w, _mm256_set1_pd(kLg7))))))));
  const __m256d r = _mm256_add_pd(t2, t1);
  const __m256d hfsq = _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_mul_pd(f, f));
  const __m256d inner = _mm256_add_pd(_mm256_mul_pd(s, _mm256_add_pd(hfsq, r)),
                                      _mm256_mul_pd(k, _mm256_set1_pd(kLn2Lo)));
  return _mm256_sub_pd(_mm256_mul_pd(k, _mm256_set1_pd(kLn2Hi)),
                       _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));
}

inline __m256d sin_kernel4(__m256d x) {
  const __m256d z = _mm256_mul_pd(x, x);
  const __m256d v = _mm256_mul_pd(z, x);
  __m256d r = _mm256_add_pd(_mm256_set1_pd(kS5), _mm256_mul_pd(z, _mm256_set1_pd(kS6)));
  r = _mm256_add_pd(_mm256_set1_pd(kS4), _mm256_mul_pd(z, r));
  r = _mm256_add_pd(_mm256_set1_pd(kS3), _mm256_mul_pd(z, r));
  r = _mm256_add_pd(_mm256_set1_pd(kS2), _mm256_mul_pd(z, r));
  return _mm256_add_pd(x, _mm256_mul_pd(v, _mm256_add_pd(_mm256_set1_pd(kS1), _mm256_mul_pd(z, r))));
}

inline __m256d cos_kernel4(__m256d x) {
  const __m256d z = _mm256_mul_pd(x, x);
  __m256d r = _mm256_add_pd(_mm256_set1_pd(kC5), _mm256_mul_pd(z, _mm256_set1_pd(kC6)));
  r = _mm256_add_pd(_mm256_set1_pd(kC4), _mm256_mul_pd(z, r));
  r = _mm256_add_pd(_mm256_set1_pd(kC3), _mm256_mul_pd(z, r));
  r = _mm256_add_pd(_mm256_set1_pd(kC2), _mm256_mul_pd(z, r));
  r = _mm256_add_pd(_mm256_set1_pd(kC1), _mm256_mul_pd(z, r));
  r = _mm256_mul_pd(z, r);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d hz = _mm256_mul_pd(_mm256_set1_pd(0.5), z);
  const __m256d w = _mm256_sub_pd(one, hz);
  return _mm256_add_pd(w, _mm256_add_pd(_mm256_sub_pd(_mm256_sub_pd(one, w), hz),
                                        _mm256_mul_pd(z, r)));
}

inline void sincos_turns4(__m256d v, __m256d& c, __m256d& s) {
  const __m256d q = _mm256_round_pd(_mm256_mul_pd(_mm256_set1_pd(4.0), v),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d y = _mm256_sub_pd(v, _mm256_mul_pd(_mm256_set1_pd(0.25), q));
  const __m256d theta = _mm256_mul_pd(_mm256_set1_pd(kTwoPi), y);
  const __m256d ck = cos_kernel4(theta);
  const __m256d sk = sin_kernel4(theta);
  const __m256d quadrant = _mm256_sub_pd(
      q, _mm256_mul_pd(_mm256_set1_pd(4.0), _mm256_floor_pd(_mm256_mul_pd(q, _mm256_set1_pd(0.25)))));
  const __m256d is1 = _mm256_cmp_pd(quadrant, _mm256_set1_pd(1.0), _CMP_EQ_OQ);
  const __m256d is2 = _mm256_cmp_pd(quadrant, _mm256_set1_pd(2.0), _CMP_EQ_OQ);
  const __m256d is3 = _mm256_cmp_pd(quadrant, _mm256_set1_pd(3.0), _CMP_EQ_OQ);
  c = ck;
  s = sk;
  c = _mm256_blendv_pd(c, neg(sk), is1);
  s = _mm256_blendv_pd(s, ck, is1);
  c = _mm256_blendv_pd(c, neg(ck), is2);
  s = _mm256_blendv_pd(s, neg(sk), is2);
  c = _mm256_blendv_pd(c, sk, is3);
  s = _mm256_blendv_pd(s, neg(ck), is3);
}

inline void philox4(__m256i& c0, __m256i& c1, __m256i& c2, __m256i& c3, std::uint32_t k0,
                    std::uint32_t k1) {
  const __m256i m0 = _mm256_set1_epi64x(kPhiloxM0);
  const __m256i m1 = _mm256_set1_epi64x(kPhiloxM1);
  const __m256i lo_mask = _mm256_set1_epi64x(0xFFFFFFFFll);
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += kPhiloxW0;
      k1 += kPhiloxW1;
    }
    const __m256i p0 = _mm256_mul_epu32(c0, m0);
    const __m256i p1 = _mm256_mul_epu32(c2, m1);
    const __m256i hi0 = _mm256_srli_epi64(p0, 32);
    const __m256i lo0 = _mm256_and_si256(p0, lo_mask);
    const __m256i hi1 = _mm256_srli_epi64(p1, 32);
    const __m256i lo1 = _mm256_and_si256(p1, lo_mask);
    const __m256i nc0 = _mm256_xor_si256(_mm256_xor_si256(hi1, c1), _mm256_set1_epi64x(k0));
    const __m256i nc2 = _mm256_xor_si256(_mm256_xor_si256(hi0, c3), _mm256_set1_epi64x(k1));
    c0 = nc0;
    c1 = lo1;
    c2 = nc2;
    c3 = lo0;
  }
}

void gaussian_fill_avx2(StreamKey key, std::uint32_t step, double* out, std::size_t n) {
  const auto k0 = static_cast<std::uint32_t>(key.seed);
  const auto k1 = static_cast<std::uint32_t>(key.seed >> 32);
  const std::size_t pairs = (n + 1) / 2;
  const std::size_t full_pairs = n / 2;
  std::size_t j = 0;
  for (; j + 4 <= full_pairs; j += 4) {
    const auto base = static_cast<long long>(static_cast<std::uint32_t>(j));
    __m256i c0 = _mm256_set_epi64x(base + 3, base + 2, base + 1, base);
    c0 = _mm256_and_si256(c0, _mm256_set1_epi64x(0xFFFFFFFFll));
    __m256i c1 = _mm256_set1_epi64x(step);
    __m256i c2 = _mm256_set1_epi64x(key.replica);
    __m256i c3 = _mm256_set1_epi64x(key.tag);
    philox4(c0, c1, c2, c3, k0, k1);
    const __m256d u1 = open_unit4(c0, c1);
    const __m256d u2 = open_unit4(c2, c3);
    const __m256d rad = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_set1_pd(-2.0), log4(u1)));
    __m256d c;
    __m256d s;
    sincos_turns4(u2, c, s);
    const __m256d z0 = _mm256_mul_pd(rad, c);
    const __m256d z1 = _mm256_mul_pd(rad, s);
    const __m256d lo = _mm256_unpacklo_pd(z0, z1);
    const __m256d hi = _mm256_unpackhi_pd(z0, z1);
    _mm256_storeu_pd(out + 2 * j, _mm256_permute2f128_pd(lo, hi, 0x20));
    _mm256_storeu_pd(out + 2 * j + 4, _mm256_permute2f128_pd(lo, hi, 0x31));
  }
  const std::array<std::uint32_t, 2> k = {k0, k1};
  for (; j < pairs; ++j) {
    double z0 = 0.0;
    double z1 = 0.0;
    gaussian_pair({static_cast<std::uint32_t>(j), step, key.replica, key.tag}, k, z0, z1);
    out[2 * j] = z0;
    if (2 * j + 1 < n) out[2 * j + 1] = z1;
  }
}

inline __m256d heat4(__m256d left, __m256d mid, __m256d right, __m256d r) {
  const __m256d lap = _mm256_sub_pd(_mm256_add_pd(left, right), _mm256_mul_pd(_mm256_set1_pd(2.0), mid));
  return _mm256_add_pd(mid, _mm256_mul_pd(r, lap));
}

std::size_t heat_noise_step_avx2(const double* z, const double* noise, double* out, std::size_t n,
                                 double r, double noise_scale, bool periodic) {
  if (n < 3) {
    return kScalarTable.heat_noise_step(z, noise, out, n, r, noise_scale, periodic);
  }
  std::size_t clamped = 0;
  auto edge = [&](std::size_t i, double left, double right) {
    double v = heat_noise_point(left, z[i], right, noise[i], r, noise_scale);
    if (v < 0.0) {
      v = 0.0;
      ++clamped;
    }
    out[i] = v;
  };
  edge(0, periodic ? z[n - 1] : 0.0, z[1]);

  const __m256d rv = _mm256_set1_pd(r);
  const __m256d sv = _mm256_set1_pd(noise_scale);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 1;
  for (; i + 4 <= n - 1; i += 4) {
    const __m256d mid = _mm256_loadu_pd(z + i);
    const __m256d drift = heat4(_mm256_loadu_pd(z + i - 1), mid, _mm256_loadu_pd(z + i + 1), rv);
    __m256d v = _mm256_add_pd(drift, _mm256_mul_pd(_mm256_mul_pd(mid, _mm256_loadu_pd(noise + i)), sv));
    const __m256d negative = _mm256_cmp_pd(v, zero, _CMP_LT_OQ);
    clamped += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(negative))));
    v = _mm256_blendv_pd(v, zero, negative);
    _mm256_storeu_pd(out + i, v);
  }
  for (; i < n - 1; ++i) edge(i, z[i - 1], z[i + 1]);
  edge(n - 1, z[n - 2], periodic ? z[0] : 0.0);
  return clamped;
}

void heat_rows_avx2(const double* in, double* out, std::size_t rows, std::size_t cols, double r,
                    bool periodic) {
  if (cols < 3) {
    kScalarTable.heat_rows(in, out, rows, cols, r, periodic);
    return;
  }
  const __m256d rv = _mm256_set1_pd(r);
  for (std::size_t row = 0; row < rows; ++row) {
    const double* a = in + row * cols;
    double* b = out + row * cols;
    b[0] = heat_point(periodic ? a[cols - 1] : 0.0, a[0], a[1], r);
    std::size_t j = 1;
    for (; j + 4 <= cols - 1; j += 4) {
      _mm256_storeu_pd(b + j, heat4(_mm256_loadu_pd(a + j - 1), _mm256_loadu_pd(a + j),
                                    _mm256_loadu_pd(a + j + 1), rv));
    }
    for (; j < cols - 1; ++j) b[j] = heat_point(a[j - 1], a[j], a[j + 1], r);
    b[cols - 1] = heat_point(a[cols - 2], a[cols - 1], periodic ? a[0] : 0.0, r);
  }
}

void heat_cols_avx2(const double* in, double* out, std::size_t rows, std::size_t cols, double r,
                    bool periodic) {
  const __m256d rv = _mm256_set1_pd(r);
  const __m256d zero = _mm256_setzero_pd();
  for (std::size_t row = 0; row < rows; ++row) {
    const double* up = row > 0 ? in + (row - 1) * cols : (periodic ? in + (rows - 1) * cols : nullptr);
    const double* down = row + 1 < rows ? in + (row + 1) * cols : (periodic ? in : nullptr);
    const double* mid = in + row * cols;
    double* b = out + row * cols;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d left = up ? _mm256_loadu_pd(up + j) : zero;
      const __m256d right = down ? _mm256_loadu_pd(down + j) : zero;
      _mm256_storeu_pd(b + j, heat4(left, _mm256_loadu_pd(mid + j), right, rv));
    }
    for (; j < cols; ++j) {
      b[j] = heat_point(up ? up[j] : 0.0, mid[j], down ? down[j] : 0.0, r);
    }
  }
}

}  // namespace

const KernelTable kAvx2Table = {
    &gaussian_fill_avx2,
    &heat_noise_step_avx2,
    &heat_rows_avx2,
    &heat_cols_avx2,
};

}  // namespace shelab::kernels::detail
