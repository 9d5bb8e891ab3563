#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

// Data-parallel inner loops of the lattice simulator and the covariance oracle.
//
// Every kernel has a scalar reference implementation and, where the build and
// the CPU allow, an AVX2 variant. Variants perform the same IEEE operations in
// the same order, so their outputs are bit-identical; the test suite enforces
// this. The active backend is picked once at startup (best available, or the
// SHELAB_SIMD environment variable) and may be overridden with set_backend().

namespace shelab::kernels {

enum class Backend { scalar, avx2 };

std::string_view to_string(Backend b);
Backend backend_from_string(std::string_view name);

bool backend_available(Backend b);
std::vector<Backend> available_backends();
Backend active_backend();
void set_backend(Backend b);

// Identifies one counter-based random stream. The 128-bit Philox counter is
// (pair index, step, replica, tag) and the 64-bit key is the seed, so any
// (seed, replica, step, site) addresses its variate directly.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  std::uint32_t tag = 0;
};

// Raw Philox4x32-10 block; exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

struct KernelTable {
  // out[2j], out[2j+1] <- Box-Muller pair from counter (j, step, replica, tag).
  void (*gaussian_fill)(StreamKey key, std::uint32_t step, double* out, std::size_t n);

  // One explicit Euler-Maruyama step of dZ = (1/2) Z_xx dt + Z dW:
  //   out = z + r*((z[i-1] + z[i+1]) - 2 z[i]) + (z[i]*noise[i])*noise_scale
  // with zero ghosts (Dirichlet) or wrap-around (periodic). Negative results are
  // clamped to zero; returns the number of clamped sites.
  std::size_t (*heat_noise_step)(const double* z, const double* noise, double* out,
                                 std::size_t n, double r, double noise_scale, bool periodic);

  // Deterministic heat stencil applied along each row of a row-major matrix.
  void (*heat_rows)(const double* in, double* out, std::size_t rows, std::size_t cols,
                    double r, bool periodic);

  // Same stencil applied along each column.
  void (*heat_cols)(const double* in, double* out, std::size_t rows, std::size_t cols,
                    double r, bool periodic);
};

const KernelTable& table(Backend b);
const KernelTable& active();

// Convenience wrappers over the active backend.
void gaussian_fill(StreamKey key, std::uint32_t step, std::span<double> out);
std::size_t heat_noise_step(std::span<const double> z, std::span<const double> noise,
                            std::span<double> out, double r, double noise_scale, bool periodic);
void heat_apply(std::span<const double> in, std::span<double> out, double r, bool periodic);

}  // namespace shelab::kernels
