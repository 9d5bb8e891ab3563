#include "kernels/kernels_internal.hpp"
#include "kernels/scalar_math.hpp"

namespace shelab::kernels::detail {

void gaussian_fill_scalar(StreamKey key, std::uint32_t step, double* out, std::size_t n) {
  const std::array<std::uint32_t, 2> k = {static_cast<std::uint32_t>(key.seed),
                                          static_cast<std::uint32_t>(key.seed >> 32)};
  const std::size_t pairs = (n + 1) / 2;
  for (std::size_t j = 0; j < pairs; ++j) {
    double z0 = 0.0;
    double z1 = 0.0;
    gaussian_pair({static_cast<std::uint32_t>(j), step, key.replica, key.tag}, k, z0, z1);
    out[2 * j] = z0;
    if (2 * j + 1 < n) out[2 * j + 1] = z1;
  }
}

std::size_t heat_noise_step_scalar(const double* z, const double* noise, double* out,
                                   std::size_t n, double r, double noise_scale, bool periodic) {
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? z[i - 1] : (periodic ? z[n - 1] : 0.0);
    const double right = i + 1 < n ? z[i + 1] : (periodic ? z[0] : 0.0);
    double v = heat_noise_point(left, z[i], right, noise[i], r, noise_scale);
    if (v < 0.0) {
      v = 0.0;
      ++clamped;
    }
    out[i] = v;
  }
  return clamped;
}

void heat_rows_scalar(const double* in, double* out, std::size_t rows, std::size_t cols,
                      double r, bool periodic) {
  for (std::size_t row = 0; row < rows; ++row) {
    const double* a = in + row * cols;
    double* b = out + row * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      const double left = j > 0 ? a[j - 1] : (periodic ? a[cols - 1] : 0.0);
      const double right = j + 1 < cols ? a[j + 1] : (periodic ? a[0] : 0.0);
      b[j] = heat_point(left, a[j], right, r);
    }
  }
}

void heat_cols_scalar(const double* in, double* out, std::size_t rows, std::size_t cols,
                      double r, bool periodic) {
  for (std::size_t row = 0; row < rows; ++row) {
    const double* up = row > 0 ? in + (row - 1) * cols : (periodic ? in + (rows - 1) * cols : nullptr);
    const double* down = row + 1 < rows ? in + (row + 1) * cols : (periodic ? in : nullptr);
    const double* mid = in + row * cols;
    double* b = out + row * cols;
    for (std::size_t j = 0; j < cols; ++j) {
      const double left = up ? up[j] : 0.0;
      const double right = down ? down[j] : 0.0;
      b[j] = heat_point(left, mid[j], right, r);
    }
  }
}

const KernelTable kScalarTable = {
    &gaussian_fill_scalar,
    &heat_noise_step_scalar,
    &heat_rows_scalar,
    &heat_cols_scalar,
};

}  // namespace shelab::kernels::detail
