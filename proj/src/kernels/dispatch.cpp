#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels/kernels_internal.hpp"
#include "kernels/scalar_math.hpp"

namespace shelab::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(SHELAB_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("SHELAB_SIMD")) {
    const Backend requested = backend_from_string(env);
    if (backend_available(requested)) return requested;
  }
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
  }
  return "unknown";
}

Backend backend_from_string(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  throw std::invalid_argument("unknown SIMD backend '" + std::string(name) + "'");
}

bool backend_available(Backend b) {
  return b == Backend::scalar || (b == Backend::avx2 && cpu_has_avx2());
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::scalar};
  if (backend_available(Backend::avx2)) out.push_back(Backend::avx2);
  return out;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("SIMD backend '" + std::string(to_string(b)) +
                                "' is not available on this machine");
  }
  current().store(b, std::memory_order_relaxed);
}

const KernelTable& table(Backend b) {
#if defined(SHELAB_BUILD_AVX2)
  if (b == Backend::avx2) {
    if (!cpu_has_avx2()) throw std::invalid_argument("AVX2 kernels requested on a CPU without AVX2");
    return detail::kAvx2Table;
  }
#endif
  if (b != Backend::scalar) throw std::invalid_argument("SIMD backend not compiled in");
  return detail::kScalarTable;
}

const KernelTable& active() { return table(active_backend()); }

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  return detail::philox_block(counter, key);
}

void gaussian_fill(StreamKey key, std::uint32_t step, std::span<double> out) {
  active().gaussian_fill(key, step, out.data(), out.size());
}

std::size_t heat_noise_step(std::span<const double> z, std::span<const double> noise,
                            std::span<double> out, double r, double noise_scale, bool periodic) {
  if (noise.size() != z.size() || out.size() != z.size()) {
    throw std::invalid_argument("heat_noise_step: size mismatch");
  }
  return active().heat_noise_step(z.data(), noise.data(), out.data(), z.size(), r, noise_scale,
                                  periodic);
}

void heat_apply(std::span<const double> in, std::span<double> out, double r, bool periodic) {
  if (out.size() != in.size()) throw std::invalid_argument("heat_apply: size mismatch");
  active().heat_rows(in.data(), out.data(), 1, in.size(), r, periodic);
}

}  // namespace shelab::kernels
