#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gcvae/numerics/kernels.hpp"

namespace gcvae::kernels {

namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::axpy, &scalar::gemm_nn, &scalar::gemm_tn,
                                   &scalar::gemm_nt};
#if defined(GCVAE_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::gemm_nn, &avx2::gemm_tn,
                                 &avx2::gemm_nt};
#endif

bool cpu_has_avx2() {
#if defined(GCVAE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("GCVAE_KERNELS"); env && std::string(env) == "scalar") {
    return Backend::scalar;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

bool available(Backend backend) {
  return backend == Backend::scalar || cpu_has_avx2();
}

const KernelTable& table(Backend backend) {
#if defined(GCVAE_HAVE_AVX2)
  if (backend == Backend::avx2) {
    if (!available(Backend::avx2)) throw std::invalid_argument("avx2 kernels not supported on this CPU");
    return kAvx2Table;
  }
#else
  if (backend == Backend::avx2) throw std::invalid_argument("avx2 kernels not compiled in");
#endif
  return kScalarTable;
}

const KernelTable& active() { return table(current().load(std::memory_order_relaxed)); }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  (void)table(backend);
  current().store(backend, std::memory_order_relaxed);
}

std::string_view name(Backend backend) { return backend == Backend::avx2 ? "avx2" : "scalar"; }

}  // namespace gcvae::kernels
