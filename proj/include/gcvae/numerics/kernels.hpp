#pragma once

// Dense inner-loop kernels behind every affine layer and its gradients.
//
// Each kernel has a portable scalar reference and an AVX2+FMA variant. The
// variant is picked once at startup from CPUID; GCVAE_KERNELS=scalar in the
// environment (or set_backend) forces the reference path. The two backends
// agree to rounding, not bit-for-bit, since FMA and the 4-lane reduction
// change the summation order.

#include <cstddef>
#include <string_view>

namespace gcvae::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C(m x n) += A(m x k) * B(k x n)
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C(k x n) += A(m x k)^T * B(m x n)
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                  std::size_t n);
  // C(m x k) += A(m x n) * B(k x n)^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                  std::size_t k);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k);
}  // namespace scalar

#if defined(GCVAE_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k);
}  // namespace avx2
#endif

const KernelTable& table(Backend backend);
bool available(Backend backend);

// The table used by the autodiff ops.
const KernelTable& active();
Backend active_backend();
// Throws std::invalid_argument if the backend is not supported on this CPU.
void set_backend(Backend backend);

std::string_view name(Backend backend);

}  // namespace gcvae::kernels
