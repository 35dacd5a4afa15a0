#pragma once

// Dense float64 kernels used by every inner loop in the library.
//
// Each kernel has a portable scalar reference implementation plus optional
// SIMD variants (AVX2+FMA on x86-64, NEON on AArch64). The active variant is
// picked once per process from the CPU features; setting the environment
// variable RSE_SIMD to "scalar", "avx2" or "neon" overrides the choice (an
// unavailable request falls back to scalar).
//
// Variants agree with the scalar reference up to floating-point reassociation;
// they are not bit-identical to each other.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace rse::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

// Reference table; always available.
const KernelTable& scalar_table() noexcept;

// Variants compiled in and supported by the running CPU, scalar first.
std::vector<Isa> available_isas();

// Table for a specific variant. Throws rse::Error(Config) if unavailable.
const KernelTable& table_for(Isa isa);

// Process-wide selection (see header comment).
const KernelTable& active() noexcept;

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) noexcept {
  active().scale(alpha, x.data(), x.size());
}

namespace detail {
double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void scale_scalar(double alpha, double* x, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scale_avx2(double alpha, double* x, std::size_t n);
#endif
#if defined(__aarch64__)
double dot_neon(const double* x, const double* y, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
void scale_neon(double alpha, double* x, std::size_t n);
#endif
}  // namespace detail

}  // namespace rse::kernels
