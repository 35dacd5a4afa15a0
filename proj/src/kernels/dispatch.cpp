#include "rse/error.hpp"
#include "rse/kernels.hpp"

#include <cstdlib>
#include <string>

namespace rse::kernels {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, detail::dot_scalar, detail::axpy_scalar,
                              detail::scale_scalar};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kAvx2{Isa::Avx2, detail::dot_avx2, detail::axpy_avx2, detail::scale_avx2};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{Isa::Neon, detail::dot_neon, detail::axpy_neon, detail::scale_neon};
#endif

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;  // mandatory in ARMv8-A
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& select() noexcept {
  if (const char* env = std::getenv("RSE_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == to_string(isa) && cpu_supports(isa)) return table_for(isa);
    }
    if (want != "auto") return kScalar;
  }
  const auto isas = available_isas();
  return table_for(isas.back());
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_table() noexcept { return kScalar; }

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table_for(Isa isa) {
  if (!cpu_supports(isa)) {
    throw Error(ErrorKind::Config, "kernel variant '" + std::string(to_string(isa)) +
                                       "' is not available on this CPU");
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2:
      return kAvx2;
#endif
#if defined(__aarch64__)
    case Isa::Neon:
      return kNeon;
#endif
    default:
      return kScalar;
  }
}

const KernelTable& active() noexcept {
  static const KernelTable& chosen = select();
  return chosen;
}

}  // namespace rse::kernels
