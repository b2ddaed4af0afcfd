// SPDX-License-Identifier: Apache-2.0
#include "siblingshift/kernels.hpp"

#include <cstdlib>
#include <string>

#include "kernel_impl.hpp"
#include "siblingshift/error.hpp"

namespace siblingshift::kernels {

namespace {

constexpr KernelTable kScalar{Isa::scalar,
                              detail::city_block_scalar,
                              detail::squared_l2_scalar,
                              detail::chebyshev_scalar,
                              detail::bray_curtis_scalar,
                              detail::canberra_scalar,
                              detail::dot_scalar};

#if defined(SIBLINGSHIFT_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2,
                            detail::city_block_avx2,
                            detail::squared_l2_avx2,
                            detail::chebyshev_avx2,
                            detail::bray_curtis_avx2,
                            detail::canberra_avx2,
                            detail::dot_avx2};
#endif

#if defined(SIBLINGSHIFT_HAVE_NEON)
constexpr KernelTable kNeon{Isa::neon,
                            detail::city_block_neon,
                            detail::squared_l2_neon,
                            detail::chebyshev_neon,
                            detail::bray_curtis_neon,
                            detail::canberra_neon,
                            detail::dot_neon};
#endif

bool cpu_has_avx2() noexcept {
#if defined(SIBLINGSHIFT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported;
#else
  return false;
#endif
}

const KernelTable& widest() noexcept {
#if defined(SIBLINGSHIFT_HAVE_AVX2)
  if (cpu_has_avx2()) return kAvx2;
#endif
#if defined(SIBLINGSHIFT_HAVE_NEON)
  return kNeon;
#endif
  return kScalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view token) {
  if (token == "scalar") return Isa::scalar;
  if (token == "avx2") return Isa::avx2;
  if (token == "neon") return Isa::neon;
  throw Error(ErrorKind::invalid_argument, "unknown kernel ISA '" + std::string(token) + "'");
}

const KernelTable& scalar_table() noexcept { return kScalar; }

bool available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return cpu_has_avx2();
    case Isa::neon:
#if defined(SIBLINGSHIFT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) {
    throw Error(ErrorKind::invalid_argument,
                "kernel ISA '" + std::string(to_string(isa)) + "' is not available");
  }
  switch (isa) {
#if defined(SIBLINGSHIFT_HAVE_AVX2)
    case Isa::avx2: return kAvx2;
#endif
#if defined(SIBLINGSHIFT_HAVE_NEON)
    case Isa::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active_table() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("SIBLINGSHIFT_KERNEL");
    if (env == nullptr || std::string_view(env).empty() || std::string_view(env) == "auto") {
      return widest();
    }
    return table(parse_isa(env));
  }();
  return chosen;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (available(isa)) out.push_back(isa);
  }
  return out;
}

}  // namespace siblingshift::kernels
