#include <cstdlib>
#include <cstring>

#include "bilin/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace bilin::simd {

namespace {

constexpr Kernels kScalar{Isa::scalar, detail::dot_scalar, detail::gemv_scalar, detail::syr_scalar,
                          detail::quad_scalar};

#if defined(BILIN_HAVE_AVX2)
constexpr Kernels kAvx2{Isa::avx2, detail::dot_avx2, detail::gemv_avx2, detail::syr_avx2, detail::quad_avx2};
#endif

#if defined(BILIN_HAVE_NEON)
constexpr Kernels kNeon{Isa::neon, detail::dot_neon, detail::gemv_neon, detail::syr_neon, detail::quad_neon};
#endif

const Kernels& select() noexcept {
  if (const char* env = std::getenv("BILIN_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return kScalar;
  }
  if (const Kernels* k = kernels_for(Isa::avx2)) return *k;
  if (const Kernels* k = kernels_for(Isa::neon)) return *k;
  return kScalar;
}

}  // namespace

const Kernels& scalar_kernels() noexcept { return kScalar; }

const Kernels* kernels_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
#if defined(BILIN_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
#endif
      return nullptr;
    case Isa::neon:
#if defined(BILIN_HAVE_NEON)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Kernels& active() noexcept {
  static const Kernels& chosen = select();
  return chosen;
}

const char* isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

}  // namespace bilin::simd
