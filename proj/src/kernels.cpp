#include "relaybf/kernels.hpp"

#include <stdexcept>

#include "kernels_impl.hpp"

namespace relaybf::kernels {

// Implemented in kernels_avx2.cpp when the toolchain provides -mavx2.
#if defined(RELAYBF_HAVE_AVX2)
namespace avx2 {
void relay_transmit(std::size_t n, const cx* f, const cx* cw1, const cx* cw2,
                    cx s1, cx s2, const cx* e1, const cx* e2, cx* t3, cx* t4);
cx dot_u(std::size_t n, const cx* g, const cx* t);
void abs2_accum(std::size_t n, const cx* t, double* acc);
}  // namespace avx2
#endif

bool avx2_supported() {
#if defined(RELAYBF_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend resolve(Backend requested) {
  switch (requested) {
    case Backend::kAuto:
      return avx2_supported() ? Backend::kAvx2 : Backend::kScalar;
    case Backend::kScalar:
      return Backend::kScalar;
    case Backend::kAvx2:
      if (!avx2_supported())
        throw std::runtime_error(
            "avx2 kernel backend requested but not available on this machine");
      return Backend::kAvx2;
  }
  throw std::logic_error("unknown kernel backend");
}

const char* name(Backend b) {
  switch (b) {
    case Backend::kAuto:
      return "auto";
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "?";
}

namespace scalar {

void relay_transmit(std::size_t n, const cx* f, const cx* cw1, const cx* cw2,
                    cx s1, cx s2, const cx* e1, const cx* e2, cx* t3, cx* t4) {
  for (std::size_t i = 0; i < n; ++i)
    detail::relay_transmit_one(f[i], cw1[i], cw2[i], s1, s2, e1[i], e2[i],
                               t3[i], t4[i]);
}

cx dot_u(std::size_t n, const cx* g, const cx* t) {
  cx acc0{0.0, 0.0}, acc1{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const cx p = detail::cmul(g[i], t[i]);
    if (i & 1)
      acc1 = detail::cadd(acc1, p);
    else
      acc0 = detail::cadd(acc0, p);
  }
  return detail::cadd(acc0, acc1);
}

void abs2_accum(std::size_t n, const cx* t, double* acc) {
  for (std::size_t i = 0; i < n; ++i)
    acc[i] += t[i].real() * t[i].real() + t[i].imag() * t[i].imag();
}

}  // namespace scalar

void relay_transmit(Backend be, std::size_t n, const cx* f, const cx* cw1,
                    const cx* cw2, cx s1, cx s2, const cx* e1, const cx* e2,
                    cx* t3, cx* t4) {
#if defined(RELAYBF_HAVE_AVX2)
  if (resolve(be) == Backend::kAvx2)
    return avx2::relay_transmit(n, f, cw1, cw2, s1, s2, e1, e2, t3, t4);
#else
  (void)resolve(be);
#endif
  scalar::relay_transmit(n, f, cw1, cw2, s1, s2, e1, e2, t3, t4);
}

cx dot_u(Backend be, std::size_t n, const cx* g, const cx* t) {
#if defined(RELAYBF_HAVE_AVX2)
  if (resolve(be) == Backend::kAvx2) return avx2::dot_u(n, g, t);
#else
  (void)resolve(be);
#endif
  return scalar::dot_u(n, g, t);
}

void abs2_accum(Backend be, std::size_t n, const cx* t, double* acc) {
#if defined(RELAYBF_HAVE_AVX2)
  if (resolve(be) == Backend::kAvx2) return avx2::abs2_accum(n, t, acc);
#else
  (void)resolve(be);
#endif
  scalar::abs2_accum(n, t, acc);
}

}  // namespace relaybf::kernels
