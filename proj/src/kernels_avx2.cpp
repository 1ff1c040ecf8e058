// AVX2 backend of the simulator kernels.  Compiled with -mavx2 (and the
// project-wide -ffp-contract=off); only ever called after a runtime CPU
// check.  Each vector operation performs exactly the arithmetic of the
// scalar core in kernels_impl.hpp: two complex lanes per 256-bit register,
// textbook complex multiply via addsub, reductions as two independent lane
// accumulators combined once at the end.  See kernels.hpp for the contract.
#if defined(RELAYBF_HAVE_AVX2)

#include <immintrin.h>

#include <complex>
#include <cstddef>

#include "kernels_impl.hpp"

namespace relaybf::kernels::avx2 {

using cx = std::complex<double>;

namespace {

inline const double* dview(const cx* p) {
  return reinterpret_cast<const double*>(p);
}
inline double* dview(cx* p) { return reinterpret_cast<double*>(p); }

// [a0 a1] * [b0 b1] componentwise complex multiply:
//   re = a.re*b.re - a.im*b.im,  im = a.im*b.re + a.re*b.im
inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);      // [b0.re b0.re b1.re b1.re]
  const __m256d b_im = _mm256_permute_pd(b, 0xF); // [b0.im b0.im b1.im b1.im]
  const __m256d a_sw = _mm256_permute_pd(a, 0x5); // [a0.im a0.re a1.im a1.re]
  return _mm256_addsub_pd(_mm256_mul_pd(a, b_re), _mm256_mul_pd(a_sw, b_im));
}

// Negate the imaginary lanes (exact, no rounding).
inline __m256d cconj(__m256d a) {
  const __m256d mask = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
  return _mm256_xor_pd(a, mask);
}

inline __m256d broadcast(cx s) {
  return _mm256_setr_pd(s.real(), s.imag(), s.real(), s.imag());
}

}  // namespace

void relay_transmit(std::size_t n, const cx* f, const cx* cw1, const cx* cw2,
                    cx s1, cx s2, const cx* e1, const cx* e2, cx* t3, cx* t4) {
  const __m256d s1v = broadcast(s1);
  const __m256d s2v = broadcast(s2);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d fv = _mm256_loadu_pd(dview(f + i));
    const __m256d w1v = _mm256_loadu_pd(dview(cw1 + i));
    const __m256d w2v = _mm256_loadu_pd(dview(cw2 + i));
    const __m256d x1 =
        _mm256_add_pd(cmul(fv, s1v), _mm256_loadu_pd(dview(e1 + i)));
    const __m256d x2 =
        _mm256_add_pd(cmul(fv, s2v), _mm256_loadu_pd(dview(e2 + i)));
    const __m256d r3 = _mm256_add_pd(cmul(w1v, x1), cmul(w2v, cconj(x2)));
    const __m256d r4 = _mm256_sub_pd(cmul(w1v, x2), cmul(w2v, cconj(x1)));
    _mm256_storeu_pd(dview(t3 + i), r3);
    _mm256_storeu_pd(dview(t4 + i), r4);
  }
  for (; i < n; ++i)
    detail::relay_transmit_one(f[i], cw1[i], cw2[i], s1, s2, e1[i], e2[i],
                               t3[i], t4[i]);
}

cx dot_u(std::size_t n, const cx* g, const cx* t) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d gv = _mm256_loadu_pd(dview(g + i));
    const __m256d tv = _mm256_loadu_pd(dview(t + i));
    vacc = _mm256_add_pd(vacc, cmul(gv, tv));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vacc);
  cx acc0{lanes[0], lanes[1]};
  const cx acc1{lanes[2], lanes[3]};
  if (i < n) acc0 = detail::cadd(acc0, detail::cmul(g[i], t[i]));
  return detail::cadd(acc0, acc1);
}

void abs2_accum(std::size_t n, const cx* t, double* acc) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(dview(t + i));
    const __m256d y = _mm256_loadu_pd(dview(t + i + 2));
    const __m256d h =
        _mm256_hadd_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y));
    // hadd yields [|t0|^2 |t2|^2 |t1|^2 |t3|^2]; restore element order.
    const __m256d e = _mm256_permute4x64_pd(h, _MM_SHUFFLE(3, 1, 2, 0));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), e));
  }
  for (; i < n; ++i)
    acc[i] += t[i].real() * t[i].real() + t[i].imag() * t[i].imag();
}

}  // namespace relaybf::kernels::avx2

#endif  // RELAYBF_HAVE_AVX2
