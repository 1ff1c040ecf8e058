#pragma once
// Backend-dispatched inner loops of the link-level simulator.
//
// Two implementations exist for every kernel: a portable scalar one and an
// AVX2 one (compiled only when the toolchain supports -mavx2, used only when
// the running CPU reports AVX2).  Both compute the *same arithmetic in the
// same evaluation order*, pinned by this contract:
//
//   - complex multiply is the textbook form
//       re = a.re*b.re - a.im*b.im,  im = a.im*b.re + a.re*b.im
//     with no fused multiply-add (the build sets -ffp-contract=off);
//   - elementwise kernels perform one rounding per arithmetic step, per
//     element, so lane width cannot change results;
//   - reductions use a fixed two-accumulator interleave: term i is added
//     into accumulator (i mod 2) in increasing i, and the two halves are
//     combined by one final addition.  This is exactly how a 256-bit
//     register accumulates two complex lanes, and the scalar backend
//     reproduces it literally.
//
// Under that contract the backends are bitwise identical, which is what the
// equivalence tests assert.  Backend selection is a runtime decision
// (`Backend::kAuto` probes the CPU once); requesting kAvx2 on a machine
// without it is an error, not a silent fallback.

#include <complex>
#include <cstddef>

namespace relaybf::kernels {

using cx = std::complex<double>;

enum class Backend { kAuto, kScalar, kAvx2 };

// True when the AVX2 backend was compiled in and the CPU supports it.
bool avx2_supported();

// kAuto -> kAvx2 when available, else kScalar.  Requesting kAvx2 without
// support throws std::runtime_error.
Backend resolve(Backend requested);

const char* name(Backend b);  // "auto", "scalar", "avx2"

// Relay transmit encoding for one symbol pair over n relays:
//   x1[i] = f[i]*s1 + e1[i]          (received in the first slot)
//   x2[i] = f[i]*s2 + e2[i]          (received in the second slot)
//   t3[i] = cw1[i]*x1[i] + cw2[i]*conj(x2[i])
//   t4[i] = cw1[i]*x2[i] - cw2[i]*conj(x1[i])
// where cw1/cw2 are the conjugated relay weights and s1/s2 the amplified
// source symbols of the two receive slots.  All arrays have n entries; t3/t4
// must not alias the inputs.
void relay_transmit(Backend be, std::size_t n, const cx* f, const cx* cw1,
                    const cx* cw2, cx s1, cx s2, const cx* e1, const cx* e2,
                    cx* t3, cx* t4);

// Unconjugated dot product sum_i g[i]*t[i] under the two-accumulator
// reduction contract described above.
cx dot_u(Backend be, std::size_t n, const cx* g, const cx* t);

// acc[i] += |t[i]|^2 (one multiply per component, one addition to combine,
// one addition into the accumulator -- per element).
void abs2_accum(Backend be, std::size_t n, const cx* t, double* acc);

}  // namespace relaybf::kernels
