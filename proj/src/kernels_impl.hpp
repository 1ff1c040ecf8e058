#pragma once
// Shared scalar cores of the simulator kernels.  Both backends fall back to
// these for loop tails, so the arithmetic lives in exactly one place.  The
// complex operations are spelled out component-wise rather than through
// std::complex operators to pin the evaluation order of the contract in
// kernels.hpp independently of library implementation choices.

#include <complex>
#include <cstddef>

namespace relaybf::kernels::detail {

using cx = std::complex<double>;

inline cx cmul(cx a, cx b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.imag() * b.real() + a.real() * b.imag()};
}

inline cx cadd(cx a, cx b) { return {a.real() + b.real(), a.imag() + b.imag()}; }

inline cx csub(cx a, cx b) { return {a.real() - b.real(), a.imag() - b.imag()}; }

inline cx cconj(cx a) { return {a.real(), -a.imag()}; }

// One element of the relay transmit encoding.
inline void relay_transmit_one(cx f, cx cw1, cx cw2, cx s1, cx s2, cx e1,
                               cx e2, cx& t3, cx& t4) {
  const cx x1 = cadd(cmul(f, s1), e1);
  const cx x2 = cadd(cmul(f, s2), e2);
  t3 = cadd(cmul(cw1, x1), cmul(cw2, cconj(x2)));
  t4 = csub(cmul(cw1, x2), cmul(cw2, cconj(x1)));
}

}  // namespace relaybf::kernels::detail
