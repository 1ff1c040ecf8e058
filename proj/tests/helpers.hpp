#pragma once
// Shared fixtures for the test suites: synthetic channel realizations with
// O(1) coefficients (for math-identity tests) and an independent
// first-principles SNR oracle that goes through the physical per-slot model
// rather than the packed quadratic forms.

#include <complex>
#include <cstdint>
#include <vector>

#include "relaybf/linalg.hpp"
#include "relaybf/model.hpp"
#include "relaybf/rng.hpp"
#include "relaybf/scenario.hpp"

namespace testhelp {

using relaybf::linalg::CVec;
using relaybf::linalg::cx;

// Channels drawn CN(0,1) with unit noise powers; geometry fields are filled
// but carry no physical meaning here.
inline relaybf::scenario::ChannelRealization synthetic_channels(
    int r_cnt, int m_cnt, std::uint64_t seed, double noise_w = 1.0) {
  relaybf::scenario::ChannelRealization ch;
  ch.geometry.relay_count = r_cnt;
  ch.geometry.dest_count = m_cnt;
  ch.seed = seed;
  ch.sigma_nu_sq_w = noise_w;
  ch.sigma_eta_sq_w = noise_w;
  ch.relay_pos.assign(r_cnt, {0.0, 0.0, 0.0});
  ch.dest_pos.assign(m_cnt, {0.0, 0.0, 0.0});
  relaybf::rng::Stream st(seed, 9001);
  std::uint64_t i = 0;
  ch.f.resize(r_cnt);
  for (auto& v : ch.f) v = st.cgaussian(i++);
  ch.g.assign(m_cnt, CVec(r_cnt));
  for (auto& gm : ch.g)
    for (auto& v : gm) v = st.cgaussian(i++);
  ch.d.resize(m_cnt);
  for (auto& v : ch.d) v = st.cgaussian(i++);
  return ch;
}

inline CVec random_w(int r_cnt, std::uint64_t seed, double scale = 1.0) {
  CVec w(2 * (r_cnt + 1));
  relaybf::rng::Stream st(seed, 9002);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * st.cgaussian(i);
  return w;
}

// Equivalent per-substream channel gains of destination m for a given
// solution, computed directly from the physical coefficients.
struct EquivalentChannel {
  cx h1, h2;
  double sigma34_sq;
  double alpha1;
  cx alpha3, alpha4;
};

inline EquivalentChannel equivalent_channel(
    const relaybf::scenario::ChannelRealization& ch, const CVec& w, double a,
    int m) {
  const int r_cnt = ch.geometry.relay_count;
  const int d = r_cnt + 1;
  EquivalentChannel e;
  e.alpha1 = 1.0 / std::sqrt(a);
  e.alpha3 = std::conj(w[d - 1]) * e.alpha1;
  e.alpha4 = std::conj(w[2 * d - 1]) * e.alpha1;
  cx acc1{}, acc2{};
  double fwd = 0.0;
  for (int r = 0; r < r_cnt; ++r) {
    acc1 += std::conj(w[r]) * ch.g[m][r] * ch.f[r];
    acc2 += std::conj(w[d + r]) * ch.g[m][r] * std::conj(ch.f[r]);
    fwd += std::norm(ch.g[m][r]) * (std::norm(w[r]) + std::norm(w[d + r]));
  }
  e.h1 = e.alpha1 * acc1 + e.alpha3 * ch.d[m];
  e.h2 = e.alpha1 * acc2 + e.alpha4 * ch.d[m];
  e.sigma34_sq = ch.sigma_eta_sq_w * fwd + ch.sigma_nu_sq_w;
  return e;
}

// First-principles SNR: direct-slot term + relayed-slot term.
inline double oracle_snr(const relaybf::scenario::ChannelRealization& ch,
                         const CVec& w, double a, int m) {
  EquivalentChannel e = equivalent_channel(ch, w, a, m);
  double direct = e.alpha1 * e.alpha1 * std::norm(ch.d[m]) / ch.sigma_nu_sq_w;
  double relayed = (std::norm(e.h1) + std::norm(e.h2)) / e.sigma34_sq;
  return direct + relayed;
}

}  // namespace testhelp
