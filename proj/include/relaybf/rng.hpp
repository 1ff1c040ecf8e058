#pragma once
// Counter-based random number generation.
//
// All randomness in the project flows through Philox4x32-10 (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3"), keyed by a (seed, stream)
// pair and indexed by a 64-bit counter.  Draw i of stream s under seed k is a
// pure function of (k, s, i): realizations are portable, independent streams
// can be split without coordination, and any draw can be recomputed in
// isolation (useful for block-parallel simulation).
//
// Gaussian variates use Box-Muller on the two 53-bit uniforms produced by one
// Philox block; there is no rejection step, so the counter discipline is
// preserved (draw i always consumes exactly block i).

#include <cmath>
#include <complex>
#include <cstdint>

namespace relaybf::rng {

// splitmix64 finalizer; used to derive well-mixed Philox keys from
// user-facing (seed, stream) identifiers.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct U64Pair {
  std::uint64_t lo, hi;
};

// One Philox4x32-10 block: key (k0,k1), counter (ctr, lane) -> 128 bits.
inline U64Pair philox4x32(std::uint32_t k0, std::uint32_t k1, std::uint64_t ctr,
                          std::uint64_t lane) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  std::uint32_t c0 = static_cast<std::uint32_t>(ctr);
  std::uint32_t c1 = static_cast<std::uint32_t>(ctr >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(lane);
  std::uint32_t c3 = static_cast<std::uint32_t>(lane >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
    std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
    std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32);
    std::uint32_t l0 = static_cast<std::uint32_t>(p0);
    std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32);
    std::uint32_t l1 = static_cast<std::uint32_t>(p1);
    std::uint32_t n0 = h1 ^ c1 ^ k0;
    std::uint32_t n1 = l1;
    std::uint32_t n2 = h0 ^ c3 ^ k1;
    std::uint32_t n3 = l0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kW0;
    k1 += kW1;
  }
  return {(static_cast<std::uint64_t>(c1) << 32) | c0,
          (static_cast<std::uint64_t>(c3) << 32) | c2};
}

// Uniform on (0, 1]; never returns 0, so log(u) is always finite.
inline double u01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// A keyed stream of random draws, addressed by counter.
class Stream {
 public:
  Stream() : k0_(0), k1_(0) {}
  Stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t a = mix64(seed ^ 0x243f6a8885a308d3ull);
    std::uint64_t b = mix64(a ^ mix64(stream_id));
    k0_ = static_cast<std::uint32_t>(b);
    k1_ = static_cast<std::uint32_t>(b >> 32);
  }

  U64Pair raw(std::uint64_t i) const { return philox4x32(k0_, k1_, i, 0); }

  std::uint64_t bits(std::uint64_t i) const { return raw(i).lo; }

  double uniform(std::uint64_t i) const { return u01(raw(i).lo); }

  // Two independent N(0,1) variates from draw i (one Philox block).
  void gaussian_pair(std::uint64_t i, double& g0, double& g1) const {
    U64Pair p = raw(i);
    double u1 = u01(p.lo);
    double u2 = u01(p.hi);
    double r = std::sqrt(-2.0 * std::log(u1));
    double phi = 6.283185307179586476925286766559 * u2;
    g0 = r * std::cos(phi);
    g1 = r * std::sin(phi);
  }

  double gaussian(std::uint64_t i) const {
    double g0, g1;
    gaussian_pair(i, g0, g1);
    return g0;
  }

  // Circularly symmetric complex normal CN(0,1): E|z|^2 = 1.
  std::complex<double> cgaussian(std::uint64_t i) const {
    double g0, g1;
    gaussian_pair(i, g0, g1);
    return {g0 * 0.70710678118654752440, g1 * 0.70710678118654752440};
  }

 private:
  std::uint32_t k0_, k1_;
};

// Stable identifiers for the independent randomness domains of the project.
// Kept in one place so streams can never collide by accident.
enum StreamDomain : std::uint64_t {
  kScenarioGeometry = 0x01,
  kScenarioFading = 0x02,
  kScenarioShadowing = 0x03,
  kSimSymbols = 0x10,
  kSimRelayNoise = 0x11,
  kSimDestNoise = 0x12,
  kCccpInit = 0x20,
  kSdrRandomization = 0x21,
};

inline std::uint64_t substream(std::uint64_t domain, std::uint64_t i0,
                               std::uint64_t i1 = 0) {
  return domain ^ mix64(0x5851f42d4c957f2dull * i0 + 0x14057b7ef767814full * i1 + 1);
}

}  // namespace relaybf::rng
