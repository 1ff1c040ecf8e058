#pragma once
// Monte Carlo link-level simulator for the two-substream amplify-and-forward
// multicast scheme: the ground-truth oracle for every closed-form model
// quantity.
//
// One simulated "pair" is one four-slot transmission window carrying the
// symbol pair (s1, s2):
//
//   slot 1: source sends alpha1*s1;  relays receive x1 = f*alpha1*s1 + eta1,
//           destination m receives   y1 = d_m*alpha1*s1 + nu1.
//   slot 2: same with s2*:           x2 = f*alpha1*s2* + eta2,
//                                    y2 = d_m*alpha1*s2* + nu2.
//   slot 3: relays send t3 = conj(w1).*x1 + conj(w2).*conj(x2), the source
//           reuses the channel with alpha3*s1 + alpha4*s2:
//           y3 = g_m^T t3 + d_m*(alpha3*s1 + alpha4*s2) + nu3.
//   slot 4: relays send t4 = conj(w1).*x2 - conj(w2).*conj(x1), source sends
//           -alpha4*s1* + alpha3*s2*:
//           y4 = g_m^T t4 + d_m*(-alpha4*s1* + alpha3*s2*) + nu4.
//
// Stacked as y = [y1, y2*, y3, y4*], this is exactly y = H s + n with the
// orthogonal 4x2 equivalent channel H built from (alpha1*d_m, h1, h2) and a
// noise vector whose covariance is blkdiag(sigma_nu^2 I2, sigma34^2 I2).
// The linear estimator shat = B y (B the scaled matched filter of the
// noise-whitened channel) therefore satisfies shat = s + B n with
// independent per-component Gaussian errors, so per-component
// nearest-neighbor decisions achieve maximum-likelihood detection.  The
// simulator transmits actual symbols through the slot equations above,
// detects with B, and reports empirical SNR / error-rate / covariance
// statistics with Monte Carlo standard errors.
//
// Determinism: every random draw is a pure function of (batch seed,
// destination, role, pair index) through counter-based streams, so any pair
// of any destination can be recomputed in isolation, destinations can be
// simulated in parallel, and results are independent of thread count and
// internal block sizes.  Relay and destination noise streams are split per
// destination; per-destination marginal statistics are unaffected, and
// cross-destination noise correlation is deliberately not modeled.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "relaybf/kernels.hpp"
#include "relaybf/linalg.hpp"
#include "relaybf/model.hpp"
#include "relaybf/scenario.hpp"

namespace relaybf::linksim {

using linalg::CMat;
using linalg::CVec;
using linalg::RVec;
using linalg::cx;

// ---------------------------------------------------------------------------
// Constellations (unit average symbol energy, Gray-labelled)

enum class Constellation { kQpsk, kBpsk, k16Qam };

int order(Constellation c);            // 4, 2, 16
int bits_per_symbol(Constellation c);  // 2, 1, 4

// Constellation points; index i carries bit label gray_label(c, i).
const std::vector<cx>& points(Constellation c);

// Bit label of point index i (labels of decision-neighbor points differ in
// exactly one bit).
unsigned gray_label(Constellation c, int i);

// Index of the nearest constellation point to z (lowest index on ties).
int nearest_index(Constellation c, cx z);

// ---------------------------------------------------------------------------
// Batch description

struct TransmissionBatch {
  Constellation constellation = Constellation::kQpsk;
  std::int64_t n_pairs = 1'000'000;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Per-destination detector (the linear estimator shat = B y)

struct Detector {
  bool usable = false;  // c^2 > 0: at least one nonzero equivalent channel
  double c_sq = 0.0;    // ||Gamma H||^2 column norm (equal for both columns)
  double sigma34_sq = 0.0;  // relayed-slot noise power of this destination
  double gamma_sq = 1.0;    // slot-1/2 whitening weight sigma34^2/sigma_nu^2
  cx h1{}, h2{};            // equivalent beamformed channels
  std::array<std::array<cx, 2>, 4> h{};  // stacked 4x2 equivalent channel H
  std::array<std::array<cx, 4>, 2> b{};  // estimator rows, shat = B y

  // shat from a stacked received vector y = [y1, y2*, y3, y4*].
  std::array<cx, 2> estimate(const cx y[4]) const;
};

// Builds the detector of destination m.  When sigma_nu^2 = 0 the whitening
// weight is taken as 1 (uniform weights; with zero noise any positive weight
// recovers s exactly).
Detector make_detector(const model::BeamformerSolution& sol,
                       const scenario::ChannelRealization& ch, int m);

// ---------------------------------------------------------------------------
// Transmission

// Simulates pairs [pair_begin, pair_begin+n) of destination m and writes the
// stacked received vectors y (4 entries per pair, layout [y1, y2*, y3, y4*])
// and the drawn symbol pairs s (2 entries per pair).  Optional outputs: the
// relay transmit vectors t3, t4 (R entries per pair).  Noise realizations
// (and symbols, unless given explicitly) are pure functions of
// (batch.seed, m, pair index).
void transmit(const model::BeamformerSolution& sol,
              const scenario::ChannelRealization& ch,
              const TransmissionBatch& batch, int m, std::int64_t pair_begin,
              std::int64_t n, cx* y, cx* s, cx* t3 = nullptr, cx* t4 = nullptr,
              kernels::Backend backend = kernels::Backend::kAuto);

// Same, but the symbol pairs are supplied by the caller (2 entries per pair)
// instead of drawn from the symbol stream.  Noise draws are unchanged.
void transmit_given(const model::BeamformerSolution& sol,
                    const scenario::ChannelRealization& ch,
                    const TransmissionBatch& batch, int m,
                    std::int64_t pair_begin, std::int64_t n, const cx* s,
                    cx* y, cx* t3 = nullptr, cx* t4 = nullptr,
                    kernels::Backend backend = kernels::Backend::kAuto);

// ---------------------------------------------------------------------------
// Measurement

struct DestinationStats {
  bool detector_ok = true;
  std::int64_t n_pairs = 0;

  // Empirical per-component error power E|shat_k - s_k|^2 and its SNRs.
  double mean_err_sq[2] = {0.0, 0.0};
  double snr1 = 0.0, snr2 = 0.0;  // 1 / mean_err_sq[k]
  double snr = 0.0;               // combined: 2 / (sum of error powers)
  double snr1_se = 0.0, snr2_se = 0.0, snr_se = 0.0;  // delta-method SEs

  double ser = 0.0;  // symbol errors / (2 n_pairs)
  double ber = 0.0;  // bit errors / (2 n_pairs bits_per_symbol)

  CMat err_cov;    // 2x2 E{(shat-s)(shat-s)^H}
  CMat noise_cov;  // 4x4 E{n n^H}, n = y - H s

  // Standard-error yardstick for covariance entry (i, j):
  // sqrt(C_ii C_jj / n_pairs), the large-sample SE of a complex-Gaussian
  // cross-moment estimate (for diagonal entries it reduces to C_ii/sqrt(n)).
  double noise_cov_se(int i, int j) const;
  double err_cov_se(int i, int j) const;
};

struct LinkStats {
  std::vector<DestinationStats> dest;

  // Empirical per-relay transmit power, averaged over pairs and both relay
  // slots, measured with the noise realization of `relay_power_dest`.
  RVec relay_power;
  RVec relay_power_se;
  int relay_power_dest = 0;

  double min_snr = 0.0;  // min over destinations of the combined SNR
  int argmin = -1;
  std::int64_t n_pairs = 0;
  Constellation constellation = Constellation::kQpsk;
  std::uint64_t seed = 0;
};

struct Options {
  kernels::Backend backend = kernels::Backend::kAuto;
  int jobs = 1;              // destinations simulated in parallel
  int relay_power_dest = 0;  // whose noise draws feed the power stats
};

// Full Monte Carlo run: per-destination statistics plus relay powers.
// Statistics accumulate per pair through compensated summation, so results
// are bitwise independent of the job count.
LinkStats measure(const model::BeamformerSolution& sol,
                  const scenario::ChannelRealization& ch,
                  const TransmissionBatch& batch, const Options& opts = {});

// ---------------------------------------------------------------------------
// Exports

// One row per destination: SNR/error-rate statistics and the flattened
// noise covariance (diagonal entries, then upper off-diagonals re/im).
void write_stats_csv(std::ostream& os, const LinkStats& stats);

// One row per relay: empirical power, its standard error.
void write_relay_power_csv(std::ostream& os, const LinkStats& stats);

// Raw per-pair dump of destination m (debugging): transmitted symbols,
// stacked received vector, estimates, decisions.  At most
// min(batch.n_pairs, max_rows, 10000) rows are written.
void write_raw_csv(std::ostream& os, const model::BeamformerSolution& sol,
                   const scenario::ChannelRealization& ch,
                   const TransmissionBatch& batch, int m,
                   std::int64_t max_rows = 10000);

}  // namespace relaybf::linksim
