#include "relaybf/linksim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "relaybf/rng.hpp"

namespace relaybf::linksim {

namespace {

// ---------------------------------------------------------------------------
// Constellations

std::vector<cx> make_points(Constellation c) {
  switch (c) {
    case Constellation::kBpsk:
      return {cx{1.0, 0.0}, cx{-1.0, 0.0}};
    case Constellation::kQpsk: {
      // Index (b1 b0): b0 the in-phase sign bit, b1 the quadrature sign bit.
      // Decision-adjacent quadrants flip exactly one bit.
      const double u = 1.0 / std::sqrt(2.0);
      std::vector<cx> p(4);
      for (int i = 0; i < 4; ++i)
        p[i] = cx{(i & 1) ? -u : u, (i & 2) ? -u : u};
      return p;
    }
    case Constellation::k16Qam: {
      // Index kI | kQ<<2 with per-axis amplitude levels (3-2k)/sqrt(10);
      // the per-axis Gray labels live in gray_label().
      std::vector<cx> p(16);
      const double u = 1.0 / std::sqrt(10.0);
      for (int i = 0; i < 16; ++i)
        p[i] = cx{(3 - 2 * (i & 3)) * u, (3 - 2 * (i >> 2)) * u};
      return p;
    }
  }
  throw std::logic_error("unknown constellation");
}

unsigned axis_gray(int k) { return static_cast<unsigned>(k ^ (k >> 1)); }

}  // namespace

int order(Constellation c) {
  switch (c) {
    case Constellation::kBpsk:
      return 2;
    case Constellation::kQpsk:
      return 4;
    case Constellation::k16Qam:
      return 16;
  }
  throw std::logic_error("unknown constellation");
}

int bits_per_symbol(Constellation c) {
  switch (c) {
    case Constellation::kBpsk:
      return 1;
    case Constellation::kQpsk:
      return 2;
    case Constellation::k16Qam:
      return 4;
  }
  throw std::logic_error("unknown constellation");
}

const std::vector<cx>& points(Constellation c) {
  static const std::vector<cx> bpsk = make_points(Constellation::kBpsk);
  static const std::vector<cx> qpsk = make_points(Constellation::kQpsk);
  static const std::vector<cx> qam16 = make_points(Constellation::k16Qam);
  switch (c) {
    case Constellation::kBpsk:
      return bpsk;
    case Constellation::kQpsk:
      return qpsk;
    case Constellation::k16Qam:
      return qam16;
  }
  throw std::logic_error("unknown constellation");
}

unsigned gray_label(Constellation c, int i) {
  switch (c) {
    case Constellation::kBpsk:
    case Constellation::kQpsk:
      // One sign bit per axis: the index already is a Gray labelling.
      return static_cast<unsigned>(i);
    case Constellation::k16Qam:
      return axis_gray(i & 3) | (axis_gray(i >> 2) << 2);
  }
  throw std::logic_error("unknown constellation");
}

int nearest_index(Constellation c, cx z) {
  const auto& pts = points(c);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    const double dr = z.real() - pts[i].real();
    const double di = z.imag() - pts[i].imag();
    const double d = dr * dr + di * di;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Detector

std::array<cx, 2> Detector::estimate(const cx y[4]) const {
  std::array<cx, 2> s{};
  for (int k = 0; k < 2; ++k) {
    cx acc{0.0, 0.0};
    for (int j = 0; j < 4; ++j) acc += b[k][j] * y[j];
    s[k] = acc;
  }
  return s;
}

Detector make_detector(const model::BeamformerSolution& sol,
                       const scenario::ChannelRealization& ch, int m) {
  const int R = static_cast<int>(ch.f.size());
  if (m < 0 || m >= static_cast<int>(ch.d.size()))
    throw std::invalid_argument("destination index out of range");
  if (static_cast<int>(sol.w.size()) != 2 * (R + 1))
    throw std::invalid_argument("weight vector does not match relay count");

  const CVec w1 = sol.w1(), w2 = sol.w2();
  const double a1 = sol.alpha1();
  const cx a3 = sol.alpha3(), a4 = sol.alpha4();
  const cx dm = ch.d[m];
  const CVec& g = ch.g[m];

  cx hr1{0.0, 0.0}, hr2{0.0, 0.0};
  double fwd = 0.0;  // sum |g_r|^2 (|w1_r|^2 + |w2_r|^2)
  for (int r = 0; r < R; ++r) {
    hr1 += std::conj(w1[r]) * g[r] * ch.f[r];
    hr2 += std::conj(w2[r]) * g[r] * std::conj(ch.f[r]);
    fwd += std::norm(g[r]) * (std::norm(w1[r]) + std::norm(w2[r]));
  }

  Detector det;
  det.h1 = a1 * hr1 + a3 * dm;
  det.h2 = a1 * hr2 + a4 * dm;
  det.sigma34_sq = ch.sigma_eta_sq_w * fwd + ch.sigma_nu_sq_w;
  det.gamma_sq =
      ch.sigma_nu_sq_w > 0.0 ? det.sigma34_sq / ch.sigma_nu_sq_w : 1.0;

  const cx da1 = a1 * dm;
  det.h = {{{da1, cx{0.0, 0.0}},
            {cx{0.0, 0.0}, std::conj(da1)},
            {det.h1, det.h2},
            {-std::conj(det.h2), std::conj(det.h1)}}};
  det.c_sq = std::norm(da1) * det.gamma_sq + std::norm(det.h1) +
             std::norm(det.h2);
  det.usable = det.c_sq > 0.0;
  if (det.usable) {
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 4; ++j)
        det.b[k][j] =
            std::conj(det.h[j][k]) * ((j < 2 ? det.gamma_sq : 1.0) / det.c_sq);
  }
  return det;
}

// ---------------------------------------------------------------------------
// Simulation core

namespace {

using kernels::Backend;

// Neumaier-compensated accumulator: per-statistic single stream, so results
// do not depend on internal block sizes or thread counts.
struct Acc {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double total() const { return s + c; }
};

struct CAcc {
  Acc re, im;
  void add(cx z) {
    re.add(z.real());
    im.add(z.imag());
  }
  cx total() const { return {re.total(), im.total()}; }
};

struct Ctx {
  int m = 0, R = 0;
  Constellation cst = Constellation::kQpsk;
  unsigned kmask = 0;
  const std::vector<cx>* pts = nullptr;
  CVec f, g, cw1, cw2;
  double alpha1 = 1.0;
  cx da1{}, da3{}, da4{};
  Detector det;
  double sig_eta = 0.0, sig_nu = 0.0;
  rng::Stream sym, eta1, eta2, nu[4];
};

Ctx make_ctx(const model::BeamformerSolution& sol,
             const scenario::ChannelRealization& ch,
             const TransmissionBatch& batch, int m) {
  Ctx c;
  c.m = m;
  c.R = static_cast<int>(ch.f.size());
  c.cst = batch.constellation;
  c.kmask = static_cast<unsigned>(order(c.cst) - 1);
  c.pts = &points(c.cst);
  c.f = ch.f;
  c.g = ch.g[m];
  const CVec w1 = sol.w1(), w2 = sol.w2();
  c.cw1.resize(c.R);
  c.cw2.resize(c.R);
  for (int r = 0; r < c.R; ++r) {
    c.cw1[r] = std::conj(w1[r]);
    c.cw2[r] = std::conj(w2[r]);
  }
  c.alpha1 = sol.alpha1();
  c.da1 = sol.alpha1() * ch.d[m];
  c.da3 = sol.alpha3() * ch.d[m];
  c.da4 = sol.alpha4() * ch.d[m];
  c.det = make_detector(sol, ch, m);
  c.sig_eta = std::sqrt(ch.sigma_eta_sq_w);
  c.sig_nu = std::sqrt(ch.sigma_nu_sq_w);
  const std::uint64_t u = static_cast<std::uint64_t>(m);
  c.sym = rng::Stream(batch.seed, rng::substream(rng::kSimSymbols, 0));
  c.eta1 = rng::Stream(batch.seed, rng::substream(rng::kSimRelayNoise, u, 1));
  c.eta2 = rng::Stream(batch.seed, rng::substream(rng::kSimRelayNoise, u, 2));
  for (int q = 0; q < 4; ++q)
    c.nu[q] = rng::Stream(
        batch.seed,
        rng::substream(rng::kSimDestNoise, u, static_cast<std::uint64_t>(q + 1)));
  return c;
}

// Simulates pairs [p0, p0+n) of one destination.  `s_in` (2 per pair)
// overrides the symbol stream when non-null; `s_out`, `y` (2 and 4 per pair)
// must be non-null; `t3/t4` (R per pair) are optional.  `scratch3/4` hold at
// least R entries and are used when t3/t4 are null.
void run_pairs(const Ctx& c, std::int64_t p0, std::int64_t n, const cx* s_in,
               cx* s_out, cx* y, cx* t3, cx* t4, CVec& e1buf, CVec& e2buf,
               CVec& scratch3, CVec& scratch4, Backend be) {
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t p = p0 + i;
    cx s1, s2;
    if (s_in) {
      s1 = s_in[2 * i];
      s2 = s_in[2 * i + 1];
    } else {
      const rng::U64Pair rb = c.sym.raw(static_cast<std::uint64_t>(p));
      s1 = (*c.pts)[static_cast<int>(rb.lo & c.kmask)];
      s2 = (*c.pts)[static_cast<int>(rb.hi & c.kmask)];
    }
    s_out[2 * i] = s1;
    s_out[2 * i + 1] = s2;

    // Noise draws (zero powers give exact zeros).
    for (int r = 0; r < c.R; ++r) {
      const std::uint64_t ctr =
          static_cast<std::uint64_t>(p) * static_cast<std::uint64_t>(c.R) +
          static_cast<std::uint64_t>(r);
      e1buf[r] = c.sig_eta * c.eta1.cgaussian(ctr);
      e2buf[r] = c.sig_eta * c.eta2.cgaussian(ctr);
    }
    const std::uint64_t up = static_cast<std::uint64_t>(p);
    const cx v1 = c.sig_nu * c.nu[0].cgaussian(up);
    const cx v2 = c.sig_nu * c.nu[1].cgaussian(up);
    const cx v3 = c.sig_nu * c.nu[2].cgaussian(up);
    const cx v4 = c.sig_nu * c.nu[3].cgaussian(up);

    // Relay transmit vectors for this pair.
    cx* row3 = t3 ? t3 + i * c.R : scratch3.data();
    cx* row4 = t4 ? t4 + i * c.R : scratch4.data();
    // Amplified source symbols as seen by the relays: alpha1*s1, alpha1*s2*
    // (alpha1 is real, so scaling commutes with conjugation).
    const cx s1a = c.alpha1 * s1;
    const cx s2a = c.alpha1 * std::conj(s2);
    kernels::relay_transmit(be, static_cast<std::size_t>(c.R), c.f.data(),
                            c.cw1.data(), c.cw2.data(), s1a, s2a, e1buf.data(),
                            e2buf.data(), row3, row4);
    const cx u3 =
        kernels::dot_u(be, static_cast<std::size_t>(c.R), c.g.data(), row3);
    const cx u4 =
        kernels::dot_u(be, static_cast<std::size_t>(c.R), c.g.data(), row4);

    // Slot outputs, stacked as [y1, y2*, y3, y4*].
    const cx y1 = c.da1 * s1 + v1;
    const cx y2 = c.da1 * std::conj(s2) + v2;
    const cx y3 = ((u3 + c.da3 * s1) + c.da4 * s2) + v3;
    const cx y4 =
        ((u4 - c.da4 * std::conj(s1)) + c.da3 * std::conj(s2)) + v4;
    y[4 * i] = y1;
    y[4 * i + 1] = std::conj(y2);
    y[4 * i + 2] = y3;
    y[4 * i + 3] = std::conj(y4);
  }
}

}  // namespace

void transmit(const model::BeamformerSolution& sol,
              const scenario::ChannelRealization& ch,
              const TransmissionBatch& batch, int m, std::int64_t pair_begin,
              std::int64_t n, cx* y, cx* s, cx* t3, cx* t4,
              kernels::Backend backend) {
  if (n < 0 || pair_begin < 0) throw std::invalid_argument("negative range");
  Ctx c = make_ctx(sol, ch, batch, m);
  CVec e1(c.R), e2(c.R), s3(c.R), s4(c.R);
  run_pairs(c, pair_begin, n, nullptr, s, y, t3, t4, e1, e2, s3, s4,
            kernels::resolve(backend));
}

void transmit_given(const model::BeamformerSolution& sol,
                    const scenario::ChannelRealization& ch,
                    const TransmissionBatch& batch, int m,
                    std::int64_t pair_begin, std::int64_t n, const cx* s,
                    cx* y, cx* t3, cx* t4, kernels::Backend backend) {
  if (n < 0 || pair_begin < 0) throw std::invalid_argument("negative range");
  Ctx c = make_ctx(sol, ch, batch, m);
  CVec e1(c.R), e2(c.R), s3(c.R), s4(c.R);
  CVec s_echo(2 * static_cast<std::size_t>(n));
  run_pairs(c, pair_begin, n, s, s_echo.data(), y, t3, t4, e1, e2, s3, s4,
            kernels::resolve(backend));
}

// ---------------------------------------------------------------------------
// Measurement

namespace {

struct DestAccum {
  Acc err_sq[2], err_4th[2];
  CAcc err_cross;                 // e1 * conj(e2)
  CAcc ncov[4][4];                // upper triangle (j >= i) accumulated
  std::int64_t sym_errors = 0, bit_errors = 0;
  // Relay power accumulators (only filled for the designated destination).
  std::vector<Acc> pw, pw4;
};

DestinationStats finalize(const Ctx& c, const DestAccum& a, std::int64_t n) {
  DestinationStats st;
  st.detector_ok = c.det.usable;
  st.n_pairs = n;
  st.err_cov = CMat(2, 2);
  st.noise_cov = CMat(4, 4);
  const double dn = static_cast<double>(n);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const cx v = a.ncov[i][j].total() / dn;
      st.noise_cov(i, j) = v;
      if (j > i) st.noise_cov(j, i) = std::conj(v);
    }
  // Hermitian by construction: the diagonal entries are accumulated from
  // |n_i|^2, real by construction; force the imaginary part to zero anyway.
  for (int i = 0; i < 4; ++i)
    st.noise_cov(i, i) = cx{st.noise_cov(i, i).real(), 0.0};

  if (!c.det.usable) {
    st.snr1 = st.snr2 = st.snr = 0.0;
    st.ser = st.ber = 1.0;
    return st;
  }
  for (int k = 0; k < 2; ++k) st.mean_err_sq[k] = a.err_sq[k].total() / dn;
  const double m1 = st.mean_err_sq[0], m2 = st.mean_err_sq[1];
  st.snr1 = m1 > 0.0 ? 1.0 / m1 : std::numeric_limits<double>::infinity();
  st.snr2 = m2 > 0.0 ? 1.0 / m2 : std::numeric_limits<double>::infinity();
  const double mc = 0.5 * (m1 + m2);
  st.snr = mc > 0.0 ? 1.0 / mc : std::numeric_limits<double>::infinity();

  // Delta method: SE(1/x) = SE(x)/x^2 with SE(x) the SE of the mean.
  const auto se_mean = [&](const Acc& q4, double mean) {
    const double var = std::max(q4.total() / dn - mean * mean, 0.0);
    return std::sqrt(var / dn);
  };
  const double se1 = se_mean(a.err_4th[0], m1);
  const double se2 = se_mean(a.err_4th[1], m2);
  st.snr1_se = m1 > 0.0 ? se1 / (m1 * m1) : 0.0;
  st.snr2_se = m2 > 0.0 ? se2 / (m2 * m2) : 0.0;
  // The two components are independent estimates; the combined mean has
  // half the variance of either.
  const double sec = 0.5 * std::sqrt(se1 * se1 + se2 * se2);
  st.snr_se = mc > 0.0 ? sec / (mc * mc) : 0.0;

  st.err_cov(0, 0) = cx{m1, 0.0};
  st.err_cov(1, 1) = cx{m2, 0.0};
  const cx x = a.err_cross.total() / dn;
  st.err_cov(0, 1) = x;
  st.err_cov(1, 0) = std::conj(x);

  st.ser = static_cast<double>(a.sym_errors) / (2.0 * dn);
  st.ber = static_cast<double>(a.bit_errors) /
           (2.0 * dn * bits_per_symbol(c.cst));
  return st;
}

}  // namespace

double DestinationStats::noise_cov_se(int i, int j) const {
  return std::sqrt(noise_cov(i, i).real() * noise_cov(j, j).real() /
                   static_cast<double>(n_pairs));
}

double DestinationStats::err_cov_se(int i, int j) const {
  return std::sqrt(err_cov(i, i).real() * err_cov(j, j).real() /
                   static_cast<double>(n_pairs));
}

LinkStats measure(const model::BeamformerSolution& sol,
                  const scenario::ChannelRealization& ch,
                  const TransmissionBatch& batch, const Options& opts) {
  const int M = static_cast<int>(ch.d.size());
  const int R = static_cast<int>(ch.f.size());
  if (batch.n_pairs <= 0) throw std::invalid_argument("n_pairs must be > 0");
  if (opts.relay_power_dest < 0 || opts.relay_power_dest >= M)
    throw std::invalid_argument("relay_power_dest out of range");
  const Backend be = kernels::resolve(opts.backend);

  LinkStats out;
  out.dest.resize(M);
  out.n_pairs = batch.n_pairs;
  out.constellation = batch.constellation;
  out.seed = batch.seed;
  out.relay_power_dest = opts.relay_power_dest;
  out.relay_power.assign(R, 0.0);
  out.relay_power_se.assign(R, 0.0);

  std::vector<Acc> pw(R), pw4(R);

  const auto simulate_dest = [&](int m, DestinationStats& st) {
    Ctx c = make_ctx(sol, ch, batch, m);
    const bool track_power = (m == opts.relay_power_dest);
    DestAccum acc;
    CVec e1(R), e2(R), row3(R), row4(R);
    CVec sbuf(2), ybuf(4);
    std::vector<double> p3(R), p4(R);
    for (std::int64_t p = 0; p < batch.n_pairs; ++p) {
      // One pass per pair: relay powers and per-pair statistics come from
      // the same realization.
      run_pairs(c, p, 1, nullptr, sbuf.data(), ybuf.data(), row3.data(),
                row4.data(), e1, e2, row3, row4, be);
      if (track_power) {
        std::fill(p3.begin(), p3.end(), 0.0);
        std::fill(p4.begin(), p4.end(), 0.0);
        kernels::abs2_accum(be, static_cast<std::size_t>(R), row3.data(),
                            p3.data());
        kernels::abs2_accum(be, static_cast<std::size_t>(R), row4.data(),
                            p4.data());
        for (int r = 0; r < R; ++r) {
          pw[r].add(p3[r]);
          pw[r].add(p4[r]);
          pw4[r].add(p3[r] * p3[r]);
          pw4[r].add(p4[r] * p4[r]);
        }
      }
      const cx* yv = ybuf.data();
      const cx s1 = sbuf[0], s2 = sbuf[1];
      // Noise vector n = y - H s.
      cx nv[4];
      for (int k = 0; k < 4; ++k)
        nv[k] = yv[k] - (c.det.h[k][0] * s1 + c.det.h[k][1] * s2);
      for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b)
          acc.ncov[a][b].add(nv[a] * std::conj(nv[b]));

      if (!c.det.usable) continue;
      const auto sh = c.det.estimate(yv);
      const cx errs[2] = {sh[0] - s1, sh[1] - s2};
      for (int k = 0; k < 2; ++k) {
        const double e2n = std::norm(errs[k]);
        acc.err_sq[k].add(e2n);
        acc.err_4th[k].add(e2n * e2n);
      }
      acc.err_cross.add(errs[0] * std::conj(errs[1]));
      // Decisions: indices of the transmitted points are recomputable from
      // the symbol values (exact table entries).
      for (int k = 0; k < 2; ++k) {
        const cx tx = k == 0 ? s1 : s2;
        const int itx = nearest_index(c.cst, tx);
        const int irx = nearest_index(c.cst, sh[k]);
        if (irx != itx) ++acc.sym_errors;
        acc.bit_errors +=
            std::popcount(gray_label(c.cst, itx) ^ gray_label(c.cst, irx));
      }
    }
    st = finalize(c, acc, batch.n_pairs);
    if (track_power) {
      const double dn = 2.0 * static_cast<double>(batch.n_pairs);
      for (int r = 0; r < R; ++r) {
        const double mean = pw[r].total() / dn;
        out.relay_power[r] = mean;
        const double var = std::max(pw4[r].total() / dn - mean * mean, 0.0);
        out.relay_power_se[r] = std::sqrt(var / dn);
      }
    }
  };

  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1 || M == 1) {
    for (int m = 0; m < M; ++m) simulate_dest(m, out.dest[m]);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    const int nt = std::min(jobs, M);
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const int m = next.fetch_add(1);
          if (m >= M) return;
          try {
            simulate_dest(m, out.dest[m]);
          } catch (...) {
            std::lock_guard<std::mutex> lk(err_mu);
            if (!err) err = std::current_exception();
            return;
          }
        }
      });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  out.min_snr = std::numeric_limits<double>::infinity();
  out.argmin = -1;
  for (int m = 0; m < M; ++m) {
    if (!out.dest[m].detector_ok) continue;
    if (out.dest[m].snr < out.min_snr) {
      out.min_snr = out.dest[m].snr;
      out.argmin = m;
    }
  }
  if (out.argmin < 0) out.min_snr = 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Exports

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

void write_stats_csv(std::ostream& os, const LinkStats& stats) {
  os << "dest,n_pairs,detector_ok,snr1,snr2,snr,snr1_se,snr2_se,snr_se,ser,"
        "ber,err_cov01_re,err_cov01_im";
  for (int i = 0; i < 4; ++i) os << ",ncov" << i << i;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      os << ",ncov" << i << j << "_re,ncov" << i << j << "_im";
  os << "\n";
  for (std::size_t m = 0; m < stats.dest.size(); ++m) {
    const auto& d = stats.dest[m];
    os << m << "," << d.n_pairs << "," << (d.detector_ok ? 1 : 0);
    for (double v : {d.snr1, d.snr2, d.snr, d.snr1_se, d.snr2_se, d.snr_se,
                     d.ser, d.ber, d.err_cov(0, 1).real(),
                     d.err_cov(0, 1).imag()}) {
      os << ",";
      put(os, v);
    }
    for (int i = 0; i < 4; ++i) {
      os << ",";
      put(os, d.noise_cov(i, i).real());
    }
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        os << ",";
        put(os, d.noise_cov(i, j).real());
        os << ",";
        put(os, d.noise_cov(i, j).imag());
      }
    os << "\n";
  }
}

void write_relay_power_csv(std::ostream& os, const LinkStats& stats) {
  os << "relay,power_w,power_se_w\n";
  for (std::size_t r = 0; r < stats.relay_power.size(); ++r) {
    os << r << ",";
    put(os, stats.relay_power[r]);
    os << ",";
    put(os, stats.relay_power_se[r]);
    os << "\n";
  }
}

void write_raw_csv(std::ostream& os, const model::BeamformerSolution& sol,
                   const scenario::ChannelRealization& ch,
                   const TransmissionBatch& batch, int m,
                   std::int64_t max_rows) {
  const std::int64_t cap = 10000;
  const std::int64_t n =
      std::min({batch.n_pairs, std::max<std::int64_t>(0, max_rows), cap});
  Ctx c = make_ctx(sol, ch, batch, m);
  CVec e1(c.R), e2(c.R), s3(c.R), s4(c.R);
  os << "pair,s1_re,s1_im,s2_re,s2_im,y1_re,y1_im,y2c_re,y2c_im,y3_re,y3_im,"
        "y4c_re,y4c_im,shat1_re,shat1_im,shat2_re,shat2_im,dec1,dec2\n";
  CVec sb(2), yb(4);
  for (std::int64_t p = 0; p < n; ++p) {
    run_pairs(c, p, 1, nullptr, sb.data(), yb.data(), nullptr, nullptr, e1,
              e2, s3, s4, kernels::Backend::kScalar);
    std::array<cx, 2> sh{};
    int d1 = -1, d2 = -1;
    if (c.det.usable) {
      sh = c.det.estimate(yb.data());
      d1 = nearest_index(c.cst, sh[0]);
      d2 = nearest_index(c.cst, sh[1]);
    }
    os << p;
    for (double v : {sb[0].real(), sb[0].imag(), sb[1].real(), sb[1].imag(),
                     yb[0].real(), yb[0].imag(), yb[1].real(), yb[1].imag(),
                     yb[2].real(), yb[2].imag(), yb[3].real(), yb[3].imag(),
                     sh[0].real(), sh[0].imag(), sh[1].real(), sh[1].imag()}) {
      os << ",";
      put(os, v);
    }
    os << "," << d1 << "," << d2 << "\n";
  }
}

}  // namespace relaybf::linksim
