#pragma once
// Brute-force reference optimizer for tiny beamforming instances, used only
// by tests.  It searches rays of phase-aligned magnitude profiles: along any
// fixed direction every power term grows monotonically with the amplitude,
// so the largest feasible amplitude has a closed form, and the min-SNR is
// nondecreasing in the amplitude, so that amplitude is optimal per ray.
// Aligning each weight entry's phase with the corresponding numerator-vector
// entry is optimal for a single destination (it maximizes the coherent sum
// without touching any quadratic or power term); for several destinations it
// is a restriction, so the result is a strong feasible baseline rather than
// the global optimum.

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "relaybf/linalg.hpp"
#include "relaybf/model.hpp"

namespace testutil {

using relaybf::linalg::CVec;
using relaybf::linalg::cx;
using relaybf::model::PowerBudget;
using relaybf::model::ProblemData;

// Largest beta >= 0 such that (beta * u, a) satisfies the budget; +inf when
// the budget never binds along the ray, 0 when it is violated at beta = 0.
inline double max_feasible_beta(const ProblemData& p, const CVec& u, double a,
                                const PowerBudget& b) {
  const int d = p.dim();
  const double e = std::norm(u[d - 1]) + std::norm(u[2 * d - 1]);
  std::vector<double> c(p.relay_count);
  double csum = 0.0;
  for (int r = 0; r < p.relay_count; ++r) {
    c[r] = (std::norm(u[r]) + std::norm(u[d + r])) *
           (p.f_abs_sq[r] / a + p.sigma_eta_sq);
    csum += c[r];
  }
  double beta_sq = std::numeric_limits<double>::infinity();
  auto cap = [&beta_sq](double num, double den) {
    if (num <= 0.0)
      beta_sq = 0.0;
    else if (den > 0.0)
      beta_sq = std::min(beta_sq, num / den);
  };
  if (b.per_relay_w)
    for (int r = 0; r < p.relay_count; ++r) cap(*b.per_relay_w, c[r]);
  if (b.relay_sum_w) cap(*b.relay_sum_w, csum);
  if (b.source_w) cap(*b.source_w * a - 2.0, 2.0 * e);
  if (b.total_w) cap(*b.total_w - 2.0 / a, 2.0 * e / a + 2.0 * csum);
  return std::sqrt(beta_sq);
}

struct GridBest {
  CVec w;
  double a = 0.0;
  double min_snr = 0.0;
};

// Evaluates the ray u at scale a (amplitude-maximized) and keeps the best.
inline void consider_ray(const ProblemData& p, const PowerBudget& b,
                         const CVec& u, double a, GridBest& best) {
  const double beta = max_feasible_beta(p, u, a, b);
  if (!(beta > 0.0) || !std::isfinite(beta)) return;
  CVec w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = beta * u[i];
  const double ms = relaybf::model::min_snr(p, w, a).value;
  if (ms > best.min_snr) best = {std::move(w), a, ms};
}

// Unit phases aligned with destination `dest`'s numerator vectors.
inline CVec aligned_phases(const ProblemData& p, int dest) {
  const int d = p.dim();
  CVec phase(2 * d, cx{1.0, 0.0});
  for (int i = 0; i < d; ++i) {
    if (std::abs(p.q1[dest][i]) > 0.0)
      phase[i] = p.q1[dest][i] / std::abs(p.q1[dest][i]);
    if (std::abs(p.q2[dest][i]) > 0.0)
      phase[d + i] = p.q2[dest][i] / std::abs(p.q2[dest][i]);
  }
  return phase;
}

// Exhaustive search over levels^(2(R+1)) magnitude profiles per phase
// alignment, crossed with the scale grid.
inline GridBest grid_search(const ProblemData& p, const PowerBudget& b,
                            int levels, const std::vector<double>& a_grid,
                            const std::vector<int>& phase_dests) {
  const int n = p.wdim();
  GridBest best;
  for (int dest : phase_dests) {
    const CVec phase = aligned_phases(p, dest);
    std::vector<int> idx(n, 0);
    CVec u(n);
    while (true) {
      bool all_zero = true;
      for (int i = 0; i < n; ++i) {
        u[i] = (static_cast<double>(idx[i]) / (levels - 1)) * phase[i];
        all_zero = all_zero && idx[i] == 0;
      }
      if (!all_zero)
        for (double a : a_grid) consider_ray(p, b, u, a, best);
      int pos = 0;
      while (pos < n && ++idx[pos] == levels) idx[pos++] = 0;
      if (pos == n) break;
    }
  }
  return best;
}

// Local refinement: cyclic multiplicative moves on each entry's magnitude and
// on the scale, re-maximizing the amplitude after every move, with the step
// halved whenever a full sweep yields no improvement.
inline GridBest polish(const ProblemData& p, const PowerBudget& b,
                       GridBest best, int max_sweeps = 400) {
  if (best.w.empty()) return best;
  const int n = p.wdim();
  double step = 0.5;
  for (int sweep = 0; sweep < max_sweeps && step > 1e-6; ++sweep) {
    bool improved = false;
    for (int i = 0; i <= n; ++i) {
      for (double f : {1.0 + step, 1.0 / (1.0 + step)}) {
        CVec u = best.w;
        double a = best.a;
        if (i < n)
          u[i] *= f;
        else
          a *= f;
        GridBest cand = best;
        consider_ray(p, b, u, a, cand);
        if (cand.min_snr > best.min_snr * (1.0 + 1e-13)) {
          best = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace testutil
