#include "relaybf/cccp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace relaybf::cccp {

namespace {

using conic::AffExpr;
using linalg::CVec;
using linalg::cx;

// P_m w for P_m = Q_m + (|d_m|^2 / s_nu^2) R_m, using the rank-two block
// structure of Q_m (one dyad per half) and the diagonal of R_m.
CVec apply_p(const model::ProblemData& p, int m, const CVec& w) {
  const int d = p.dim();
  cx ip1{}, ip2{};
  for (int i = 0; i < d; ++i) {
    ip1 += std::conj(p.q1[m][i]) * w[i];
    ip2 += std::conj(p.q2[m][i]) * w[d + i];
  }
  const double kappa = p.d_abs_sq[m] / p.sigma_nu_sq;
  CVec out(2 * d);
  for (int i = 0; i < d; ++i) {
    out[i] = p.q1[m][i] * ip1 + kappa * p.r_diag[m][i] * w[i];
    out[d + i] = p.q2[m][i] * ip2 + kappa * p.r_diag[m][i] * w[d + i];
  }
  return out;
}

// w^H R_m w over both halves.
double quad_r(const model::ProblemData& p, int m, const CVec& w) {
  const int d = p.dim();
  double acc = 0.0;
  for (int i = 0; i < d; ++i)
    acc += p.r_diag[m][i] * (std::norm(w[i]) + std::norm(w[d + i]));
  return acc;
}

bool has_any_limit(const model::PowerBudget& b) {
  return b.per_relay_w || b.relay_sum_w || b.source_w || b.total_w;
}

}  // namespace

double linearized_constraint(const model::ProblemData& data, int m,
                             const State& state, const CVec& dw, double da,
                             double dt) {
  const int n = data.wdim();
  if (static_cast<int>(state.w.size()) != n ||
      static_cast<int>(dw.size()) != n)
    throw std::invalid_argument("cccp: shift/state dimension mismatch");
  if (m < 0 || m >= data.dest_count)
    throw std::invalid_argument("cccp: destination index out of range");
  if (!(state.a > 0.0) || !(state.t > 0.0))
    throw std::domain_error("cccp: state requires a > 0 and t > 0");
  if (!(state.a + da > 0.0) || !(state.t + dt > 0.0))
    throw std::domain_error("cccp: shift leaves the majorization domain");

  CVec wn(n);
  for (int i = 0; i < n; ++i) wn[i] = state.w[i] + dw[i];
  const CVec pw = apply_p(data, m, state.w);
  double wpw = 0.0, cross = 0.0;
  for (int i = 0; i < n; ++i) {
    wpw += std::real(std::conj(state.w[i]) * pw[i]);
    cross += std::real(std::conj(dw[i]) * pw[i]);
  }
  const double cm = (wpw + data.d_abs_sq[m]) / state.a;
  return (quad_r(data, m, wn) + data.sigma_nu_sq) / (state.t + dt) +
         cm * (da / state.a - 1.0) - 2.0 * cross / state.a;
}

// Relay-side power level used as a fallback natural scale; positive whenever
// a relay-facing limit exists.
double relay_cap_of(const model::PowerBudget& b, int relay_count) {
  const double rc = std::max(1, relay_count);
  if (b.per_relay_w) return *b.per_relay_w;
  if (b.relay_sum_w) return *b.relay_sum_w / rc;
  if (b.total_w) return *b.total_w / (2.0 * rc);
  return 0.0;
}

double source_cap_of(const model::PowerBudget& b) {
  if (b.source_w) return *b.source_w;
  if (b.total_w) return *b.total_w / 2.0;
  return 0.0;
}

Subproblem build_subproblem(const model::ProblemData& data,
                            const model::PowerBudget& budget,
                            const State& state, bool rank_one) {
  const int d = data.dim();
  const int n = data.wdim();
  if (static_cast<int>(state.w.size()) != n)
    throw std::invalid_argument("cccp: state dimension mismatch");
  if (rank_one)
    for (int i = d; i < n; ++i)
      if (state.w[i] != cx{0.0, 0.0})
        throw std::invalid_argument(
            "cccp: rank-one state must have a zero second half");
  if (!(state.a > 0.0) || !(state.t > 0.0))
    throw std::domain_error("cccp: state requires a > 0 and t > 0");
  if (!has_any_limit(budget))
    throw std::invalid_argument("cccp: power budget has no limits");
  const bool relay_aux =
      budget.per_relay_w || budget.relay_sum_w || budget.total_w;
  const bool source_aux = budget.source_w || budget.total_w;
  const double relay_cap = relay_cap_of(budget, data.relay_count);
  const double source_cap = source_cap_of(budget);

  // Natural unit of each weight entry: its current magnitude, floored by the
  // level at which its power constraint would bind (so a silent relay still
  // gets a sane unit).
  linalg::RVec wu(n, 1.0);
  for (int i = 0; i < n; ++i) {
    double floor_i = 1.0;
    const int r = i % d;
    if (r < d - 1) {
      const double denom = data.f_abs_sq[r] / state.a + data.sigma_eta_sq;
      if (relay_cap > 0.0 && denom > 0.0)
        floor_i = std::sqrt(relay_cap / denom);
    } else if (source_cap > 0.0) {
      floor_i = std::sqrt(std::max(source_cap * state.a / 2.0 - 1.0, 1.0));
    }
    wu[i] = std::max(std::abs(state.w[i]), floor_i);
  }

  conic::ProgramBuilder pb;
  // Variables (all in natural units): interleaved (re, im) of dw, then da,
  // then dt (the objective), then power epigraphs.
  for (int i = 0; i < 2 * n; ++i) pb.add_var();
  const int va = pb.add_var();
  const int vt = pb.add_var(1.0);
  auto re = [](int i) { return 2 * i; };
  auto im = [](int i) { return 2 * i + 1; };
  // (a + da)/a, used as the scaled v-side of every power cone.
  const AffExpr a_hat = AffExpr::of(va, 1.0, 1.0);

  // Majorized SNR constraints: for every destination,
  //   ||sqrt(R_m)(w + dw); s_nu||^2 <= u_m * (t + dt),
  // with u_m the linearization of (w^H P_m w + |d_m|^2)/a at the state.
  // Balanced by alpha = u_m(0) = C_m and beta = t, so all three parts sit at
  // O(1) around zero shift.
  const double snu = std::sqrt(data.sigma_nu_sq);
  for (int m = 0; m < data.dest_count; ++m) {
    const CVec pw = apply_p(data, m, state.w);
    double wpw = 0.0;
    for (int i = 0; i < n; ++i) wpw += std::real(std::conj(state.w[i]) * pw[i]);
    const double cm = (wpw + data.d_abs_sq[m]) / state.a;
    if (!(cm > 0.0))
      throw std::domain_error("cccp: destination with zero SNR at the state");
    const double gz = std::sqrt(cm * state.t);
    AffExpr u = AffExpr::constant_of(1.0);
    u.add(va, -1.0);
    for (int i = 0; i < n; ++i) {
      u.add(re(i), 2.0 * pw[i].real() * wu[i] / (state.a * cm));
      u.add(im(i), 2.0 * pw[i].imag() * wu[i] / (state.a * cm));
    }
    std::vector<AffExpr> z;
    for (int i = 0; i < n; ++i) {
      const double rd = data.r_diag[m][i % d];
      if (rd <= 0.0) continue;
      const double s = std::sqrt(rd) / gz;
      z.push_back(AffExpr::of(re(i), s * wu[i], s * state.w[i].real()));
      z.push_back(AffExpr::of(im(i), s * wu[i], s * state.w[i].imag()));
    }
    z.push_back(AffExpr::constant_of(snu / gz));
    pb.add_quad_le_product(u, AffExpr::of(vt, 1.0, 1.0), z);
  }

  // Power epigraphs: y_r >= |f_r|^2 (|w_{1r}|^2 + |w_{2r}|^2)/a and
  // rho_r >= |w_{1r}|^2 + |w_{2r}|^2, so relay r transmits at most
  // y_r + s_eta^2 rho_r; sig >= source power.  Each cone is balanced by the
  // epigraph's natural level and the current a.
  std::vector<int> y, rho;
  std::vector<double> y_nat, rho_nat;
  if (relay_aux) {
    for (int r = 0; r < data.relay_count; ++r) {
      const double mag0 =
          std::norm(state.w[r]) + std::norm(state.w[d + r]);
      const double magu = wu[r] * wu[r] + wu[d + r] * wu[d + r];
      const double yn =
          std::max(data.f_abs_sq[r] * mag0 / state.a, relay_cap);
      const double rn = std::max(mag0, magu);
      y.push_back(pb.add_var());
      rho.push_back(pb.add_var());
      y_nat.push_back(yn);
      rho_nat.push_back(rn);
      const double gy = std::sqrt(data.f_abs_sq[r] / (yn * state.a));
      pb.add_quad_le_product(
          AffExpr::of(y.back()), a_hat,
          {AffExpr::of(re(r), gy * wu[r], gy * state.w[r].real()),
           AffExpr::of(im(r), gy * wu[r], gy * state.w[r].imag()),
           AffExpr::of(re(d + r), gy * wu[d + r], gy * state.w[d + r].real()),
           AffExpr::of(im(d + r), gy * wu[d + r], gy * state.w[d + r].imag())});
      const double gr = 1.0 / std::sqrt(rn);
      pb.add_quad_le_product(
          AffExpr::of(rho.back()), AffExpr::constant_of(1.0),
          {AffExpr::of(re(r), gr * wu[r], gr * state.w[r].real()),
           AffExpr::of(im(r), gr * wu[r], gr * state.w[r].imag()),
           AffExpr::of(re(d + r), gr * wu[d + r], gr * state.w[d + r].real()),
           AffExpr::of(im(d + r), gr * wu[d + r], gr * state.w[d + r].imag())});
    }
  }
  int sig = -1;
  double sig_nat = 1.0;
  if (source_aux) {
    sig = pb.add_var();
    const double reuse0 =
        std::norm(state.w[d - 1]) + std::norm(state.w[2 * d - 1]);
    sig_nat = std::max((2.0 + 2.0 * reuse0) / state.a, source_cap / 2.0);
    const double gs = std::sqrt(2.0 / (sig_nat * state.a));
    pb.add_quad_le_product(
        AffExpr::of(sig), a_hat,
        {AffExpr::constant_of(gs),
         AffExpr::of(re(d - 1), gs * wu[d - 1], gs * state.w[d - 1].real()),
         AffExpr::of(im(d - 1), gs * wu[d - 1], gs * state.w[d - 1].imag()),
         AffExpr::of(re(2 * d - 1), gs * wu[2 * d - 1],
                     gs * state.w[2 * d - 1].real()),
         AffExpr::of(im(2 * d - 1), gs * wu[2 * d - 1],
                     gs * state.w[2 * d - 1].imag())});
  }

  // Budget rows, each written as (limit - power)/limit >= 0.
  if (budget.per_relay_w)
    for (int r = 0; r < data.relay_count; ++r) {
      AffExpr row = AffExpr::constant_of(1.0);
      row.add(y[r], -y_nat[r] / *budget.per_relay_w)
          .add(rho[r], -data.sigma_eta_sq * rho_nat[r] / *budget.per_relay_w);
      pb.add_nonneg(row);
    }
  if (budget.relay_sum_w) {
    AffExpr row = AffExpr::constant_of(1.0);
    for (int r = 0; r < data.relay_count; ++r)
      row.add(y[r], -y_nat[r] / *budget.relay_sum_w)
          .add(rho[r], -data.sigma_eta_sq * rho_nat[r] / *budget.relay_sum_w);
    pb.add_nonneg(row);
  }
  if (budget.source_w) {
    AffExpr row = AffExpr::constant_of(1.0);
    row.add(sig, -sig_nat / *budget.source_w);
    pb.add_nonneg(row);
  }
  if (budget.total_w) {
    AffExpr row = AffExpr::constant_of(1.0);
    row.add(sig, -sig_nat / *budget.total_w);
    for (int r = 0; r < data.relay_count; ++r)
      row.add(y[r], -2.0 * y_nat[r] / *budget.total_w)
          .add(rho[r],
               -2.0 * data.sigma_eta_sq * rho_nat[r] / *budget.total_w);
    pb.add_nonneg(row);
  }

  pb.add_nonneg(AffExpr::of(vt, -1.0));  // descent-only steps
  pb.add_nonneg(a_hat);                  // keep the scale nonnegative
  if (rank_one)
    for (int i = d; i < n; ++i) {
      pb.add_eq(AffExpr::of(re(i)));
      pb.add_eq(AffExpr::of(im(i)));
    }

  Subproblem sub;
  sub.program = pb.build();
  sub.var_scale.assign(pb.num_vars(), 1.0);
  for (int i = 0; i < n; ++i) {
    sub.var_scale[re(i)] = wu[i];
    sub.var_scale[im(i)] = wu[i];
  }
  sub.var_scale[va] = state.a;
  sub.var_scale[vt] = state.t;
  for (std::size_t r = 0; r < y.size(); ++r) {
    sub.var_scale[y[r]] = y_nat[r];
    sub.var_scale[rho[r]] = rho_nat[r];
  }
  if (sig >= 0) sub.var_scale[sig] = sig_nat;
  return sub;
}

std::optional<State> initial_point(const model::ProblemData& data,
                                   const model::PowerBudget& budget,
                                   const rng::Stream& stream, bool rank_one) {
  const int d = data.dim();
  const int n = data.wdim();
  if (!has_any_limit(budget))
    throw std::invalid_argument("cccp: power budget has no limits");
  CVec u(n);
  for (int i = 0; i < n; ++i) u[i] = stream.cgaussian(i);
  if (rank_one)
    for (int i = d; i < n; ++i) u[i] = cx{0.0, 0.0};

  const double ps_eff = source_cap_of(budget);
  const double a0 = ps_eff > 0.0 ? 4.0 / ps_eff : 1.0;

  // Amplify the source-reuse entries and the relay entries separately; each
  // budget term is (den) * beta^2 <= (num) along its group's amplitude.
  const double e = std::norm(u[d - 1]) + std::norm(u[2 * d - 1]);
  std::vector<double> c(data.relay_count);
  double csum = 0.0;
  for (int r = 0; r < data.relay_count; ++r) {
    c[r] = (std::norm(u[r]) + std::norm(u[d + r])) *
           (data.f_abs_sq[r] / a0 + data.sigma_eta_sq);
    csum += c[r];
  }
  bool infeasible = false;
  auto cap_value = [&infeasible](double num, double den) {
    if (num <= 0.0) {
      infeasible = true;  // violated at every amplitude
      return 0.0;
    }
    if (den > 0.0) return num / den;
    return std::numeric_limits<double>::infinity();
  };

  // Reuse group first: capped by the source-side budget.
  double beta_e_sq = std::numeric_limits<double>::infinity();
  if (budget.source_w)
    beta_e_sq = std::min(beta_e_sq, cap_value(*budget.source_w * a0 - 2.0, 2.0 * e));
  if (budget.total_w)
    beta_e_sq =
        std::min(beta_e_sq, cap_value(*budget.total_w * a0 / 2.0 - 2.0, 2.0 * e));
  if (!std::isfinite(beta_e_sq)) beta_e_sq = 1.0;  // no source-side limit
  beta_e_sq *= 0.99;
  const double source_p = (2.0 + 2.0 * e * beta_e_sq) / a0;

  // Relay group: capped by the relay budgets and the remaining total budget.
  double beta_r_sq = std::numeric_limits<double>::infinity();
  if (budget.per_relay_w)
    for (int r = 0; r < data.relay_count; ++r)
      beta_r_sq = std::min(beta_r_sq, cap_value(*budget.per_relay_w, c[r]));
  if (budget.relay_sum_w)
    beta_r_sq = std::min(beta_r_sq, cap_value(*budget.relay_sum_w, csum));
  if (budget.total_w)
    beta_r_sq =
        std::min(beta_r_sq, cap_value(*budget.total_w - source_p, 2.0 * csum));
  if (!std::isfinite(beta_r_sq)) {
    // No relay-side limit: aim the relay power at the source-side level.
    beta_r_sq = csum > 0.0 ? std::max(ps_eff, 1.0) / csum : 1.0;
  }
  beta_r_sq *= 0.99;
  if (infeasible || !(beta_e_sq > 0.0) || !(beta_r_sq > 0.0))
    return std::nullopt;

  const double beta_e = std::sqrt(beta_e_sq);
  const double beta_r = std::sqrt(beta_r_sq);
  CVec w(n);
  for (int i = 0; i < n; ++i)
    w[i] = (i % d == d - 1 ? beta_e : beta_r) * u[i];
  const auto ms = model::min_snr(data, w, a0);
  if (!(ms.value > 0.0) || !std::isfinite(ms.value)) return std::nullopt;
  return State{std::move(w), a0, 1.0 / ms.value};
}

Result run(const model::ProblemData& data, const model::PowerBudget& budget,
           const State& start, const Options& opts) {
  const int n = data.wdim();
  const int d = data.dim();
  if (static_cast<int>(start.w.size()) != n)
    throw std::invalid_argument("cccp: start dimension mismatch");
  if (!has_any_limit(budget))
    throw std::invalid_argument("cccp: power budget has no limits");
  if (opts.rank_one)
    for (int i = d; i < n; ++i)
      if (start.w[i] != cx{0.0, 0.0})
        throw std::invalid_argument(
            "cccp: rank-one start must have a zero second half");

  Result res;
  if (!(start.a > 0.0)) return res;
  const auto rep = model::feasible(data, start.w, start.a, budget, opts.feas_slack);
  const auto ms0 = model::min_snr(data, start.w, start.a);
  if (!rep.feasible() || !(ms0.value > 0.0) || !std::isfinite(ms0.value))
    return res;

  State cur{start.w, start.a, 1.0 / ms0.value};
  double cur_snr = ms0.value;
  res.trace.push_back({0, cur.t, cur_snr, 0.0});
  res.status = Status::kIterationLimit;

  for (int k = 1; k <= opts.max_iter; ++k) {
    const Subproblem sub = build_subproblem(data, budget, cur, opts.rank_one);
    const conic::ConeSolution sol = conic::solve(sub.program, opts.solver);
    if (sol.status != conic::SolveStatus::kOptimal) {
      res.status = Status::kSubproblemFailed;
      break;
    }
    const double dt = sol.x[2 * n + 1] * sub.var_scale[2 * n + 1];
    if (!std::isfinite(dt)) {
      res.status = Status::kSubproblemFailed;
      break;
    }
    if (!(dt < -1e-12 * cur.t)) {  // no descent left: stationary
      res.status = Status::kConverged;
      break;
    }
    CVec dw(n);
    for (int i = 0; i < n; ++i)
      dw[i] = cx{sol.x[2 * i] * sub.var_scale[2 * i],
                 sol.x[2 * i + 1] * sub.var_scale[2 * i + 1]};
    // The interior-point solution meets the pinning equalities only to
    // solver tolerance; truncate so rank-one iterates stay exactly zero.
    if (opts.rank_one)
      for (int i = d; i < n; ++i) dw[i] = cx{0.0, 0.0};
    const double da = sol.x[2 * n] * sub.var_scale[2 * n];

    // In exact arithmetic the full step is feasible and improving (the
    // majorizer dominates the true constraints); under solver round-off it
    // can overshoot, so halve it until the exactly recomputed model agrees.
    bool moved = false;
    bool below_tol = false;
    double theta = 1.0;
    for (int bt = 0; bt < 16 && !moved; ++bt, theta *= 0.5) {
      const double an = cur.a + theta * da;
      if (!(an > 0.0)) continue;
      CVec wn(n);
      for (int i = 0; i < n; ++i) wn[i] = cur.w[i] + theta * dw[i];
      const auto msn = model::min_snr(data, wn, an);
      if (!(msn.value > cur_snr) || !std::isfinite(msn.value)) continue;
      if (!model::feasible(data, wn, an, budget, opts.feas_slack).feasible())
        continue;
      below_tol = (msn.value - cur_snr) / cur_snr < opts.rel_improve_tol;
      cur = State{std::move(wn), an, 1.0 / msn.value};
      cur_snr = msn.value;
      res.iterations = k;
      res.trace.push_back({k, cur.t, cur_snr, dt, theta});
      moved = true;
    }
    if (!moved || below_tol) {
      // Either no fraction of the step helps (numerically stationary) or the
      // accepted step's improvement fell below the tolerance.
      res.status = Status::kConverged;
      break;
    }
  }

  res.solution.w = cur.w;
  res.solution.a = cur.a;
  res.solution.t = cur.t;
  res.min_snr = cur_snr;
  return res;
}

Result multistart(const model::ProblemData& data,
                  const model::PowerBudget& budget, int n_starts,
                  std::uint64_t seed, const Options& opts) {
  if (n_starts <= 0)
    throw std::invalid_argument("cccp: n_starts must be positive");
  Result best;
  for (int s = 0; s < n_starts; ++s) {
    const rng::Stream stream(seed, rng::substream(rng::kCccpInit, s));
    const auto init = initial_point(data, budget, stream, opts.rank_one);
    if (!init) continue;
    Result r = run(data, budget, *init, opts);
    if (r.status == Status::kInitFailed) continue;
    if (best.status == Status::kInitFailed || r.min_snr > best.min_snr) {
      r.start_index = s;
      best = std::move(r);
    }
  }
  return best;
}

}  // namespace relaybf::cccp
