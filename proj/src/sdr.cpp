#include "relaybf/sdr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "relaybf/cccp.hpp"
#include "relaybf/rng.hpp"

namespace relaybf::sdr {
namespace {

using linalg::cx;

// Fallback chains mirror the design module: a per-relay limit may be implied
// by the summed or total budget, the source limit by the total one.
double relay_cap_of(const model::PowerBudget& b, int relay_count) {
  if (b.per_relay_w) return *b.per_relay_w;
  if (b.relay_sum_w) return *b.relay_sum_w / relay_count;
  if (b.total_w) return *b.total_w / (2.0 * relay_count);
  return 0.0;
}

double source_cap_of(const model::PowerBudget& b) {
  if (b.source_w) return *b.source_w;
  if (b.total_w) return *b.total_w / 2.0;
  return 0.0;
}

void validate_budget(const model::PowerBudget& b, int relay_count) {
  for (const auto& lim : {b.per_relay_w, b.relay_sum_w, b.source_w, b.total_w}) {
    if (lim && !(*lim > 0.0 && std::isfinite(*lim)))
      throw std::invalid_argument("sdr: power limits must be positive and finite");
  }
  if (!(relay_cap_of(b, relay_count) > 0.0))
    throw std::invalid_argument("sdr: budget does not bound the relay powers");
  if (!(source_cap_of(b) > 0.0))
    throw std::invalid_argument("sdr: budget does not bound the source power");
}

void validate_point(double t, double a) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument("sdr: t must be positive and finite");
  if (!(a > 0.0) || !std::isfinite(a))
    throw std::invalid_argument("sdr: a must be positive and finite");
}

// Forwarded power per unit squared relay weight.
double relay_power_coef(const model::ProblemData& p, double a, int r) {
  return p.f_abs_sq[r] / a + p.sigma_eta_sq;
}

// Diagonal of the congruence scale D: entry i is the natural magnitude of the
// i-th weight at this a (power-saturating for relays, reuse-saturating for
// the source entry), floored at 1 so near-degenerate budgets stay sane.
RVec natural_scale(const model::ProblemData& p, const model::PowerBudget& b,
                   double a) {
  int d = p.dim();
  RVec s(d, 1.0);
  double relay_cap = relay_cap_of(b, p.relay_count);
  for (int r = 0; r < p.relay_count; ++r) {
    double c = relay_power_coef(p, a, r);
    if (c > 0.0) s[r] = std::sqrt(relay_cap / c);
  }
  s[d - 1] = std::sqrt(std::max(source_cap_of(b) * a / 2.0 - 1.0, 1.0));
  return s;
}

// (q qᴴ - gamma diag(r)) scaled by D on both sides.
CMat scaled_snr_coeff(const CVec& q, const RVec& r, double gamma,
                      const RVec& dsc) {
  int d = static_cast<int>(q.size());
  CMat c(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j)
      c(i, j) = dsc[i] * dsc[j] * q[i] * std::conj(q[j]);
    c(i, i) -= gamma * r[i] * dsc[i] * dsc[i];
  }
  return c;
}

// The relaxed constraint system at (t, a) over one or two scaled Gram blocks.
std::vector<conic::PsdConstraint> relaxation_rows(const model::ProblemData& p,
                                                  const model::PowerBudget& b,
                                                  double t, double a,
                                                  const RVec& dsc,
                                                  bool two_blocks) {
  int d = p.dim();
  std::vector<conic::PsdConstraint> rows;

  for (int m = 0; m < p.dest_count; ++m) {
    double kappa = p.d_abs_sq[m] / p.sigma_nu_sq;
    double gamma = a / t - kappa;
    conic::PsdConstraint row;
    row.sense = conic::PsdConstraint::kGe;
    row.rhs = gamma * p.sigma_nu_sq;
    row.terms.push_back({0, scaled_snr_coeff(p.q1[m], p.r_diag[m], gamma, dsc)});
    if (two_blocks)
      row.terms.push_back(
          {1, scaled_snr_coeff(p.q2[m], p.r_diag[m], gamma, dsc)});
    rows.push_back(std::move(row));
  }

  auto diag_term = [&](int block, const RVec& diag) {
    CMat c(d, d);
    for (int i = 0; i < d; ++i) c(i, i) = diag[i] * dsc[i] * dsc[i];
    return conic::PsdTerm{block, std::move(c)};
  };
  auto add_le = [&](const RVec& diag, double rhs) {
    conic::PsdConstraint row;
    row.sense = conic::PsdConstraint::kLe;
    row.rhs = rhs;
    row.terms.push_back(diag_term(0, diag));
    if (two_blocks) row.terms.push_back(diag_term(1, diag));
    rows.push_back(std::move(row));
  };

  if (b.per_relay_w) {
    for (int r = 0; r < p.relay_count; ++r) {
      RVec diag(d, 0.0);
      diag[r] = relay_power_coef(p, a, r);
      add_le(diag, *b.per_relay_w);
    }
  }
  if (b.relay_sum_w) {
    RVec diag(d, 0.0);
    for (int r = 0; r < p.relay_count; ++r) diag[r] = relay_power_coef(p, a, r);
    add_le(diag, *b.relay_sum_w);
  }
  if (b.source_w) {
    RVec diag(d, 0.0);
    diag[d - 1] = 2.0 / a;
    add_le(diag, *b.source_w - 2.0 / a);
  }
  if (b.total_w) {
    RVec diag(d, 0.0);
    for (int r = 0; r < p.relay_count; ++r)
      diag[r] = 2.0 * relay_power_coef(p, a, r);
    diag[d - 1] = 2.0 / a;
    add_le(diag, *b.total_w - 2.0 / a);
  }
  return rows;
}

Feasibility map_verdict(conic::SdpFeasibilityResult::Verdict v) {
  switch (v) {
    case conic::SdpFeasibilityResult::kFeasible:
      return Feasibility::kFeasible;
    case conic::SdpFeasibilityResult::kInfeasible:
      return Feasibility::kInfeasible;
    default:
      return Feasibility::kIndeterminate;
  }
}

FeasibleCheck run_feasibility(const model::ProblemData& p,
                              const model::PowerBudget& budget, double t,
                              double a, const Options& opts, bool two_blocks) {
  validate_point(t, a);
  validate_budget(budget, p.relay_count);
  int d = p.dim();
  RVec dsc = natural_scale(p, budget, a);
  auto rows = relaxation_rows(p, budget, t, a, dsc, two_blocks);
  std::vector<int> dims(two_blocks ? 2 : 1, d);
  auto res = conic::sdp_feasibility(dims, rows, opts.feas_tol, opts.solver);

  FeasibleCheck out;
  out.verdict = map_verdict(res.verdict);
  out.margin = res.margin;
  out.solver_status = res.solver_status;
  for (auto& y : res.x) {
    if (y.rows() != d || y.cols() != d) continue;  // no point was produced
    CMat x(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = dsc[i] * dsc[j] * y(i, j);
    out.x.push_back(std::move(x));
  }
  return out;
}

double bracket_hint(const model::ProblemData& p,
                    const model::PowerBudget& budget, std::uint64_t seed) {
  auto start = cccp::initial_point(
      p, budget, rng::Stream(seed, rng::substream(rng::StreamDomain::kCccpInit, 0)));
  return start ? start->t : 1.0;
}

CVec scaled(const CVec& v, double beta) {
  CVec out(v);
  for (auto& e : out) e *= beta;
  return out;
}

// --- two-factor candidate scaling --------------------------------------------

// Linear coefficients of every power/SNR quantity of the candidate pair
// [sqrt(b1) w1~; sqrt(b2) w2~] in the squared factors (b1, b2).
struct PairTerms {
  RVec num1, num2;  // per destination, numerator terms
  RVec den1, den2;  // per destination, forwarded-noise quadratics
  RVec pow1, pow2;  // per relay, transmit power at unit factor
  double reuse1 = 0.0, reuse2 = 0.0;
};

PairTerms pair_terms(const model::ProblemData& p, const CVec& w1,
                     const CVec& w2, double a) {
  int d = p.dim();
  PairTerms tm;
  tm.num1.resize(p.dest_count);
  tm.num2.resize(p.dest_count);
  tm.den1.resize(p.dest_count);
  tm.den2.resize(p.dest_count);
  for (int m = 0; m < p.dest_count; ++m) {
    tm.num1[m] = std::norm(linalg::dot(p.q1[m], w1));
    tm.num2[m] = std::norm(linalg::dot(p.q2[m], w2));
    double d1 = 0.0, d2 = 0.0;
    for (int i = 0; i < d; ++i) {
      d1 += p.r_diag[m][i] * std::norm(w1[i]);
      d2 += p.r_diag[m][i] * std::norm(w2[i]);
    }
    tm.den1[m] = d1;
    tm.den2[m] = d2;
  }
  tm.pow1.resize(p.relay_count);
  tm.pow2.resize(p.relay_count);
  for (int r = 0; r < p.relay_count; ++r) {
    double c = relay_power_coef(p, a, r);
    tm.pow1[r] = c * std::norm(w1[r]);
    tm.pow2[r] = c * std::norm(w2[r]);
  }
  tm.reuse1 = std::norm(w1[d - 1]);
  tm.reuse2 = std::norm(w2[d - 1]);
  return tm;
}

// Feasibility of target min-SNR s in the two nonnegative squared factors,
// decided by maximizing a uniform margin over the row-normalized constraint
// system (a 3-variable linear program).  Returns the factors on success.
std::optional<std::pair<double, double>> pair_factors_at(
    const model::ProblemData& p, const model::PowerBudget& b,
    const PairTerms& tm, double a, double s, const Options& opts) {
  conic::ProgramBuilder pb;
  int b1 = pb.add_var();
  int b2 = pb.add_var();
  int mu = pb.add_var(-1.0);  // maximize the margin
  pb.add_nonneg(conic::AffExpr::of(b1));
  pb.add_nonneg(conic::AffExpr::of(b2));
  pb.add_nonneg(conic::AffExpr::of(b1, -1.0, 1e18));
  pb.add_nonneg(conic::AffExpr::of(b2, -1.0, 1e18));
  pb.add_nonneg(conic::AffExpr::of(mu, -1.0, 1.0));

  auto add_row = [&](double c1, double c2, double cst) {
    double norm = std::max({std::fabs(c1), std::fabs(c2), std::fabs(cst), 1e-300});
    conic::AffExpr e;
    e.add(b1, c1);
    e.add(b2, c2);
    e.constant = cst;
    e.add(mu, -norm);
    pb.add_nonneg(e);
  };

  for (int m = 0; m < p.dest_count; ++m) {
    double gamma = s * a - p.d_abs_sq[m] / p.sigma_nu_sq;
    add_row(tm.num1[m] - gamma * tm.den1[m], tm.num2[m] - gamma * tm.den2[m],
            -gamma * p.sigma_nu_sq);
  }
  if (b.per_relay_w) {
    for (int r = 0; r < p.relay_count; ++r)
      add_row(-tm.pow1[r], -tm.pow2[r], *b.per_relay_w);
  }
  double psum1 = 0.0, psum2 = 0.0;
  for (int r = 0; r < p.relay_count; ++r) {
    psum1 += tm.pow1[r];
    psum2 += tm.pow2[r];
  }
  if (b.relay_sum_w) add_row(-psum1, -psum2, *b.relay_sum_w);
  if (b.source_w)
    add_row(-2.0 * tm.reuse1 / a, -2.0 * tm.reuse2 / a, *b.source_w - 2.0 / a);
  if (b.total_w)
    add_row(-2.0 * tm.reuse1 / a - 2.0 * psum1,
            -2.0 * tm.reuse2 / a - 2.0 * psum2, *b.total_w - 2.0 / a);

  auto sol = conic::solve(pb.build(), opts.solver);
  if (sol.status != conic::SolveStatus::kOptimal) return std::nullopt;
  if (!(sol.x[mu] >= 1e-9)) return std::nullopt;
  return std::make_pair(std::max(sol.x[b1], 0.0), std::max(sol.x[b2], 0.0));
}

CVec stack_pair(const CVec& w1, const CVec& w2, double b1, double b2) {
  int d = static_cast<int>(w1.size());
  CVec w(2 * d);
  double s1 = std::sqrt(std::max(b1, 0.0));
  double s2 = std::sqrt(std::max(b2, 0.0));
  for (int i = 0; i < d; ++i) {
    w[i] = s1 * w1[i];
    w[d + i] = s2 * w2[i];
  }
  return w;
}

}  // namespace

FeasibleCheck sdr_feasible(const model::ProblemData& p,
                           const model::PowerBudget& budget, double t, double a,
                           const Options& opts) {
  return run_feasibility(p, budget, t, a, opts, false);
}

FeasibleCheck sdr_feasible_two_matrix(const model::ProblemData& p,
                                      const model::PowerBudget& budget,
                                      double t, double a, const Options& opts) {
  return run_feasibility(p, budget, t, a, opts, true);
}

BisectResult bisect_t(const model::ProblemData& p,
                      const model::PowerBudget& budget, double a,
                      double eps_bis, const Options& opts, double t_hint) {
  if (!(eps_bis > 0.0) || !std::isfinite(eps_bis))
    throw std::invalid_argument("sdr: eps_bis must be positive and finite");
  if (!(a > 0.0) || !std::isfinite(a))
    throw std::invalid_argument("sdr: a must be positive and finite");
  validate_budget(budget, p.relay_count);

  BisectResult out;
  auto probe = [&](double t) {
    auto c = sdr_feasible(p, budget, t, a, opts);
    ++out.probes;
    if (c.verdict == Feasibility::kIndeterminate) ++out.indeterminate;
    if (c.verdict == Feasibility::kFeasible && !c.x.empty()) {
      out.x1 = std::move(c.x[0]);
      return true;
    }
    return false;  // indeterminate counts as infeasible: only certified
  };                // probes may carry the reported t

  double t_hi = t_hint > 0.0 ? t_hint : bracket_hint(p, budget, 0);
  bool hi_ok = probe(t_hi);
  for (int k = 0; !hi_ok && k < opts.max_expand; ++k) {
    t_hi *= 2.0;
    hi_ok = probe(t_hi);
  }
  if (!hi_ok) return out;  // no feasible target found at this a

  double t_lo = t_hi * 0x1p-20;
  bool lo_feasible = probe(t_lo);
  for (int k = 0; lo_feasible && k < opts.max_expand; ++k) {
    t_hi = t_lo;
    t_lo *= 0.5;
    lo_feasible = probe(t_lo);
  }
  if (lo_feasible) {
    // Feasible all the way down the expanded bracket; report the smallest
    // probed target rather than chase an unattainable infimum.
    out.feasible = true;
    out.t = t_lo;
    out.t_infeasible = 0.0;
    return out;
  }

  while (t_hi > t_lo * (1.0 + eps_bis)) {
    double tm = std::sqrt(t_hi) * std::sqrt(t_lo);
    if (!(tm > t_lo && tm < t_hi)) break;  // bracket exhausted in doubles
    if (probe(tm))
      t_hi = tm;
    else
      t_lo = tm;
  }
  out.feasible = true;
  out.t = t_hi;
  out.t_infeasible = t_lo;
  return out;
}

SdrOutcome search(const model::ProblemData& p, const model::PowerBudget& budget,
                  std::uint64_t seed, const Options& opts) {
  if (opts.grid_size < 1)
    throw std::invalid_argument("sdr: grid_size must be at least 1");
  validate_budget(budget, p.relay_count);

  double a_lo = opts.a_lo_override.value_or(2.0 / source_cap_of(budget));
  double a_hi = opts.a_hi_override.value_or(a_lo * opts.a_span);
  if (!(a_lo > 0.0) || !(a_hi >= a_lo) || !std::isfinite(a_hi))
    throw std::invalid_argument("sdr: invalid a-grid range");

  int n = a_hi > a_lo ? opts.grid_size : 1;
  RVec grid_a(n);
  for (int k = 0; k < n; ++k)
    grid_a[k] = n == 1 ? a_lo
                       : a_lo * std::pow(a_hi / a_lo, k / (n - 1.0));

  double t_hint = bracket_hint(p, budget, seed);

  SdrOutcome out;
  out.grid.resize(n);
  std::vector<CMat> grams(n);
  std::exception_ptr fault;
  std::atomic<int> next{0};
  auto eval_point = [&](int k) {
    auto b = bisect_t(p, budget, grid_a[k], opts.eps_bis, opts, t_hint);
    GridPoint g;
    g.a = grid_a[k];
    g.feasible = b.feasible;
    g.t = b.t;
    g.probes = b.probes;
    g.indeterminate = b.indeterminate;
    if (b.feasible) {
      g.rank = numerical_rank(b.x1, opts.rank_rel_tol);
      grams[k] = std::move(b.x1);
    }
    out.grid[k] = g;
  };
  int jobs = std::clamp(opts.jobs, 1, n);
  if (jobs > 1) {
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int j = 0; j < jobs; ++j) {
      workers.emplace_back([&] {
        for (int k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
          try {
            eval_point(k);
          } catch (...) {
            if (!fault) fault = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (fault) std::rethrow_exception(fault);
  } else {
    for (int k = 0; k < n; ++k) eval_point(k);
  }

  int best = -1;
  for (int k = 0; k < n; ++k) {
    if (!out.grid[k].feasible) continue;
    if (best < 0 || out.grid[k].t < out.grid[best].t) best = k;
  }
  if (best < 0) return out;  // every grid point infeasible

  out.feasible = true;
  out.t_star = out.grid[best].t;
  out.a_star = out.grid[best].a;
  out.bound_snr = 1.0 / out.t_star;
  out.x1_star = std::move(grams[best]);
  auto eig = linalg::hermitian_eig(linalg::HermitianMatrix(out.x1_star));
  out.eigenvalues = eig.values;
  out.rank = numerical_rank(out.x1_star, opts.rank_rel_tol);

  if (!opts.recover) return out;

  int limit = opts.recovery == RecoveryMode::kRankTwo ? 2 : 1;
  if (out.rank <= limit) {
    auto [w1, w2] = decompose_rank_two(out.x1_star, p, opts.rank_rel_tol);
    CVec w = stack_pair(w1, w2, 1.0, 1.0);
    double beta = max_amplitude(p, budget, w, out.a_star);
    if (std::isfinite(beta) && beta < 1.0) w = scaled(w, beta * (1.0 - 1e-12));
    double ms = model::min_snr(p, w, out.a_star).value;
    out.solution.w = std::move(w);
    out.solution.a = out.a_star;
    out.solution.t = ms > 0.0 ? 1.0 / ms : std::numeric_limits<double>::infinity();
    out.solution_min_snr = ms;
    out.solution_exact = true;
  } else {
    auto rr = randomize(out.x1_star, out.a_star, p, budget, opts.n_candidates,
                        opts.recovery, seed, opts);
    out.solution = std::move(rr.solution);
    out.solution_min_snr = rr.min_snr;
    out.solution_exact = false;
  }
  return out;
}

int numerical_rank(const CMat& x, double rel_tol) {
  if (!(rel_tol >= 0.0))
    throw std::invalid_argument("sdr: rank tolerance must be nonnegative");
  if (x.rows() == 0) return 0;
  auto eig = linalg::hermitian_eig(linalg::HermitianMatrix(x));
  double lmax = eig.values[0];
  if (!(lmax > 0.0)) return 0;
  int count = 0;
  for (double v : eig.values)
    if (v > rel_tol * lmax) ++count;
  return count;
}

std::pair<CVec, CVec> decompose_rank_two(const CMat& x1,
                                         const model::ProblemData& p,
                                         double rel_tol) {
  int d = p.dim();
  if (x1.rows() != d || x1.cols() != d)
    throw std::invalid_argument("sdr: Gram matrix dimension mismatch");
  auto eig = linalg::hermitian_eig(linalg::HermitianMatrix(x1));
  double lmax = eig.values[0];
  int rank = 0;
  if (lmax > 0.0)
    for (double v : eig.values)
      if (v > rel_tol * lmax) ++rank;
  if (rank > 2)
    throw std::domain_error("sdr: Gram matrix rank exceeds two");

  CVec w1(d, cx(0.0, 0.0)), w2(d, cx(0.0, 0.0));
  if (rank >= 1) {
    double s = std::sqrt(eig.values[0]);
    for (int i = 0; i < d; ++i) w1[i] = s * eig.vectors(i, 0);
  }
  if (rank >= 2) {
    double s = std::sqrt(eig.values[1]);
    // The merged Gram matrix carries the rotated second half; rotate back.
    for (int i = 0; i < d; ++i)
      w2[i] = std::conj(p.a_phase[i]) * s * eig.vectors(i, 1);
  }
  return {std::move(w1), std::move(w2)};
}

double max_amplitude(const model::ProblemData& p,
                     const model::PowerBudget& budget, const CVec& w,
                     double a) {
  int d = p.dim();
  if (static_cast<int>(w.size()) != 2 * d)
    throw std::invalid_argument("sdr: weight vector dimension mismatch");
  if (!(a > 0.0) || !std::isfinite(a))
    throw std::invalid_argument("sdr: a must be positive and finite");

  double reuse = std::norm(w[d - 1]) + std::norm(w[2 * d - 1]);
  RVec den(p.relay_count);
  double den_sum = 0.0;
  for (int r = 0; r < p.relay_count; ++r) {
    den[r] = (std::norm(w[r]) + std::norm(w[d + r])) * relay_power_coef(p, a, r);
    den_sum += den[r];
  }

  double cap = std::numeric_limits<double>::infinity();
  bool impossible = false;
  auto consider = [&](double num, double coef) {
    if (coef <= 0.0) {
      if (num < 0.0) impossible = true;  // violated already at beta = 0
      return;
    }
    cap = std::min(cap, num / coef);
  };
  if (budget.per_relay_w)
    for (int r = 0; r < p.relay_count; ++r) consider(*budget.per_relay_w, den[r]);
  if (budget.relay_sum_w) consider(*budget.relay_sum_w, den_sum);
  if (budget.source_w) consider(*budget.source_w - 2.0 / a, 2.0 * reuse / a);
  if (budget.total_w)
    consider(*budget.total_w - 2.0 / a, 2.0 * reuse / a + 2.0 * den_sum);

  if (impossible || cap <= 0.0) return 0.0;
  return std::sqrt(cap);
}

RandomizeResult randomize(const CMat& x1, double a,
                          const model::ProblemData& p,
                          const model::PowerBudget& budget, int n_candidates,
                          RecoveryMode mode, std::uint64_t seed,
                          const Options& opts) {
  int d = p.dim();
  if (x1.rows() != d || x1.cols() != d)
    throw std::invalid_argument("sdr: Gram matrix dimension mismatch");
  if (n_candidates < 1)
    throw std::invalid_argument("sdr: need at least one candidate");
  if (!(a > 0.0) || !std::isfinite(a))
    throw std::invalid_argument("sdr: a must be positive and finite");
  validate_budget(budget, p.relay_count);

  // Factor x1 = L Lᴴ through its eigendecomposition so L z has covariance x1
  // for z ~ CN(0, I); negative round-off eigenvalues are clamped.
  auto eig = linalg::hermitian_eig(linalg::HermitianMatrix(x1));
  CMat l(d, d);
  for (int j = 0; j < d; ++j) {
    double s = std::sqrt(std::max(eig.values[j], 0.0));
    for (int i = 0; i < d; ++i) l(i, j) = s * eig.vectors(i, j);
  }
  // Split candidates divide the covariance between the two halves.
  double draw_scale = mode == RecoveryMode::kRankTwo ? std::sqrt(0.5) : 1.0;

  RandomizeResult best;
  for (int c = 0; c < n_candidates; ++c) {
    rng::Stream st(seed,
                   rng::substream(rng::StreamDomain::kSdrRandomization, c));
    CVec z1(d), w1(d, cx(0.0, 0.0)), w2(d, cx(0.0, 0.0));
    for (int i = 0; i < d; ++i) z1[i] = st.cgaussian(i);
    for (int i = 0; i < d; ++i) {
      cx acc(0.0, 0.0);
      for (int j = 0; j < d; ++j) acc += l(i, j) * z1[j];
      w1[i] = draw_scale * acc;
    }
    if (mode == RecoveryMode::kRankTwo) {
      CVec z2(d);
      for (int i = 0; i < d; ++i) z2[i] = st.cgaussian(d + i);
      for (int i = 0; i < d; ++i) {
        cx acc(0.0, 0.0);
        for (int j = 0; j < d; ++j) acc += l(i, j) * z2[j];
        w2[i] = draw_scale * std::conj(p.a_phase[i]) * acc;
      }
    }

    CVec w;
    if (mode == RecoveryMode::kRankOne) {
      w = stack_pair(w1, w2, 1.0, 1.0);
      double beta = max_amplitude(p, budget, w, a);
      if (!std::isfinite(beta)) beta = 1.0;
      w = scaled(w, beta * (1.0 - 1e-12));
    } else {
      // Uniform-amplitude witness, then bisect the target SNR with the
      // two-factor feasibility program improving on it.
      auto tm = pair_terms(p, w1, w2, a);
      CVec joint = stack_pair(w1, w2, 1.0, 1.0);
      double beta0 = max_amplitude(p, budget, joint, a);
      if (!std::isfinite(beta0)) beta0 = 1.0;
      beta0 *= 1.0 - 1e-12;
      std::pair<double, double> factors{beta0 * beta0, beta0 * beta0};
      double s_lo = model::min_snr(p, scaled(joint, beta0), a).value;
      bool have = s_lo > 0.0;
      if (!have) {
        auto f = pair_factors_at(p, budget, tm, a, 1e-30, opts);
        if (f) {
          factors = *f;
          s_lo = 1e-30;
          have = true;
        }
      }
      if (have) {
        double s_hi = s_lo * 2.0;
        int k = 0;
        while (k++ < opts.max_expand) {
          auto f = pair_factors_at(p, budget, tm, a, s_hi, opts);
          if (!f) break;
          factors = *f;
          s_lo = s_hi;
          s_hi *= 2.0;
        }
        while (s_hi > s_lo * 1.001) {
          double sm = std::sqrt(s_lo) * std::sqrt(s_hi);
          if (!(sm > s_lo && sm < s_hi)) break;
          auto f = pair_factors_at(p, budget, tm, a, sm, opts);
          if (f) {
            factors = *f;
            s_lo = sm;
          } else {
            s_hi = sm;
          }
        }
      }
      w = stack_pair(w1, w2, factors.first, factors.second);
    }

    // Defensive amplitude clamp against round-off at the power boundary.
    if (!model::feasible(p, w, a, budget, 1e-9).feasible()) {
      double fix = max_amplitude(p, budget, w, a);
      if (!std::isfinite(fix) || !(fix > 0.0)) continue;
      w = scaled(w, std::min(fix, 1.0) * (1.0 - 1e-12));
      if (!model::feasible(p, w, a, budget, 1e-9).feasible()) continue;
    }
    double ms = model::min_snr(p, w, a).value;
    if (best.best_index < 0 || ms > best.min_snr) {
      best.min_snr = ms;
      best.best_index = c;
      best.solution.w = std::move(w);
      best.solution.a = a;
      best.solution.t =
          ms > 0.0 ? 1.0 / ms : std::numeric_limits<double>::infinity();
    }
  }
  return best;
}

void write_grid_csv(std::ostream& os, const SdrOutcome& outcome) {
  os << "a,t_best,snr_db,status,rank,probes,indeterminate\n";
  char buf[160];
  for (const auto& g : outcome.grid) {
    if (g.feasible) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,feasible,%d,%d,%d\n",
                    g.a, g.t, 10.0 * std::log10(1.0 / g.t), g.rank, g.probes,
                    g.indeterminate);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,,,infeasible,%d,%d,%d\n", g.a,
                    g.rank, g.probes, g.indeterminate);
    }
    os << buf;
  }
}

}  // namespace relaybf::sdr
