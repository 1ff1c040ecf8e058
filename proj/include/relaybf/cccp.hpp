#pragma once
// Max-min SNR beamformer design by convex-concave iteration.
//
// The design problem
//   max_{w, a > 0}  min_m SNR_m(w, a)   s.t. power budget
// is rewritten with a bound variable t (t = 1 / min-SNR) and the per
// destination constraint
//   lambda_m(w, a, t) = (w^H R_m w + s_nu^2)/t - (w^H P_m w + |d_m|^2)/a <= 0,
//   P_m = Q_m + (|d_m|^2 / s_nu^2) R_m,
// whose first term is jointly convex in (w, t) and whose second is concave in
// (w, a).  Each iteration linearizes the concave part at the current point,
// which yields a convex majorizer lambda_bar that is tight at zero shift.
// Minimizing dt subject to lambda_bar <= 0 and the (exactly convex) power
// constraints therefore never increases t: the achieved min-SNR is
// monotonically nondecreasing across iterations.
//
// Each subproblem is a rotated-cone program over the real/imaginary parts of
// the weight shift plus (da, dt) and a few power epigraph variables; it is
// solved by the project's interior-point solver.  After every step the true
// model SNR is recomputed and t is re-tightened to 1/min-SNR, so the trace
// reports model quantities, never solver claims.

#include <cstdint>
#include <optional>
#include <vector>

#include "relaybf/conic.hpp"
#include "relaybf/model.hpp"
#include "relaybf/rng.hpp"

namespace relaybf::cccp {

// An iterate: stacked weights, scale a = 1/alpha_1^2, and the SNR bound
// variable t (maintained equal to 1 / achieved min-SNR).
struct State {
  linalg::CVec w;
  double a = 1.0;
  double t = 1.0;
};

struct Options {
  // Stop once the relative min-SNR improvement of a step falls below this.
  double rel_improve_tol = 1e-2;
  int max_iter = 50;
  // Tolerated relative overshoot of the power budget after a step (absorbs
  // subproblem solver round-off); steps beyond it are rejected.
  double feas_slack = 1e-6;
  // Single-substream special case: the second weight half is pinned to
  // exactly zero (starting points, subproblem steps, and the returned
  // solution), reducing the scheme to sequential transmission.
  bool rank_one = false;
  conic::SolveOptions solver;
};

enum class Status {
  kConverged,         // improvement below tolerance, or no descent step left
  kIterationLimit,    // max_iter reached with improvement still above tol
  kSubproblemFailed,  // subproblem unsolved or its step rejected; best kept
  kInitFailed,        // no feasible starting point with positive min-SNR
};

struct TraceEntry {
  int k = 0;            // iteration index (0 = starting point)
  double t = 0.0;       // 1 / min-SNR after the step (model-recomputed)
  double min_snr = 0.0;
  double subproblem_dt = 0.0;  // bound change predicted by the subproblem
  double step_fraction = 1.0;  // accepted fraction of the subproblem step
};

struct Result {
  Status status = Status::kInitFailed;
  model::BeamformerSolution solution;
  double min_snr = 0.0;
  int iterations = 0;   // accepted steps
  int start_index = 0;  // which starting point won (multistart only)
  std::vector<TraceEntry> trace;
};

// Deterministic feasible starting point: a complex-normal direction drawn
// from `stream`, the scale a chosen so the bare source transmission uses half
// the source budget, and the relay-weight and source-reuse entries amplified
// separately to the largest budget-feasible values less a 1% margin.  (The
// two groups have wildly different natural magnitudes under physical path
// losses, so a single shared amplitude would strand the relay weights many
// orders of magnitude below their power budget.)  Returns nullopt when no
// such point has positive min-SNR (e.g. a destination with neither relay nor
// direct path).
std::optional<State> initial_point(const model::ProblemData& data,
                                   const model::PowerBudget& budget,
                                   const rng::Stream& stream,
                                   bool rank_one = false);

// Value of the convex majorizer of lambda_m at shift (dw, da, dt) around
// `state`; <= 0 certifies SNR_m(w + dw, a + da) >= 1/(t + dt).  Equals
// lambda_m(state) at zero shift and upper-bounds lambda_m everywhere with
// t + dt > 0, a + da > 0.  Exposed for verification.
double linearized_constraint(const model::ProblemData& data, int m,
                             const State& state, const linalg::CVec& dw,
                             double da, double dt);

// The step subproblem around an iterate: minimize dt subject to the
// majorized SNR constraints, the power budget, and dt <= 0.  To keep the
// cone blocks well conditioned under physical magnitudes (weights ~1e6,
// constraint levels ~1e-16 W), every variable is expressed in a natural unit
// of the current iterate and every rotated cone (u, v, z) is balanced by
// (1/alpha, 1/beta, 1/sqrt(alpha beta)) with alpha, beta the natural sizes
// of u and v; the solver's scalar-per-block equilibration cannot repair such
// spreads on its own.  A solution entry x[j] converts to the natural shift
// as var_scale[j] * x[j]; the first 2*wdim variables are the interleaved
// (re, im) parts of dw, followed by da and dt, then power epigraphs.
struct Subproblem {
  conic::ConeProgram program;
  linalg::RVec var_scale;
};
Subproblem build_subproblem(const model::ProblemData& data,
                            const model::PowerBudget& budget,
                            const State& state, bool rank_one = false);

// Iterates from `start` until convergence.  Requires a budget with at least
// one limit (otherwise the problem is unbounded) and a start with positive
// min-SNR; the start's t is re-tightened before the first step.  Each
// subproblem step is accepted only after the exactly recomputed model SNR
// and budget agree, halving the step if solver round-off overshot; when no
// fraction of the step improves the model, the run reports convergence.
Result run(const model::ProblemData& data, const model::PowerBudget& budget,
           const State& start, const Options& opts = {});

// Best of n_starts runs from deterministic starting points; ties keep the
// lowest start index.  Result.trace is the winning run's trace.
Result multistart(const model::ProblemData& data,
                  const model::PowerBudget& budget, int n_starts,
                  std::uint64_t seed, const Options& opts = {});

}  // namespace relaybf::cccp
