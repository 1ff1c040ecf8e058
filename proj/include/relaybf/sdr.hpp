#pragma once
// Semidefinite-relaxation bound and baseline for the max-min SNR design.
//
// Replacing the stacked weight halves by their summed Gram matrix
//   X = w1~ w1~ᴴ + (A w2~)(A w2~)ᴴ
// turns every SNR and power quantity into a linear function of X: the unitary
// diagonal A (see model.hpp) maps the second-substream numerator vector onto
// the first and leaves all diagonal quadratic forms alone, so a single PSD
// matrix carries both substreams.  Dropping the rank constraint leaves, at
// fixed (t, a), a semidefinite feasibility problem
//   tr(X Q1_m) >= (a/t - kappa_m) (tr(X R_m) + sigma_nu^2)   for every m,
//   power rows linear in diag(X),
//   X >= 0,
// whose feasibility is monotone in t.  Bisection on t and a logarithmic grid
// on a bound the achievable min SNR from above; when the Gram matrix at the
// best grid point has numerical rank <= 2 its top eigenpairs attain the bound
// exactly, and otherwise Gaussian randomization recovers a feasible design.
//
// Every feasibility problem is posed on a congruence-scaled copy
// Y = D^-1 X D^-1, where the diagonal D holds per-entry natural weight
// magnitudes implied by the power budget.  X >= 0 iff Y >= 0, so verdicts are
// unchanged, but Y is O(1) where physical Gram entries span ~12 orders of
// magnitude -- a spread the solver's scalar-per-block equilibration cannot
// repair on its own.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "relaybf/conic.hpp"
#include "relaybf/linalg.hpp"
#include "relaybf/model.hpp"

namespace relaybf::sdr {

using linalg::CMat;
using linalg::CVec;
using linalg::RVec;

// How a bounding Gram matrix is converted back into a transmit design.
// kRankTwo uses both substreams; kRankOne forces the second substream to
// zero, the sequential single-stream special case.
enum class RecoveryMode { kRankTwo, kRankOne };

struct Options {
  double eps_bis = 1e-2;     // relative precision of the bisection on t
  int grid_size = 200;       // points of the logarithmic a-grid
  double a_span = 1e6;       // a_hi = a_span * a_lo unless overridden
  std::optional<double> a_lo_override;  // replaces 2 / P_source_max
  std::optional<double> a_hi_override;  // replaces a_span * a_lo
  double feas_tol = 1e-7;    // margin threshold separating the verdicts
  double rank_rel_tol = 1e-6;            // eigenvalue cutoff, relative to max
  int n_candidates = 200;                // randomization candidates
  RecoveryMode recovery = RecoveryMode::kRankTwo;
  bool recover = true;       // false: report the bound only, skip recovery
  int max_expand = 60;       // bracket doublings before a point gives up
  int jobs = 1;              // grid points evaluated concurrently
  conic::SolveOptions solver;
};

enum class Feasibility { kFeasible, kInfeasible, kIndeterminate };

struct FeasibleCheck {
  Feasibility verdict = Feasibility::kIndeterminate;
  // Gram blocks in physical units when the solver produced a point: one
  // matrix for the merged form, two for the split form.
  std::vector<CMat> x;
  double margin = 0.0;  // optimal uniform slack, row-normalized units
  conic::SolveStatus solver_status = conic::SolveStatus::kNumericLimit;
};

// Feasibility of the relaxation at a fixed SNR target 1/t and source scale a.
// Throws std::invalid_argument on non-positive t or a, or when the budget
// bounds neither the relay powers nor the source power.
FeasibleCheck sdr_feasible(const model::ProblemData& p,
                           const model::PowerBudget& budget, double t, double a,
                           const Options& opts = {});

// The same system before merging the substreams: separate PSD Gram blocks
// X1, X2 for the two halves.  Feasible exactly when the merged form is; kept
// as an executable statement of that equivalence.
FeasibleCheck sdr_feasible_two_matrix(const model::ProblemData& p,
                                      const model::PowerBudget& budget,
                                      double t, double a,
                                      const Options& opts = {});

struct BisectResult {
  bool feasible = false;
  double t = std::numeric_limits<double>::infinity();  // smallest feasible t
  double t_infeasible = 0.0;  // largest certified-infeasible t probed
  CMat x1;                    // Gram matrix at t, physical units
  int probes = 0;             // feasibility checks spent
  int indeterminate = 0;      // indeterminate verdicts among them
};

// Smallest t with a feasible relaxation at this a, to relative precision
// eps_bis.  The bracket starts at t_hint (or, when t_hint <= 0, at 1/min-SNR
// of the deterministic design initial point), is doubled upward if that start
// is infeasible at this a, and its lower end starts 2^20 below the upper,
// halving further while still feasible.  Indeterminate verdicts count as
// infeasible, so the reported t never rides on an uncertified probe.
BisectResult bisect_t(const model::ProblemData& p,
                      const model::PowerBudget& budget, double a,
                      double eps_bis, const Options& opts = {},
                      double t_hint = 0.0);

struct GridPoint {
  double a = 0.0;
  bool feasible = false;
  double t = std::numeric_limits<double>::infinity();
  int rank = 0;  // numerical rank of the Gram matrix at t (0 if infeasible)
  int probes = 0;
  int indeterminate = 0;
};

struct SdrOutcome {
  bool feasible = false;  // at least one grid point admitted a design
  double t_star = std::numeric_limits<double>::infinity();
  double a_star = 0.0;
  double bound_snr = 0.0;  // 1 / t_star
  CMat x1_star;            // Gram matrix at the best grid point
  RVec eigenvalues;        // of x1_star, descending
  int rank = 0;
  std::vector<GridPoint> grid;
  // Recovered design: exact top-eigenpair conversion when rank permits,
  // otherwise the best randomized candidate.  w stays empty when recovery was
  // skipped or no grid point was feasible.
  model::BeamformerSolution solution;
  double solution_min_snr = 0.0;
  bool solution_exact = false;
};

// Full bound computation: logarithmic a-grid spanning [2/P_source_max,
// a_span * that] unless overridden, bisection at every point, best point
// reported with its Gram matrix, spectrum, and recovered design.  grid_size 1
// (or a_lo == a_hi) degenerates to a single bisection.  The seed drives the
// bracket's initial design point and the randomization candidates only; the
// bound itself is seed-independent up to bracket placement.
SdrOutcome search(const model::ProblemData& p, const model::PowerBudget& budget,
                  std::uint64_t seed, const Options& opts = {});

// Count of eigenvalues exceeding rel_tol times the largest (0 for matrices
// with no positive eigenvalue).  Throws on non-Hermitian input.
int numerical_rank(const CMat& x, double rel_tol = 1e-6);

// Exact conversion of a rank <= 2 Gram matrix into the two stacked halves:
// w1~ from the leading eigenpair, w2~ from the second one rotated back
// through Aᴴ.  Throws std::domain_error when the numerical rank exceeds two.
std::pair<CVec, CVec> decompose_rank_two(const CMat& x1,
                                         const model::ProblemData& p,
                                         double rel_tol = 1e-6);

// Largest amplitude beta such that beta * w satisfies every power limit at
// this a: all limits are monotone in beta, so the cap is a closed-form
// minimum over the active constraints.  May return 0 (no feasible amplitude)
// or +infinity (no limit binds this direction).
double max_amplitude(const model::ProblemData& p,
                     const model::PowerBudget& budget, const CVec& w,
                     double a);

struct RandomizeResult {
  model::BeamformerSolution solution;  // w empty when every candidate failed
  double min_snr = 0.0;
  int best_index = -1;  // candidate index that won
};

// Gaussian randomization fallback.  kRankOne: candidates drawn with
// covariance x1, second half zero, scaled by the closed-form amplitude cap.
// kRankTwo: both halves drawn i.i.d. with covariance x1/2 (so the expected
// Gram sum is x1) and scaled by a per-candidate pair of nonnegative factors
// found by bisecting the target SNR over small feasibility linear programs --
// every power and SNR term is linear in the two squared factors.  Candidate i
// is a pure function of (seed, i), so results do not depend on n_candidates
// ordering.
RandomizeResult randomize(const CMat& x1, double a,
                          const model::ProblemData& p,
                          const model::PowerBudget& budget, int n_candidates,
                          RecoveryMode mode, std::uint64_t seed,
                          const Options& opts = {});

// One line per grid point: a, best t, SNR bound in dB, status, rank, probe
// counts.  Infeasible points leave the numeric fields empty.
void write_grid_csv(std::ostream& os, const SdrOutcome& outcome);

}  // namespace relaybf::sdr
