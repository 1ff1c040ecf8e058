#pragma once
// Equivalent-model quantities for the two-substream amplify-and-forward
// multicast scheme.
//
// Variables: the stacked weight vector w holds the two per-relay weight
// vectors augmented by the source reuse coefficients,
//   w = [w1~; w2~],  wi~ = [w_i (R entries); conj(alpha_{i+2} / alpha_1)],
// and a = 1/alpha_1^2 > 0 scales the first-phase source amplitude.  With
// D = R+1 the per-destination data reduces to
//   q1_m = [g_m .* f;       d_m]      (numerator vector, substream 1)
//   q2_m = [g_m .* conj(f); d_m]      (numerator vector, substream 2)
//   r_m  = diag(sigma_eta^2 |g_m|^2, ..., 0)   (forwarded-noise quadratic)
// giving
//   SNR_m(w, a) = (|q1_mᴴ w1~|^2 + |q2_mᴴ w2~|^2)
//                 / ((wᴴ R_m w + sigma_nu^2) a)  +  |d_m|^2 / (sigma_nu^2 a).
//
// The diagonal unitary A = diag(exp(2j arg f_r), ..., 1) maps q2_m to q1_m
// for every destination simultaneously and leaves every diagonal quadratic
// form invariant; it is what lets the bound computation work with a single
// Gram matrix.

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <vector>

#include "relaybf/linalg.hpp"
#include "relaybf/scenario.hpp"

namespace relaybf::model {

using linalg::CVec;
using linalg::RVec;
using linalg::cx;

struct PowerBudget {
  std::optional<double> per_relay_w;  // limit on each relay's transmit power
  std::optional<double> relay_sum_w;  // limit on the summed relay power
  std::optional<double> source_w;     // limit on the source transmit power
  std::optional<double> total_w;      // limit on source + relay power

  // Standard split: P_S <= P_T/2, sum <= P_T/3, per-relay <= P_T/15.
  static PowerBudget from_total_w(double total_w);
  static PowerBudget from_total_dbm(double total_dbm);
};

struct ProblemData {
  int relay_count = 0;
  int dest_count = 0;
  double sigma_nu_sq = 0.0;       // destination noise power [W]
  double sigma_eta_sq = 0.0;      // relay noise power [W]
  std::vector<CVec> q1, q2;       // per destination, length R+1
  std::vector<RVec> r_diag;       // per destination, length R+1, last entry 0
  RVec d_abs_sq;                  // per destination |d_m|^2
  RVec f_abs_sq;                  // per relay |f_r|^2
  CVec a_phase;                   // diag of A, length R+1, last entry 1
  std::vector<char> degenerate;   // destination has g_m = 0 and d_m = 0

  int dim() const { return relay_count + 1; }        // length of each half
  int wdim() const { return 2 * (relay_count + 1); }  // stacked length
};

ProblemData build(const scenario::ChannelRealization& ch);

// SNR of destination m (equal for both substreams).  Throws std::domain_error
// for a <= 0 and std::invalid_argument on dimension mismatch.
double snr(const ProblemData& p, const CVec& w, double a, int m);

struct MinSnr {
  double value = 0.0;
  int argmin = -1;  // lowest index on ties
};
MinSnr min_snr(const ProblemData& p, const CVec& w, double a);

// Effective noise power in the relayed slots for destination m.
double sigma34_sq(const ProblemData& p, const CVec& w, int m);

double relay_power(const ProblemData& p, const CVec& w, double a, int r);
double source_power(const ProblemData& p, const CVec& w, double a);
double total_power(const ProblemData& p, const CVec& w, double a);

// lambda_m(w, a, t): nonpositive exactly when SNR_m(w, a) >= 1/t.
double snr_constraint_value(const ProblemData& p, const CVec& w, double a,
                            double t, int m);

struct Violation {
  enum Kind { kRelayPower, kRelaySum, kSourcePower, kTotalPower, kScaleSign };
  Kind kind;
  int index;     // relay index for kRelayPower, else -1
  double value;  // attained value
  double limit;  // allowed value
};

struct ViolationReport {
  std::vector<Violation> violations;
  double worst_relative_margin = std::numeric_limits<double>::infinity();
  bool feasible() const { return violations.empty(); }
};

// Checks (w, a) against the budget.  A constraint is violated when its value
// exceeds limit * (1 + rel_slack); rel_slack > 0 forgives solver round-off.
ViolationReport feasible(const ProblemData& p, const CVec& w, double a,
                         const PowerBudget& budget, double rel_slack = 0.0);

struct BeamformerSolution {
  CVec w;         // stacked weights, length 2(R+1)
  double a = 1.0;
  double t = 0.0;  // 1 / (achieved min SNR); set by the producing algorithm

  double alpha1() const { return 1.0 / std::sqrt(a); }
  cx alpha3() const { return std::conj(w[w.size() / 2 - 1]) * alpha1(); }
  cx alpha4() const { return std::conj(w.back()) * alpha1(); }
  CVec half1() const { return CVec(w.begin(), w.begin() + w.size() / 2); }
  CVec half2() const { return CVec(w.begin() + w.size() / 2, w.end()); }
  // Per-relay weight vectors (without the source-coefficient entry).
  CVec w1() const { return CVec(w.begin(), w.begin() + w.size() / 2 - 1); }
  CVec w2() const { return CVec(w.begin() + w.size() / 2, w.end() - 1); }
};

}  // namespace relaybf::model
