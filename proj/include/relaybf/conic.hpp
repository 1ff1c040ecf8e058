#pragma once
// Self-contained primal-dual conic interior-point solver.
//
// Standard form:
//   minimize    c'x
//   subject to  A x = b
//               G x + s = h,   s in K
// where K is a Cartesian product of nonnegative-orthant, second-order,
// rotated second-order and (real symmetric, svec-packed) positive
// semidefinite cones.
//
// Algorithm: homogeneous self-dual embedding with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step, the classic cone-LP recipe.  The KKT
// system is reduced by eliminating the cone block (closed-form inverse
// scalings per cone), leaving a dense quasidefinite system in the primal
// variables and equality multipliers, factorized by LDL^T with static
// regularization and refined against the full KKT residual.  Problem data is
// equilibrated (iterated row/column scaling, uniform per cone block) before
// solving and every reported quantity is unscaled back, which matters here
// because physically meaningful instances span ~28 orders of magnitude.
//
// The solver is deterministic: identical inputs produce identical iterate
// sequences.

#include <iosfwd>
#include <vector>

#include "relaybf/linalg.hpp"

namespace relaybf::conic {

using linalg::RMat;
using linalg::RVec;

enum class ConeKind { kOrthant, kSoc, kRotatedSoc, kPsd };

struct ConeBlock {
  ConeKind kind;
  // kOrthant: number of rows; kSoc/kRotatedSoc: block length; kPsd: matrix
  // order n (occupying n(n+1)/2 svec-packed rows).
  int dim;
  int slack_rows() const {
    return kind == ConeKind::kPsd ? dim * (dim + 1) / 2 : dim;
  }
};

struct ConeProgram {
  RVec c;
  RMat a_eq;  // p x n (p may be 0)
  RVec b_eq;
  RMat g;  // m x n
  RVec h;
  std::vector<ConeBlock> cones;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_eq() const { return a_eq.rows(); }
  int num_cone_rows() const { return g.rows(); }
  void validate() const;  // throws std::invalid_argument on inconsistency

  // Plain-text dump: header lines ("vars N", "eq-rows P", "cone-rows M"),
  // the cone list ("cone soc 5"...), then sparse triplets "c i v",
  // "A i j v", "b i v", "G i j v", "h i v" with %.17g values.
  void dump(std::ostream& os) const;
};

enum class SolveStatus {
  kOptimal,
  kPrimalInfeasible,  // y, z hold a Farkas certificate
  kDualInfeasible,    // x, s certify an unbounded primal ray
  kIterationLimit,
  kNumericLimit,
};

struct IterateInfo {
  int k;
  double pcost, dcost;
  double gap;   // s'z / tau^2
  double pres, dres;
  double tau, kappa;
  double step;
};

struct SolveOptions {
  double tol = 1e-8;          // feasibility and relative-gap tolerance
  double abs_gap_tol = 1e-10;  // absolute duality-gap tolerance, original cost units
  int max_iter = 100;
  bool collect_trace = false;
  double static_reg = 1e-10;
  bool equilibrate = true;
};

struct ConeSolution {
  SolveStatus status = SolveStatus::kNumericLimit;
  RVec x, y, z, s;
  double objective = 0.0;  // c'x for optimal solutions
  double pres = 0.0, dres = 0.0, relgap = 0.0;
  int iterations = 0;
  std::vector<IterateInfo> trace;
};

ConeSolution solve(const ConeProgram& prog, const SolveOptions& opts = {});

// --- program assembly --------------------------------------------------------

// Sparse affine expression sum_i coef_i x_{var_i} + constant.
struct AffExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  AffExpr& add(int var, double coef) {
    if (coef != 0.0) terms.emplace_back(var, coef);
    return *this;
  }
  static AffExpr constant_of(double v) {
    AffExpr e;
    e.constant = v;
    return e;
  }
  static AffExpr of(int var, double coef = 1.0, double cst = 0.0) {
    AffExpr e;
    e.constant = cst;
    e.add(var, coef);
    return e;
  }
};

// Incremental builder.  Nonnegativity rows are pooled into a single leading
// orthant block; SOC/rotated/PSD blocks keep their insertion order.
class ProgramBuilder {
 public:
  int add_var(double cost = 0.0);
  int num_vars() const { return static_cast<int>(cost_.size()); }
  void set_cost(int var, double cost);

  void add_eq(const AffExpr& e);                   // e == 0
  void add_nonneg(const AffExpr& e);               // e >= 0
  void add_soc(const std::vector<AffExpr>& e);     // e[0] >= ||e[1:]||_2
  // ||z||^2 <= u * v with u, v >= 0 (quadratic-over-linear epigraph;
  // emitted as one rotated second-order cone block).
  void add_quad_le_product(const AffExpr& u, const AffExpr& v,
                           const std::vector<AffExpr>& z);
  // svec-packed symmetric matrix expression is positive semidefinite;
  // entries.size() must equal order*(order+1)/2.
  void add_psd(int order, const std::vector<AffExpr>& entries);

  ConeProgram build() const;

 private:
  struct Row {
    AffExpr e;
  };
  struct Block {
    ConeKind kind;
    int dim;
    std::vector<AffExpr> rows;
  };
  RVec cost_;
  std::vector<AffExpr> eqs_;
  std::vector<AffExpr> nonneg_;
  std::vector<Block> blocks_;
};

// --- Hermitian PSD feasibility via margin maximization ------------------------

// Constraint sum_b trace(coeff_b * X_{block_b})  (sense)  rhs over Hermitian
// PSD variables X_0, X_1, ... of the given (complex) dimensions.
struct PsdTerm {
  int block;
  linalg::CMat coeff;  // Hermitian
};
struct PsdConstraint {
  enum Sense { kGe, kLe, kEq };
  std::vector<PsdTerm> terms;
  Sense sense = kGe;
  double rhs = 0.0;
};

struct SdpFeasibilityResult {
  enum Verdict { kFeasible, kInfeasible, kIndeterminate };
  Verdict verdict = kIndeterminate;
  double margin = 0.0;  // optimal uniform margin in row-normalized units
  std::vector<linalg::CMat> x;  // Hermitian blocks (valid when solver succeeded)
  SolveStatus solver_status = SolveStatus::kNumericLimit;
};

// Decides strict feasibility by maximizing a uniform slack margin across all
// (row-normalized) inequality constraints.  margin >= +feas_tol: feasible,
// margin <= -feas_tol: infeasible, otherwise indeterminate.  Complex
// Hermitian blocks are lowered to real symmetric form internally.
SdpFeasibilityResult sdp_feasibility(const std::vector<int>& dims,
                                     const std::vector<PsdConstraint>& cons,
                                     double feas_tol,
                                     const SolveOptions& opts = {});

}  // namespace relaybf::conic
