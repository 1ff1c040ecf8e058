#pragma once
// Self-contained dense linear algebra used by the model, the conic solver and
// the bound-recovery code.  Everything here is deterministic: no pivmanagement
// depends on uninitialized state, and identical inputs produce identical
// outputs bit for bit.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace relaybf::linalg {

using cx = std::complex<double>;
using CVec = std::vector<cx>;
using RVec = std::vector<double>;

template <typename T>
class Mat {
 public:
  Mat() : rows_(0), cols_(0) {}
  Mat(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  T& operator()(int i, int j) { return d_[static_cast<std::size_t>(i) * cols_ + j]; }
  const T& operator()(int i, int j) const {
    return d_[static_cast<std::size_t>(i) * cols_ + j];
  }

  T* data() { return d_.data(); }
  const T* data() const { return d_.data(); }

  bool operator==(const Mat&) const = default;

 private:
  int rows_, cols_;
  std::vector<T> d_;
};

using CMat = Mat<cx>;
using RMat = Mat<double>;

// Thrown by decompositions and solves on numerical failure.  `index` is the
// offending pivot/column where that is meaningful, `measure` the associated
// quantity (pivot value, condition estimate, off-diagonal residual).
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, int index_, double measure_)
      : std::runtime_error(what), index(index_), measure(measure_) {}
  int index;
  double measure;
};

// --- basic operations -------------------------------------------------------

CMat adjoint(const CMat& a);
RMat transpose(const RMat& a);
CMat matmul(const CMat& a, const CMat& b);
RMat matmul(const RMat& a, const RMat& b);
CVec matvec(const CMat& a, const CVec& x);
RVec matvec(const RMat& a, const RVec& x);
cx dot(const CVec& a, const CVec& b);      // conjugated in the first argument
double dot(const RVec& a, const RVec& b);
double norm2(const CVec& a);
double norm2(const RVec& a);
double fro_norm(const CMat& a);
double fro_norm(const RMat& a);

// --- Hermitian wrapper ------------------------------------------------------

// A square complex matrix certified Hermitian: the constructor rejects inputs
// whose departure from self-adjointness exceeds 1e-12 relative to the norm,
// then symmetrizes exactly.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(const CMat& a);
  static HermitianMatrix from_real(const RMat& a);  // real symmetric input

  int dim() const { return m_.rows(); }
  const CMat& mat() const { return m_; }
  const cx& operator()(int i, int j) const { return m_(i, j); }

 private:
  CMat m_;
};

// --- decompositions ---------------------------------------------------------

// Eigendecomposition of a Hermitian matrix by Householder tridiagonalization
// followed by implicit-shift QL iteration.  Eigenvalues are returned in
// descending order with orthonormal eigenvectors as the columns of `vectors`;
// each eigenvector's largest-magnitude component is made real positive so the
// output is deterministic.
struct EigResult {
  RVec values;
  CMat vectors;
};
EigResult hermitian_eig(const HermitianMatrix& a);

// Real symmetric convenience wrapper around hermitian_eig (inputs real, so the
// computation stays exactly real).
struct RealEigResult {
  RVec values;
  RMat vectors;
};
RealEigResult symmetric_eig(const RMat& a);

// Cholesky factor L (lower triangular) with A = L Lᴴ.  Throws NumericError
// with the pivot index when a pivot is not strictly positive.
CMat cholesky(const HermitianMatrix& a);
RMat cholesky_real(const RMat& a);

// Dense solve via LU with partial pivoting.  Estimates the 1-norm condition
// number (Hager's method on the factorization) and throws NumericError with
// the estimate when it exceeds 1e12.
CVec solve_linear(const CMat& a, const CVec& rhs);

// --- real helpers for the interior-point solver ------------------------------

// One-sided Jacobi SVD of a square real matrix: a = U diag(sigma) Vᵀ with
// sigma descending and nonnegative.  Used for the positive-definite scaling
// computation, where forming AᵀA explicitly would square the condition number.
struct SvdResult {
  RMat u;
  RVec sigma;
  RMat v;
};
SvdResult jacobi_svd(const RMat& a);

// LDLᵀ factorization of a symmetric (quasidefinite) matrix without pivoting.
// Throws NumericError on a vanishing pivot.
struct LdltFactors {
  RMat l;   // unit lower triangular
  RVec d;   // diagonal, may contain negative entries
};
LdltFactors ldlt_factor(const RMat& a);
RVec ldlt_solve(const LdltFactors& f, RVec b);

// --- packed symmetric / complex embedding utilities -------------------------

// svec packs a real symmetric n×n matrix into a vector of length n(n+1)/2,
// column by column, with off-diagonal entries scaled by sqrt(2) so that
// dot(svec(A), svec(B)) == trace(A·B).
int svec_len(int n);
RVec svec(const RMat& a);
RMat smat(const RVec& v, int n);

// Real embedding of a complex Hermitian matrix: T(C) = [[Re C, -Im C],
// [Im C, Re C]].  T(C) is symmetric, and for Hermitian C and X,
// trace(T(C)·T(X))/2 == trace(C·X).  X ⪰ 0 iff T(X) ⪰ 0.
RMat real_embedding(const CMat& c);
CMat complex_from_embedding(const RMat& y);

}  // namespace relaybf::linalg
