#include "relaybf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace relaybf::linalg {

namespace {

double hypot2(double a, double b) { return std::hypot(a, b); }

}  // namespace

// --- basic operations -------------------------------------------------------

CMat adjoint(const CMat& a) {
  CMat r(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = std::conj(a(i, j));
  return r;
}

RMat transpose(const RMat& a) {
  RMat r(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = a(i, j);
  return r;
}

template <typename T>
static Mat<T> matmul_impl(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Mat<T> r(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      T aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

CMat matmul(const CMat& a, const CMat& b) { return matmul_impl(a, b); }
RMat matmul(const RMat& a, const RMat& b) { return matmul_impl(a, b); }

CVec matvec(const CMat& a, const CVec& x) {
  if (a.cols() != static_cast<int>(x.size()))
    throw std::invalid_argument("matvec: shape mismatch");
  CVec r(a.rows(), cx{});
  for (int i = 0; i < a.rows(); ++i) {
    cx acc{};
    for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    r[i] = acc;
  }
  return r;
}

RVec matvec(const RMat& a, const RVec& x) {
  if (a.cols() != static_cast<int>(x.size()))
    throw std::invalid_argument("matvec: shape mismatch");
  RVec r(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    r[i] = acc;
  }
  return r;
}

cx dot(const CVec& a, const CVec& b) {
  cx acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double dot(const RVec& a, const RVec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const CVec& a) {
  double acc = 0.0;
  for (const cx& v : a) acc += std::norm(v);
  return std::sqrt(acc);
}

double norm2(const RVec& a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

double fro_norm(const CMat& a) {
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) acc += std::norm(a(i, j));
  return std::sqrt(acc);
}

double fro_norm(const RMat& a) {
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

// --- HermitianMatrix ---------------------------------------------------------

HermitianMatrix::HermitianMatrix(const CMat& a) : m_(a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("HermitianMatrix: not square");
  double scale = fro_norm(a);
  double dev = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i; j < a.cols(); ++j)
      dev = std::max(dev, std::abs(a(i, j) - std::conj(a(j, i))));
  if (dev > 1e-12 * std::max(1.0, scale))
    throw NumericError("HermitianMatrix: input is not Hermitian", -1, dev);
  for (int i = 0; i < m_.rows(); ++i) {
    m_(i, i) = cx{m_(i, i).real(), 0.0};
    for (int j = i + 1; j < m_.cols(); ++j) {
      cx v = 0.5 * (m_(i, j) + std::conj(m_(j, i)));
      m_(i, j) = v;
      m_(j, i) = std::conj(v);
    }
  }
}

HermitianMatrix HermitianMatrix::from_real(const RMat& a) {
  CMat c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = cx{a(i, j), 0.0};
  return HermitianMatrix(c);
}

// --- Hermitian eigendecomposition -------------------------------------------

namespace {

// Householder reduction of the Hermitian matrix held in `a` to real symmetric
// tridiagonal form (d, e); the accumulated unitary goes to `q` so that
// a_input = q · tridiag(d, e) · qᴴ.
void tridiagonalize(CMat& a, CMat& q, RVec& d, RVec& e) {
  const int n = a.rows();
  q = CMat::identity(n);
  CVec v(n), w(n);
  std::vector<cx> beta(std::max(0, n - 1), cx{});

  for (int k = 0; k < n - 2; ++k) {
    double xnorm = 0.0;
    for (int i = k + 1; i < n; ++i) xnorm += std::norm(a(i, k));
    xnorm = std::sqrt(xnorm);
    if (xnorm == 0.0) {
      beta[k] = cx{};
      continue;
    }
    cx x0 = a(k + 1, k);
    cx phase = (std::abs(x0) > 0.0) ? x0 / std::abs(x0) : cx{1.0, 0.0};
    cx b = -phase * xnorm;  // new subdiagonal entry
    double vnorm = 0.0;
    for (int i = k + 1; i < n; ++i) {
      v[i] = a(i, k);
      if (i == k + 1) v[i] -= b;
      vnorm += std::norm(v[i]);
    }
    vnorm = std::sqrt(vnorm);
    if (vnorm == 0.0) {
      beta[k] = b;
      continue;
    }
    for (int i = k + 1; i < n; ++i) v[i] /= vnorm;

    // w = A[k+1:, k+1:] v, kappa = vᴴ w (real for Hermitian A)
    double kappa = 0.0;
    for (int i = k + 1; i < n; ++i) {
      cx acc{};
      for (int j = k + 1; j < n; ++j) acc += a(i, j) * v[j];
      w[i] = acc;
    }
    for (int i = k + 1; i < n; ++i) kappa += (std::conj(v[i]) * w[i]).real();
    // u = 2(w - kappa v);  A := A - v uᴴ - u vᴴ
    for (int i = k + 1; i < n; ++i) w[i] = 2.0 * (w[i] - kappa * v[i]);
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j)
        a(i, j) -= v[i] * std::conj(w[j]) + w[i] * std::conj(v[j]);

    a(k + 1, k) = b;
    for (int i = k + 2; i < n; ++i) a(i, k) = cx{};
    beta[k] = b;

    // Q := Q (I - 2 v vᴴ)
    for (int r = 0; r < n; ++r) {
      cx acc{};
      for (int i = k + 1; i < n; ++i) acc += q(r, i) * v[i];
      acc *= 2.0;
      for (int i = k + 1; i < n; ++i) q(r, i) -= acc * std::conj(v[i]);
    }
  }
  if (n >= 2) beta[n - 2] = a(n - 1, n - 2);

  // Phase-rotate so the subdiagonal becomes real nonnegative:
  // T' = D T Dᴴ with |D_kk| = 1, column k of Q absorbs conj(D_kk).
  d.assign(n, 0.0);
  e.assign(std::max(0, n - 1), 0.0);
  for (int i = 0; i < n; ++i) d[i] = a(i, i).real();
  cx dk{1.0, 0.0};
  for (int k = 0; k + 1 < n; ++k) {
    cx bk = beta[k] * std::conj(dk);  // subdiagonal after previous rotations
    double m = std::abs(bk);
    e[k] = m;
    // D_{k+1} b real nonnegative requires D_{k+1} = |b|/b (|D| = 1).
    cx dk1 = (m > 0.0) ? m / bk : cx{1.0, 0.0};
    for (int r = 0; r < n; ++r) q(r, k + 1) *= std::conj(dk1);
    dk = dk1;
  }
}

// Implicit-shift QL iteration on the tridiagonal (d, e), accumulating the
// (real) rotations into the complex eigenvector matrix `q`.  Classic EISPACK
// tql2 with the usual Wilkinson shift.
void tql2(RVec& d, RVec& e, CMat& q) {
  const int n = static_cast<int>(d.size());
  if (n <= 1) return;
  e.resize(n, 0.0);
  const double eps = std::numeric_limits<double>::epsilon();

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 60)
          throw NumericError("hermitian_eig: QL iteration did not converge", l,
                             std::abs(e[l]));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = hypot2(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = hypot2(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < q.rows(); ++k) {
            cx t = q(k, i + 1);
            q(k, i + 1) = s * q(k, i) + c * t;
            q(k, i) = c * q(k, i) - s * t;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

EigResult hermitian_eig(const HermitianMatrix& h) {
  const int n = h.dim();
  EigResult out;
  if (n == 0) {
    out.vectors = CMat(0, 0);
    return out;
  }
  CMat a = h.mat();
  CMat q;
  RVec d, e;
  tridiagonalize(a, q, d, e);
  tql2(d, e, q);

  // Sort descending; deterministic (stable on ties by original index).
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return d[i] > d[j]; });
  out.values.resize(n);
  out.vectors = CMat(n, n);
  for (int jj = 0; jj < n; ++jj) {
    int src = order[jj];
    out.values[jj] = d[src];
    // Phase convention: largest-magnitude component real positive.
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      double m = std::abs(q(i, src));
      if (m > best + 1e-30) {
        best = m;
        imax = i;
      }
    }
    cx ph = (best > 0.0) ? std::conj(q(imax, src)) / best : cx{1.0, 0.0};
    for (int i = 0; i < n; ++i) out.vectors(i, jj) = q(i, src) * ph;
  }
  return out;
}

RealEigResult symmetric_eig(const RMat& a) {
  EigResult c = hermitian_eig(HermitianMatrix::from_real(a));
  RealEigResult out;
  out.values = std::move(c.values);
  out.vectors = RMat(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.vectors(i, j) = c.vectors(i, j).real();
  return out;
}

// --- Cholesky ----------------------------------------------------------------

CMat cholesky(const HermitianMatrix& h) {
  const int n = h.dim();
  CMat l(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = h(j, j).real();
    for (int k = 0; k < j; ++k) diag -= std::norm(l(j, k));
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw NumericError("cholesky: nonpositive pivot", j, diag);
    double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      cx acc = h(i, j);
      for (int k = 0; k < j; ++k) acc -= l(i, k) * std::conj(l(j, k));
      l(i, j) = acc / ljj;
    }
  }
  return l;
}

RMat cholesky_real(const RMat& a) {
  const int n = a.rows();
  RMat l(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw NumericError("cholesky_real: nonpositive pivot", j, diag);
    double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double acc = a(i, j);
      for (int k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / ljj;
    }
  }
  return l;
}

// --- LU solve with condition estimate ----------------------------------------

namespace {

struct Lu {
  CMat lu;
  std::vector<int> piv;
};

Lu lu_factor(CMat a) {
  const int n = a.rows();
  std::vector<int> piv(n);
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      double m = std::abs(a(i, k));
      if (m > best) {
        best = m;
        p = i;
      }
    }
    piv[k] = p;
    if (p != k)
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
    if (best == 0.0)
      throw NumericError("solve_linear: exactly singular matrix", k, 0.0);
    cx pivot = a(k, k);
    for (int i = k + 1; i < n; ++i) {
      cx m = a(i, k) / pivot;
      a(i, k) = m;
      for (int j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
    }
  }
  return {std::move(a), std::move(piv)};
}

CVec lu_solve(const Lu& f, CVec b, bool adjoint_solve) {
  const int n = f.lu.rows();
  if (!adjoint_solve) {
    // Stored multipliers reflect all row swaps, so the permutation must be
    // applied to the right-hand side in full before substitution begins.
    for (int k = 0; k < n; ++k)
      if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
    for (int k = 0; k < n; ++k)
      for (int i = k + 1; i < n; ++i) b[i] -= f.lu(i, k) * b[k];
    for (int k = n - 1; k >= 0; --k) {
      b[k] /= f.lu(k, k);
      for (int i = 0; i < k; ++i) b[i] -= f.lu(i, k) * b[k];
    }
  } else {
    // Solve Aᴴ x = b given PA = LU: Aᴴ = Uᴴ Lᴴ Pᵀ... handle by forward
    // substitution with Uᴴ, back substitution with Lᴴ, then unpermute.
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < k; ++i) b[k] -= std::conj(f.lu(i, k)) * b[i];
      b[k] /= std::conj(f.lu(k, k));
    }
    for (int k = n - 1; k >= 0; --k) {
      for (int i = k + 1; i < n; ++i) b[k] -= std::conj(f.lu(i, k)) * b[i];
    }
    for (int k = n - 1; k >= 0; --k)
      if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
  }
  return b;
}

// Hager's 1-norm estimator for ||A^{-1}||_1 using the existing factorization.
double inv_norm1_estimate(const Lu& f) {
  const int n = f.lu.rows();
  CVec x(n, cx{1.0 / n, 0.0});
  double est = 0.0;
  int last_j = -1;
  for (int pass = 0; pass < 5; ++pass) {
    CVec z = lu_solve(f, x, false);
    double z1 = 0.0;
    for (const cx& v : z) z1 += std::abs(v);
    est = std::max(est, z1);
    CVec xi(n);
    for (int i = 0; i < n; ++i) {
      double m = std::abs(z[i]);
      xi[i] = (m > 0.0) ? z[i] / m : cx{1.0, 0.0};
    }
    CVec w = lu_solve(f, xi, true);
    int j = 0;
    double wmax = -1.0;
    for (int i = 0; i < n; ++i) {
      double m = std::abs(w[i]);
      if (m > wmax) {
        wmax = m;
        j = i;
      }
    }
    double wx = 0.0;
    for (int i = 0; i < n; ++i) wx += (std::conj(w[i]) * x[i]).real();
    if (wmax <= wx || j == last_j) break;
    std::fill(x.begin(), x.end(), cx{});
    x[j] = cx{1.0, 0.0};
    last_j = j;
  }
  return est;
}

}  // namespace

CVec solve_linear(const CMat& a, const CVec& rhs) {
  if (a.rows() != a.cols()) throw std::invalid_argument("solve_linear: not square");
  if (a.rows() != static_cast<int>(rhs.size()))
    throw std::invalid_argument("solve_linear: rhs size mismatch");
  double norm1 = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    double col = 0.0;
    for (int i = 0; i < a.rows(); ++i) col += std::abs(a(i, j));
    norm1 = std::max(norm1, col);
  }
  Lu f = lu_factor(a);
  double cond = norm1 * inv_norm1_estimate(f);
  if (!(cond < 1e12))
    throw NumericError("solve_linear: ill-conditioned system", -1, cond);
  return lu_solve(f, rhs, false);
}

// --- one-sided Jacobi SVD ----------------------------------------------------

SvdResult jacobi_svd(const RMat& a_in) {
  if (a_in.rows() != a_in.cols())
    throw std::invalid_argument("jacobi_svd: expected a square matrix");
  const int n = a_in.rows();
  RMat a = a_in;
  RMat v = RMat::identity(n);
  const double eps = 1e-15;

  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < n; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        double zeta = (aqq - app) / (2.0 * apq);
        double t = std::copysign(1.0, zeta) /
                   (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (int i = 0; i < n; ++i) {
          double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
          double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
    if (sweep == 59)
      throw NumericError("jacobi_svd: failed to converge", -1, 0.0);
  }

  RVec sigma(n);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a(i, j) * a(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return sigma[i] > sigma[j]; });

  SvdResult out;
  out.u = RMat(n, n);
  out.v = RMat(n, n);
  out.sigma.resize(n);
  for (int jj = 0; jj < n; ++jj) {
    int src = order[jj];
    double s = sigma[src];
    out.sigma[jj] = s;
    for (int i = 0; i < n; ++i) {
      out.u(i, jj) = (s > 0.0) ? a(i, src) / s : (i == jj ? 1.0 : 0.0);
      out.v(i, jj) = v(i, src);
    }
  }
  return out;
}

// --- LDLᵀ --------------------------------------------------------------------

LdltFactors ldlt_factor(const RMat& a) {
  const int n = a.rows();
  LdltFactors f;
  f.l = RMat::identity(n);
  f.d.assign(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double dj = a(j, j);
    for (int k = 0; k < j; ++k) dj -= f.l(j, k) * f.l(j, k) * f.d[k];
    if (dj == 0.0 || !std::isfinite(dj))
      throw NumericError("ldlt_factor: vanishing pivot", j, dj);
    f.d[j] = dj;
    for (int i = j + 1; i < n; ++i) {
      double acc = a(i, j);
      for (int k = 0; k < j; ++k) acc -= f.l(i, k) * f.l(j, k) * f.d[k];
      f.l(i, j) = acc / dj;
    }
  }
  return f;
}

RVec ldlt_solve(const LdltFactors& f, RVec b) {
  const int n = f.l.rows();
  for (int k = 0; k < n; ++k)
    for (int i = k + 1; i < n; ++i) b[i] -= f.l(i, k) * b[k];
  for (int k = 0; k < n; ++k) b[k] /= f.d[k];
  for (int k = n - 1; k >= 0; --k)
    for (int i = 0; i < k; ++i) b[i] -= f.l(k, i) * b[k];
  return b;
}

// --- svec / smat / complex embedding -----------------------------------------

int svec_len(int n) { return n * (n + 1) / 2; }

RVec svec(const RMat& a) {
  const int n = a.rows();
  const double rt2 = std::sqrt(2.0);
  RVec v(svec_len(n));
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    v[idx++] = a(j, j);
    for (int i = j + 1; i < n; ++i) v[idx++] = rt2 * a(i, j);
  }
  return v;
}

RMat smat(const RVec& v, int n) {
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  RMat a(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j) {
    a(j, j) = v[idx++];
    for (int i = j + 1; i < n; ++i) {
      double x = v[idx++] * inv_rt2;
      a(i, j) = x;
      a(j, i) = x;
    }
  }
  return a;
}

RMat real_embedding(const CMat& c) {
  const int n = c.rows();
  RMat y(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double re = c(i, j).real(), im = c(i, j).imag();
      y(i, j) = re;
      y(n + i, n + j) = re;
      y(i, n + j) = -im;
      y(n + i, j) = im;
    }
  return y;
}

CMat complex_from_embedding(const RMat& y) {
  const int n = y.rows() / 2;
  CMat c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double re = 0.5 * (y(i, j) + y(n + i, n + j));
      double im = 0.5 * (y(n + i, j) - y(i, n + j));
      c(i, j) = cx{re, im};
    }
  return c;
}

}  // namespace relaybf::linalg
