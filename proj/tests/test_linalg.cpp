#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relaybf/linalg.hpp"
#include "relaybf/rng.hpp"

using namespace relaybf;
using namespace relaybf::linalg;

namespace {

CMat random_hermitian(int n, std::uint64_t seed, double scale = 1.0) {
  rng::Stream st(seed, 77);
  CMat a(n, n);
  std::uint64_t idx = 0;
  for (int i = 0; i < n; ++i) {
    a(i, i) = cx{scale * st.gaussian(idx++), 0.0};
    for (int j = i + 1; j < n; ++j) {
      cx v = scale * st.cgaussian(idx++);
      a(i, j) = v;
      a(j, i) = std::conj(v);
    }
  }
  return a;
}

RMat random_real(int n, std::uint64_t seed) {
  rng::Stream st(seed, 78);
  RMat a(n, n);
  std::uint64_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = st.gaussian(idx++);
  return a;
}

double reconstruction_error(const HermitianMatrix& h, const EigResult& e) {
  const int n = h.dim();
  CMat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cx acc{};
      for (int k = 0; k < n; ++k)
        acc += e.vectors(i, k) * e.values[k] * std::conj(e.vectors(j, k));
      r(i, j) = acc - h(i, j);
    }
  return fro_norm(r);
}

double orthonormality_error(const CMat& v) {
  CMat g = matmul(adjoint(v), v);
  for (int i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return fro_norm(g);
}

}  // namespace

TEST_CASE("identity matrix has unit eigenvalues and orthonormal vectors") {
  for (int n : {1, 2, 5, 16}) {
    auto e = hermitian_eig(HermitianMatrix(CMat::identity(n)));
    for (double v : e.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(orthonormality_error(e.vectors) < 1e-13);
  }
}

TEST_CASE("diagonal matrix eigenvalues are returned in descending order") {
  CMat a(3, 3);
  a(0, 0) = 3.0;
  a(1, 1) = 1.0;
  a(2, 2) = 2.0;
  auto e = hermitian_eig(HermitianMatrix(a));
  REQUIRE(e.values.size() == 3);
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(2.0));
  CHECK(e.values[2] == doctest::Approx(1.0));
  // Eigenvectors are the correspondingly permuted unit vectors.
  CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(2, 1)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(1, 2)) == doctest::Approx(1.0));
}

TEST_CASE("2x2 Hermitian with imaginary coupling: analytic eigenvalues") {
  // [[2, i], [-i, 2]] has eigenvalues 2 +/- 1.
  CMat a(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 2.0;
  a(0, 1) = cx{0.0, 1.0};
  a(1, 0) = cx{0.0, -1.0};
  auto e = hermitian_eig(HermitianMatrix(a));
  CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(reconstruction_error(HermitianMatrix(a), e) < 1e-13);
}

TEST_CASE("random Hermitian: reconstruction and orthonormality") {
  for (int n : {2, 3, 7, 11, 22, 40}) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      HermitianMatrix h(random_hermitian(n, seed));
      auto e = hermitian_eig(h);
      double scale = fro_norm(h.mat());
      CHECK(reconstruction_error(h, e) < 1e-12 * std::max(1.0, scale));
      CHECK(orthonormality_error(e.vectors) < 1e-12);
      for (std::size_t k = 1; k < e.values.size(); ++k)
        CHECK(e.values[k - 1] >= e.values[k]);
    }
  }
}

TEST_CASE("clustered eigenvalues still reconstruct") {
  // A = I + tiny rank-one bump: nearly degenerate spectrum.
  int n = 9;
  rng::Stream st(5, 1);
  CVec u(n);
  for (int i = 0; i < n; ++i) u[i] = st.cgaussian(i);
  double nu = norm2(u);
  for (auto& v : u) v /= nu;
  CMat a = CMat::identity(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) += 1e-9 * u[i] * std::conj(u[j]);
  HermitianMatrix h(a);
  auto e = hermitian_eig(h);
  CHECK(reconstruction_error(h, e) < 1e-12);
  CHECK(orthonormality_error(e.vectors) < 1e-12);
}

TEST_CASE("eigensolver is deterministic") {
  HermitianMatrix h(random_hermitian(12, 9));
  auto e1 = hermitian_eig(h);
  auto e2 = hermitian_eig(h);
  CHECK(e1.values == e2.values);
  CHECK(e1.vectors == e2.vectors);
}

TEST_CASE("HermitianMatrix rejects non-Hermitian input") {
  CMat a(2, 2);
  a(0, 1) = cx{1.0, 0.0};
  a(1, 0) = cx{0.5, 0.0};
  CHECK_THROWS_AS(HermitianMatrix{a}, NumericError);
}

TEST_CASE("cholesky reconstructs and reports failure pivot") {
  // SPD via B Bᴴ + I.
  CMat b = random_hermitian(8, 3);
  CMat spd = matmul(b, adjoint(b));
  for (int i = 0; i < 8; ++i) spd(i, i) += 1.0;
  HermitianMatrix h(spd);
  CMat l = cholesky(h);
  CMat rec = matmul(l, adjoint(l));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) rec(i, j) -= spd(i, j);
  CHECK(fro_norm(rec) < 1e-12 * fro_norm(spd));

  // Indefinite: diag(1, -1) must fail at pivot 1.
  CMat ind(2, 2);
  ind(0, 0) = 1.0;
  ind(1, 1) = -1.0;
  try {
    cholesky(HermitianMatrix(ind));
    FAIL("expected NumericError");
  } catch (const NumericError& err) {
    CHECK(err.index == 1);
  }
}

TEST_CASE("solve_linear residual and singular detection") {
  int n = 10;
  rng::Stream st(11, 2);
  CMat a(n, n);
  std::uint64_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = st.cgaussian(idx++);
  CVec x_true(n);
  for (int i = 0; i < n; ++i) x_true[i] = st.cgaussian(idx++);
  CVec rhs = matvec(a, x_true);
  CVec x = solve_linear(a, rhs);
  double err = 0.0;
  for (int i = 0; i < n; ++i) err += std::norm(x[i] - x_true[i]);
  CHECK(std::sqrt(err) < 1e-10 * norm2(x_true));

  CMat sing(2, 2);
  sing(0, 0) = 1.0;
  sing(0, 1) = 2.0;
  sing(1, 0) = 0.5;
  sing(1, 1) = 1.0;  // rank one
  CHECK_THROWS_AS(solve_linear(sing, CVec(2, cx{1.0, 0.0})), NumericError);
}

TEST_CASE("jacobi_svd factors and orders singular values") {
  for (std::uint64_t seed : {1ull, 4ull}) {
    int n = 13;
    RMat a = random_real(n, seed);
    auto svd = jacobi_svd(a);
    // Reconstruction.
    RMat us(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) us(i, j) = svd.u(i, j) * svd.sigma[j];
    RMat rec = matmul(us, transpose(svd.v));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) rec(i, j) -= a(i, j);
    CHECK(fro_norm(rec) < 1e-12 * fro_norm(a));
    // Orthogonality of U and V.
    RMat utu = matmul(transpose(svd.u), svd.u);
    RMat vtv = matmul(transpose(svd.v), svd.v);
    for (int i = 0; i < n; ++i) {
      utu(i, i) -= 1.0;
      vtv(i, i) -= 1.0;
    }
    CHECK(fro_norm(utu) < 1e-12);
    CHECK(fro_norm(vtv) < 1e-12);
    for (int k = 1; k < n; ++k) CHECK(svd.sigma[k - 1] >= svd.sigma[k]);
    CHECK(svd.sigma[n - 1] >= 0.0);
  }
}

TEST_CASE("ldlt solves quasidefinite KKT-style systems") {
  // [H Aᵀ; A -delta I] with H SPD: classic quasidefinite structure.
  int nh = 6, na = 3, n = nh + na;
  RMat b = random_real(nh, 21);
  RMat h = matmul(transpose(b), b);
  for (int i = 0; i < nh; ++i) h(i, i) += 1.0;
  RMat a_blk = random_real(na, 22);  // use top-left na x nh block
  RMat k(n, n);
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < nh; ++j) k(i, j) = h(i, j);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nh; ++j) {
      double v = a_blk(i, j % na) + 0.1 * (i + j);
      k(nh + i, j) = v;
      k(j, nh + i) = v;
    }
  for (int i = 0; i < na; ++i) k(nh + i, nh + i) = -1e-8;

  auto f = ldlt_factor(k);
  RVec rhs(n);
  rng::Stream st(23, 0);
  for (int i = 0; i < n; ++i) rhs[i] = st.gaussian(i);
  RVec x = ldlt_solve(f, rhs);
  RVec r = matvec(k, x);
  double err = 0.0;
  for (int i = 0; i < n; ++i) err += (r[i] - rhs[i]) * (r[i] - rhs[i]);
  CHECK(std::sqrt(err) < 1e-8 * norm2(rhs));
}

TEST_CASE("svec/smat round-trip and trace inner product") {
  int n = 5;
  RMat b1 = random_real(n, 31), b2 = random_real(n, 32);
  RMat s1 = matmul(transpose(b1), b1);
  RMat s2 = matmul(transpose(b2), b2);
  RVec v1 = svec(s1), v2 = svec(s2);
  REQUIRE(static_cast<int>(v1.size()) == svec_len(n));
  // Round trip.
  RMat back = smat(v1, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) CHECK(back(i, j) == doctest::Approx(s1(i, j)));
  // dot(svec, svec) == trace(S1 S2).
  double tr = 0.0;
  RMat p = matmul(s1, s2);
  for (int i = 0; i < n; ++i) tr += p(i, i);
  CHECK(dot(v1, v2) == doctest::Approx(tr).epsilon(1e-12));
}

TEST_CASE("real embedding preserves trace pairing and positive semidefiniteness") {
  int n = 4;
  CMat c = random_hermitian(n, 41);
  CMat xb = random_hermitian(n, 42);
  CMat x = matmul(xb, adjoint(xb));  // PSD
  RMat tc = real_embedding(c), tx = real_embedding(x);
  // trace(T(C) T(X))/2 == trace(C X) (real part; exact for Hermitian pair).
  RMat pr = matmul(tc, tx);
  double tr_real = 0.0;
  for (int i = 0; i < 2 * n; ++i) tr_real += pr(i, i);
  CMat pc = matmul(c, x);
  cx tr_cx{};
  for (int i = 0; i < n; ++i) tr_cx += pc(i, i);
  CHECK(tr_real / 2.0 == doctest::Approx(tr_cx.real()).epsilon(1e-12));
  CHECK(std::abs(tr_cx.imag()) < 1e-12 * std::abs(tr_cx.real() + 1e-300));
  // Embedding of a PSD matrix is PSD.
  auto e = symmetric_eig(tx);
  CHECK(e.values.back() > -1e-10 * std::max(1.0, e.values.front()));
  // Round trip.
  CMat back = complex_from_embedding(tx);
  double dev = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dev += std::norm(back(i, j) - x(i, j));
  CHECK(std::sqrt(dev) < 1e-13 * fro_norm(x));
}

TEST_CASE("symmetric_eig on real input matches reconstruction") {
  RMat b = random_real(9, 51);
  RMat s = matmul(transpose(b), b);
  auto e = symmetric_eig(s);
  RMat rec(9, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 9; ++k)
        acc += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
      rec(i, j) = acc - s(i, j);
    }
  CHECK(fro_norm(rec) < 1e-11 * fro_norm(s));
  CHECK(e.values.back() > -1e-12 * e.values.front());
}
