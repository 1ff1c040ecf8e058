#include "relaybf/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace relaybf::conic {
namespace {

using linalg::LdltFactors;
using linalg::NumericError;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStepBack = 0.99;  // fraction of the distance to the boundary

// --- small vector helpers ----------------------------------------------------

void axpy(double a, const RVec& x, RVec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}
void scal(double a, RVec& x) {
  for (double& v : x) v *= a;
}

// --- cone layout --------------------------------------------------------------

struct Block {
  ConeKind kind;
  int dim;     // see ConeBlock
  int offset;  // first slack row
  int len;     // number of slack rows
};

std::vector<Block> make_layout(const std::vector<ConeBlock>& cones) {
  std::vector<Block> blocks;
  int off = 0;
  for (const ConeBlock& c : cones) {
    Block b{c.kind, c.dim, off, c.slack_rows()};
    blocks.push_back(b);
    off += b.len;
  }
  return blocks;
}

RMat block_smat(const Block& b, const double* v) {
  RVec t(v, v + b.len);
  return linalg::smat(t, b.dim);
}
void block_svec(const RMat& m, double* out) {
  RVec t = linalg::svec(m);
  std::copy(t.begin(), t.end(), out);
}

// --- Nesterov-Todd scaling ----------------------------------------------------

// W maps the dual cone variable to the scaled point: lambda = W z = W^{-T} s.
struct Nt {
  RVec w;           // orthant: W = diag(w), w_i = sqrt(s_i / z_i)
  double eta = 1.0;  // soc: W = eta (2 v v' - J), v'Jv = 1
  RVec v;
  RMat r, rinv;  // psd: W x = svec(R' X R); R from the scaling-point factors
  RVec sigma;    // psd: scaled point is diag(sigma)
};

Nt identity_nt(const Block& b) {
  Nt nt;
  switch (b.kind) {
    case ConeKind::kOrthant:
      nt.w.assign(b.dim, 1.0);
      break;
    case ConeKind::kSoc:
      nt.v.assign(b.dim, 0.0);
      nt.v[0] = 1.0;  // 2 e0 e0' - J = I
      break;
    case ConeKind::kPsd:
      nt.r = RMat::identity(b.dim);
      nt.rinv = RMat::identity(b.dim);
      nt.sigma.assign(b.dim, 1.0);
      break;
    default:
      throw std::logic_error("identity_nt: unexpected cone kind");
  }
  return nt;
}

Nt compute_nt(const Block& b, const double* s, const double* z) {
  Nt nt;
  switch (b.kind) {
    case ConeKind::kOrthant: {
      nt.w.resize(b.dim);
      for (int i = 0; i < b.dim; ++i) {
        if (!(s[i] > 0.0) || !(z[i] > 0.0))
          throw NumericError("nt scaling: iterate left the orthant", b.offset + i,
                             std::min(s[i], z[i]));
        nt.w[i] = std::sqrt(s[i] / z[i]);
      }
      break;
    }
    case ConeKind::kSoc: {
      const int L = b.dim;
      auto jquad = [L](const double* u) {
        double a = u[0] * u[0];
        for (int i = 1; i < L; ++i) a -= u[i] * u[i];
        return a;
      };
      const double sj = jquad(s), zj = jquad(z);
      if (!(s[0] > 0.0) || !(z[0] > 0.0) || !(sj > 0.0) || !(zj > 0.0))
        throw NumericError("nt scaling: iterate left the second-order cone",
                           b.offset, std::min(sj, zj));
      const double sres = std::sqrt(sj), zres = std::sqrt(zj);
      double ip = 0.0;
      for (int i = 0; i < L; ++i) ip += s[i] * z[i];
      const double gamma = std::sqrt((1.0 + ip / (sres * zres)) / 2.0);
      nt.eta = std::sqrt(sres / zres);
      // wbar = (sbar + J zbar) / (2 gamma), unit hyperbolic norm
      RVec wbar(L);
      wbar[0] = (s[0] / sres + z[0] / zres) / (2.0 * gamma);
      for (int i = 1; i < L; ++i)
        wbar[i] = (s[i] / sres - z[i] / zres) / (2.0 * gamma);
      const double denom = std::sqrt(2.0 * (wbar[0] + 1.0));
      nt.v.resize(L);
      nt.v[0] = (wbar[0] + 1.0) / denom;
      for (int i = 1; i < L; ++i) nt.v[i] = wbar[i] / denom;
      break;
    }
    case ConeKind::kPsd: {
      // R = L_S V Sigma^{-1/2} and R^{-1} = Sigma^{-1/2} U' L_Z' where
      // L_Z' L_S = U Sigma V'.  Working on the Cholesky factors instead of the
      // products S, Z avoids squaring their condition numbers.
      const RMat smat_s = block_smat(b, s);
      const RMat smat_z = block_smat(b, z);
      const RMat ls = linalg::cholesky_real(smat_s);
      const RMat lz = linalg::cholesky_real(smat_z);
      const auto svd = linalg::jacobi_svd(linalg::matmul(linalg::transpose(lz), ls));
      const int nmat = b.dim;
      for (int i = 0; i < nmat; ++i)
        if (!(svd.sigma[i] > 0.0))
          throw NumericError("nt scaling: singular psd scaling point", b.offset,
                             svd.sigma[i]);
      nt.r = linalg::matmul(ls, svd.v);
      nt.rinv = linalg::matmul(linalg::transpose(svd.u), linalg::transpose(lz));
      for (int j = 0; j < nmat; ++j) {
        const double isq = 1.0 / std::sqrt(svd.sigma[j]);
        for (int i = 0; i < nmat; ++i) {
          nt.r(i, j) *= isq;      // scale columns of R
          nt.rinv(j, i) *= isq;   // scale rows of R^{-1}
        }
      }
      nt.sigma = svd.sigma;
      break;
    }
    default:
      throw std::logic_error("compute_nt: unexpected cone kind");
  }
  return nt;
}

enum class WOp { kW, kWt, kWinv, kWinvt };

void apply_block(const Block& b, const Nt& nt, WOp op, const double* in,
                 double* out) {
  switch (b.kind) {
    case ConeKind::kOrthant: {
      // W symmetric diagonal: W and W' coincide, likewise the inverses.
      const bool inverse = (op == WOp::kWinv || op == WOp::kWinvt);
      for (int i = 0; i < b.dim; ++i)
        out[i] = inverse ? in[i] / nt.w[i] : in[i] * nt.w[i];
      break;
    }
    case ConeKind::kSoc: {
      // W = eta (2 v v' - J) is symmetric; W^{-1} = (2 (Jv)(Jv)' - J) / eta.
      const int L = b.dim;
      const bool inverse = (op == WOp::kWinv || op == WOp::kWinvt);
      const double f = inverse ? 1.0 / nt.eta : nt.eta;
      double d = 0.0;
      if (!inverse) {
        for (int i = 0; i < L; ++i) d += nt.v[i] * in[i];
        out[0] = f * (2.0 * nt.v[0] * d - in[0]);
        for (int i = 1; i < L; ++i) out[i] = f * (2.0 * nt.v[i] * d + in[i]);
      } else {
        d = nt.v[0] * in[0];
        for (int i = 1; i < L; ++i) d -= nt.v[i] * in[i];  // (Jv)' in
        out[0] = f * (2.0 * nt.v[0] * d - in[0]);
        for (int i = 1; i < L; ++i) out[i] = f * (-2.0 * nt.v[i] * d + in[i]);
      }
      break;
    }
    case ConeKind::kPsd: {
      const RMat x = block_smat(b, in);
      RMat res;
      switch (op) {
        case WOp::kW:  // R' X R
          res = linalg::matmul(linalg::matmul(linalg::transpose(nt.r), x), nt.r);
          break;
        case WOp::kWt:  // R X R'
          res = linalg::matmul(linalg::matmul(nt.r, x), linalg::transpose(nt.r));
          break;
        case WOp::kWinv:  // R^{-T} X R^{-1}
          res = linalg::matmul(linalg::matmul(linalg::transpose(nt.rinv), x),
                               nt.rinv);
          break;
        case WOp::kWinvt:  // R^{-1} X R^{-T}
          res = linalg::matmul(linalg::matmul(nt.rinv, x),
                               linalg::transpose(nt.rinv));
          break;
      }
      block_svec(res, out);
      break;
    }
    default:
      throw std::logic_error("apply_block: unexpected cone kind");
  }
}

// Jordan product in the scaled space.
void jordan_mul(const Block& b, const double* u, const double* v, double* out) {
  switch (b.kind) {
    case ConeKind::kOrthant:
      for (int i = 0; i < b.dim; ++i) out[i] = u[i] * v[i];
      break;
    case ConeKind::kSoc: {
      double d = 0.0;
      for (int i = 0; i < b.dim; ++i) d += u[i] * v[i];
      const double u0 = u[0], v0 = v[0];
      out[0] = d;
      for (int i = 1; i < b.dim; ++i) out[i] = u0 * v[i] + v0 * u[i];
      break;
    }
    case ConeKind::kPsd: {
      const RMat um = block_smat(b, u);
      const RMat vm = block_smat(b, v);
      const RMat p = linalg::matmul(um, vm);
      RMat sym(b.dim, b.dim);
      for (int i = 0; i < b.dim; ++i)
        for (int j = 0; j < b.dim; ++j) sym(i, j) = 0.5 * (p(i, j) + p(j, i));
      block_svec(sym, out);
      break;
    }
    default:
      throw std::logic_error("jordan_mul: unexpected cone kind");
  }
}

// Solves lambda o x = d.  The scaled point lambda is block-interior; for psd
// blocks it is diag(nt.sigma) in the scaled basis, so the division is
// entrywise with weights (sigma_i + sigma_j) / 2.
void lambda_div(const Block& b, const Nt& nt, const double* lam, const double* d,
                double* out) {
  switch (b.kind) {
    case ConeKind::kOrthant:
      for (int i = 0; i < b.dim; ++i) out[i] = d[i] / lam[i];
      break;
    case ConeKind::kSoc: {
      const int L = b.dim;
      double nsq = 0.0, ip = 0.0;
      for (int i = 1; i < L; ++i) {
        nsq += lam[i] * lam[i];
        ip += lam[i] * d[i];
      }
      const double alpha = lam[0] * lam[0] - nsq;
      const double x0 = (lam[0] * d[0] - ip) / alpha;
      out[0] = x0;
      for (int i = 1; i < L; ++i) out[i] = (d[i] - x0 * lam[i]) / lam[0];
      break;
    }
    case ConeKind::kPsd: {
      const RMat dm = block_smat(b, d);
      RMat xm(b.dim, b.dim);
      for (int i = 0; i < b.dim; ++i)
        for (int j = 0; j < b.dim; ++j)
          xm(i, j) = 2.0 * dm(i, j) / (nt.sigma[i] + nt.sigma[j]);
      block_svec(xm, out);
      break;
    }
    default:
      throw std::logic_error("lambda_div: unexpected cone kind");
  }
}

void identity_fill(const Block& b, double* out) {
  switch (b.kind) {
    case ConeKind::kOrthant:
      for (int i = 0; i < b.dim; ++i) out[i] = 1.0;
      break;
    case ConeKind::kSoc:
      out[0] = 1.0;
      for (int i = 1; i < b.dim; ++i) out[i] = 0.0;
      break;
    case ConeKind::kPsd: {
      block_svec(RMat::identity(b.dim), out);
      break;
    }
    default:
      throw std::logic_error("identity_fill: unexpected cone kind");
  }
}

// Smallest t such that v + t e lies on the cone boundary (negative when v is
// interior).  Used only for the starting-point shift.
double init_step(const Block& b, const double* v) {
  switch (b.kind) {
    case ConeKind::kOrthant: {
      double t = -kInf;
      for (int i = 0; i < b.dim; ++i) t = std::max(t, -v[i]);
      return t;
    }
    case ConeKind::kSoc: {
      double nsq = 0.0;
      for (int i = 1; i < b.dim; ++i) nsq += v[i] * v[i];
      return std::sqrt(nsq) - v[0];
    }
    case ConeKind::kPsd: {
      const auto eig =
          linalg::symmetric_eig(block_smat(b, v));
      return -eig.values.back();
    }
    default:
      throw std::logic_error("init_step: unexpected cone kind");
  }
}

// Largest t >= 0 with lam + t * dir in the cone (lam strictly interior).
double boundary_step(const Block& b, const Nt& nt, const double* lam,
                     const double* dir) {
  switch (b.kind) {
    case ConeKind::kOrthant: {
      double t = kInf;
      for (int i = 0; i < b.dim; ++i)
        if (dir[i] < 0.0) t = std::min(t, -lam[i] / dir[i]);
      return t;
    }
    case ConeKind::kSoc: {
      const int L = b.dim;
      double a = dir[0] * dir[0], bq = lam[0] * dir[0], cq = lam[0] * lam[0];
      for (int i = 1; i < L; ++i) {
        a -= dir[i] * dir[i];
        bq -= lam[i] * dir[i];
        cq -= lam[i] * lam[i];
      }
      bq *= 2.0;
      if (!(cq > 0.0)) return 0.0;  // numerically on the boundary already
      // smallest positive root of a t^2 + bq t + cq = 0
      if (std::abs(a) < 1e-300) return bq < 0.0 ? -cq / bq : kInf;
      const double disc = bq * bq - 4.0 * a * cq;
      if (disc < 0.0) return kInf;
      const double sq = std::sqrt(disc);
      const double q = -(bq + std::copysign(sq, bq)) / 2.0;
      double best = kInf;
      if (a != 0.0) {
        const double r = q / a;
        if (r >= 0.0) best = std::min(best, r);
      }
      if (q != 0.0) {
        const double r = cq / q;
        if (r >= 0.0) best = std::min(best, r);
      }
      return best;
    }
    case ConeKind::kPsd: {
      // diag(sigma) + t U >= 0  iff  I + t M >= 0, M = S^{-1/2} U S^{-1/2}
      const RMat um = block_smat(b, dir);
      RMat msc(b.dim, b.dim);
      RVec isq(b.dim);
      for (int i = 0; i < b.dim; ++i) isq[i] = 1.0 / std::sqrt(nt.sigma[i]);
      for (int i = 0; i < b.dim; ++i)
        for (int j = 0; j < b.dim; ++j) msc(i, j) = um(i, j) * (isq[i] * isq[j]);
      const auto eig = linalg::symmetric_eig(msc);
      const double lmin = eig.values.back();
      return lmin < 0.0 ? -1.0 / lmin : kInf;
    }
    default:
      throw std::logic_error("boundary_step: unexpected cone kind");
  }
}

// --- rotated-cone lowering ------------------------------------------------------

struct Lowered {
  RVec c;
  RMat a;
  RVec b;
  RMat g;
  RVec h;
  std::vector<ConeBlock> cones;    // orthant / soc / psd only
  std::vector<int> rotated_rows;   // row offsets whose (r, r+1) pair was mixed
};

// (u, v, z) with 2uv >= |z|^2 maps to a plain second-order cone through the
// orthogonal involution on the first two rows.
void mix_two_rows(RMat& g, RVec& h, int r) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < g.cols(); ++j) {
    const double a = g(r, j), b = g(r + 1, j);
    g(r, j) = (a + b) * inv_sqrt2;
    g(r + 1, j) = (a - b) * inv_sqrt2;
  }
  const double a = h[r], b = h[r + 1];
  h[r] = (a + b) * inv_sqrt2;
  h[r + 1] = (a - b) * inv_sqrt2;
}

Lowered lower(const ConeProgram& p) {
  Lowered q;
  q.c = p.c;
  // normalize a default-constructed (0 x 0) equality block to 0 x n
  q.a = p.a_eq.rows() == 0 ? RMat(0, p.num_vars()) : p.a_eq;
  q.b = p.b_eq;
  q.g = p.g;
  q.h = p.h;
  int off = 0;
  for (const ConeBlock& cb : p.cones) {
    if (cb.kind == ConeKind::kRotatedSoc) {
      mix_two_rows(q.g, q.h, off);
      q.rotated_rows.push_back(off);
      q.cones.push_back({ConeKind::kSoc, cb.dim});
    } else {
      q.cones.push_back(cb);
    }
    off += cb.slack_rows();
  }
  return q;
}

// --- equilibration --------------------------------------------------------------

struct DataScaling {
  RVec e_col;   // per variable
  RVec d_rowa;  // per equality row
  RVec d_rowg;  // per cone row (uniform inside soc/psd blocks)
  double sigma_c = 1.0;
  double sigma_r = 1.0;
};

DataScaling equilibrate(Lowered& q, bool enabled) {
  const int n = static_cast<int>(q.c.size());
  const int p = q.a.rows();
  const int m = q.g.rows();
  DataScaling sc;
  sc.e_col.assign(n, 1.0);
  sc.d_rowa.assign(p, 1.0);
  sc.d_rowg.assign(m, 1.0);
  if (!enabled) return sc;

  const auto blocks = make_layout(q.cones);
  for (int pass = 0; pass < 8; ++pass) {
    RVec colmax(n, 0.0);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < n; ++j)
        colmax[j] = std::max(colmax[j], std::abs(q.a(i, j)) * sc.d_rowa[i] * sc.e_col[j]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        colmax[j] = std::max(colmax[j], std::abs(q.g(i, j)) * sc.d_rowg[i] * sc.e_col[j]);
    for (int j = 0; j < n; ++j)
      if (colmax[j] > 0.0) sc.e_col[j] /= std::sqrt(colmax[j]);

    for (int i = 0; i < p; ++i) {
      double rmax = 0.0;
      for (int j = 0; j < n; ++j)
        rmax = std::max(rmax, std::abs(q.a(i, j)) * sc.d_rowa[i] * sc.e_col[j]);
      if (rmax > 0.0) sc.d_rowa[i] /= std::sqrt(rmax);
    }
    for (const Block& b : blocks) {
      if (b.kind == ConeKind::kOrthant) {
        for (int r = b.offset; r < b.offset + b.len; ++r) {
          double rmax = 0.0;
          for (int j = 0; j < n; ++j)
            rmax = std::max(rmax, std::abs(q.g(r, j)) * sc.d_rowg[r] * sc.e_col[j]);
          if (rmax > 0.0) sc.d_rowg[r] /= std::sqrt(rmax);
        }
      } else {
        // one scale for the whole block keeps the cone invariant
        double bmax = 0.0;
        for (int r = b.offset; r < b.offset + b.len; ++r)
          for (int j = 0; j < n; ++j)
            bmax = std::max(bmax, std::abs(q.g(r, j)) * sc.d_rowg[r] * sc.e_col[j]);
        if (bmax > 0.0) {
          const double f = 1.0 / std::sqrt(bmax);
          for (int r = b.offset; r < b.offset + b.len; ++r) sc.d_rowg[r] *= f;
        }
      }
    }
  }

  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) q.a(i, j) *= sc.d_rowa[i] * sc.e_col[j];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) q.g(i, j) *= sc.d_rowg[i] * sc.e_col[j];
  for (int j = 0; j < n; ++j) q.c[j] *= sc.e_col[j];

  double cmax = 0.0;
  for (double v : q.c) cmax = std::max(cmax, std::abs(v));
  sc.sigma_c = 1.0 / std::max(1.0, cmax);
  scal(sc.sigma_c, q.c);

  double rmax = 0.0;
  for (int i = 0; i < p; ++i) q.b[i] *= sc.d_rowa[i];
  for (int i = 0; i < m; ++i) q.h[i] *= sc.d_rowg[i];
  for (double v : q.b) rmax = std::max(rmax, std::abs(v));
  for (double v : q.h) rmax = std::max(rmax, std::abs(v));
  sc.sigma_r = 1.0 / std::max(1.0, rmax);
  scal(sc.sigma_r, q.b);
  scal(sc.sigma_r, q.h);
  return sc;
}

// --- the homogeneous self-dual engine -------------------------------------------

struct Dir {
  RVec dx, dy, dz;    // slack-space dz
  RVec dst, dzt;      // scaled-space directions for s and z
  double dtau = 0.0, dkappa = 0.0;
  double alpha_max = kInf;
};

class Hsde {
 public:
  Hsde(const Lowered& q, const SolveOptions& opts, double cost_unscale)
      : opts_(opts),
        cost_unscale_(cost_unscale),
        n_(static_cast<int>(q.c.size())),
        p_(q.a.rows()),
        m_(q.g.rows()),
        c_(q.c),
        b_(q.b),
        h_(q.h),
        a_(q.a),
        g_(q.g),
        at_(linalg::transpose(q.a)),
        gt_(linalg::transpose(q.g)),
        blocks_(make_layout(q.cones)) {
    nu_ = 0.0;
    for (const Block& b : blocks_) {
      if (b.kind == ConeKind::kOrthant) nu_ += b.dim;
      else if (b.kind == ConeKind::kSoc) nu_ += 1.0;
      else nu_ += b.dim;
    }
    evec_.assign(m_, 0.0);
    for (const Block& b : blocks_) identity_fill(b, evec_.data() + b.offset);
  }

  void run();

  SolveStatus status = SolveStatus::kNumericLimit;
  RVec x, y, z, s;
  int iterations = 0;
  std::vector<IterateInfo> trace;

 private:
  void set_identity_scaling() {
    nts_.clear();
    for (const Block& b : blocks_) nts_.push_back(identity_nt(b));
  }
  void compute_scalings() {
    nts_.clear();
    for (const Block& b : blocks_)
      nts_.push_back(compute_nt(b, s.data() + b.offset, z.data() + b.offset));
    lambda_.assign(m_, 0.0);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      apply_block(blocks_[i], nts_[i], WOp::kW, z.data() + blocks_[i].offset,
                  lambda_.data() + blocks_[i].offset);
  }

  RVec apply_all(WOp op, const RVec& in) const {
    RVec out(m_);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      apply_block(blocks_[i], nts_[i], op, in.data() + blocks_[i].offset,
                  out.data() + blocks_[i].offset);
    return out;
  }
  RVec jordan_all(const RVec& u, const RVec& v) const {
    RVec out(m_);
    for (const Block& b : blocks_)
      jordan_mul(b, u.data() + b.offset, v.data() + b.offset,
                 out.data() + b.offset);
    return out;
  }
  RVec lambda_div_all(const RVec& d) const {
    RVec out(m_);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      lambda_div(blocks_[i], nts_[i], lambda_.data() + blocks_[i].offset,
                 d.data() + blocks_[i].offset, out.data() + blocks_[i].offset);
    return out;
  }

  // Builds B = W^{-T} G, the reduced normal matrix H = B'B and the LDL'
  // factorization of [[H + reg, A'], [A, -reg]].
  void factor() {
    bmat_ = RMat(m_, n_);
    RVec colin(m_), colout(m_);
    for (int j = 0; j < n_; ++j) {
      for (int i = 0; i < m_; ++i) colin[i] = g_(i, j);
      for (std::size_t bi = 0; bi < blocks_.size(); ++bi)
        apply_block(blocks_[bi], nts_[bi], WOp::kWinvt,
                    colin.data() + blocks_[bi].offset,
                    colout.data() + blocks_[bi].offset);
      for (int i = 0; i < m_; ++i) bmat_(i, j) = colout[i];
    }
    RMat hmat(n_, n_);
    for (int i = 0; i < m_; ++i)
      for (int a = 0; a < n_; ++a) {
        const double bia = bmat_(i, a);
        if (bia == 0.0) continue;
        for (int b2 = 0; b2 <= a; ++b2) hmat(a, b2) += bia * bmat_(i, b2);
      }
    for (int a = 0; a < n_; ++a)
      for (int b2 = a + 1; b2 < n_; ++b2) hmat(a, b2) = hmat(b2, a);

    double reg = opts_.static_reg;
    for (int attempt = 0; attempt < 4; ++attempt) {
      RMat kk(n_ + p_, n_ + p_);
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) kk(i, j) = hmat(i, j);
      for (int i = 0; i < n_; ++i) kk(i, i) += reg;
      for (int i = 0; i < p_; ++i)
        for (int j = 0; j < n_; ++j) {
          kk(n_ + i, j) = a_(i, j);
          kk(j, n_ + i) = a_(i, j);
        }
      for (int i = 0; i < p_; ++i) kk(n_ + i, n_ + i) = -reg;
      try {
        kkt_ = linalg::ldlt_factor(kk);
        return;
      } catch (const NumericError&) {
        reg = std::max(reg * 100.0, 1e-12);
        if (attempt == 3) throw;
      }
    }
  }

  struct Sol3 {
    RVec ux, uy, uz;
  };

  Sol3 solve3_raw(const RVec& bx, const RVec& by, const RVec& bz) const {
    const RVec wb = apply_all(WOp::kWinvt, bz);
    RVec rhs(n_ + p_, 0.0);
    for (int j = 0; j < n_; ++j) rhs[j] = bx[j];
    for (int i = 0; i < m_; ++i) {
      const double w = wb[i];
      if (w == 0.0) continue;
      for (int j = 0; j < n_; ++j) rhs[j] += bmat_(i, j) * w;
    }
    for (int i = 0; i < p_; ++i) rhs[n_ + i] = by[i];
    const RVec sol = linalg::ldlt_solve(kkt_, rhs);
    Sol3 u;
    u.ux.assign(sol.begin(), sol.begin() + n_);
    u.uy.assign(sol.begin() + n_, sol.end());
    RVec t = linalg::matvec(bmat_, u.ux);
    for (int i = 0; i < m_; ++i) t[i] -= wb[i];
    u.uz = apply_all(WOp::kWinv, t);
    return u;
  }

  // Two rounds of refinement against the exact (unregularized) KKT system.
  Sol3 solve3(const RVec& bx, const RVec& by, const RVec& bz) const {
    Sol3 u = solve3_raw(bx, by, bz);
    for (int pass = 0; pass < 2; ++pass) {
      RVec r1 = linalg::matvec(at_, u.uy);
      axpy(1.0, linalg::matvec(gt_, u.uz), r1);
      for (int j = 0; j < n_; ++j) r1[j] = bx[j] - r1[j];
      RVec r2 = linalg::matvec(a_, u.ux);
      for (int i = 0; i < p_; ++i) r2[i] = by[i] - r2[i];
      RVec r3 = linalg::matvec(g_, u.ux);
      const RVec wtw = apply_all(WOp::kWt, apply_all(WOp::kW, u.uz));
      for (int i = 0; i < m_; ++i) r3[i] = bz[i] - (r3[i] - wtw[i]);
      const Sol3 d = solve3_raw(r1, r2, r3);
      axpy(1.0, d.ux, u.ux);
      axpy(1.0, d.uy, u.uy);
      axpy(1.0, d.uz, u.uz);
    }
    return u;
  }

  double theta(const Sol3& u) const {
    return linalg::dot(c_, u.ux) + linalg::dot(b_, u.uy) + linalg::dot(h_, u.uz);
  }

  void shift_into_cone(RVec& v) const {
    double t = -kInf;
    for (const Block& b : blocks_)
      t = std::max(t, init_step(b, v.data() + b.offset));
    if (t >= -1e-8 * std::max(1.0, linalg::norm2(v)))
      axpy(1.0 + t, evec_, v);
  }

  Dir newton(double w1, const RVec& ds, double dk, const Sol3& u1,
             double dt_denom, const RVec& rx, const RVec& ry, const RVec& rz,
             double rt) const {
    Dir d;
    const RVec jd = lambda_div_all(ds);
    RVec bx(n_), by(p_), bz(m_);
    for (int j = 0; j < n_; ++j) bx[j] = -w1 * rx[j];
    for (int i = 0; i < p_; ++i) by[i] = -w1 * ry[i];
    const RVec wtjd = apply_all(WOp::kWt, jd);
    for (int i = 0; i < m_; ++i) bz[i] = -w1 * rz[i] + wtjd[i];
    const Sol3 u2 = solve3(bx, by, bz);
    d.dtau = (-w1 * rt + dk / tau_ - theta(u2)) / dt_denom;
    d.dx = u2.ux;
    axpy(d.dtau, u1.ux, d.dx);
    d.dy = u2.uy;
    axpy(d.dtau, u1.uy, d.dy);
    d.dz = u2.uz;
    axpy(d.dtau, u1.uz, d.dz);
    d.dzt = apply_all(WOp::kW, d.dz);
    d.dst.resize(m_);
    for (int i = 0; i < m_; ++i) d.dst[i] = -jd[i] - d.dzt[i];
    d.dkappa = -(dk + kappa_ * d.dtau) / tau_;
    d.alpha_max = kInf;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      d.alpha_max = std::min(
          d.alpha_max, boundary_step(b, nts_[i], lambda_.data() + b.offset,
                                     d.dst.data() + b.offset));
      d.alpha_max = std::min(
          d.alpha_max, boundary_step(b, nts_[i], lambda_.data() + b.offset,
                                     d.dzt.data() + b.offset));
    }
    if (d.dtau < 0.0) d.alpha_max = std::min(d.alpha_max, -tau_ / d.dtau);
    if (d.dkappa < 0.0) d.alpha_max = std::min(d.alpha_max, -kappa_ / d.dkappa);
    return d;
  }

  void finish_point() {
    scal(1.0 / tau_, x);
    scal(1.0 / tau_, y);
    scal(1.0 / tau_, z);
    scal(1.0 / tau_, s);
  }

  const SolveOptions opts_;
  const double cost_unscale_;
  const int n_, p_, m_;
  RVec c_, b_, h_;
  RMat a_, g_, at_, gt_;
  std::vector<Block> blocks_;
  double nu_ = 0.0;
  RVec evec_;

  std::vector<Nt> nts_;
  RVec lambda_;
  RMat bmat_;
  LdltFactors kkt_;
  double tau_ = 1.0, kappa_ = 1.0;
};

void Hsde::run() {
  const double tol = opts_.tol;
  const double resx0 = std::max(1.0, linalg::norm2(c_));
  const double resy0 = std::max(1.0, linalg::norm2(b_));
  const double resz0 = std::max(1.0, linalg::norm2(h_));

  x.assign(n_, 0.0);
  y.assign(p_, 0.0);
  z.assign(m_, 0.0);
  s.assign(m_, 0.0);

  set_identity_scaling();
  try {
    factor();
    {
      const Sol3 u = solve3(RVec(n_, 0.0), b_, h_);
      x = u.ux;
      s = u.uz;
      scal(-1.0, s);
    }
    {
      RVec mc = c_;
      scal(-1.0, mc);
      const Sol3 u = solve3(mc, RVec(p_, 0.0), RVec(m_, 0.0));
      y = u.uy;
      z = u.uz;
    }
  } catch (const NumericError&) {
    status = SolveStatus::kNumericLimit;
    return;
  }
  shift_into_cone(s);
  shift_into_cone(z);
  tau_ = 1.0;
  kappa_ = 1.0;

  double last_step = 0.0;
  for (int iter = 0;; ++iter) {
    iterations = iter;
    const double gap = linalg::dot(s, z);

    RVec rx = linalg::matvec(at_, y);
    axpy(1.0, linalg::matvec(gt_, z), rx);
    axpy(tau_, c_, rx);
    RVec ry = linalg::matvec(a_, x);
    axpy(-tau_, b_, ry);
    RVec rz = linalg::matvec(g_, x);
    axpy(1.0, s, rz);
    axpy(-tau_, h_, rz);
    const double cx = linalg::dot(c_, x);
    const double by_hz = linalg::dot(b_, y) + linalg::dot(h_, z);
    const double rt = kappa_ + cx + by_hz;

    const double pcost = cx / tau_;
    const double dcost = -by_hz / tau_;
    const double pres = std::max(linalg::norm2(ry) / resy0,
                                 linalg::norm2(rz) / resz0) / tau_;
    const double dres = linalg::norm2(rx) / resx0 / tau_;
    const double gap_t = gap / (tau_ * tau_);
    double relgap = kInf;
    if (pcost < 0.0) relgap = gap_t / (-pcost);
    else if (dcost > 0.0) relgap = gap_t / dcost;

    if (opts_.collect_trace)
      trace.push_back({iter, pcost * cost_unscale_, dcost * cost_unscale_,
                       gap_t * cost_unscale_, pres, dres, tau_, kappa_,
                       last_step});

    // the absolute gap must be judged in original cost units; the scaled
    // value can be arbitrarily small when the data scalings are extreme
    if (pres <= tol && dres <= tol &&
        (gap_t * cost_unscale_ <= opts_.abs_gap_tol || relgap <= tol)) {
      status = SolveStatus::kOptimal;
      finish_point();
      return;
    }
    if (by_hz < 0.0) {
      RVec v = rx;
      axpy(-tau_, c_, v);
      if (linalg::norm2(v) / resx0 <= tol * (-by_hz)) {
        status = SolveStatus::kPrimalInfeasible;
        scal(1.0 / (-by_hz), y);
        scal(1.0 / (-by_hz), z);
        x.assign(n_, 0.0);
        s.assign(m_, 0.0);
        return;
      }
    }
    if (cx < 0.0) {
      const RVec v2 = linalg::matvec(a_, x);
      RVec v3 = linalg::matvec(g_, x);
      axpy(1.0, s, v3);
      if (std::max(linalg::norm2(v2) / resy0, linalg::norm2(v3) / resz0) <=
          tol * (-cx)) {
        status = SolveStatus::kDualInfeasible;
        scal(1.0 / (-cx), x);
        scal(1.0 / (-cx), s);
        y.assign(p_, 0.0);
        z.assign(m_, 0.0);
        return;
      }
    }
    if (iter == opts_.max_iter) {
      status = SolveStatus::kIterationLimit;
      finish_point();
      return;
    }

    const double mu = (gap + tau_ * kappa_) / (nu_ + 1.0);

    Sol3 u1;
    double theta1 = 0.0, dt_denom = 0.0;
    try {
      compute_scalings();
      factor();
      RVec mc = c_;
      scal(-1.0, mc);
      u1 = solve3(mc, b_, h_);
      theta1 = theta(u1);
      dt_denom = theta1 - kappa_ / tau_;
      if (!(std::abs(dt_denom) > 0.0) || !std::isfinite(dt_denom))
        throw NumericError("degenerate tau equation", iter, dt_denom);
    } catch (const NumericError&) {
      status = SolveStatus::kNumericLimit;
      finish_point();
      return;
    }

    // predictor
    const RVec lam_sq = jordan_all(lambda_, lambda_);
    const Dir aff = newton(1.0, lam_sq, tau_ * kappa_, u1, dt_denom,
                           rx, ry, rz, rt);
    const double alpha_aff = std::min(1.0, aff.alpha_max);
    double sigma = (1.0 - alpha_aff) * (1.0 - alpha_aff) * (1.0 - alpha_aff);
    sigma = std::min(1.0, std::max(0.0, sigma));

    // corrector
    RVec ds = lam_sq;
    axpy(1.0, jordan_all(aff.dst, aff.dzt), ds);
    axpy(-sigma * mu, evec_, ds);
    const double dk = tau_ * kappa_ + aff.dtau * aff.dkappa - sigma * mu;
    const Dir dir = newton(1.0 - sigma, ds, dk, u1, dt_denom, rx, ry,
                           rz, rt);

    double alpha = 1.0;
    if (std::isfinite(dir.alpha_max)) alpha = std::min(1.0, kStepBack * dir.alpha_max);
    if (alpha < 1e-10) {
      status = SolveStatus::kNumericLimit;
      finish_point();
      return;
    }

    const RVec dslack = apply_all(WOp::kWt, dir.dst);
    axpy(alpha, dir.dx, x);
    axpy(alpha, dir.dy, y);
    axpy(alpha, dir.dz, z);
    axpy(alpha, dslack, s);
    tau_ += alpha * dir.dtau;
    kappa_ += alpha * dir.dkappa;
    last_step = alpha;
    if (!(tau_ > 1e-300) || !(kappa_ > 0.0) || !std::isfinite(tau_)) {
      status = SolveStatus::kNumericLimit;
      return;
    }
  }
}

}  // namespace

ConeSolution solve(const ConeProgram& prog, const SolveOptions& opts) {
  prog.validate();
  Lowered low = lower(prog);
  const DataScaling sc = equilibrate(low, opts.equilibrate);

  Hsde engine(low, opts, 1.0 / (sc.sigma_c * sc.sigma_r));
  engine.run();

  ConeSolution sol;
  sol.status = engine.status;
  sol.iterations = engine.iterations;
  sol.trace = std::move(engine.trace);

  const int n = prog.num_vars();
  const int p = prog.num_eq();
  const int m = prog.num_cone_rows();
  sol.x.assign(n, 0.0);
  sol.y.assign(p, 0.0);
  sol.z.assign(m, 0.0);
  sol.s.assign(m, 0.0);
  if (static_cast<int>(engine.x.size()) == n) {
    for (int j = 0; j < n; ++j)
      sol.x[j] = sc.e_col[j] * engine.x[j] / sc.sigma_r;
    for (int i = 0; i < p; ++i)
      sol.y[i] = sc.d_rowa[i] * engine.y[i] / sc.sigma_c;
    for (int i = 0; i < m; ++i) {
      sol.z[i] = sc.d_rowg[i] * engine.z[i] / sc.sigma_c;
      sol.s[i] = engine.s[i] / (sc.d_rowg[i] * sc.sigma_r);
    }
    // undo the rotated-cone involution on the slack and its multiplier
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int r : low.rotated_rows) {
      const double s0 = sol.s[r], s1 = sol.s[r + 1];
      sol.s[r] = (s0 + s1) * inv_sqrt2;
      sol.s[r + 1] = (s0 - s1) * inv_sqrt2;
      const double z0 = sol.z[r], z1 = sol.z[r + 1];
      sol.z[r] = (z0 + z1) * inv_sqrt2;
      sol.z[r + 1] = (z0 - z1) * inv_sqrt2;
    }
  }

  if (sol.status == SolveStatus::kPrimalInfeasible) {
    const double denom =
        -(linalg::dot(prog.b_eq, sol.y) + linalg::dot(prog.h, sol.z));
    if (denom > 0.0) {
      scal(1.0 / denom, sol.y);
      scal(1.0 / denom, sol.z);
    }
    RVec v(n, 0.0);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < n; ++j) v[j] += prog.a_eq(i, j) * sol.y[i];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) v[j] += prog.g(i, j) * sol.z[i];
    sol.dres = linalg::norm2(v) / std::max(1.0, linalg::norm2(prog.c));
    sol.pres = 0.0;
    sol.relgap = 0.0;
    sol.objective = 0.0;
    return sol;
  }
  if (sol.status == SolveStatus::kDualInfeasible) {
    const double denom = -linalg::dot(prog.c, sol.x);
    if (denom > 0.0) {
      scal(1.0 / denom, sol.x);
      scal(1.0 / denom, sol.s);
    }
    RVec v = linalg::matvec(prog.g, sol.x);
    axpy(1.0, sol.s, v);
    RVec v2(p, 0.0);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < n; ++j) v2[i] += prog.a_eq(i, j) * sol.x[j];
    sol.pres = std::max(linalg::norm2(v) / std::max(1.0, linalg::norm2(prog.h)),
                        linalg::norm2(v2) / std::max(1.0, linalg::norm2(prog.b_eq)));
    sol.dres = 0.0;
    sol.relgap = 0.0;
    sol.objective = 0.0;
    return sol;
  }

  // point estimate (optimal or best effort): report residuals in original units
  sol.objective = linalg::dot(prog.c, sol.x);
  {
    RVec rp = linalg::matvec(prog.g, sol.x);
    axpy(1.0, sol.s, rp);
    axpy(-1.0, prog.h, rp);
    RVec re(p, 0.0);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < n; ++j) re[i] += prog.a_eq(i, j) * sol.x[j];
      re[i] -= prog.b_eq[i];
    }
    sol.pres = std::max(
        linalg::norm2(rp) / std::max(1.0, linalg::norm2(prog.h)),
        linalg::norm2(re) / std::max(1.0, linalg::norm2(prog.b_eq)));
    RVec rd(n, 0.0);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < n; ++j) rd[j] += prog.a_eq(i, j) * sol.y[i];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) rd[j] += prog.g(i, j) * sol.z[i];
    axpy(1.0, prog.c, rd);
    sol.dres = linalg::norm2(rd) / std::max(1.0, linalg::norm2(prog.c));
    sol.relgap =
        linalg::dot(sol.s, sol.z) / std::max(1.0, std::abs(sol.objective));
  }
  return sol;
}

}  // namespace relaybf::conic
