#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "relaybf/conic.hpp"

namespace relaybf::conic {

// --- ConeProgram -----------------------------------------------------------

void ConeProgram::validate() const {
  const int n = num_vars();
  if (n <= 0) throw std::invalid_argument("conic: program has no variables");
  if (a_eq.rows() > 0 && a_eq.cols() != n)
    throw std::invalid_argument("conic: equality matrix column mismatch");
  if (static_cast<int>(b_eq.size()) != a_eq.rows())
    throw std::invalid_argument("conic: equality rhs size mismatch");
  if (cones.empty()) throw std::invalid_argument("conic: no cone blocks");
  int rows = 0;
  for (const ConeBlock& cb : cones) {
    const int min_dim = cb.kind == ConeKind::kRotatedSoc ? 2 : 1;
    if (cb.dim < min_dim)
      throw std::invalid_argument("conic: cone block dimension too small");
    rows += cb.slack_rows();
  }
  if (g.rows() != rows)
    throw std::invalid_argument("conic: cone matrix row count mismatch");
  if (g.cols() != n)
    throw std::invalid_argument("conic: cone matrix column mismatch");
  if (static_cast<int>(h.size()) != rows)
    throw std::invalid_argument("conic: cone rhs size mismatch");
}

namespace {
const char* kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::kOrthant: return "orthant";
    case ConeKind::kSoc: return "soc";
    case ConeKind::kRotatedSoc: return "rsoc";
    case ConeKind::kPsd: return "psd";
  }
  return "?";
}
void print_value(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
}  // namespace

void ConeProgram::dump(std::ostream& os) const {
  os << "conic-program\n";
  os << "vars " << num_vars() << "\n";
  os << "eq-rows " << num_eq() << "\n";
  os << "cone-rows " << num_cone_rows() << "\n";
  for (const ConeBlock& cb : cones)
    os << "cone " << kind_name(cb.kind) << " " << cb.dim << "\n";
  for (int j = 0; j < num_vars(); ++j)
    if (c[j] != 0.0) {
      os << "c " << j << " ";
      print_value(os, c[j]);
      os << "\n";
    }
  for (int i = 0; i < a_eq.rows(); ++i)
    for (int j = 0; j < a_eq.cols(); ++j)
      if (a_eq(i, j) != 0.0) {
        os << "A " << i << " " << j << " ";
        print_value(os, a_eq(i, j));
        os << "\n";
      }
  for (int i = 0; i < num_eq(); ++i)
    if (b_eq[i] != 0.0) {
      os << "b " << i << " ";
      print_value(os, b_eq[i]);
      os << "\n";
    }
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      if (g(i, j) != 0.0) {
        os << "G " << i << " " << j << " ";
        print_value(os, g(i, j));
        os << "\n";
      }
  for (int i = 0; i < num_cone_rows(); ++i)
    if (h[i] != 0.0) {
      os << "h " << i << " ";
      print_value(os, h[i]);
      os << "\n";
    }
  os << "end\n";
}

// --- ProgramBuilder ----------------------------------------------------------

int ProgramBuilder::add_var(double cost) {
  cost_.push_back(cost);
  return static_cast<int>(cost_.size()) - 1;
}

void ProgramBuilder::set_cost(int var, double cost) {
  if (var < 0 || var >= num_vars())
    throw std::invalid_argument("builder: variable index out of range");
  cost_[var] = cost;
}

void ProgramBuilder::add_eq(const AffExpr& e) { eqs_.push_back(e); }

void ProgramBuilder::add_nonneg(const AffExpr& e) { nonneg_.push_back(e); }

void ProgramBuilder::add_soc(const std::vector<AffExpr>& e) {
  if (e.empty()) throw std::invalid_argument("builder: empty soc block");
  blocks_.push_back({ConeKind::kSoc, static_cast<int>(e.size()), e});
}

void ProgramBuilder::add_quad_le_product(const AffExpr& u, const AffExpr& v,
                                         const std::vector<AffExpr>& z) {
  // ||z||^2 <= u*v becomes the rotated cone 2*u*v >= ||sqrt(2) z||^2
  std::vector<AffExpr> rows{u, v};
  const double rt2 = std::sqrt(2.0);
  for (const AffExpr& e : z) {
    AffExpr scaled;
    scaled.constant = e.constant * rt2;
    for (const auto& [var, coef] : e.terms) scaled.add(var, coef * rt2);
    rows.push_back(scaled);
  }
  blocks_.push_back({ConeKind::kRotatedSoc, static_cast<int>(rows.size()),
                     std::move(rows)});
}

void ProgramBuilder::add_psd(int order, const std::vector<AffExpr>& entries) {
  if (order < 1) throw std::invalid_argument("builder: psd order must be >= 1");
  if (static_cast<int>(entries.size()) != linalg::svec_len(order))
    throw std::invalid_argument("builder: psd entry count mismatch");
  blocks_.push_back({ConeKind::kPsd, order, entries});
}

ConeProgram ProgramBuilder::build() const {
  const int n = num_vars();
  auto check = [n](const AffExpr& e) {
    for (const auto& [var, coef] : e.terms) {
      (void)coef;
      if (var < 0 || var >= n)
        throw std::invalid_argument("builder: expression references unknown variable");
    }
  };

  ConeProgram prog;
  prog.c = cost_;

  const int p = static_cast<int>(eqs_.size());
  prog.a_eq = RMat(p, n);
  prog.b_eq.assign(p, 0.0);
  for (int i = 0; i < p; ++i) {
    check(eqs_[i]);
    for (const auto& [var, coef] : eqs_[i].terms) prog.a_eq(i, var) += coef;
    prog.b_eq[i] = -eqs_[i].constant;
  }

  int m = static_cast<int>(nonneg_.size());
  for (const Block& b : blocks_) m += static_cast<int>(b.rows.size());
  prog.g = RMat(m, n);
  prog.h.assign(m, 0.0);

  int r = 0;
  auto fill_row = [&](const AffExpr& e) {
    check(e);
    for (const auto& [var, coef] : e.terms) prog.g(r, var) -= coef;
    prog.h[r] = e.constant;
    ++r;
  };
  if (!nonneg_.empty()) {
    prog.cones.push_back({ConeKind::kOrthant, static_cast<int>(nonneg_.size())});
    for (const AffExpr& e : nonneg_) fill_row(e);
  }
  for (const Block& b : blocks_) {
    prog.cones.push_back({b.kind, b.dim});
    for (const AffExpr& e : b.rows) fill_row(e);
  }
  if (prog.cones.empty())
    throw std::invalid_argument("builder: program has no cone rows");
  return prog;
}

// --- Hermitian PSD feasibility -------------------------------------------------

// The margin problem
//     maximize s  s.t.  tr(A_k X) >= r_k + s,  tr(A_e X) = r_e,  X >= 0
// (after folding Le rows into Ge form and normalizing each row) is posed to
// the solver through its dual:
//     minimize -sum nu_k r_k - sum w_e r_e + mu
//     s.t.      sum nu_k + mu = 1,  nu >= 0, mu >= 0, w free,
//               -(sum nu_k A_k + sum w_e A_e) >= 0  (one psd slack per block).
// The margin problem itself is always strictly feasible, so this pair has
// zero gap; the optimal margin is minus the multiplier of the normalization
// equality and the Gram blocks X are the multipliers of the psd slacks.  This
// keeps the variable count at (number of constraints + 1) instead of the svec
// dimension of X, which is what makes repeated feasibility probes cheap.
SdpFeasibilityResult sdp_feasibility(const std::vector<int>& dims,
                                     const std::vector<PsdConstraint>& cons,
                                     double feas_tol, const SolveOptions& opts) {
  const int nblocks = static_cast<int>(dims.size());
  if (nblocks == 0) throw std::invalid_argument("sdp_feasibility: no blocks");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("sdp_feasibility: bad block dim");

  struct RealRow {
    std::vector<RMat> a;  // one (possibly empty) real matrix per block
    double rhs = 0.0;
    bool eq = false;
  };
  std::vector<RealRow> rows;
  int n_ineq = 0;
  for (const PsdConstraint& pc : cons) {
    RealRow row;
    row.a.resize(nblocks);
    row.eq = pc.sense == PsdConstraint::kEq;
    const double sign = pc.sense == PsdConstraint::kLe ? -1.0 : 1.0;
    row.rhs = sign * pc.rhs;
    double nrm_sq = 0.0;
    for (const PsdTerm& t : pc.terms) {
      if (t.block < 0 || t.block >= nblocks)
        throw std::invalid_argument("sdp_feasibility: bad block index");
      if (t.coeff.rows() != dims[t.block] || t.coeff.cols() != dims[t.block])
        throw std::invalid_argument("sdp_feasibility: coefficient shape mismatch");
      // tr_complex(C X) = tr(T(C)/2 * T(X))
      RMat emb = linalg::real_embedding(t.coeff);
      for (int i = 0; i < emb.rows(); ++i)
        for (int j = 0; j < emb.cols(); ++j) emb(i, j) *= 0.5 * sign;
      if (row.a[t.block].rows() == 0) {
        row.a[t.block] = emb;
      } else {
        for (int i = 0; i < emb.rows(); ++i)
          for (int j = 0; j < emb.cols(); ++j) row.a[t.block](i, j) += emb(i, j);
      }
    }
    for (const RMat& am : row.a)
      if (am.rows() > 0) nrm_sq += linalg::fro_norm(am) * linalg::fro_norm(am);
    const double nrm = std::max(std::sqrt(nrm_sq), 1e-12);
    for (RMat& am : row.a)
      for (int i = 0; i < am.rows(); ++i)
        for (int j = 0; j < am.cols(); ++j) am(i, j) /= nrm;
    row.rhs /= nrm;
    if (!row.eq) ++n_ineq;
    rows.push_back(std::move(row));
  }
  if (n_ineq == 0)
    throw std::invalid_argument("sdp_feasibility: needs at least one inequality");

  ProgramBuilder bld;
  std::vector<int> mult(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    mult[k] = bld.add_var(-rows[k].rhs);
  const int mu = bld.add_var(1.0);

  AffExpr normalization = AffExpr::of(mu, 1.0, -1.0);  // sum nu + mu - 1 == 0
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].eq) continue;
    normalization.add(mult[k], 1.0);
    bld.add_nonneg(AffExpr::of(mult[k]));
  }
  bld.add_nonneg(AffExpr::of(mu));
  bld.add_eq(normalization);

  std::vector<int> psd_row_offset(nblocks);
  int running = static_cast<int>(n_ineq) + 1;  // orthant rows come first
  for (int b = 0; b < nblocks; ++b) {
    const int order = 2 * dims[b];
    const int len = linalg::svec_len(order);
    psd_row_offset[b] = running;
    running += len;
    std::vector<AffExpr> entries(len);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].a[b].rows() == 0) continue;
      const RVec sv = linalg::svec(rows[k].a[b]);
      for (int e = 0; e < len; ++e)
        if (sv[e] != 0.0) entries[e].add(mult[k], -sv[e]);
    }
    bld.add_psd(order, entries);
  }

  const ConeProgram prog = bld.build();
  const ConeSolution sol = solve(prog, opts);

  SdpFeasibilityResult res;
  res.solver_status = sol.status;
  if (!sol.y.empty()) res.margin = -sol.y[0];
  res.x.resize(nblocks);
  if (sol.status == SolveStatus::kOptimal ||
      sol.status == SolveStatus::kIterationLimit) {
    for (int b = 0; b < nblocks; ++b) {
      const int order = 2 * dims[b];
      const int len = linalg::svec_len(order);
      RVec zb(sol.z.begin() + psd_row_offset[b],
              sol.z.begin() + psd_row_offset[b] + len);
      res.x[b] = linalg::complex_from_embedding(linalg::smat(zb, order));
    }
  }
  if (sol.status == SolveStatus::kOptimal) {
    if (res.margin >= feas_tol) res.verdict = SdpFeasibilityResult::kFeasible;
    else if (res.margin <= -feas_tol)
      res.verdict = SdpFeasibilityResult::kInfeasible;
    else
      res.verdict = SdpFeasibilityResult::kIndeterminate;
  }
  return res;
}

}  // namespace relaybf::conic
