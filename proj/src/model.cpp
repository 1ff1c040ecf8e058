#include "relaybf/model.hpp"

#include <cmath>
#include <stdexcept>

namespace relaybf::model {

namespace {

void check_args(const ProblemData& p, const CVec& w, double a) {
  if (static_cast<int>(w.size()) != p.wdim())
    throw std::invalid_argument("model: stacked weight vector has wrong length");
  if (!(a > 0.0)) throw std::domain_error("model: scale a must be positive");
}

// |q^H half|^2 for one half of the stacked vector.
double numerator_term(const CVec& q, const CVec& w, int offset) {
  cx acc{};
  for (std::size_t i = 0; i < q.size(); ++i) acc += std::conj(q[i]) * w[offset + i];
  return std::norm(acc);
}

// w^H R_m w (diagonal quadratic form over both halves).
double forwarded_noise_quad(const ProblemData& p, const CVec& w, int m) {
  const int d = p.dim();
  double acc = 0.0;
  for (int i = 0; i < d; ++i)
    acc += p.r_diag[m][i] * (std::norm(w[i]) + std::norm(w[d + i]));
  return acc;
}

}  // namespace

PowerBudget PowerBudget::from_total_w(double total_w) {
  PowerBudget b;
  b.total_w = total_w;
  b.source_w = total_w / 2.0;
  b.relay_sum_w = total_w / 3.0;
  b.per_relay_w = total_w / 15.0;
  return b;
}

PowerBudget PowerBudget::from_total_dbm(double total_dbm) {
  return from_total_w(scenario::dbm_to_watt(total_dbm));
}

ProblemData build(const scenario::ChannelRealization& ch) {
  const int r_cnt = ch.geometry.relay_count;
  const int m_cnt = ch.geometry.dest_count;
  const int d = r_cnt + 1;
  ProblemData p;
  p.relay_count = r_cnt;
  p.dest_count = m_cnt;
  p.sigma_nu_sq = ch.sigma_nu_sq_w;
  p.sigma_eta_sq = ch.sigma_eta_sq_w;
  p.q1.assign(m_cnt, CVec(d));
  p.q2.assign(m_cnt, CVec(d));
  p.r_diag.assign(m_cnt, RVec(d, 0.0));
  p.d_abs_sq.resize(m_cnt);
  p.f_abs_sq.resize(r_cnt);
  p.a_phase.resize(d);
  p.degenerate.assign(m_cnt, 0);

  for (int r = 0; r < r_cnt; ++r) {
    p.f_abs_sq[r] = std::norm(ch.f[r]);
    p.a_phase[r] = (p.f_abs_sq[r] > 0.0) ? ch.f[r] * ch.f[r] / p.f_abs_sq[r]
                                         : cx{1.0, 0.0};
  }
  p.a_phase[d - 1] = cx{1.0, 0.0};

  for (int m = 0; m < m_cnt; ++m) {
    bool any_g = false;
    for (int r = 0; r < r_cnt; ++r) {
      p.q1[m][r] = ch.g[m][r] * ch.f[r];
      p.q2[m][r] = ch.g[m][r] * std::conj(ch.f[r]);
      p.r_diag[m][r] = ch.sigma_eta_sq_w * std::norm(ch.g[m][r]);
      any_g = any_g || (std::norm(ch.g[m][r]) > 0.0);
    }
    p.q1[m][d - 1] = ch.d[m];
    p.q2[m][d - 1] = ch.d[m];
    p.d_abs_sq[m] = std::norm(ch.d[m]);
    p.degenerate[m] = (!any_g && p.d_abs_sq[m] == 0.0) ? 1 : 0;
  }
  return p;
}

double snr(const ProblemData& p, const CVec& w, double a, int m) {
  check_args(p, w, a);
  const int d = p.dim();
  double num = numerator_term(p.q1[m], w, 0) + numerator_term(p.q2[m], w, d);
  double quad = forwarded_noise_quad(p, w, m);
  return num / ((quad + p.sigma_nu_sq) * a) + p.d_abs_sq[m] / (p.sigma_nu_sq * a);
}

MinSnr min_snr(const ProblemData& p, const CVec& w, double a) {
  MinSnr out;
  out.value = std::numeric_limits<double>::infinity();
  for (int m = 0; m < p.dest_count; ++m) {
    double s = snr(p, w, a, m);
    if (s < out.value) {
      out.value = s;
      out.argmin = m;
    }
  }
  return out;
}

double sigma34_sq(const ProblemData& p, const CVec& w, int m) {
  if (static_cast<int>(w.size()) != p.wdim())
    throw std::invalid_argument("model: stacked weight vector has wrong length");
  return forwarded_noise_quad(p, w, m) + p.sigma_nu_sq;
}

double relay_power(const ProblemData& p, const CVec& w, double a, int r) {
  check_args(p, w, a);
  const int d = p.dim();
  double mag = std::norm(w[r]) + std::norm(w[d + r]);
  return mag * (p.f_abs_sq[r] / a + p.sigma_eta_sq);
}

double source_power(const ProblemData& p, const CVec& w, double a) {
  check_args(p, w, a);
  const int d = p.dim();
  double reuse = 2.0 * (std::norm(w[d - 1]) + std::norm(w[2 * d - 1]));
  return (2.0 + reuse) / a;
}

double total_power(const ProblemData& p, const CVec& w, double a) {
  double acc = source_power(p, w, a);
  for (int r = 0; r < p.relay_count; ++r) acc += 2.0 * relay_power(p, w, a, r);
  return acc;
}

double snr_constraint_value(const ProblemData& p, const CVec& w, double a,
                            double t, int m) {
  check_args(p, w, a);
  if (!(t > 0.0)) throw std::domain_error("model: t must be positive");
  const int d = p.dim();
  double num = numerator_term(p.q1[m], w, 0) + numerator_term(p.q2[m], w, d);
  double quad = forwarded_noise_quad(p, w, m);
  double kappa = p.d_abs_sq[m] / p.sigma_nu_sq;
  return (quad + p.sigma_nu_sq) / t - (num + kappa * quad + p.d_abs_sq[m]) / a;
}

ViolationReport feasible(const ProblemData& p, const CVec& w, double a,
                         const PowerBudget& budget, double rel_slack) {
  ViolationReport rep;
  if (static_cast<int>(w.size()) != p.wdim())
    throw std::invalid_argument("model: stacked weight vector has wrong length");
  if (!(a > 0.0)) {
    rep.violations.push_back({Violation::kScaleSign, -1, a, 0.0});
    rep.worst_relative_margin = -std::numeric_limits<double>::infinity();
    return rep;
  }
  auto check = [&](Violation::Kind kind, int index, double value, double limit) {
    double margin = (limit - value) / std::max(limit, 1e-300);
    rep.worst_relative_margin = std::min(rep.worst_relative_margin, margin);
    if (value > limit * (1.0 + rel_slack))
      rep.violations.push_back({kind, index, value, limit});
  };
  if (budget.per_relay_w)
    for (int r = 0; r < p.relay_count; ++r)
      check(Violation::kRelayPower, r, relay_power(p, w, a, r), *budget.per_relay_w);
  if (budget.relay_sum_w) {
    double sum = 0.0;
    for (int r = 0; r < p.relay_count; ++r) sum += relay_power(p, w, a, r);
    check(Violation::kRelaySum, -1, sum, *budget.relay_sum_w);
  }
  if (budget.source_w)
    check(Violation::kSourcePower, -1, source_power(p, w, a), *budget.source_w);
  if (budget.total_w)
    check(Violation::kTotalPower, -1, total_power(p, w, a), *budget.total_w);
  return rep;
}

}  // namespace relaybf::model
