#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "relaybf/cccp.hpp"
#include "relaybf/model.hpp"
#include "relaybf/rng.hpp"
#include "relaybf/scenario.hpp"
#include "relaybf/sdr.hpp"

using namespace relaybf;
using testhelp::synthetic_channels;

namespace {

model::ProblemData tiny(int r_cnt, int m_cnt, std::uint64_t seed,
                        double noise_w = 0.1) {
  return model::build(synthetic_channels(r_cnt, m_cnt, seed, noise_w));
}

// Gram matrix of a stacked design in the merged (rotated second half) frame.
linalg::CMat merged_gram(const model::ProblemData& p, const linalg::CVec& w) {
  const int d = p.dim();
  linalg::CMat x(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const linalg::cx hi = p.a_phase[i] * w[d + i];
      const linalg::cx hj = p.a_phase[j] * w[d + j];
      x(i, j) = w[i] * std::conj(w[j]) + hi * std::conj(hj);
    }
  }
  return x;
}

double quad_form(const linalg::CMat& x, const linalg::CVec& q) {
  linalg::cx acc(0.0, 0.0);
  const int d = x.rows();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) acc += std::conj(q[i]) * x(i, j) * q[j];
  return acc.real();
}

// SNR of destination m evaluated purely from the Gram matrix.
double gram_snr(const model::ProblemData& p, const linalg::CMat& x, double a,
                int m) {
  const double num = quad_form(x, p.q1[m]);
  double den = 0.0;
  for (int i = 0; i < p.dim(); ++i) den += p.r_diag[m][i] * x(i, i).real();
  return num / ((den + p.sigma_nu_sq) * a) +
         p.d_abs_sq[m] / (p.sigma_nu_sq * a);
}

linalg::CVec stacked(const linalg::CVec& w1, const linalg::CVec& w2) {
  linalg::CVec w(w1);
  w.insert(w.end(), w2.begin(), w2.end());
  return w;
}

}  // namespace

TEST_CASE("gram traces reproduce every model quantity") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto p = tiny(3, 3, seed);
    const auto w = testhelp::random_w(p.relay_count, seed + 50, 1.3);
    const double a = 0.8;
    const auto x = merged_gram(p, w);
    for (int m = 0; m < p.dest_count; ++m) {
      const double via_gram = gram_snr(p, x, a, m);
      const double via_model = model::snr(p, w, a, m);
      CHECK(std::abs(via_gram - via_model) <= 1e-10 * std::abs(via_model));
    }
    // Power terms depend on the Gram diagonal alone.
    const int d = p.dim();
    for (int r = 0; r < p.relay_count; ++r) {
      const double coef = p.f_abs_sq[r] / a + p.sigma_eta_sq;
      const double via_gram = x(r, r).real() * coef;
      CHECK(std::abs(via_gram - model::relay_power(p, w, a, r)) <=
            1e-12 * std::max(1e-300, model::relay_power(p, w, a, r)));
    }
    const double src_gram = (2.0 + 2.0 * x(d - 1, d - 1).real()) / a;
    CHECK(std::abs(src_gram - model::source_power(p, w, a)) <=
          1e-12 * model::source_power(p, w, a));
  }
}

TEST_CASE("feasibility verdicts respect a known witness") {
  const auto p = tiny(3, 2, 7);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  const auto init = cccp::initial_point(p, budget, rng::Stream(7, 42));
  REQUIRE(init.has_value());
  const double ms = model::min_snr(p, init->w, init->a).value;

  // A slightly relaxed target admits the witness, so the verdict must be
  // feasible, and the returned Gram matrix must itself satisfy the system.
  const double t_easy = 1.05 / ms;
  const auto feas = sdr::sdr_feasible(p, budget, t_easy, init->a);
  CHECK(feas.verdict == sdr::Feasibility::kFeasible);
  REQUIRE(feas.x.size() == 1);
  const auto& x = feas.x[0];
  for (int m = 0; m < p.dest_count; ++m)
    CHECK(gram_snr(p, x, init->a, m) >= (1.0 / t_easy) * (1.0 - 1e-6));
  const int d = p.dim();
  double relay_sum = 0.0;
  for (int r = 0; r < p.relay_count; ++r) {
    const double pw = x(r, r).real() * (p.f_abs_sq[r] / init->a + p.sigma_eta_sq);
    relay_sum += pw;
    CHECK(pw <= *budget.per_relay_w * (1.0 + 1e-6));
  }
  CHECK(relay_sum <= *budget.relay_sum_w * (1.0 + 1e-6));
  const double src = (2.0 + 2.0 * x(d - 1, d - 1).real()) / init->a;
  CHECK(src <= *budget.source_w * (1.0 + 1e-6));
  CHECK(src + 2.0 * relay_sum <= *budget.total_w * (1.0 + 1e-6));

  // A target nine orders beyond the witness is out of reach.
  const auto hard = sdr::sdr_feasible(p, budget, 1e-9 / ms, init->a);
  CHECK(hard.verdict == sdr::Feasibility::kInfeasible);
}

TEST_CASE("split and merged relaxations give the same verdict") {
  int checked = 0, indeterminate = 0, disagreements = 0;
  const struct {
    int r, m;
    std::uint64_t seed;
  } instances[] = {{2, 2, 21}, {3, 3, 22}, {4, 2, 23}};
  for (const auto& inst : instances) {
    const auto p = tiny(inst.r, inst.m, inst.seed);
    const auto budget = model::PowerBudget::from_total_w(10.0);
    const auto init = cccp::initial_point(p, budget, rng::Stream(inst.seed, 42));
    REQUIRE(init.has_value());
    const rng::Stream draws(inst.seed, 777);
    std::uint64_t ctr = 0;
    for (int k = 0; k < 34; ++k) {
      const double t =
          init->t * std::exp(std::log(900.0) * (draws.uniform(ctr++) - 0.5));
      const double a =
          init->a * std::exp(std::log(1000.0) * draws.uniform(ctr++) -
                             std::log(10.0));
      const auto one = sdr::sdr_feasible(p, budget, t, a);
      const auto two = sdr::sdr_feasible_two_matrix(p, budget, t, a);
      if (one.verdict == sdr::Feasibility::kIndeterminate ||
          two.verdict == sdr::Feasibility::kIndeterminate) {
        ++indeterminate;
        continue;
      }
      ++checked;
      if (one.verdict != two.verdict) ++disagreements;
    }
  }
  CHECK(disagreements == 0);
  CHECK(checked >= 70);        // most probes must produce certified verdicts
  CHECK(indeterminate <= 32);  // 102 probes in total
}

TEST_CASE("bisection matches a dense scan of the transition") {
  const auto p = tiny(2, 2, 31);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  const auto init = cccp::initial_point(p, budget, rng::Stream(31, 42));
  REQUIRE(init.has_value());
  const double a = init->a;

  // Dense scan: verdicts along increasing t must be monotone (infeasible
  // below the transition, feasible above), modulo indeterminate probes.
  const int n = 140;
  const double lo = init->t / 400.0, hi = init->t * 4.0;
  double t_dense = 0.0;
  int last_feasible = -1, first_feasible = -1;
  for (int i = 0; i < n; ++i) {
    const double t = lo * std::pow(hi / lo, i / (n - 1.0));
    const auto v = sdr::sdr_feasible(p, budget, t, a).verdict;
    if (v == sdr::Feasibility::kFeasible) {
      if (first_feasible < 0) {
        first_feasible = i;
        t_dense = t;
      }
      last_feasible = i;
    } else if (v == sdr::Feasibility::kInfeasible) {
      CHECK(first_feasible < 0);  // no infeasible probe above a feasible one
    }
  }
  REQUIRE(first_feasible > 0);       // scan started below the transition
  CHECK(last_feasible == n - 1);     // and stayed feasible above it

  const auto bis = sdr::bisect_t(p, budget, a, 1e-2, {}, init->t);
  REQUIRE(bis.feasible);
  CHECK(bis.t_infeasible < bis.t);
  CHECK(bis.t <= bis.t_infeasible * 1.01 * (1.0 + 1e-12));
  // Dense grid spacing is a factor ~1.053, bisection precision 1%.
  CHECK(bis.t >= t_dense * 0.9);
  CHECK(bis.t <= t_dense * 1.1);
  CHECK(bis.indeterminate <= bis.probes / 4);
}

TEST_CASE("single point grids reduce to one bisection") {
  const auto p = tiny(2, 2, 33);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  const auto init = cccp::initial_point(
      p, budget, rng::Stream(0, rng::substream(rng::StreamDomain::kCccpInit, 0)));
  REQUIRE(init.has_value());

  sdr::Options opts;
  opts.grid_size = 1;
  opts.a_lo_override = init->a;
  opts.a_hi_override = init->a;
  const auto outcome = sdr::search(p, budget, 0, opts);
  const auto bis = sdr::bisect_t(p, budget, init->a, opts.eps_bis, opts);

  REQUIRE(outcome.feasible);
  REQUIRE(bis.feasible);
  CHECK(outcome.grid.size() == 1);
  CHECK(outcome.t_star == bis.t);
  CHECK(outcome.a_star == init->a);
  REQUIRE(outcome.x1_star.rows() == p.dim());
  for (int i = 0; i < p.dim(); ++i)
    for (int j = 0; j < p.dim(); ++j)
      CHECK(outcome.x1_star(i, j) == bis.x1(i, j));
}

TEST_CASE("refining the grid never worsens the bound") {
  const auto p = tiny(2, 2, 35);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  sdr::Options opts;
  opts.recover = false;

  opts.grid_size = 200;
  const auto coarse = sdr::search(p, budget, 1, opts);
  opts.grid_size = 400;
  const auto fine = sdr::search(p, budget, 1, opts);

  REQUIRE(coarse.feasible);
  REQUIRE(fine.feasible);
  CHECK(fine.bound_snr >= coarse.bound_snr * (1.0 - 2.0 * opts.eps_bis));
  // The reported bound is the best grid point.
  for (const auto& g : coarse.grid)
    if (g.feasible) CHECK(1.0 / g.t <= coarse.bound_snr * (1.0 + 1e-12));
}

TEST_CASE("numerical rank counts the relative spectrum") {
  const int d = 4;
  const rng::Stream st(91, 5);
  // Random unitary-ish basis from a QR-free trick: orthonormalize Gaussians.
  linalg::CMat v(d, d);
  std::uint64_t ctr = 0;
  for (int j = 0; j < d; ++j) {
    linalg::CVec col(d);
    for (int i = 0; i < d; ++i) col[i] = st.cgaussian(ctr++);
    for (int k = 0; k < j; ++k) {
      linalg::cx proj(0.0, 0.0);
      for (int i = 0; i < d; ++i) proj += std::conj(v(i, k)) * col[i];
      for (int i = 0; i < d; ++i) col[i] -= proj * v(i, k);
    }
    double nrm = 0.0;
    for (int i = 0; i < d; ++i) nrm += std::norm(col[i]);
    nrm = std::sqrt(nrm);
    for (int i = 0; i < d; ++i) v(i, j) = col[i] / nrm;
  }
  const double spectrum[] = {1.0, 2e-3, 3e-9, 0.0};
  linalg::CMat x(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      linalg::cx acc(0.0, 0.0);
      for (int k = 0; k < d; ++k)
        acc += spectrum[k] * v(i, k) * std::conj(v(j, k));
      x(i, j) = acc;
    }
  CHECK(sdr::numerical_rank(x, 1e-6) == 2);
  CHECK(sdr::numerical_rank(x, 1e-12) == 3);
  CHECK(sdr::numerical_rank(x, 1e-1) == 1);
  CHECK(sdr::numerical_rank(linalg::CMat(3, 3), 1e-6) == 0);
  CHECK_THROWS_AS(sdr::numerical_rank(x, -1.0), std::invalid_argument);
}

TEST_CASE("rank two decomposition reproduces the Gram matrix") {
  for (std::uint64_t seed : {41ull, 42ull}) {
    const auto p = tiny(3, 2, seed);
    const int d = p.dim();
    const auto w = testhelp::random_w(p.relay_count, seed + 9, 0.9);
    const auto x = merged_gram(p, w);
    REQUIRE(sdr::numerical_rank(x, 1e-6) == 2);

    const auto [w1, w2] = sdr::decompose_rank_two(x, p);
    const auto x_back = merged_gram(p, stacked(w1, w2));
    double err = 0.0, scale = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        err += std::norm(x(i, j) - x_back(i, j));
        scale += std::norm(x(i, j));
      }
    CHECK(std::sqrt(err) <= 1e-10 * std::sqrt(scale));

    // Equal Gram matrices mean equal SNRs, even though the factorization
    // itself is not unique.
    const double a = 1.1;
    const auto ms_orig = model::min_snr(p, w, a);
    const auto ms_back = model::min_snr(p, stacked(w1, w2), a);
    CHECK(std::abs(ms_orig.value - ms_back.value) <= 1e-9 * ms_orig.value);
  }
}

TEST_CASE("rank one input decomposes with an empty second half") {
  const auto p = tiny(3, 2, 44);
  const int d = p.dim();
  linalg::CVec w1(d);
  const rng::Stream st(44, 8);
  for (int i = 0; i < d; ++i) w1[i] = st.cgaussian(i);
  linalg::CMat x(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = w1[i] * std::conj(w1[j]);

  const auto [u1, u2] = sdr::decompose_rank_two(x, p);
  for (int i = 0; i < d; ++i) CHECK(u2[i] == linalg::cx(0.0, 0.0));
  const auto x_back = merged_gram(p, stacked(u1, u2));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      CHECK(std::abs(x(i, j) - x_back(i, j)) <= 1e-10);
}

TEST_CASE("decomposition rejects higher rank inputs") {
  const auto p = tiny(2, 2, 45);
  const int d = p.dim();
  linalg::CMat x(d, d);
  for (int i = 0; i < d; ++i) x(i, i) = 1.0 + i;  // full rank diagonal
  CHECK_THROWS_AS(sdr::decompose_rank_two(x, p), std::domain_error);
  CHECK_THROWS_AS(sdr::decompose_rank_two(linalg::CMat(2, 2), p),
                  std::invalid_argument);
}

TEST_CASE("amplitude cap is the largest feasible scaling") {
  const auto p = tiny(3, 2, 51);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  const auto w = testhelp::random_w(p.relay_count, 51, 1.0);
  const double a = 0.9;
  const double beta = sdr::max_amplitude(p, budget, w, a);
  REQUIRE(std::isfinite(beta));
  REQUIRE(beta > 0.0);

  linalg::CVec w_in(w), w_out(w);
  for (auto& v : w_in) v *= beta * (1.0 - 1e-9);
  for (auto& v : w_out) v *= beta * (1.0 + 1e-6);
  CHECK(model::feasible(p, w_in, a, budget).feasible());
  CHECK(!model::feasible(p, w_out, a, budget).feasible());

  // Min SNR grows monotonically with the amplitude up to the cap.
  double prev = 0.0;
  for (int k = 1; k <= 6; ++k) {
    linalg::CVec ws(w);
    for (auto& v : ws) v *= beta * (k / 6.0) * (1.0 - 1e-9);
    const double ms = model::min_snr(p, ws, a).value;
    CHECK(ms >= prev * (1.0 - 1e-12));
    prev = ms;
  }

  // Directions that no present limit can bind report an infinite cap.
  model::PowerBudget relay_only;
  relay_only.per_relay_w = 1.0;
  linalg::CVec reuse_only(p.wdim(), linalg::cx(0.0, 0.0));
  reuse_only[p.dim() - 1] = 1.0;
  CHECK(std::isinf(sdr::max_amplitude(p, relay_only, reuse_only, a)));
}

TEST_CASE("randomization recovers designs under the certified bound") {
  const auto p = tiny(2, 2, 55);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  sdr::Options opts;
  opts.grid_size = 25;
  opts.recover = false;
  const auto outcome = sdr::search(p, budget, 5, opts);
  REQUIRE(outcome.feasible);

  // An infeasible-side probe certifies a hard ceiling at this a.
  const auto bis = sdr::bisect_t(p, budget, outcome.a_star, opts.eps_bis, opts);
  REQUIRE(bis.feasible);
  const double ceiling = bis.t_infeasible > 0.0
                             ? (1.0 + 1e-6) / bis.t_infeasible
                             : std::numeric_limits<double>::infinity();

  for (auto mode : {sdr::RecoveryMode::kRankOne, sdr::RecoveryMode::kRankTwo}) {
    const auto rr = sdr::randomize(outcome.x1_star, outcome.a_star, p, budget,
                                   40, mode, 5);
    REQUIRE(rr.best_index >= 0);
    CHECK(model::feasible(p, rr.solution.w, rr.solution.a, budget, 1e-9)
              .feasible());
    CHECK(rr.min_snr > 0.0);
    CHECK(rr.min_snr <= ceiling);

    const auto again = sdr::randomize(outcome.x1_star, outcome.a_star, p,
                                      budget, 40, mode, 5);
    CHECK(again.best_index == rr.best_index);
    for (std::size_t i = 0; i < rr.solution.w.size(); ++i)
      CHECK(again.solution.w[i] == rr.solution.w[i]);
  }
}

TEST_CASE("rank one randomization attains the single direction optimum") {
  const auto p = tiny(3, 2, 57);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  const int d = p.dim();
  // A rank-one Gram matrix leaves randomization a single direction, so every
  // candidate lands on the amplitude-capped ray point.
  linalg::CVec u(d);
  const rng::Stream st(57, 3);
  for (int i = 0; i < d; ++i) u[i] = st.cgaussian(i);
  linalg::CMat x(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = u[i] * std::conj(u[j]);

  const double a = 1.0;
  linalg::CVec ray(stacked(u, linalg::CVec(d, linalg::cx(0.0, 0.0))));
  const double beta = sdr::max_amplitude(p, budget, ray, a);
  for (auto& v : ray) v *= beta * (1.0 - 1e-12);
  const double ms_ray = model::min_snr(p, ray, a).value;

  const auto rr =
      sdr::randomize(x, a, p, budget, 12, sdr::RecoveryMode::kRankOne, 9);
  REQUIRE(rr.best_index >= 0);
  // The eigenfactorization carries O(sqrt(eps)) directional round-off, so
  // candidates sit that far off the exact ray.
  CHECK(std::abs(rr.min_snr - ms_ray) <= 1e-6 * ms_ray);
}

TEST_CASE("pair randomization approaches an exact rank two optimum") {
  const auto p = tiny(2, 2, 59);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  const auto designed = cccp::multistart(p, budget, 6, 59);
  REQUIRE(designed.min_snr > 0.0);
  const auto x = merged_gram(p, designed.solution.w);
  const double ms_exact = designed.min_snr;

  int hits = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto rr = sdr::randomize(x, designed.solution.a, p, budget, 200,
                                   sdr::RecoveryMode::kRankTwo, 1000 + s);
    REQUIRE(rr.best_index >= 0);
    CHECK(model::feasible(p, rr.solution.w, rr.solution.a, budget, 1e-9)
              .feasible());
    if (rr.min_snr >= 0.97 * ms_exact) ++hits;
  }
  CHECK(hits >= 18);
}

TEST_CASE("the bound dominates any feasible design at the same a") {
  const auto p = tiny(2, 2, 61);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  const auto designed = cccp::multistart(p, budget, 8, 61);
  REQUIRE(designed.min_snr > 0.0);

  const auto bis =
      sdr::bisect_t(p, budget, designed.solution.a, 1e-2, {}, designed.solution.t);
  REQUIRE(bis.feasible);
  if (bis.t_infeasible > 0.0) {
    // Everything beyond 1/t_infeasible is certified unreachable.
    CHECK(designed.min_snr <= (1.0 + 1e-6) / bis.t_infeasible);
  }

  sdr::Options opts;
  opts.grid_size = 60;
  const auto outcome = sdr::search(p, budget, 3, opts);
  REQUIRE(outcome.feasible);
  CHECK(outcome.bound_snr >= 0.95 * designed.min_snr);
  REQUIRE(!outcome.solution.w.empty());
  CHECK(model::feasible(p, outcome.solution.w, outcome.solution.a, budget, 1e-6)
            .feasible());
  CHECK(outcome.solution_min_snr <=
        outcome.bound_snr * (1.0 + opts.eps_bis + 1e-6));
  CHECK(outcome.solution_min_snr >= 0.5 * outcome.bound_snr);
}

TEST_CASE("search handles a physically scaled network") {
  scenario::Geometry geom;
  geom.relay_count = 4;
  geom.dest_count = 3;
  const auto ch = scenario::generate(geom, 404);
  const auto p = model::build(ch);
  const auto budget = model::PowerBudget::from_total_dbm(20.0);

  sdr::Options opts;
  opts.grid_size = 36;
  const auto outcome = sdr::search(p, budget, 3, opts);
  REQUIRE(outcome.feasible);
  CHECK(outcome.bound_snr > 1.0);
  CHECK(std::isfinite(outcome.bound_snr));
  CHECK(outcome.rank >= 1);
  CHECK(outcome.rank <= p.dim());
  for (std::size_t i = 1; i < outcome.eigenvalues.size(); ++i)
    CHECK(outcome.eigenvalues[i] <= outcome.eigenvalues[i - 1]);
  CHECK(outcome.eigenvalues[0] > 0.0);

  REQUIRE(!outcome.solution.w.empty());
  CHECK(model::feasible(p, outcome.solution.w, outcome.solution.a, budget, 1e-6)
            .feasible());
  CHECK(outcome.solution_min_snr > 0.0);
  CHECK(outcome.solution_min_snr <=
        outcome.bound_snr * (1.0 + opts.eps_bis + 1e-6));

  // Concurrent grid evaluation changes nothing.
  sdr::Options par = opts;
  par.jobs = 4;
  const auto outcome_par = sdr::search(p, budget, 3, par);
  CHECK(outcome_par.t_star == outcome.t_star);
  CHECK(outcome_par.a_star == outcome.a_star);
  REQUIRE(outcome_par.grid.size() == outcome.grid.size());
  for (std::size_t k = 0; k < outcome.grid.size(); ++k) {
    CHECK(outcome_par.grid[k].feasible == outcome.grid[k].feasible);
    CHECK(outcome_par.grid[k].t == outcome.grid[k].t);
  }

  // The grid record round-trips through the CSV artifact.
  std::ostringstream csv;
  sdr::write_grid_csv(csv, outcome);
  const std::string text = csv.str();
  CHECK(text.rfind("a,t_best,snr_db,status,rank,probes,indeterminate\n", 0) ==
        0);
  CHECK(std::count(text.begin(), text.end(), '\n') ==
        static_cast<long>(outcome.grid.size()) + 1);
  CHECK(text.find("feasible") != std::string::npos);
}

TEST_CASE("impossible operating points are reported infeasible") {
  const auto p = tiny(2, 2, 63);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  // Below a = 2 / P_source_max even a zero design overspends the source.
  const double a_bad = 1.9 / *budget.source_w;
  const auto check = sdr::sdr_feasible(p, budget, 1.0, a_bad);
  CHECK(check.verdict == sdr::Feasibility::kInfeasible);

  sdr::Options opts;
  opts.max_expand = 6;
  const auto bis = sdr::bisect_t(p, budget, a_bad, 1e-2, opts, 1.0);
  CHECK(!bis.feasible);
  CHECK(std::isinf(bis.t));
  CHECK(bis.probes == 7);  // initial probe plus the capped expansions

  // A destination with no relay or direct path can never reach any target.
  auto broken = tiny(2, 2, 64);
  std::fill(broken.q1[1].begin(), broken.q1[1].end(), linalg::cx(0.0, 0.0));
  std::fill(broken.q2[1].begin(), broken.q2[1].end(), linalg::cx(0.0, 0.0));
  std::fill(broken.r_diag[1].begin(), broken.r_diag[1].end(), 0.0);
  broken.d_abs_sq[1] = 0.0;
  broken.degenerate[1] = 1;
  const auto dead =
      sdr::sdr_feasible(broken, budget, 1e6, 4.0 / *budget.source_w);
  CHECK(dead.verdict == sdr::Feasibility::kInfeasible);
}

TEST_CASE("invalid arguments are rejected") {
  const auto p = tiny(2, 2, 65);
  const auto budget = model::PowerBudget::from_total_w(10.0);
  CHECK_THROWS_AS(sdr::sdr_feasible(p, model::PowerBudget{}, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sdr::sdr_feasible(p, budget, 0.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sdr::sdr_feasible(p, budget, 1.0, -2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sdr::bisect_t(p, budget, 1.0, 0.0), std::invalid_argument);
  sdr::Options bad;
  bad.grid_size = 0;
  CHECK_THROWS_AS(sdr::search(p, budget, 1, bad), std::invalid_argument);
  CHECK_THROWS_AS(
      sdr::randomize(linalg::CMat(p.dim(), p.dim()), 1.0, p, budget, 0,
                     sdr::RecoveryMode::kRankOne, 1),
      std::invalid_argument);
  model::PowerBudget negative;
  negative.total_w = -1.0;
  CHECK_THROWS_AS(sdr::search(p, negative, 1, {}), std::invalid_argument);
}
