#include "relaybf/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "relaybf/rng.hpp"

namespace relaybf::harness {

namespace {

using nlohmann::json;

constexpr const char* kLibraryVersion = "relaybf 0.1.0";
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::kR2Cccp, "R2-CCCP"},   {Method::kR1Cccp, "R1-CCCP"},
    {Method::kR2Sdr, "R2-SDR2D"},   {Method::kR1Sdr, "R1-SDR2D"},
    {Method::kSdrBound, "SDR2D-UB"}, {Method::kDsd, "DSD"}};

constexpr std::pair<SweepAxis, const char*> kAxisNames[] = {
    {SweepAxis::kTotalPower, "total_power"},
    {SweepAxis::kDestCount, "destinations"},
    {SweepAxis::kIterations, "iterations"}};

double to_db(double x) { return 10.0 * std::log10(x); }

[[noreturn]] void config_error(const std::string& field,
                               const std::string& what) {
  throw std::invalid_argument("config: " + field + ": " + what);
}

// --- typed JSON accessors with field-path diagnostics ---

double num_of(const json& v, const std::string& path) {
  if (!v.is_number()) config_error(path, "expected a number");
  return v.get<double>();
}

int int_of(const json& v, const std::string& path) {
  if (!v.is_number_integer()) config_error(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t u64_of(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  config_error(path, "expected a nonnegative integer");
}

std::string str_of(const json& v, const std::string& path) {
  if (!v.is_string()) config_error(path, "expected a string");
  return v.get<std::string>();
}

const json& obj_of(const json& v, const std::string& path) {
  if (!v.is_object()) config_error(path, "expected an object");
  return v;
}

const json& arr_of(const json& v, const std::string& path) {
  if (!v.is_array()) config_error(path, "expected an array");
  return v;
}

void overlay_geometry(const json& j, scenario::Geometry& g) {
  for (const auto& [k, v] : j.items()) {
    const std::string path = "geometry." + k;
    if (k == "relays")
      g.relay_count = int_of(v, path);
    else if (k == "destinations")
      g.dest_count = int_of(v, path);
    else if (k == "relay_radius_m")
      g.relay_radius_m = num_of(v, path);
    else if (k == "dest_radius_min_m")
      g.dest_radius_min_m = num_of(v, path);
    else if (k == "dest_radius_max_m")
      g.dest_radius_max_m = num_of(v, path);
    else if (k == "source_height_m")
      g.source_height_m = num_of(v, path);
    else if (k == "relay_height_m")
      g.relay_height_m = num_of(v, path);
    else if (k == "dest_height_m")
      g.dest_height_m = num_of(v, path);
    else if (k == "carrier_hz")
      g.carrier_hz = num_of(v, path);
    else
      config_error(path, "unknown key");
  }
}

void overlay_options(const json& j, MethodOptions& o) {
  for (const auto& [k, v] : j.items()) {
    const std::string path = "options." + k;
    if (k == "n_starts")
      o.n_starts = int_of(v, path);
    else if (k == "max_iter")
      o.max_iter = int_of(v, path);
    else if (k == "rel_improve_tol")
      o.rel_improve_tol = num_of(v, path);
    else if (k == "eps_bis")
      o.eps_bis = num_of(v, path);
    else if (k == "grid_size")
      o.grid_size = int_of(v, path);
    else if (k == "n_candidates")
      o.n_candidates = int_of(v, path);
    else if (k == "a_span")
      o.a_span = num_of(v, path);
    else
      config_error(path, "unknown key");
  }
}

void overlay_sweep(const json& j, ExperimentConfig& c) {
  for (const auto& [k, v] : j.items()) {
    const std::string path = "sweep." + k;
    if (k == "axis") {
      const auto a = parse_axis(str_of(v, path));
      if (!a) config_error(path, "unknown axis '" + str_of(v, path) + "'");
      c.axis = *a;
    } else if (k == "p_t_dbm") {
      c.p_t_dbm.clear();
      for (const auto& e : arr_of(v, path)) c.p_t_dbm.push_back(num_of(e, path));
    } else if (k == "dest_counts") {
      c.dest_counts.clear();
      for (const auto& e : arr_of(v, path))
        c.dest_counts.push_back(int_of(e, path));
    } else if (k == "trace_iterations") {
      c.trace_iterations = int_of(v, path);
    } else {
      config_error(path, "unknown key");
    }
  }
}

// --- CSV helpers ---

std::string fmt_g17(double x) {
  if (!std::isfinite(x)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_runtime(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

// --- method execution helpers ---

std::string status_of(cccp::Status s) {
  switch (s) {
    case cccp::Status::kConverged:
      return "ok";
    case cccp::Status::kIterationLimit:
      return "iteration_limit";
    case cccp::Status::kSubproblemFailed:
      return "subproblem_failed";
    case cccp::Status::kInitFailed:
      return "init_failed";
  }
  return "unknown";
}

struct CccpStarts {
  cccp::Result best;
  bool any = false;
  std::vector<std::vector<cccp::TraceEntry>> traces;
};

// Equivalent to cccp::multistart (same streams, same tie rule) but keeps
// every start's trace when asked.
CccpStarts run_cccp_starts(const model::ProblemData& p,
                           const model::PowerBudget& budget,
                           std::uint64_t seed, const MethodOptions& mo,
                           bool rank_one, bool collect) {
  cccp::Options co;
  co.max_iter = mo.max_iter;
  co.rel_improve_tol = mo.rel_improve_tol;
  co.rank_one = rank_one;

  CccpStarts out;
  for (int s = 0; s < mo.n_starts; ++s) {
    const rng::Stream stream(seed, rng::substream(rng::kCccpInit, s));
    const auto init = cccp::initial_point(p, budget, stream, rank_one);
    if (!init) {
      if (collect) out.traces.emplace_back();
      continue;
    }
    cccp::Result r = cccp::run(p, budget, *init, co);
    if (collect) out.traces.push_back(r.trace);
    if (r.status == cccp::Status::kInitFailed) continue;
    if (!out.any || r.min_snr > out.best.min_snr) {
      r.start_index = s;
      out.best = std::move(r);
      out.any = true;
    }
  }
  return out;
}

MethodResult run_cccp_method(Method m, const model::ProblemData& p,
                             const model::PowerBudget& budget,
                             std::uint64_t seed, const MethodOptions& mo,
                             bool collect) {
  MethodResult res;
  res.method = m;
  auto starts = run_cccp_starts(p, budget, seed, mo, m == Method::kR1Cccp,
                                collect);
  res.start_traces = std::move(starts.traces);
  if (!starts.any) {
    res.status = "init_failed";
    return res;
  }
  res.min_snr = starts.best.min_snr;
  res.solution = std::move(starts.best.solution);
  res.iterations = starts.best.iterations;
  res.trace = std::move(starts.best.trace);
  res.status = status_of(starts.best.status);

  if (m == Method::kR2Cccp) {
    // Warm start at the rank-one optimum: feasible for the two-substream
    // problem, and descent is monotone, so the kept result can never fall
    // below the rank-one value.
    const auto r1 =
        run_cccp_starts(p, budget, seed, mo, /*rank_one=*/true, false);
    if (r1.any) {
      cccp::Options co;
      co.max_iter = mo.max_iter;
      co.rel_improve_tol = mo.rel_improve_tol;
      const cccp::State warm{r1.best.solution.w, r1.best.solution.a,
                             r1.best.solution.t};
      cccp::Result wr = cccp::run(p, budget, warm, co);
      if (wr.status != cccp::Status::kInitFailed &&
          wr.min_snr > res.min_snr) {
        res.min_snr = wr.min_snr;
        res.solution = std::move(wr.solution);
        res.iterations = wr.iterations;
        res.trace = std::move(wr.trace);
        res.status = status_of(wr.status);
      }
    }
  }
  return res;
}

MethodResult run_sdr_method(Method m, const model::ProblemData& p,
                            const model::PowerBudget& budget,
                            std::uint64_t seed, const MethodOptions& mo) {
  sdr::Options so;
  so.eps_bis = mo.eps_bis;
  so.grid_size = mo.grid_size;
  so.a_span = mo.a_span;
  so.n_candidates = mo.n_candidates;
  so.recovery = m == Method::kR1Sdr ? sdr::RecoveryMode::kRankOne
                                    : sdr::RecoveryMode::kRankTwo;
  so.recover = m != Method::kSdrBound;

  MethodResult res;
  res.method = m;
  auto out = sdr::search(p, budget, seed, so);
  for (const auto& g : out.grid) res.iterations += g.probes;

  // Re-scan at the same point count inside the winning interval until the
  // grid spacing is tight, so the reported value tracks the continuum peak
  // over the amplification scale instead of riding on the coarse grid's
  // quantization.  The lower edge never drops below the structural minimum
  // (full source power, no direct-path headroom).
  if (out.feasible && out.grid.size() >= 2) {
    const double a_floor = out.grid.front().a;
    double spacing = out.grid[1].a / out.grid[0].a;
    const auto prefer = [&](const sdr::SdrOutcome& cand) {
      if (!cand.feasible) return false;
      if (so.recover) {
        const bool cw = !cand.solution.w.empty();
        const bool ow = !out.solution.w.empty();
        if (cw != ow) return cw;
        if (cw && ow) return cand.solution_min_snr > out.solution_min_snr;
      }
      return cand.bound_snr > out.bound_snr;
    };
    for (int pass = 0; pass < 6 && spacing > 1.02; ++pass) {
      sdr::Options s2 = so;
      s2.a_lo_override = std::max(a_floor, out.a_star / spacing);
      s2.a_hi_override = out.a_star * spacing;
      auto refined = sdr::search(p, budget, seed, s2);
      for (const auto& g : refined.grid) res.iterations += g.probes;
      if (refined.grid.size() < 2) break;
      const double next = refined.grid[1].a / refined.grid[0].a;
      if (prefer(refined)) out = std::move(refined);
      if (!(next < spacing)) break;  // two-point windows stop shrinking
      spacing = next;
    }
  }

  if (!out.feasible) {
    res.status = "infeasible";
    return res;
  }
  res.rank = out.rank;
  if (m == Method::kSdrBound) {
    // Report the certified-infeasible level at the best amplification: the
    // bisection proves no relaxation point (hence no design) reaches it
    // there, so the emitted bound always sits above achieved values instead
    // of up to eps_bis below them on the certified-feasible side.
    const auto probe = sdr::bisect_t(p, budget, out.a_star, so.eps_bis, so,
                                     out.t_star);
    res.iterations += probe.probes;
    res.min_snr = probe.t_infeasible > 0.0
                      ? std::max(out.bound_snr, 1.0 / probe.t_infeasible)
                      : out.bound_snr;
    res.status = "ok";
    return res;
  }
  if (out.solution.w.empty()) {
    res.status = "recovery_failed";
    return res;
  }
  res.min_snr = out.solution_min_snr;
  res.solution = out.solution;
  res.status = "ok";
  return res;
}

// --- sweep cells ---

struct Cell {
  Method method = Method::kDsd;
  std::uint64_t seed = 0;
  double sweep_value = 0.0;
  int dest_count = 0;
  double p_t_dbm = 0.0;
};

struct CellOut {
  ResultRecord record;
  std::vector<TraceRow> traces;
};

std::vector<Cell> expand_cells(const ExperimentConfig& c) {
  struct Point {
    double value;
    int dest_count;
    double p_dbm;
  };
  std::vector<Point> points;
  switch (c.axis) {
    case SweepAxis::kTotalPower:
      for (double v : c.p_t_dbm)
        points.push_back({v, c.geometry.dest_count, v});
      break;
    case SweepAxis::kDestCount:
      for (int m : c.dest_counts)
        points.push_back({static_cast<double>(m), m, c.p_t_dbm.front()});
      break;
    case SweepAxis::kIterations:
      points.push_back(
          {c.p_t_dbm.front(), c.geometry.dest_count, c.p_t_dbm.front()});
      break;
  }
  std::vector<Cell> cells;
  for (Method m : c.methods)
    for (const Point& pt : points)
      for (std::uint64_t s : c.seeds)
        cells.push_back({m, s, pt.value, pt.dest_count, pt.p_dbm});
  return cells;
}

CellOut run_cell(const ExperimentConfig& c, const Cell& cell) {
  CellOut out;
  ResultRecord& rec = out.record;
  rec.method = method_name(cell.method);
  rec.seed = cell.seed;
  rec.sweep_axis = axis_name(c.axis);
  rec.sweep_value = cell.sweep_value;
  rec.min_snr_db = kNan;
  rec.rate = 0.0;
  rec.rank = -1;

  const bool collect =
      c.axis == SweepAxis::kIterations &&
      (cell.method == Method::kR2Cccp || cell.method == Method::kR1Cccp);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    scenario::Geometry g = c.geometry;
    g.dest_count = cell.dest_count;
    const auto ch = scenario::generate(g, cell.seed, c.noise_dbm);
    const auto p = model::build(ch);
    const auto budget = budget_for(c, cell.p_t_dbm);
    const auto mr = run_method(cell.method, p, budget, cell.seed, c.options,
                               collect);
    rec.iterations = mr.iterations;
    rec.rank = mr.rank;
    rec.status = mr.status;
    if (mr.min_snr > 0.0 && std::isfinite(mr.min_snr)) {
      rec.min_snr_db = to_db(mr.min_snr);
      rec.rate = rate_bits(cell.method, mr.min_snr);
    }

    if (collect && !mr.start_traces.empty()) {
      // Per-iteration envelope across the starts; runs that stopped early
      // hold their final value (their iterate does not move afterwards).
      const auto at = [](const std::vector<cccp::TraceEntry>& tr,
                         int k) -> double {
        const std::size_t i =
            std::min<std::size_t>(static_cast<std::size_t>(k),
                                  tr.size() - 1);
        return tr[i].min_snr;
      };
      bool any = false;
      for (const auto& tr : mr.start_traces) any = any || !tr.empty();
      if (any)
        for (int k = 0; k <= c.trace_iterations; ++k) {
          TraceRow row;
          row.method = rec.method;
          row.seed = cell.seed;
          row.iteration = k;
          row.best_db = -std::numeric_limits<double>::infinity();
          row.worst_db = std::numeric_limits<double>::infinity();
          for (const auto& tr : mr.start_traces) {
            if (tr.empty()) continue;
            const double v = at(tr, k);
            row.best_db = std::max(row.best_db, v);
            row.worst_db = std::min(row.worst_db, v);
          }
          row.best_db = to_db(row.best_db);
          row.worst_db = to_db(row.worst_db);
          row.bound_db = kNan;  // filled from the bound record, if any
          out.traces.push_back(std::move(row));
        }
    }
  } catch (const std::exception& e) {
    rec.status = std::string("error: ") + e.what();
  }
  rec.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

void write_file_or_throw(const std::filesystem::path& path,
                         const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  os.flush();
  if (!os.good())
    throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------
// Names

const char* method_name(Method m) {
  for (const auto& [k, v] : kMethodNames)
    if (k == m) return v;
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [k, v] : kMethodNames)
    if (name == v) return k;
  return std::nullopt;
}

bool method_is_relay(Method m) { return m != Method::kDsd; }

double rate_bits(Method m, double snr) {
  const double s = std::max(snr, 0.0);
  const double r = std::log2(1.0 + s);
  return method_is_relay(m) ? 0.5 * r : r;
}

const char* axis_name(SweepAxis a) {
  for (const auto& [k, v] : kAxisNames)
    if (k == a) return v;
  return "?";
}

std::optional<SweepAxis> parse_axis(std::string_view name) {
  for (const auto& [k, v] : kAxisNames)
    if (name == v) return k;
  return std::nullopt;
}

std::optional<Profile> parse_profile(std::string_view name) {
  if (name == "smoke") return Profile::kSmoke;
  if (name == "desk") return Profile::kDesk;
  if (name == "full") return Profile::kFull;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig preset(Profile p) {
  ExperimentConfig c;
  switch (p) {
    case Profile::kSmoke:
      c.geometry.relay_count = 4;
      c.geometry.dest_count = 8;
      c.methods = {Method::kR2Cccp, Method::kR1Cccp, Method::kSdrBound,
                   Method::kDsd};
      c.axis = SweepAxis::kTotalPower;
      c.p_t_dbm = {10.0, 16.0};
      c.seeds = {1, 2, 3};
      c.options.n_starts = 4;
      c.options.max_iter = 30;
      c.options.eps_bis = 2e-2;
      c.options.grid_size = 24;
      c.options.n_candidates = 100;
      c.out_dir = "out-smoke";
      break;
    case Profile::kDesk:
      c.geometry.relay_count = 10;
      c.geometry.dest_count = 10;
      c.methods = {Method::kR2Cccp, Method::kR1Cccp,  Method::kR2Sdr,
                   Method::kR1Sdr,  Method::kSdrBound, Method::kDsd};
      c.axis = SweepAxis::kDestCount;
      c.dest_counts = {10, 25, 50};
      c.p_t_dbm = {15.0};
      c.seeds.clear();
      for (std::uint64_t s = 1; s <= 20; ++s) c.seeds.push_back(s);
      c.out_dir = "out-desk";
      break;
    case Profile::kFull:
      c.geometry.relay_count = 10;
      c.geometry.dest_count = 100;
      c.methods = {Method::kR2Cccp, Method::kR1Cccp,  Method::kR2Sdr,
                   Method::kR1Sdr,  Method::kSdrBound, Method::kDsd};
      c.axis = SweepAxis::kTotalPower;
      c.p_t_dbm = {8.0, 12.0, 16.0, 20.0, 24.0};
      c.dest_counts = {10, 40, 70, 100, 130};
      c.seeds.clear();
      for (std::uint64_t s = 1; s <= 100; ++s) c.seeds.push_back(s);
      c.options.grid_size = 200;
      c.options.n_candidates = 300;
      c.out_dir = "out-full";
      break;
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.geometry.relay_count < 1)
    config_error("geometry.relays", "must be >= 1");
  if (c.geometry.dest_count < 1)
    config_error("geometry.destinations", "must be >= 1");
  if (!(c.geometry.relay_radius_m > 0.0))
    config_error("geometry.relay_radius_m", "must be positive");
  if (!(c.geometry.dest_radius_min_m > 0.0))
    config_error("geometry.dest_radius_min_m", "must be positive");
  if (!(c.geometry.dest_radius_max_m >= c.geometry.dest_radius_min_m))
    config_error("geometry.dest_radius_max_m", "must be >= the minimum");
  if (!std::isfinite(c.noise_dbm)) config_error("noise_dbm", "must be finite");
  if (!(c.source_ratio > 0.0))
    config_error("budget.source_ratio", "must be positive");
  if (!(c.relay_sum_ratio > 0.0))
    config_error("budget.relay_sum_ratio", "must be positive");
  if (!(c.per_relay_ratio > 0.0))
    config_error("budget.per_relay_ratio", "must be positive");
  if (c.methods.empty()) config_error("methods", "must not be empty");
  if (c.seeds.empty()) config_error("seeds", "must not be empty");
  for (double v : c.p_t_dbm)
    if (!std::isfinite(v)) config_error("sweep.p_t_dbm", "must be finite");
  for (int m : c.dest_counts)
    if (m < 1) config_error("sweep.dest_counts", "entries must be >= 1");
  if (c.axis != SweepAxis::kTotalPower && c.p_t_dbm.empty())
    config_error("sweep.p_t_dbm",
                 "an operating power is required on this axis");
  if (c.trace_iterations < 1)
    config_error("sweep.trace_iterations", "must be >= 1");
  if (c.options.n_starts < 1) config_error("options.n_starts", "must be >= 1");
  if (c.options.max_iter < 1) config_error("options.max_iter", "must be >= 1");
  if (!(c.options.rel_improve_tol > 0.0))
    config_error("options.rel_improve_tol", "must be positive");
  if (!(c.options.eps_bis > 0.0))
    config_error("options.eps_bis", "must be positive");
  if (c.options.grid_size < 1)
    config_error("options.grid_size", "must be >= 1");
  if (c.options.n_candidates < 1)
    config_error("options.n_candidates", "must be >= 1");
  if (!(c.options.a_span >= 1.0))
    config_error("options.a_span", "must be >= 1");
  if (c.out_dir.empty()) config_error("out_dir", "must not be empty");
}

ExperimentConfig config_from_json(const std::string& text,
                                  ExperimentConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  obj_of(j, "(root)");
  for (const auto& [k, v] : j.items()) {
    if (k == "geometry") {
      overlay_geometry(obj_of(v, k), base.geometry);
    } else if (k == "noise_dbm") {
      base.noise_dbm = num_of(v, k);
    } else if (k == "budget") {
      for (const auto& [bk, bv] : obj_of(v, k).items()) {
        const std::string path = "budget." + bk;
        if (bk == "source_ratio")
          base.source_ratio = num_of(bv, path);
        else if (bk == "relay_sum_ratio")
          base.relay_sum_ratio = num_of(bv, path);
        else if (bk == "per_relay_ratio")
          base.per_relay_ratio = num_of(bv, path);
        else
          config_error(path, "unknown key");
      }
    } else if (k == "methods") {
      base.methods.clear();
      for (const auto& e : arr_of(v, k)) {
        const std::string name = str_of(e, "methods[]");
        const auto m = parse_method(name);
        if (!m) config_error("methods", "unknown method '" + name + "'");
        base.methods.push_back(*m);
      }
    } else if (k == "sweep") {
      overlay_sweep(obj_of(v, k), base);
    } else if (k == "seeds") {
      base.seeds.clear();
      for (const auto& e : arr_of(v, k))
        base.seeds.push_back(u64_of(e, "seeds[]"));
    } else if (k == "options") {
      overlay_options(obj_of(v, k), base.options);
    } else if (k == "out_dir") {
      base.out_dir = str_of(v, k);
    } else {
      config_error(k, "unknown key");
    }
  }
  return base;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["geometry"] = {{"relays", c.geometry.relay_count},
                   {"destinations", c.geometry.dest_count},
                   {"relay_radius_m", c.geometry.relay_radius_m},
                   {"dest_radius_min_m", c.geometry.dest_radius_min_m},
                   {"dest_radius_max_m", c.geometry.dest_radius_max_m},
                   {"source_height_m", c.geometry.source_height_m},
                   {"relay_height_m", c.geometry.relay_height_m},
                   {"dest_height_m", c.geometry.dest_height_m},
                   {"carrier_hz", c.geometry.carrier_hz}};
  j["noise_dbm"] = c.noise_dbm;
  j["budget"] = {{"source_ratio", c.source_ratio},
                 {"relay_sum_ratio", c.relay_sum_ratio},
                 {"per_relay_ratio", c.per_relay_ratio}};
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  j["methods"] = std::move(methods);
  j["sweep"] = {{"axis", axis_name(c.axis)},
                {"p_t_dbm", c.p_t_dbm},
                {"dest_counts", c.dest_counts},
                {"trace_iterations", c.trace_iterations}};
  j["seeds"] = c.seeds;
  j["options"] = {{"n_starts", c.options.n_starts},
                  {"max_iter", c.options.max_iter},
                  {"rel_improve_tol", c.options.rel_improve_tol},
                  {"eps_bis", c.options.eps_bis},
                  {"grid_size", c.options.grid_size},
                  {"n_candidates", c.options.n_candidates},
                  {"a_span", c.options.a_span}};
  j["out_dir"] = c.out_dir;
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  const std::string text = config_to_json(c);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

model::PowerBudget budget_for(const ExperimentConfig& c, double p_t_dbm) {
  const double p = scenario::dbm_to_watt(p_t_dbm);
  model::PowerBudget b;
  b.total_w = p;
  b.source_w = c.source_ratio * p;
  b.relay_sum_w = c.relay_sum_ratio * p;
  b.per_relay_w = c.per_relay_ratio * p;
  return b;
}

// ---------------------------------------------------------------------------
// Methods

DsdResult run_dsd(const model::ProblemData& p,
                  const model::PowerBudget& budget) {
  double window = std::numeric_limits<double>::infinity();
  if (budget.source_w) window = std::min(window, *budget.source_w);
  if (budget.total_w) window = std::min(window, *budget.total_w);
  if (!std::isfinite(window))
    throw std::invalid_argument(
        "dsd: budget bounds neither the source nor the total power");
  if (!(p.sigma_nu_sq > 0.0))
    throw std::domain_error("dsd: destination noise power must be positive");

  DsdResult out;
  out.slot_power_w = window / 4.0;
  out.min_snr = std::numeric_limits<double>::infinity();
  for (int m = 0; m < p.dest_count; ++m) {
    const double snr = out.slot_power_w * p.d_abs_sq[m] / p.sigma_nu_sq;
    if (snr < out.min_snr) {
      out.min_snr = snr;
      out.argmin = m;
    }
  }
  return out;
}

MethodResult run_method(Method m, const model::ProblemData& p,
                        const model::PowerBudget& budget, std::uint64_t seed,
                        const MethodOptions& opts, bool collect_start_traces) {
  switch (m) {
    case Method::kR2Cccp:
    case Method::kR1Cccp:
      return run_cccp_method(m, p, budget, seed, opts, collect_start_traces);
    case Method::kR2Sdr:
    case Method::kR1Sdr:
    case Method::kSdrBound:
      return run_sdr_method(m, p, budget, seed, opts);
    case Method::kDsd: {
      MethodResult res;
      res.method = m;
      const auto d = run_dsd(p, budget);
      res.min_snr = d.min_snr;
      res.status = "ok";
      return res;
    }
  }
  throw std::invalid_argument("unknown method");
}

// ---------------------------------------------------------------------------
// Sweep

SweepOutcome sweep(const ExperimentConfig& config, int jobs,
                   bool write_files) {
  validate(config);
  const std::vector<Cell> cells = expand_cells(config);
  std::vector<CellOut> outs(cells.size());

  const int workers = std::max(
      1, std::min<int>(jobs, static_cast<int>(cells.size()) > 0
                                 ? static_cast<int>(cells.size())
                                 : 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      outs[i] = run_cell(config, cells[i]);
    }
  };
  if (workers <= 1 || cells.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepOutcome outcome;
  for (auto& o : outs) outcome.records.push_back(std::move(o.record));
  for (auto& o : outs)
    for (auto& row : o.traces) outcome.traces.push_back(std::move(row));

  // Attach the relaxation bound of the matching seed to every trace row.
  if (!outcome.traces.empty()) {
    const char* bound_name = method_name(Method::kSdrBound);
    for (auto& row : outcome.traces)
      for (const auto& rec : outcome.records)
        if (rec.method == bound_name && rec.seed == row.seed) {
          row.bound_db = rec.min_snr_db;
          break;
        }
  }

  if (write_files) {
    namespace fs = std::filesystem;
    const fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
      throw std::runtime_error("cannot create output directory " +
                               dir.string() + ": " + ec.message());

    {
      std::ostringstream os;
      write_records_csv(os, outcome.records);
      const fs::path p = dir / "records.csv";
      write_file_or_throw(p, os.str());
      outcome.records_path = p.string();
    }
    if (!outcome.traces.empty()) {
      std::ostringstream os;
      write_traces_csv(os, outcome.traces);
      const fs::path p = dir / "traces.csv";
      write_file_or_throw(p, os.str());
      outcome.traces_path = p.string();
    }
    {
      const fs::path p = dir / "manifest.json";
      write_file_or_throw(p, manifest_json(config, outcome));
      outcome.manifest_path = p.string();
    }
  }
  return outcome;
}

void write_records_csv(std::ostream& os,
                       const std::vector<ResultRecord>& records) {
  os << "method,seed,sweep_axis,sweep_value,min_snr_db,rate_bits_per_slot_hz,"
        "runtime_s,iterations,rank,status\n";
  for (const auto& r : records) {
    os << csv_field(r.method) << ',' << r.seed << ',' << r.sweep_axis << ','
       << fmt_g17(r.sweep_value) << ',' << fmt_g17(r.min_snr_db) << ','
       << fmt_g17(r.rate) << ',' << fmt_runtime(r.runtime_s) << ','
       << r.iterations << ',';
    if (r.rank >= 0) os << r.rank;
    os << ',' << csv_field(r.status) << '\n';
  }
}

void write_traces_csv(std::ostream& os, const std::vector<TraceRow>& traces) {
  os << "method,seed,iteration,best_min_snr_db,worst_min_snr_db,bound_db\n";
  for (const auto& t : traces)
    os << csv_field(t.method) << ',' << t.seed << ',' << t.iteration << ','
       << fmt_g17(t.best_db) << ',' << fmt_g17(t.worst_db) << ','
       << fmt_g17(t.bound_db) << '\n';
}

std::string manifest_json(const ExperimentConfig& config,
                          const SweepOutcome& outcome) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  json j;
  j["schema"] = 1;
  j["library"] = kLibraryVersion;
  j["config_hash"] = hash;
  j["config"] = json::parse(config_to_json(config));
  j["outputs"]["records"] = "records.csv";
  j["outputs"]["traces"] =
      outcome.traces.empty() ? json() : json("traces.csv");
  j["record_count"] = outcome.records.size();
  j["trace_count"] = outcome.traces.size();
  return j.dump(2) + "\n";
}

std::vector<std::string> dump_channels(const ExperimentConfig& config,
                                       const std::string& out_dir) {
  validate(config);
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " +
                             dir.string() + ": " + ec.message());

  std::vector<int> dest_counts;
  if (config.axis == SweepAxis::kDestCount)
    dest_counts = config.dest_counts;
  else
    dest_counts = {config.geometry.dest_count};

  std::vector<std::string> paths;
  for (int m : dest_counts)
    for (std::uint64_t s : config.seeds) {
      scenario::Geometry g = config.geometry;
      g.dest_count = m;
      const auto ch = scenario::generate(g, s, config.noise_dbm);
      char name[64];
      std::snprintf(name, sizeof name, "channels_M%d_seed%llu.csv", m,
                    static_cast<unsigned long long>(s));
      const fs::path p = dir / name;
      std::ostringstream os;
      scenario::write_channel_csv(ch, os);
      write_file_or_throw(p, os.str());
      paths.push_back(p.string());
    }
  return paths;
}

}  // namespace relaybf::harness
