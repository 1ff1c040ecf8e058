#pragma once
// Experiment orchestration: named design methods evaluated over seeded
// channel instances, sweep axes matching the standard evaluation protocols
// (worst-destination rate vs total power, vs destination count, and min-SNR
// vs iteration), deterministic CSV emission, and a reproducibility manifest.
//
// A sweep expands into (method, sweep value, seed) cells.  Cells are
// independent -- each regenerates its channel instance from (geometry, seed)
// -- so they can run on a work pool; records are merged in deterministic
// cell order, and re-running the same config reproduces every column except
// the measured runtime byte for byte.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relaybf/cccp.hpp"
#include "relaybf/model.hpp"
#include "relaybf/scenario.hpp"
#include "relaybf/sdr.hpp"

namespace relaybf::harness {

// ---------------------------------------------------------------------------
// Methods

// Design schemes and baselines.
//  kR2Cccp   two-substream design by the convex-concave iteration.  The
//            record keeps the better of (a) the usual multistart and (b) a
//            descent warm-started at the rank-one optimum; since a rank-one
//            solution is feasible for the two-substream problem and every
//            accepted step is monotone, this makes the R2 >= R1 ordering
//            structural instead of a race between local searches.
//  kR1Cccp   single-substream special case (second weight half pinned to 0).
//  kR2Sdr    relaxation bound + rank-two recovery (achievable design).
//  kR1Sdr    relaxation bound + rank-one recovery (achievable design).
//  kSdrBound relaxation bound only (not achievable; no recovery step).  Its
//            record carries the certified-infeasible level at the best
//            amplification -- the value the bisection proved unreachable --
//            so emitted bounds sit above achieved values by construction,
//            not merely within bisection precision of them.
//  The relaxation methods rescan the amplification grid inside the winning
//  interval until its spacing is tight (a few percent), so their values do
//  not ride on the configured grid's quantization.
//  kDsd      direct source->destination transmission; relays silent, one new
//            symbol per slot, so its rate carries no 1/2 prefactor.
enum class Method { kR2Cccp, kR1Cccp, kR2Sdr, kR1Sdr, kSdrBound, kDsd };

// Stable wire names: "R2-CCCP", "R1-CCCP", "R2-SDR2D", "R1-SDR2D",
// "SDR2D-UB", "DSD".
const char* method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
bool method_is_relay(Method m);  // false only for kDsd

// Worst-destination rate in bits/slot/Hz: relay schemes spend two slots per
// symbol (1/2 log2(1 + snr)); the direct baseline spends one (log2(1 + snr)).
double rate_bits(Method m, double snr);

// ---------------------------------------------------------------------------
// Sweep axes and profiles

enum class SweepAxis { kTotalPower, kDestCount, kIterations };
const char* axis_name(SweepAxis a);  // "total_power", "destinations",
                                     // "iterations"
std::optional<SweepAxis> parse_axis(std::string_view name);

enum class Profile { kSmoke, kDesk, kFull };
std::optional<Profile> parse_profile(std::string_view name);

// ---------------------------------------------------------------------------
// Configuration

struct MethodOptions {
  int n_starts = 10;             // iteration restarts per instance
  int max_iter = 50;             // iteration cap per start
  double rel_improve_tol = 1e-2; // iteration stopping tolerance
  double eps_bis = 1e-2;         // bisection precision (relaxation methods)
  int grid_size = 60;            // scale-grid points (relaxation methods)
  double a_span = 1e6;           // scale-grid span factor
  int n_candidates = 200;        // randomization candidates (recovery)
};

struct ExperimentConfig {
  scenario::Geometry geometry;  // dest_count is the base M; the destination
                                // sweep overrides it per point
  double noise_dbm = -132.0;

  // Power limits as fractions of the swept total P_T: source <= source_ratio
  // * P_T, summed relay <= relay_sum_ratio * P_T, each relay <=
  // per_relay_ratio * P_T, and source + relays <= P_T.
  double source_ratio = 0.5;
  double relay_sum_ratio = 1.0 / 3.0;
  double per_relay_ratio = 1.0 / 15.0;

  std::vector<Method> methods;
  SweepAxis axis = SweepAxis::kTotalPower;
  // Total-power sweep values; on the other axes p_t_dbm.front() is the fixed
  // operating point.  May be empty on the total-power axis (empty table).
  std::vector<double> p_t_dbm = {15.0};
  std::vector<int> dest_counts;  // destination-sweep values
  int trace_iterations = 10;     // iteration rows emitted in trace mode

  std::vector<std::uint64_t> seeds = {1};
  MethodOptions options;
  std::string out_dir = "out";
};

// Built-in profiles: kSmoke is a minutes-scale shakedown (R=4, M=8, 3
// seeds), kDesk the default working scale (R=10, M in {10,25,50}, 20 seeds),
// kFull the optional large run (M up to 130, 100 seeds, fine grid).
ExperimentConfig preset(Profile p);

// Throws std::invalid_argument naming the offending field.
void validate(const ExperimentConfig& c);

// Canonical JSON round-trip.  `config_from_json` overlays the fields present
// in `text` onto `base` (so a partial file tweaks a profile); unknown keys
// and type mismatches throw std::invalid_argument with the field path, parse
// errors with the byte offset.
ExperimentConfig config_from_json(const std::string& text,
                                  ExperimentConfig base);
std::string config_to_json(const ExperimentConfig& c);

// FNV-1a over the canonical JSON; stamped into the manifest so emitted
// tables can be tied back to the exact configuration.
std::uint64_t config_hash(const ExperimentConfig& c);

// Budget for one total power level, using the config's ratios.
model::PowerBudget budget_for(const ExperimentConfig& c, double p_t_dbm);

// ---------------------------------------------------------------------------
// Single-method execution

// Direct source->destination baseline: the source's four-slot window budget
// min(source limit, total limit) is spread uniformly over the slots, each
// carrying one new symbol.  Throws std::invalid_argument when the budget
// bounds neither the source nor the total power, std::domain_error when the
// noise power is zero.
struct DsdResult {
  double min_snr = 0.0;
  int argmin = -1;
  double slot_power_w = 0.0;
};
DsdResult run_dsd(const model::ProblemData& p,
                  const model::PowerBudget& budget);

struct MethodResult {
  Method method = Method::kDsd;
  double min_snr = 0.0;  // bound value for kSdrBound, achieved value else
  model::BeamformerSolution solution;  // w empty for kDsd/kSdrBound/failures
  int iterations = 0;    // accepted steps (iterative) or probes (relaxation)
  int rank = -1;         // relaxation Gram rank; -1 when not applicable
  std::string status;    // "ok", "iteration_limit", ..., "error: ..."
  std::vector<cccp::TraceEntry> trace;  // winning run (iterative methods)
  // Per-start traces (iterative methods, collect_start_traces only); entry i
  // may be empty when start i found no feasible initial point.
  std::vector<std::vector<cccp::TraceEntry>> start_traces;
};

// Runs one method on one instance.  Deterministic given (p, budget, seed,
// opts).  Never throws for solver-level failures (reported in status);
// throws only on structurally invalid input.
MethodResult run_method(Method m, const model::ProblemData& p,
                        const model::PowerBudget& budget, std::uint64_t seed,
                        const MethodOptions& opts,
                        bool collect_start_traces = false);

// ---------------------------------------------------------------------------
// Sweeps and emission

struct ResultRecord {
  std::string method;
  std::uint64_t seed = 0;
  std::string sweep_axis;
  double sweep_value = 0.0;  // dBm, destination count, or the fixed
                             // operating power (iteration mode)
  double min_snr_db = 0.0;   // NaN renders as an empty CSV field
  double rate = 0.0;         // bits/slot/Hz with the method's prefactor
  double runtime_s = 0.0;
  int iterations = 0;
  int rank = -1;  // -1 renders as an empty CSV field
  std::string status;
};

struct TraceRow {
  std::string method;
  std::uint64_t seed = 0;
  int iteration = 0;
  double best_db = 0.0;   // highest min-SNR across the starts at this
                          // iteration (runs that stopped early hold their
                          // final value)
  double worst_db = 0.0;  // lowest across the starts
  double bound_db = 0.0;  // relaxation bound for this seed; NaN when the
                          // bound method is not part of the sweep
};

struct SweepOutcome {
  std::vector<ResultRecord> records;
  std::vector<TraceRow> traces;  // non-empty only on the iteration axis
  std::string records_path;      // files written (empty when write_files
  std::string traces_path;       // is false or nothing was emitted)
  std::string manifest_path;
};

// Expands the config into cells, runs them on `jobs` worker threads, merges
// deterministically, and (when write_files) writes records.csv, traces.csv
// and manifest.json into config.out_dir.  Cell failures are recorded in the
// status column, not thrown; filesystem problems do throw
// (std::runtime_error).
SweepOutcome sweep(const ExperimentConfig& config, int jobs,
                   bool write_files = true);

void write_records_csv(std::ostream& os,
                       const std::vector<ResultRecord>& records);
void write_traces_csv(std::ostream& os, const std::vector<TraceRow>& traces);

// Deterministic manifest (schema, library version, config echo + hash,
// output names, row counts); no timestamps, so reruns reproduce it exactly.
std::string manifest_json(const ExperimentConfig& config,
                          const SweepOutcome& outcome);

// Writes one channel-coefficient CSV per (destination count, seed) cell of
// the config into out_dir; returns the file paths.
std::vector<std::string> dump_channels(const ExperimentConfig& config,
                                       const std::string& out_dir);

}  // namespace relaybf::harness
