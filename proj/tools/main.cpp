// Command-line front end for the beamformer design library.
//
//   relaybf generate  dump the channel realizations of a config as CSV
//   relaybf solve     design one instance with one method, print a summary
//   relaybf sweep     run a full experiment, emit records/traces/manifest
//   relaybf verify    run the built-in self checks (PASS/FAIL per check)
//
// Every verb starts from a --profile preset (smoke, desk, full), optionally
// overlays a --config JSON file on top of it, and accepts --seed (replaces
// the seed list) and --out (replaces the output directory).

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "relaybf/harness.hpp"
#include "relaybf/model.hpp"
#include "relaybf/scenario.hpp"
#include "relaybf/verification.hpp"

namespace {

using relaybf::harness::ExperimentConfig;
using relaybf::harness::Method;
using relaybf::harness::SweepAxis;
namespace harness = relaybf::harness;
namespace model = relaybf::model;
namespace scenario = relaybf::scenario;

struct CommonArgs {
  std::string profile = "smoke";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_jobs) {
  cmd->add_option("--profile", args.profile,
                  "base preset: smoke, desk or full")
      ->default_val("smoke");
  cmd->add_option("--config", args.config_path,
                  "JSON file overlaid onto the preset");
  cmd->add_option("--seed", args.seed,
                  "replace the config's seed list with this one seed");
  cmd->add_option("--out", args.out_dir, "output directory override");
  if (with_jobs)
    cmd->add_option("--jobs", args.jobs, "worker threads")
        ->check(CLI::PositiveNumber);
}

ExperimentConfig load_config(const CommonArgs& args) {
  const auto prof = harness::parse_profile(args.profile);
  if (!prof)
    throw std::invalid_argument("unknown profile '" + args.profile +
                                "' (expected smoke, desk or full)");
  ExperimentConfig cfg = harness::preset(*prof);
  if (!args.config_path.empty()) {
    std::ifstream is(args.config_path);
    if (!is)
      throw std::runtime_error("cannot read config file " + args.config_path);
    std::ostringstream ss;
    ss << is.rdbuf();
    cfg = harness::config_from_json(ss.str(), cfg);
  }
  if (args.seed) cfg.seeds = {*args.seed};
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  harness::validate(cfg);
  return cfg;
}

double to_db(double x) { return 10.0 * std::log10(x); }

int run_generate(const CommonArgs& args) {
  const auto cfg = load_config(args);
  const auto paths = harness::dump_channels(cfg, cfg.out_dir);
  for (const auto& p : paths) std::printf("wrote %s\n", p.c_str());
  std::printf("%zu channel file(s) in %s\n", paths.size(),
              cfg.out_dir.c_str());
  return 0;
}

int run_solve(const CommonArgs& args, const std::string& method_name) {
  const auto cfg = load_config(args);
  const auto method = harness::parse_method(method_name);
  if (!method)
    throw std::invalid_argument("unknown method '" + method_name + "'");

  if (cfg.p_t_dbm.empty())
    throw std::invalid_argument(
        "config has no operating power (sweep.p_t_dbm is empty)");
  const double p_dbm = cfg.p_t_dbm.front();
  scenario::Geometry geom = cfg.geometry;
  if (cfg.axis == SweepAxis::kDestCount && !cfg.dest_counts.empty())
    geom.dest_count = cfg.dest_counts.front();
  const std::uint64_t seed = cfg.seeds.front();

  const auto ch = scenario::generate(geom, seed, cfg.noise_dbm);
  const auto p = model::build(ch);
  const auto budget = harness::budget_for(cfg, p_dbm);
  const auto res =
      harness::run_method(*method, p, budget, seed, cfg.options);

  std::printf("method %s, seed %llu, relays %d, destinations %d, "
              "total power %.1f dBm\n",
              harness::method_name(*method),
              static_cast<unsigned long long>(seed), geom.relay_count,
              geom.dest_count, p_dbm);
  if (res.min_snr > 0.0) {
    std::printf("status %s, min-SNR %.3f dB, rate %.3f bits/slot/Hz, "
                "iterations %d%s\n",
                res.status.c_str(), to_db(res.min_snr),
                harness::rate_bits(*method, res.min_snr), res.iterations,
                res.rank >= 0
                    ? (", relaxation rank " + std::to_string(res.rank)).c_str()
                    : "");
  } else {
    std::printf("status %s (no positive-SNR design)\n", res.status.c_str());
    return 1;
  }

  if (!res.solution.w.empty()) {
    for (int m = 0; m < p.dest_count; ++m)
      std::printf("  destination %d: SNR %.3f dB\n", m,
                  to_db(model::snr(p, res.solution.w, res.solution.a, m)));
    std::filesystem::create_directories(cfg.out_dir);
    const auto path =
        (std::filesystem::path(cfg.out_dir) / "solution.csv").string();
    std::ofstream os(path, std::ios::trunc);
    os << "element,substream,re,im\n";
    const int d = geom.relay_count + 1;
    for (int sub = 0; sub < 2; ++sub)
      for (int i = 0; i < d; ++i) {
        const auto v = res.solution.w[static_cast<std::size_t>(sub * d + i)];
        char label[24];
        if (i < geom.relay_count)
          std::snprintf(label, sizeof label, "relay%d", i);
        else
          std::snprintf(label, sizeof label, "direct");
        char line[128];
        std::snprintf(line, sizeof line, "%s,%d,%.17g,%.17g\n", label,
                      sub + 1, v.real(), v.imag());
        os << line;
      }
    char arow[64];
    std::snprintf(arow, sizeof arow, "inv_source_gain_sq,0,%.17g,0\n",
                  res.solution.a);
    os << arow;
    if (!os.good()) throw std::runtime_error("cannot write " + path);
    std::printf("weights written to %s\n", path.c_str());
  }
  return 0;
}

int run_sweep(const CommonArgs& args) {
  const auto cfg = load_config(args);
  const auto outcome = harness::sweep(cfg, args.jobs);
  int failures = 0;
  for (const auto& r : outcome.records)
    if (r.status.rfind("error:", 0) == 0) ++failures;
  std::printf("%zu record(s), %zu trace row(s), %d cell failure(s)\n",
              outcome.records.size(), outcome.traces.size(), failures);
  std::printf("records:  %s\n", outcome.records_path.c_str());
  if (!outcome.traces_path.empty())
    std::printf("traces:   %s\n", outcome.traces_path.c_str());
  std::printf("manifest: %s\n", outcome.manifest_path.c_str());
  return failures == 0 ? 0 : 1;
}

int run_verify(const CommonArgs& args) {
  const auto prof = harness::parse_profile(args.profile);
  if (!prof)
    throw std::invalid_argument("unknown profile '" + args.profile + "'");
  const auto results =
      relaybf::verification::run_all(*prof, args.seed.value_or(1));
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s  %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    failed += r.pass ? 0 : 1;
  }
  std::printf("%zu check(s), %d failure(s)\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-min SNR beamformer design for two-substream"
               " amplify-and-forward relay multicast"};
  app.require_subcommand(1);

  CommonArgs gen_args, solve_args, sweep_args, verify_args;
  std::string method = "R2-CCCP";

  auto* gen = app.add_subcommand(
      "generate", "write the channel realizations of the config as CSV");
  add_common(gen, gen_args, false);

  auto* solve = app.add_subcommand(
      "solve", "design one instance with one method and print a summary");
  add_common(solve, solve_args, false);
  solve->add_option("--method", method,
                    "R2-CCCP, R1-CCCP, R2-SDR2D, R1-SDR2D, SDR2D-UB or DSD")
      ->default_val("R2-CCCP");

  auto* sweep = app.add_subcommand(
      "sweep", "run the configured experiment and emit CSV tables");
  add_common(sweep, sweep_args, true);

  auto* verify = app.add_subcommand(
      "verify", "run the built-in self checks");
  add_common(verify, verify_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(gen_args);
    if (solve->parsed()) return run_solve(solve_args, method);
    if (sweep->parsed()) return run_sweep(sweep_args);
    if (verify->parsed()) return run_verify(verify_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "relaybf: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
