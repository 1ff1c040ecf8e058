#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "relaybf/cccp.hpp"
#include "relaybf/harness.hpp"
#include "relaybf/model.hpp"

using namespace relaybf;
namespace fs = std::filesystem;
using harness::Method;
using harness::SweepAxis;

namespace {

harness::ExperimentConfig tiny_config() {
  auto c = harness::preset(harness::Profile::kSmoke);
  c.geometry.relay_count = 3;
  c.geometry.dest_count = 2;
  c.methods = {Method::kR2Cccp, Method::kR1Cccp, Method::kSdrBound,
               Method::kDsd};
  c.axis = SweepAxis::kTotalPower;
  c.p_t_dbm = {10.0};
  c.seeds = {1, 2};
  c.options.n_starts = 2;
  c.options.max_iter = 8;
  c.options.eps_bis = 5e-2;
  c.options.grid_size = 8;
  c.options.n_candidates = 20;
  return c;
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "relaybf_harness" / leaf;
  fs::remove_all(dir);
  return dir;
}

const harness::ResultRecord& find_record(
    const std::vector<harness::ResultRecord>& rs, const std::string& method,
    std::uint64_t seed, double value) {
  for (const auto& r : rs)
    if (r.method == method && r.seed == seed && r.sweep_value == value)
      return r;
  REQUIRE_MESSAGE(false, "record not found: " << method << " seed " << seed);
  static harness::ResultRecord dummy;
  return dummy;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  return lines;
}

// Records CSV with the runtime column (index 6) blanked, for comparisons
// that must ignore wall-clock noise.
std::string records_csv_sans_runtime(
    const std::vector<harness::ResultRecord>& rs) {
  std::ostringstream os;
  harness::write_records_csv(os, rs);
  std::istringstream is(os.str());
  std::string line, out;
  while (std::getline(is, line)) {
    std::string rebuilt;
    std::size_t field = 0, start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i < line.size() && line[i] == '"') quoted = !quoted;
      if (i == line.size() || (line[i] == ',' && !quoted)) {
        if (field != 6) rebuilt += line.substr(start, i - start);
        rebuilt += i == line.size() ? "" : ",";
        ++field;
        start = i + 1;
      }
    }
    out += rebuilt + "\n";
  }
  return out;
}

void expect_config_error(const std::string& text, const std::string& needle) {
  try {
    (void)harness::config_from_json(text,
                                    harness::preset(harness::Profile::kSmoke));
    FAIL_CHECK("no exception for " << text);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK_MESSAGE(msg.find(needle) != std::string::npos,
                  "message '" << msg << "' lacks '" << needle << "'");
  }
}

void expect_validate_error(const harness::ExperimentConfig& c,
                           const std::string& needle) {
  try {
    harness::validate(c);
    FAIL_CHECK("validate accepted a config that should fail: " << needle);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK_MESSAGE(msg.find(needle) != std::string::npos,
                  "message '" << msg << "' lacks '" << needle << "'");
  }
}

}  // namespace

TEST_CASE("names and parsing round trip") {
  const Method methods[] = {Method::kR2Cccp, Method::kR1Cccp, Method::kR2Sdr,
                            Method::kR1Sdr,  Method::kSdrBound, Method::kDsd};
  std::vector<std::string> names;
  for (Method m : methods) {
    const std::string n = harness::method_name(m);
    names.push_back(n);
    const auto back = harness::parse_method(n);
    REQUIRE(back.has_value());
    CHECK(*back == m);
    CHECK(harness::method_is_relay(m) == (m != Method::kDsd));
  }
  std::sort(names.begin(), names.end());
  CHECK(std::unique(names.begin(), names.end()) == names.end());
  CHECK(!harness::parse_method("R3-CCCP").has_value());

  for (SweepAxis a : {SweepAxis::kTotalPower, SweepAxis::kDestCount,
                      SweepAxis::kIterations}) {
    const auto back = harness::parse_axis(harness::axis_name(a));
    REQUIRE(back.has_value());
    CHECK(*back == a);
  }
  CHECK(!harness::parse_axis("frequency").has_value());

  CHECK(harness::parse_profile("smoke") == harness::Profile::kSmoke);
  CHECK(harness::parse_profile("desk") == harness::Profile::kDesk);
  CHECK(harness::parse_profile("full") == harness::Profile::kFull);
  CHECK(!harness::parse_profile("prod").has_value());
}

TEST_CASE("rate accounting uses the slot counts") {
  // Relay schemes deliver a symbol every two slots, the direct baseline
  // every slot.
  CHECK(harness::rate_bits(Method::kR2Cccp, 3.0) == doctest::Approx(1.0));
  CHECK(harness::rate_bits(Method::kR1Sdr, 3.0) == doctest::Approx(1.0));
  CHECK(harness::rate_bits(Method::kDsd, 3.0) == doctest::Approx(2.0));
  CHECK(harness::rate_bits(Method::kR2Cccp, 0.0) == 0.0);
  CHECK(harness::rate_bits(Method::kDsd, -0.5) == 0.0);  // clamped
}

TEST_CASE("direct transmission follows the closed form") {
  const auto ch = testhelp::synthetic_channels(3, 3, 5);
  const auto p = model::build(ch);
  const auto budget = model::PowerBudget::from_total_w(8.0);

  const auto dsd = harness::run_dsd(p, budget);
  // Source limit 4 W is the binding window; four slots share it.
  CHECK(dsd.slot_power_w == doctest::Approx(1.0));
  double expect = std::numeric_limits<double>::infinity();
  int arg = -1;
  for (int m = 0; m < p.dest_count; ++m) {
    const double s = dsd.slot_power_w * p.d_abs_sq[m] / p.sigma_nu_sq;
    if (s < expect) {
      expect = s;
      arg = m;
    }
  }
  CHECK(dsd.min_snr == doctest::Approx(expect).epsilon(1e-15));
  CHECK(dsd.argmin == arg);

  // Doubling the budget doubles every per-slot SNR exactly.
  const auto dsd2 =
      harness::run_dsd(p, model::PowerBudget::from_total_w(16.0));
  CHECK(dsd2.min_snr == 2.0 * dsd.min_snr);
  CHECK(dsd2.argmin == dsd.argmin);

  // Cross-check against the full equivalent-channel model: silent relays
  // and a matched per-slot source power reduce it to the same number.
  const auto p1 = model::build(testhelp::synthetic_channels(3, 1, 9));
  const auto d1 = harness::run_dsd(p1, budget);
  const linalg::CVec w0(2 * (3 + 1), linalg::cx{0.0, 0.0});
  CHECK(model::snr(p1, w0, 1.0 / d1.slot_power_w, 0) ==
        doctest::Approx(d1.min_snr).epsilon(1e-12));

  model::PowerBudget relay_only;
  relay_only.relay_sum_w = 1.0;
  relay_only.per_relay_w = 0.5;
  CHECK_THROWS_AS((void)harness::run_dsd(p, relay_only),
                  std::invalid_argument);
  auto dead = p;
  dead.sigma_nu_sq = 0.0;
  CHECK_THROWS_AS((void)harness::run_dsd(dead, budget), std::domain_error);
}

TEST_CASE("config json round trips and overlays") {
  const auto smoke = harness::preset(harness::Profile::kSmoke);
  const std::string text = harness::config_to_json(smoke);

  // A full dump overlaid onto a different profile reproduces the original.
  const auto back =
      harness::config_from_json(text, harness::preset(harness::Profile::kDesk));
  CHECK(harness::config_to_json(back) == text);
  CHECK(harness::config_hash(back) == harness::config_hash(smoke));

  // A partial file tweaks only the named fields.
  const auto tweaked = harness::config_from_json(
      R"({"options":{"n_starts":7},"seeds":[42],"out_dir":"elsewhere"})",
      smoke);
  CHECK(tweaked.options.n_starts == 7);
  CHECK(tweaked.options.max_iter == smoke.options.max_iter);
  CHECK(tweaked.seeds == std::vector<std::uint64_t>{42});
  CHECK(tweaked.out_dir == "elsewhere");
  CHECK(tweaked.geometry.relay_count == smoke.geometry.relay_count);
  CHECK(tweaked.p_t_dbm == smoke.p_t_dbm);

  const auto geo = harness::config_from_json(
      R"({"geometry":{"relays":6,"dest_radius_max_m":900.0}})", smoke);
  CHECK(geo.geometry.relay_count == 6);
  CHECK(geo.geometry.dest_radius_max_m == 900.0);
  CHECK(geo.geometry.dest_count == smoke.geometry.dest_count);

  const auto swept = harness::config_from_json(
      R"({"sweep":{"axis":"destinations","dest_counts":[4,8],"p_t_dbm":[12.0]}})",
      smoke);
  CHECK(swept.axis == SweepAxis::kDestCount);
  CHECK(swept.dest_counts == std::vector<int>{4, 8});
  CHECK(swept.p_t_dbm == std::vector<double>{12.0});

  const auto meth = harness::config_from_json(
      R"({"methods":["DSD","SDR2D-UB"]})", smoke);
  REQUIRE(meth.methods.size() == 2);
  CHECK(meth.methods[0] == Method::kDsd);
  CHECK(meth.methods[1] == Method::kSdrBound);

  expect_config_error(R"({"bogus":1})", "bogus");
  expect_config_error(R"({"geometry":{"bogus":1}})", "geometry.bogus");
  expect_config_error(R"({"options":{"grid":3}})", "options.grid");
  expect_config_error(R"({"noise_dbm":"loud"})", "noise_dbm");
  expect_config_error(R"({"geometry":{"relays":2.5}})", "integer");
  expect_config_error(R"({"methods":["R3-CCCP"]})", "unknown method");
  expect_config_error(R"({"sweep":{"axis":"frequency"}})", "axis");
  expect_config_error(R"({"seeds":[-1]})", "seeds");
  expect_config_error(R"({"seeds":1})", "array");
  expect_config_error("[1,2]", "object");
  expect_config_error("{not json", "config:");  // parse diagnostics
}

TEST_CASE("validate names the offending field") {
  auto base = harness::preset(harness::Profile::kSmoke);
  harness::validate(base);  // presets are valid
  harness::validate(harness::preset(harness::Profile::kDesk));
  harness::validate(harness::preset(harness::Profile::kFull));

  auto c = base;
  c.methods.clear();
  expect_validate_error(c, "methods");

  c = base;
  c.seeds.clear();
  expect_validate_error(c, "seeds");

  c = base;
  c.axis = SweepAxis::kDestCount;
  c.dest_counts = {4};
  c.p_t_dbm.clear();
  expect_validate_error(c, "p_t_dbm");

  c = base;
  c.p_t_dbm.clear();  // allowed on the total-power axis: empty table
  harness::validate(c);

  c = base;
  c.options.grid_size = 0;
  expect_validate_error(c, "options.grid_size");

  c = base;
  c.geometry.relay_radius_m = -1.0;
  expect_validate_error(c, "geometry.relay_radius_m");

  c = base;
  c.source_ratio = 0.0;
  expect_validate_error(c, "source_ratio");

  c = base;
  c.out_dir.clear();
  expect_validate_error(c, "out_dir");
}

TEST_CASE("config hash is stable and sensitive") {
  const auto a = harness::preset(harness::Profile::kSmoke);
  auto b = a;
  CHECK(harness::config_hash(a) == harness::config_hash(b));
  b.noise_dbm = -131.0;
  CHECK(harness::config_hash(a) != harness::config_hash(b));
  b = a;
  b.seeds.push_back(99);
  CHECK(harness::config_hash(a) != harness::config_hash(b));
}

TEST_CASE("harness start loop matches the library multistart") {
  const auto ch = testhelp::synthetic_channels(4, 3, 71, 0.5);
  const auto p = model::build(ch);
  const auto budget = model::PowerBudget::from_total_w(10.0);

  harness::MethodOptions mo;
  mo.n_starts = 4;
  mo.max_iter = 20;
  const auto mr = harness::run_method(Method::kR1Cccp, p, budget, 5, mo);

  cccp::Options co;
  co.max_iter = 20;
  co.rank_one = true;
  const auto ms = cccp::multistart(p, budget, 4, 5, co);

  REQUIRE(mr.status == "ok");
  CHECK(mr.min_snr == ms.min_snr);  // bitwise: same streams, same tie rule
  CHECK(mr.iterations == ms.iterations);
  REQUIRE(mr.solution.w.size() == ms.solution.w.size());
  for (std::size_t i = 0; i < mr.solution.w.size(); ++i)
    CHECK(mr.solution.w[i] == ms.solution.w[i]);
  CHECK(mr.solution.a == ms.solution.a);
}

TEST_CASE("two substream results dominate their single substream ones") {
  harness::MethodOptions mo;
  mo.n_starts = 3;
  mo.max_iter = 15;
  const auto budget = model::PowerBudget::from_total_w(10.0);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto p =
        model::build(testhelp::synthetic_channels(4, 3, 70 + seed));
    const auto r1 = harness::run_method(Method::kR1Cccp, p, budget, seed, mo);
    const auto r2 = harness::run_method(Method::kR2Cccp, p, budget, seed, mo);
    REQUIRE(r1.min_snr > 0.0);
    REQUIRE(r2.min_snr > 0.0);
    // Structural: the R2 record keeps a monotone descent warm-started at
    // the R1 optimum, so it can never land below it.
    CHECK(r2.min_snr >= r1.min_snr * (1.0 - 1e-12));
  }
}

TEST_CASE("sweep emits one record per cell with the ordering invariant") {
  auto cfg = tiny_config();
  const fs::path dir = fresh_dir("sweep_order");
  cfg.out_dir = dir.string();

  const auto outcome = harness::sweep(cfg, 1);
  REQUIRE(outcome.records.size() == 4 * 1 * 2);

  // Deterministic merge order: methods outermost, then values, then seeds.
  CHECK(outcome.records[0].method == "R2-CCCP");
  CHECK(outcome.records[0].seed == 1);
  CHECK(outcome.records[1].seed == 2);
  CHECK(outcome.records[2].method == "R1-CCCP");

  for (std::uint64_t seed : {1ull, 2ull}) {
    const auto& ub = find_record(outcome.records, "SDR2D-UB", seed, 10.0);
    const auto& r2 = find_record(outcome.records, "R2-CCCP", seed, 10.0);
    const auto& r1 = find_record(outcome.records, "R1-CCCP", seed, 10.0);
    const auto& dsd = find_record(outcome.records, "DSD", seed, 10.0);
    for (const auto* r : {&ub, &r2, &r1}) {
      CHECK_MESSAGE((r->status == "ok" || r->status == "iteration_limit"),
                    r->method << " status " << r->status);
      REQUIRE(std::isfinite(r->min_snr_db));
    }
    CHECK(dsd.status == "ok");
    CHECK(dsd.rank == -1);

    // Achievability ordering.  The bound's bisection stops at relative
    // precision eps_bis, so grant it that slack in dB.
    const double slack_db = 10.0 * std::log10(1.0 + 2.0 * cfg.options.eps_bis);
    CHECK(r2.min_snr_db >= r1.min_snr_db - 1e-9);
    CHECK(ub.min_snr_db >= r2.min_snr_db - slack_db);

    // Rate column carries the per-method slot prefactor.
    for (const auto* r : {&ub, &r2, &r1, &dsd}) {
      const double snr = std::pow(10.0, r->min_snr_db / 10.0);
      const double slots = r->method == "DSD" ? 1.0 : 0.5;
      CHECK(r->rate ==
            doctest::Approx(slots * std::log2(1.0 + snr)).epsilon(1e-9));
    }
    CHECK(ub.rank >= 1);
    CHECK(r2.iterations >= 1);
    CHECK(r2.runtime_s >= 0.0);
  }

  // Emitted files: records + manifest, no traces on this axis.
  CHECK(outcome.traces.empty());
  CHECK(outcome.traces_path.empty());
  CHECK(!fs::exists(dir / "traces.csv"));
  const auto lines = read_lines(dir / "records.csv");
  REQUIRE(lines.size() == 1 + outcome.records.size());
  CHECK(lines[0] ==
        "method,seed,sweep_axis,sweep_value,min_snr_db,rate_bits_per_slot_hz,"
        "runtime_s,iterations,rank,status");

  const auto manifest_lines = read_lines(dir / "manifest.json");
  std::string manifest_text;
  for (const auto& l : manifest_lines) manifest_text += l + "\n";
  const auto m = nlohmann::json::parse(manifest_text);
  CHECK(m.at("schema") == 1);
  CHECK(m.at("record_count") == outcome.records.size());
  CHECK(m.at("trace_count") == 0);
  CHECK(m.at("outputs").at("records") == "records.csv");
  CHECK(m.at("outputs").at("traces").is_null());
  char expect_hash[32];
  std::snprintf(expect_hash, sizeof expect_hash, "%016llx",
                static_cast<unsigned long long>(harness::config_hash(cfg)));
  CHECK(m.at("config_hash") == expect_hash);
  // The config echo parses back to the same canonical form.
  const auto echoed = harness::config_from_json(
      m.at("config").dump(), harness::preset(harness::Profile::kDesk));
  CHECK(harness::config_to_json(echoed) == harness::config_to_json(cfg));
}

TEST_CASE("sweep results are reproducible and job count independent") {
  auto cfg = tiny_config();
  cfg.methods = {Method::kR1Cccp, Method::kDsd};

  const auto o1 = harness::sweep(cfg, 1, /*write_files=*/false);
  const auto o2 = harness::sweep(cfg, 3, /*write_files=*/false);
  const auto o3 = harness::sweep(cfg, 1, /*write_files=*/false);
  REQUIRE(o1.records.size() == 4);
  CHECK(o1.records_path.empty());

  const std::string a = records_csv_sans_runtime(o1.records);
  CHECK(a == records_csv_sans_runtime(o2.records));
  CHECK(a == records_csv_sans_runtime(o3.records));
  // Spot-check the strongest form: bitwise equal optima across job counts.
  for (std::size_t i = 0; i < o1.records.size(); ++i) {
    CHECK(o1.records[i].min_snr_db == o2.records[i].min_snr_db);
    CHECK(o1.records[i].iterations == o2.records[i].iterations);
  }
}

TEST_CASE("empty sweep values produce an empty table") {
  auto cfg = tiny_config();
  cfg.p_t_dbm.clear();
  const fs::path dir = fresh_dir("sweep_empty");
  cfg.out_dir = dir.string();

  const auto outcome = harness::sweep(cfg, 2);
  CHECK(outcome.records.empty());
  CHECK(outcome.traces.empty());
  const auto lines = read_lines(dir / "records.csv");
  REQUIRE(lines.size() == 1);  // header only
  const auto manifest = read_lines(dir / "manifest.json");
  CHECK(!manifest.empty());
}

TEST_CASE("iteration traces track the start envelope and the bound") {
  auto cfg = tiny_config();
  cfg.methods = {Method::kR2Cccp, Method::kSdrBound};
  cfg.axis = SweepAxis::kIterations;
  cfg.seeds = {1};
  cfg.trace_iterations = 6;
  const fs::path dir = fresh_dir("sweep_traces");
  cfg.out_dir = dir.string();

  const auto outcome = harness::sweep(cfg, 1);
  REQUIRE(outcome.records.size() == 2);
  const auto& rec = find_record(outcome.records, "R2-CCCP", 1, 10.0);
  const auto& ub = find_record(outcome.records, "SDR2D-UB", 1, 10.0);
  REQUIRE(rec.status != "init_failed");

  // One row per iteration 0..trace_iterations for the iterative method only.
  REQUIRE(outcome.traces.size() == 7);
  for (int k = 0; k < 7; ++k) {
    const auto& row = outcome.traces[static_cast<std::size_t>(k)];
    CHECK(row.method == "R2-CCCP");
    CHECK(row.seed == 1);
    CHECK(row.iteration == k);
    CHECK(row.best_db >= row.worst_db);
    if (k > 0) {
      // Envelope of monotone runs (with last-value extension) is monotone.
      CHECK(row.best_db >=
            outcome.traces[static_cast<std::size_t>(k - 1)].best_db - 1e-12);
      CHECK(row.worst_db >=
            outcome.traces[static_cast<std::size_t>(k - 1)].worst_db - 1e-12);
    }
    CHECK(row.bound_db == ub.min_snr_db);
  }
  // The record may beat the trace envelope (warm-started descent runs past
  // the plotted starts), never the other way around.
  CHECK(outcome.traces.back().best_db <= rec.min_snr_db + 1e-9);

  const auto lines = read_lines(dir / "traces.csv");
  REQUIRE(lines.size() == 1 + outcome.traces.size());
  CHECK(lines[0] ==
        "method,seed,iteration,best_min_snr_db,worst_min_snr_db,bound_db");
  const auto manifest = read_lines(dir / "manifest.json");
  std::string text;
  for (const auto& l : manifest) text += l + "\n";
  const auto m = nlohmann::json::parse(text);
  CHECK(m.at("trace_count") == outcome.traces.size());
  CHECK(m.at("outputs").at("traces") == "traces.csv");
}

TEST_CASE("csv emission formats the documented columns") {
  std::vector<harness::ResultRecord> recs(2);
  recs[0].method = "R2-CCCP";
  recs[0].seed = 7;
  recs[0].sweep_axis = "total_power";
  recs[0].sweep_value = 16.0;
  recs[0].min_snr_db = 8.5;
  recs[0].rate = 1.25;
  recs[0].runtime_s = 0.125;
  recs[0].iterations = 12;
  recs[0].rank = 2;
  recs[0].status = "ok";
  recs[1].method = "SDR2D-UB";
  recs[1].seed = 8;
  recs[1].sweep_axis = "total_power";
  recs[1].sweep_value = 16.0;
  recs[1].min_snr_db = std::numeric_limits<double>::quiet_NaN();
  recs[1].rate = 0.0;
  recs[1].runtime_s = 2.0;
  recs[1].iterations = 80;
  recs[1].rank = -1;
  recs[1].status = "error: solver blew up, badly";

  std::ostringstream os;
  harness::write_records_csv(os, recs);
  std::istringstream is(os.str());
  std::string header, l1, l2;
  std::getline(is, header);
  std::getline(is, l1);
  std::getline(is, l2);
  CHECK(l1 == "R2-CCCP,7,total_power,16,8.5,1.25,0.125000,12,2,ok");
  // NaN min-SNR and rank -1 render empty; a status containing a comma is
  // quoted.
  CHECK(l2 ==
        "SDR2D-UB,8,total_power,16,,0,2.000000,80,,"
        "\"error: solver blew up, badly\"");

  std::vector<harness::TraceRow> rows(1);
  rows[0].method = "R1-CCCP";
  rows[0].seed = 3;
  rows[0].iteration = 2;
  rows[0].best_db = 5.0;
  rows[0].worst_db = 4.5;
  rows[0].bound_db = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream ts;
  harness::write_traces_csv(ts, rows);
  std::istringstream tis(ts.str());
  std::string th, t1;
  std::getline(tis, th);
  std::getline(tis, t1);
  CHECK(t1 == "R1-CCCP,3,2,5,4.5,");
}

TEST_CASE("channel dumps cover the configured cells") {
  auto cfg = tiny_config();
  cfg.axis = SweepAxis::kDestCount;
  cfg.dest_counts = {2, 3};
  cfg.seeds = {1, 2};
  const fs::path dir = fresh_dir("channel_dump");

  const auto paths = harness::dump_channels(cfg, dir.string());
  REQUIRE(paths.size() == 4);
  bool saw = false;
  for (const auto& p : paths) {
    CHECK(fs::exists(p));
    CHECK(read_lines(p).size() >= 2);  // header + at least one coefficient
    saw = saw || p.find("channels_M2_seed1") != std::string::npos;
  }
  CHECK(saw);
}

TEST_CASE("budget split follows the configured ratios") {
  const auto cfg = harness::preset(harness::Profile::kSmoke);
  const auto b = harness::budget_for(cfg, 10.0);  // 10 dBm = 10 mW
  REQUIRE(b.total_w.has_value());
  CHECK(*b.total_w == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(*b.source_w == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(*b.relay_sum_w == doctest::Approx(0.01 / 3.0).epsilon(1e-12));
  CHECK(*b.per_relay_w == doctest::Approx(0.01 / 15.0).epsilon(1e-12));

  // Matches the library's standard split used everywhere else.
  const auto lib = model::PowerBudget::from_total_w(0.01);
  CHECK(*b.source_w == doctest::Approx(*lib.source_w));
  CHECK(*b.relay_sum_w == doctest::Approx(*lib.relay_sum_w));
  CHECK(*b.per_relay_w == doctest::Approx(*lib.per_relay_w));
}
