#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "relaybf/scenario.hpp"

using namespace relaybf;
using namespace relaybf::scenario;

TEST_CASE("pathloss matches the analytic law") {
  CHECK(pathloss_db(1.0) == doctest::Approx(34.53));
  // +38 dB per decade of distance.
  CHECK(pathloss_db(100.0) - pathloss_db(10.0) == doctest::Approx(38.0));
  CHECK(pathloss_db(250.0) == doctest::Approx(34.53 + 38.0 * std::log10(250.0)));
  CHECK_THROWS_AS(pathloss_db(0.0), std::invalid_argument);
  CHECK_THROWS_AS(pathloss_db(-5.0), std::invalid_argument);
}

TEST_CASE("dBm/watt conversions") {
  CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
  CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3));
  CHECK(dbm_to_watt(-132.0) == doctest::Approx(std::pow(10.0, -16.2)));
  CHECK(watt_to_dbm(dbm_to_watt(5.0)) == doctest::Approx(5.0));
}

TEST_CASE("generation is deterministic in the seed") {
  Geometry geo;
  geo.relay_count = 4;
  geo.dest_count = 3;
  auto a = generate(geo, 42);
  auto b = generate(geo, 42);
  auto c = generate(geo, 43);
  CHECK(a.f == b.f);
  CHECK(a.d == b.d);
  CHECK(a.g == b.g);
  CHECK(a.dest_pos == b.dest_pos);
  CHECK(a.f != c.f);
  CHECK(a.d != c.d);
  CHECK(a.dest_pos != c.dest_pos);
}

TEST_CASE("relay and destination geometry") {
  Geometry geo;
  geo.relay_count = 10;
  geo.dest_count = 50;
  auto ch = generate(geo, 7);
  for (const auto& p : ch.relay_pos) {
    CHECK(std::hypot(p[0], p[1]) == doctest::Approx(250.0).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(5.0));
  }
  // Equidistant angles: consecutive angular gaps all equal 2*pi/R.
  for (int r = 0; r < 10; ++r) {
    double a0 = std::atan2(ch.relay_pos[r][1], ch.relay_pos[r][0]);
    double a1 = std::atan2(ch.relay_pos[(r + 1) % 10][1], ch.relay_pos[(r + 1) % 10][0]);
    double gap = a1 - a0;
    while (gap <= 0) gap += 2 * M_PI;
    CHECK(gap == doctest::Approx(2 * M_PI / 10).epsilon(1e-9));
  }
  for (const auto& p : ch.dest_pos) {
    double rad = std::hypot(p[0], p[1]);
    CHECK(rad >= 600.0);
    CHECK(rad <= 800.0);
    CHECK(p[2] == doctest::Approx(1.5));
  }
  CHECK(ch.sigma_nu_sq_w == doctest::Approx(std::pow(10.0, -16.2)));
  CHECK(ch.sigma_eta_sq_w == ch.sigma_nu_sq_w);
}

TEST_CASE("unshadowed source->relay links have mean square equal to pathloss gain") {
  // One relay pinned at a known distance; average |f|^2 over many seeds.
  Geometry geo;
  geo.relay_count = 1;
  geo.dest_count = 1;
  const int n = 100000;
  double acc = 0.0;
  double expected = 0.0;
  for (int s = 0; s < n; ++s) {
    auto ch = generate(geo, 1000000 + s);
    if (s == 0) {
      double dx = ch.relay_pos[0][0], dy = ch.relay_pos[0][1],
             dz = ch.relay_pos[0][2] - geo.source_height_m;
      double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
      expected = std::pow(10.0, -pathloss_db(dist) / 10.0);
    }
    acc += std::norm(ch.f[0]);
  }
  acc /= n;
  // Exponential |f|^2 has unit relative variance: 1e5 samples -> ~0.3% SE.
  CHECK(acc / expected == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("shadowed destination links: log-domain mean and variance") {
  // ln|d|^2 = ln(plgain) + ln(shadow) + ln|h|^2 with
  //   ln(shadow) ~ N(0, ln(10)^2)   (10 dB standard deviation)
  //   ln|h|^2 for unit exponential: mean -gamma, variance pi^2/6.
  Geometry geo;
  geo.relay_count = 1;
  geo.dest_count = 1;
  geo.dest_radius_min_m = 700.0;  // pin the distance distribution tight
  geo.dest_radius_max_m = 700.0;
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n; ++s) {
    auto ch = generate(geo, 5000000 + s);
    double dx = ch.dest_pos[0][0], dy = ch.dest_pos[0][1],
           dz = ch.dest_pos[0][2] - geo.source_height_m;
    double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
    double plgain = std::pow(10.0, -pathloss_db(dist) / 10.0);
    double v = std::log(std::norm(ch.d[0]) / plgain);
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  const double gamma_euler = 0.57721566490153286;
  double expected_var = std::log(10.0) * std::log(10.0) + M_PI * M_PI / 6.0;
  CHECK(mean == doctest::Approx(-gamma_euler).epsilon(0.05));
  CHECK(var == doctest::Approx(expected_var).epsilon(0.05));
}

TEST_CASE("channel CSV dump has one row per coefficient") {
  Geometry geo;
  geo.relay_count = 3;
  geo.dest_count = 2;
  auto ch = generate(geo, 11);
  std::ostringstream os;
  write_channel_csv(ch, os);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  std::getline(is, line);
  CHECK(line == "link,dest_index,relay_index,real,imag");
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3 + 2 * 3 + 2);
}
