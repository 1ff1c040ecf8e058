#include "relaybf/scenario.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "relaybf/rng.hpp"

namespace relaybf::scenario {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Linear power gain of a link: pathloss plus optional log-normal shadowing
// (shadow_db drawn as N(0, 10 dB)).
double link_gain(double distance_m, double shadow_db) {
  return std::pow(10.0, -(pathloss_db(distance_m) - shadow_db) / 10.0);
}

}  // namespace

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

double pathloss_db(double distance_m) {
  if (!(distance_m > 0.0))
    throw std::invalid_argument("pathloss_db: distance must be positive");
  return 34.53 + 38.0 * std::log10(distance_m);
}

ChannelRealization generate(const Geometry& geo, std::uint64_t seed,
                            double noise_dbm) {
  if (geo.relay_count < 1 || geo.dest_count < 1)
    throw std::invalid_argument("generate: need at least one relay and one destination");
  if (!(geo.dest_radius_min_m > 0.0) ||
      !(geo.dest_radius_max_m >= geo.dest_radius_min_m) ||
      !(geo.relay_radius_m > 0.0))
    throw std::invalid_argument("generate: invalid radii");

  const int r_cnt = geo.relay_count;
  const int m_cnt = geo.dest_count;
  ChannelRealization ch;
  ch.geometry = geo;
  ch.seed = seed;
  ch.sigma_nu_sq_w = dbm_to_watt(noise_dbm);
  ch.sigma_eta_sq_w = dbm_to_watt(noise_dbm);

  const std::array<double, 3> src{0.0, 0.0, geo.source_height_m};

  ch.relay_pos.resize(r_cnt);
  for (int r = 0; r < r_cnt; ++r) {
    double ang = kTwoPi * r / r_cnt;
    ch.relay_pos[r] = {geo.relay_radius_m * std::cos(ang),
                       geo.relay_radius_m * std::sin(ang), geo.relay_height_m};
  }

  rng::Stream geom(seed, rng::kScenarioGeometry);
  ch.dest_pos.resize(m_cnt);
  for (int m = 0; m < m_cnt; ++m) {
    double ang = kTwoPi * geom.uniform(2 * static_cast<std::uint64_t>(m));
    double rad = geo.dest_radius_min_m +
                 (geo.dest_radius_max_m - geo.dest_radius_min_m) *
                     geom.uniform(2 * static_cast<std::uint64_t>(m) + 1);
    ch.dest_pos[m] = {rad * std::cos(ang), rad * std::sin(ang), geo.dest_height_m};
  }

  // Independent streams per link class; counters address individual links so
  // enlarging M or R never reshuffles existing coefficients.
  rng::Stream fade_f(seed, rng::substream(rng::kScenarioFading, 0));
  rng::Stream fade_g(seed, rng::substream(rng::kScenarioFading, 1));
  rng::Stream fade_d(seed, rng::substream(rng::kScenarioFading, 2));
  rng::Stream shad_g(seed, rng::substream(rng::kScenarioShadowing, 1));
  rng::Stream shad_d(seed, rng::substream(rng::kScenarioShadowing, 2));

  ch.f.resize(r_cnt);
  for (int r = 0; r < r_cnt; ++r) {
    double gain = link_gain(dist3(src, ch.relay_pos[r]), 0.0);
    ch.f[r] = std::sqrt(gain) * fade_f.cgaussian(r);
  }

  ch.g.assign(m_cnt, linalg::CVec(r_cnt));
  ch.d.resize(m_cnt);
  for (int m = 0; m < m_cnt; ++m) {
    for (int r = 0; r < r_cnt; ++r) {
      std::uint64_t i = static_cast<std::uint64_t>(m) * r_cnt + r;
      double shadow_db = 10.0 * shad_g.gaussian(i);
      double gain = link_gain(dist3(ch.relay_pos[r], ch.dest_pos[m]), shadow_db);
      ch.g[m][r] = std::sqrt(gain) * fade_g.cgaussian(i);
    }
    double shadow_db = 10.0 * shad_d.gaussian(m);
    double gain = link_gain(dist3(src, ch.dest_pos[m]), shadow_db);
    ch.d[m] = std::sqrt(gain) * fade_d.cgaussian(m);
  }
  return ch;
}

void write_channel_csv(const ChannelRealization& ch, std::ostream& os) {
  os << "link,dest_index,relay_index,real,imag\n";
  char buf[160];
  for (int r = 0; r < ch.geometry.relay_count; ++r) {
    std::snprintf(buf, sizeof buf, "f,-1,%d,%.17g,%.17g\n", r, ch.f[r].real(),
                  ch.f[r].imag());
    os << buf;
  }
  for (int m = 0; m < ch.geometry.dest_count; ++m)
    for (int r = 0; r < ch.geometry.relay_count; ++r) {
      std::snprintf(buf, sizeof buf, "g,%d,%d,%.17g,%.17g\n", m, r,
                    ch.g[m][r].real(), ch.g[m][r].imag());
      os << buf;
    }
  for (int m = 0; m < ch.geometry.dest_count; ++m) {
    std::snprintf(buf, sizeof buf, "d,%d,-1,%.17g,%.17g\n", m, ch.d[m].real(),
                  ch.d[m].imag());
    os << buf;
  }
}

}  // namespace relaybf::scenario
