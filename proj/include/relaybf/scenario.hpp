#pragma once
// Network geometry and random channel generation.
//
// Layout: the source sits at the origin; relays are placed at equidistant
// angles on a circle around it; destinations are drawn uniformly in angle and
// in radius within an annulus.  All distances are 3D (the three node classes
// have different heights).
//
// Links: every link uses the distance-based pathloss 34.53 + 38 log10(d/1m)
// dB and unit-variance Rayleigh (circularly symmetric complex normal) fading.
// Source->destination and relay->destination links additionally carry
// log-normal shadowing with 10 dB standard deviation; source->relay links do
// not.  Noise powers are equal at relays and destinations and specified in
// dBm.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "relaybf/linalg.hpp"

namespace relaybf::scenario {

struct Geometry {
  int relay_count = 10;
  int dest_count = 10;
  double relay_radius_m = 250.0;
  double dest_radius_min_m = 600.0;
  double dest_radius_max_m = 800.0;
  double source_height_m = 10.0;
  double relay_height_m = 5.0;
  double dest_height_m = 1.5;
  double carrier_hz = 1.8e9;  // informational; pathloss model already fixes it
};

struct ChannelRealization {
  Geometry geometry;
  std::uint64_t seed = 0;
  std::vector<std::array<double, 3>> relay_pos;  // size R
  std::vector<std::array<double, 3>> dest_pos;   // size M
  linalg::CVec f;                     // source->relay, size R
  std::vector<linalg::CVec> g;        // g[m][r]: relay r -> destination m
  linalg::CVec d;                     // source->destination, size M
  double sigma_nu_sq_w = 0.0;         // destination noise power [W]
  double sigma_eta_sq_w = 0.0;        // relay noise power [W]
};

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

// Distance-based pathloss in dB; d must be positive.
double pathloss_db(double distance_m);

// Deterministic generation: the realization is a pure function of
// (geometry, seed, noise_dbm).
ChannelRealization generate(const Geometry& geometry, std::uint64_t seed,
                            double noise_dbm = -132.0);

// Debug dump, one row per channel coefficient:
// link,dest_index,relay_index,real,imag  (unused index = -1).
void write_channel_csv(const ChannelRealization& ch, std::ostream& os);

}  // namespace relaybf::scenario
