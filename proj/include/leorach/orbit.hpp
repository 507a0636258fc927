#pragma once

#include <span>
#include <vector>

namespace leorach {

// Constellation geometry: K satellites on a circular lane of circumference
// lane_length_km, all moving at the same along-lane velocity. Positions are
// along-lane coordinates in [0, lane_length_km).
struct ConstellationConfig {
  int num_satellites = 0;
  double lane_length_km = 0.0;
  double altitude_km = 0.0;
  double orbit_velocity_kms = 0.0;   // km per second
  double slot_duration_s = 0.0;
  std::vector<double> initial_offsets_km;

  // satellites spaced k * L / K apart
  static ConstellationConfig equally_spaced(int num_satellites, double lane_length_km,
                                            double altitude_km, double orbit_velocity_kms,
                                            double slot_duration_s);

  double advance_per_slot_km() const { return orbit_velocity_kms * slot_duration_s; }

  // slots until the constellation pattern repeats (may be non-integer)
  double wrap_period_slots() const { return lane_length_km / advance_per_slot_km(); }

  void validate() const;  // throws std::invalid_argument
};

struct GroundUser {
  int user_id = 0;
  double ground_position_km = 0.0;  // along the lane's ground projection
};

// Radio parameters of the downlink. Only the ratio sigma^2 / P_t enters the
// rate formula, so that is what gets stored; distances are fed in km and
// noise_over_power is specified at the same scale.
struct LinkBudget {
  double bandwidth_hz = 0.0;       // W
  int num_pilots = 1;              // P
  double pathloss_exponent = 2.0;  // alpha
  double noise_over_power = 0.0;   // sigma^2 / P_t

  void validate() const;  // throws std::invalid_argument
};

// Along-lane positions of all K satellites at slot n:
//   pos_k = (offset_k + v * dt * n) mod L
std::vector<double> satellite_positions(const ConstellationConfig& config, long slot);

// Shortest wrapped lateral offset |a - b| on a ring of circumference L.
double wrapped_distance(double a, double b, double lane_length_km);

// Signed wrapped offset (a - b) folded into (-L/2, L/2].
double signed_wrapped_offset(double a, double b, double lane_length_km);

// Slant distance sqrt(altitude^2 + delta^2) with delta the shortest wrapped
// lateral offset between the user and the satellite's ground track.
double user_satellite_distance(const GroundUser& user, double sat_position_km,
                               const ConstellationConfig& config);

// Shannon rate of the downlink in bit/s:
//   R = (W / P) * log2(1 + d^-alpha / (sum_i d_i^-alpha + sigma^2/P_t))
// Throws std::invalid_argument on non-positive distances (geometry bug upstream).
double link_rate(double user_distance_km, std::span<const double> interferer_distances_km,
                 const LinkBudget& budget);

}  // namespace leorach
