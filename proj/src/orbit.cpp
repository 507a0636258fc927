#include "leorach/orbit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace leorach {

ConstellationConfig ConstellationConfig::equally_spaced(int num_satellites, double lane_length_km,
                                                        double altitude_km,
                                                        double orbit_velocity_kms,
                                                        double slot_duration_s) {
  ConstellationConfig cfg;
  cfg.num_satellites = num_satellites;
  cfg.lane_length_km = lane_length_km;
  cfg.altitude_km = altitude_km;
  cfg.orbit_velocity_kms = orbit_velocity_kms;
  cfg.slot_duration_s = slot_duration_s;
  cfg.initial_offsets_km.reserve(static_cast<std::size_t>(num_satellites));
  for (int k = 0; k < num_satellites; ++k) {
    cfg.initial_offsets_km.push_back(static_cast<double>(k) * lane_length_km /
                                     static_cast<double>(num_satellites));
  }
  cfg.validate();
  return cfg;
}

void ConstellationConfig::validate() const {
  if (num_satellites < 1) throw std::invalid_argument("constellation: num_satellites must be >= 1");
  if (!(lane_length_km > 0.0)) throw std::invalid_argument("constellation: lane_length_km must be > 0");
  if (!(altitude_km > 0.0)) throw std::invalid_argument("constellation: altitude_km must be > 0");
  if (!(orbit_velocity_kms > 0.0))
    throw std::invalid_argument("constellation: orbit_velocity_kms must be > 0");
  if (!(slot_duration_s > 0.0))
    throw std::invalid_argument("constellation: slot_duration_s must be > 0");
  if (initial_offsets_km.size() != static_cast<std::size_t>(num_satellites))
    throw std::invalid_argument("constellation: need exactly one initial offset per satellite");
  std::unordered_set<double> seen;
  for (double off : initial_offsets_km) {
    if (!(off >= 0.0) || off >= lane_length_km)
      throw std::invalid_argument("constellation: initial offsets must lie in [0, lane_length)");
    if (!seen.insert(off).second)
      throw std::invalid_argument("constellation: initial offsets must be pairwise distinct");
  }
}

void LinkBudget::validate() const {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("budget: bandwidth_hz must be > 0");
  if (num_pilots < 1) throw std::invalid_argument("budget: num_pilots must be >= 1");
  if (!(pathloss_exponent >= 2.0))
    throw std::invalid_argument("budget: pathloss_exponent must be >= 2");
  if (!(noise_over_power >= 0.0))
    throw std::invalid_argument("budget: noise_over_power must be >= 0");
}

std::vector<double> satellite_positions(const ConstellationConfig& config, long slot) {
  if (slot < 0) throw std::invalid_argument("satellite_positions: slot must be >= 0");
  const double advance = config.advance_per_slot_km() * static_cast<double>(slot);
  std::vector<double> positions;
  positions.reserve(config.initial_offsets_km.size());
  for (double offset : config.initial_offsets_km) {
    double pos = std::fmod(offset + advance, config.lane_length_km);
    if (pos < 0.0) pos += config.lane_length_km;
    positions.push_back(pos);
  }
  return positions;
}

double wrapped_distance(double a, double b, double lane_length_km) {
  double delta = std::fabs(a - b);
  delta = std::fmod(delta, lane_length_km);
  return std::min(delta, lane_length_km - delta);
}

double signed_wrapped_offset(double a, double b, double lane_length_km) {
  double delta = std::fmod(a - b, lane_length_km);
  if (delta > lane_length_km / 2.0) delta -= lane_length_km;
  if (delta <= -lane_length_km / 2.0) delta += lane_length_km;
  return delta;
}

double user_satellite_distance(const GroundUser& user, double sat_position_km,
                               const ConstellationConfig& config) {
  const double lateral = wrapped_distance(sat_position_km, user.ground_position_km,
                                          config.lane_length_km);
  return std::hypot(config.altitude_km, lateral);
}

double link_rate(double user_distance_km, std::span<const double> interferer_distances_km,
                 const LinkBudget& budget) {
  if (!(user_distance_km > 0.0))
    throw std::invalid_argument("link_rate: user distance must be > 0, got " +
                                std::to_string(user_distance_km));
  const double alpha = budget.pathloss_exponent;
  double interference = 0.0;
  for (double d : interferer_distances_km) {
    if (!(d > 0.0))
      throw std::invalid_argument("link_rate: interferer distance must be > 0, got " +
                                  std::to_string(d));
    interference += std::pow(d, -alpha);
  }
  const double sinr = std::pow(user_distance_km, -alpha) /
                      (interference + budget.noise_over_power);
  return budget.bandwidth_hz / static_cast<double>(budget.num_pilots) * std::log2(1.0 + sinr);
}

}  // namespace leorach
