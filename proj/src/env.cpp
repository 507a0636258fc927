#include "leorach/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace leorach {

void EnvConfig::validate() const {
  constellation.validate();
  budget.validate();
  if (users.empty()) throw std::invalid_argument("env: need at least one user");
  for (const auto& u : users) {
    if (!(u.ground_position_km >= 0.0) || u.ground_position_km >= constellation.lane_length_km)
      throw std::invalid_argument("env: user positions must lie in [0, lane_length)");
  }
  if (slots_per_episode < 1) throw std::invalid_argument("env: slots_per_episode must be >= 1");
  // rho < 0 means "use the default"; anything else must be a valid weight
}

double max_rate(const ConstellationConfig& constellation, const LinkBudget& budget) {
  return link_rate(constellation.altitude_km, {}, budget);
}

double default_rho(const ConstellationConfig& constellation, const LinkBudget& budget) {
  return 0.5 * max_rate(constellation, budget);
}

std::vector<int> sample_pilots(std::span<const int> targets, int num_pilots, Rng& rng) {
  if (num_pilots < 1) throw std::invalid_argument("sample_pilots: num_pilots must be >= 1");
  std::vector<int> pilots(targets.size(), 0);
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (targets[j] != 0) pilots[j] = 1 + rng.uniform_int(num_pilots);
  }
  return pilots;
}

std::vector<bool> detect_collisions(std::span<const AccessAction> actions) {
  const std::size_t n = actions.size();
  std::vector<bool> collided(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    if (actions[j].target == 0) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      if (actions[k].target == actions[j].target && actions[k].pilot == actions[j].pilot) {
        collided[j] = true;
        break;
      }
    }
  }
  return collided;
}

std::vector<std::vector<int>> interferer_sets(std::span<const AccessAction> actions,
                                              const std::vector<bool>& collided) {
  const std::size_t n = actions.size();
  std::vector<std::vector<int>> sets(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (actions[j].target == 0 || collided[j]) continue;  // receives nothing
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      if (actions[k].target == 0 || collided[k]) continue;  // silent satellite
      if (actions[k].target != actions[j].target && actions[k].pilot == actions[j].pilot)
        sets[j].push_back(actions[k].target);
    }
    std::sort(sets[j].begin(), sets[j].end());
  }
  return sets;
}

Environment::Environment(EnvConfig config) : config_(std::move(config)), rng_(config_.rng_seed) {
  config_.validate();
  max_rate_ = leorach::max_rate(config_.constellation, config_.budget);
  rho_ = config_.rho < 0.0 ? default_rho(config_.constellation, config_.budget) : config_.rho;
}

void Environment::reset() { reset(config_.rng_seed); }

void Environment::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  slot_ = 0;
}

double Environment::normalize_reward(double x) const {
  const double lo = -rho_;
  const double hi = max_rate_;
  const double mapped = 2.0 * (x - lo) / (hi - lo) - 1.0;
  return std::clamp(mapped, -1.0, 1.0);
}

double Environment::reward_of(double rate_bps, bool collided) const {
  return normalize_reward(rate_bps - rho_ * (collided ? 1.0 : 0.0));
}

SlotOutcome Environment::step(std::span<const int> targets) {
  const int J = num_users();
  const int K = num_satellites();
  if (slot_ >= config_.slots_per_episode)
    throw std::logic_error("Environment::step: episode is over, reset first");
  if (static_cast<int>(targets.size()) != J)
    throw std::invalid_argument("Environment::step: expected " + std::to_string(J) +
                                " targets, got " + std::to_string(targets.size()));
  for (int t : targets) {
    if (t < 0 || t > K)
      throw std::invalid_argument("Environment::step: target " + std::to_string(t) +
                                  " out of range [0, " + std::to_string(K) + "]");
  }

  const std::vector<int> pilots = sample_pilots(targets, num_pilots(), rng_);
  std::vector<AccessAction> actions(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) actions[static_cast<std::size_t>(j)] = {targets[j], pilots[j]};

  const std::vector<bool> collided = detect_collisions(actions);
  std::vector<std::vector<int>> interferers(static_cast<std::size_t>(J));
  if (config_.interference_enabled) interferers = interferer_sets(actions, collided);

  const std::vector<double> sat_pos = satellite_positions(config_.constellation, slot_);

  SlotOutcome outcome;
  outcome.slot = slot_;
  outcome.users.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    auto& u = outcome.users[static_cast<std::size_t>(j)];
    u.target = targets[j];
    u.pilot = pilots[j];
    u.collided = collided[j];
    u.interferers = interferers[j];
    if (u.target != 0 && !u.collided) {
      const GroundUser& user = config_.users[static_cast<std::size_t>(j)];
      const double d = user_satellite_distance(user, sat_pos[static_cast<std::size_t>(u.target - 1)],
                                               config_.constellation);
      std::vector<double> interferer_d;
      interferer_d.reserve(u.interferers.size());
      for (int sat : u.interferers)
        interferer_d.push_back(user_satellite_distance(user, sat_pos[static_cast<std::size_t>(sat - 1)],
                                                       config_.constellation));
      u.rate_bps = link_rate(d, interferer_d, config_.budget);
    }
    u.reward = reward_of(u.rate_bps, u.collided);
  }
  ++slot_;
  return outcome;
}

}  // namespace leorach
