#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leorach/orbit.hpp"
#include "leorach/rng.hpp"

namespace leorach {

// Per-user access decision for one slot. target in {0, 1, ..., K} where 0 is
// backoff; pilot in {1, ..., P} when target != 0 and 0 (unused sentinel)
// otherwise.
struct AccessAction {
  int target = 0;
  int pilot = 0;
};

struct UserOutcome {
  int target = 0;
  int pilot = 0;
  bool collided = false;
  std::vector<int> interferers;  // satellite indices (1-based), sorted
  double rate_bps = 0.0;
  double reward = 0.0;
};

struct SlotOutcome {
  long slot = 0;
  std::vector<UserOutcome> users;
};

struct EnvConfig {
  ConstellationConfig constellation;
  LinkBudget budget;
  std::vector<GroundUser> users;
  double rho = -1.0;  // collision penalty weight; < 0 selects the default 0.5 * R_max
  int slots_per_episode = 1;
  std::uint64_t rng_seed = 0;
  bool interference_enabled = true;

  void validate() const;
};

// Collision penalty default: half of the best achievable rate.
double default_rho(const ConstellationConfig& constellation, const LinkBudget& budget);

// Best achievable rate: directly overhead, no interference.
double max_rate(const ConstellationConfig& constellation, const LinkBudget& budget);

// Draws pilots uniformly from {1, ..., P} for every transmitting user, in
// user-index order; backoff users get the 0 sentinel and consume no
// randomness.
std::vector<int> sample_pilots(std::span<const int> targets, int num_pilots, Rng& rng);

// c_j = 1 iff another user picked the same satellite and the same pilot.
std::vector<bool> detect_collisions(std::span<const AccessAction> actions);

// Interferer satellites seen by each user: satellites serving a non-collided
// user on the same pilot but a different satellite. Collided users' satellites
// do not transmit, so they interfere with nobody; backoff and collided users
// see no interferers themselves (they receive nothing).
std::vector<std::vector<int>> interferer_sets(std::span<const AccessAction> actions,
                                              const std::vector<bool>& collided);

// The slotted random-access environment. Single-threaded per instance (owns
// the slot counter and the pilot rng); run independent copies in parallel.
class Environment {
public:
  explicit Environment(EnvConfig config);

  void reset();                       // re-seed from config and rewind to slot 0
  void reset(std::uint64_t seed);

  // Applies the joint targets, samples pilots, resolves collisions and
  // interference, and returns the per-user outcome. Throws on a wrong-length
  // action vector or out-of-range targets.
  SlotOutcome step(std::span<const int> targets);

  // Reward normalizer g: affine map of [-rho, R_max] onto [-1, 1], clamped.
  double normalize_reward(double x) const;
  double reward_of(double rate_bps, bool collided) const;

  long slot() const { return slot_; }
  int num_users() const { return static_cast<int>(config_.users.size()); }
  int num_satellites() const { return config_.constellation.num_satellites; }
  int num_pilots() const { return config_.budget.num_pilots; }
  double rho() const { return rho_; }
  double max_rate() const { return max_rate_; }
  const EnvConfig& config() const { return config_; }

private:
  EnvConfig config_;
  Rng rng_;
  long slot_ = 0;
  double max_rate_ = 0.0;
  double rho_ = 0.0;
};

}  // namespace leorach
