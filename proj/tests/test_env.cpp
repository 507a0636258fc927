#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "leorach/env.hpp"

using namespace leorach;

namespace {

EnvConfig small_env(int num_satellites, int num_users, int num_pilots, double rho = -1.0) {
  EnvConfig cfg;
  cfg.constellation =
      ConstellationConfig::equally_spaced(num_satellites, 2000.0, 500.0, 10.0, 1.0);
  cfg.budget.bandwidth_hz = 10e6;
  cfg.budget.num_pilots = num_pilots;
  cfg.budget.pathloss_exponent = 2.0;
  cfg.budget.noise_over_power = 1e-7;
  for (int j = 0; j < num_users; ++j)
    cfg.users.push_back({j, 200.0 * static_cast<double>(j)});
  cfg.rho = rho;
  cfg.slots_per_episode = 1000000;
  cfg.rng_seed = 99;
  return cfg;
}

// Independent O(J^2) brute force written straight from the definitions:
// a collision is another user on the same satellite and pilot; an interferer
// is a satellite serving a non-collided user on the same pilot elsewhere.
struct BruteForceResult {
  std::vector<bool> collided;
  std::vector<std::set<int>> interferers;
};

BruteForceResult brute_force(const std::vector<AccessAction>& actions) {
  const std::size_t n = actions.size();
  BruteForceResult res;
  res.collided.assign(n, false);
  res.interferers.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (actions[j].target == 0) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (j == k) continue;
      if (actions[j].target == actions[k].target && actions[j].pilot == actions[k].pilot)
        res.collided[j] = true;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (actions[j].target == 0 || res.collided[j]) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (j == k || actions[k].target == 0 || res.collided[k]) continue;
      if (actions[k].target != actions[j].target && actions[k].pilot == actions[j].pilot)
        res.interferers[j].insert(actions[k].target);
    }
  }
  return res;
}

}  // namespace

TEST_CASE("sample_pilots: single pilot is forced") {
  Rng rng(1);
  const std::vector<int> targets{1, 2};
  CHECK(sample_pilots(targets, 1, rng) == std::vector<int>{1, 1});
}

TEST_CASE("sample_pilots: backoff consumes no randomness") {
  Rng rng_a(42);
  Rng rng_b(42);
  const std::vector<int> all_backoff{0, 0};
  const auto pilots = sample_pilots(all_backoff, 4, rng_a);
  CHECK(pilots == std::vector<int>{0, 0});
  CHECK(rng_a == rng_b);  // untouched state

  // and a transmitting user does consume randomness
  const std::vector<int> one{1};
  sample_pilots(one, 4, rng_a);
  CHECK_FALSE(rng_a == rng_b);
}

TEST_CASE("sample_pilots: uniform frequencies within 3 sigma") {
  Rng rng(2024);
  const int draws = 100000;
  const int P = 4;
  std::vector<int> counts(P + 1, 0);
  const std::vector<int> targets{1};
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(sample_pilots(targets, P, rng)[0])];
  const double expected = draws / static_cast<double>(P);
  const double sigma = std::sqrt(draws * (1.0 / P) * (1.0 - 1.0 / P));
  for (int p = 1; p <= P; ++p)
    CHECK(std::fabs(counts[static_cast<std::size_t>(p)] - expected) <= 3.0 * sigma);
}

TEST_CASE("detect_collisions: definitional cases") {
  CHECK(detect_collisions(std::vector<AccessAction>{{1, 1}, {1, 1}}) ==
        std::vector<bool>{true, true});
  CHECK(detect_collisions(std::vector<AccessAction>{{1, 1}, {2, 1}}) ==
        std::vector<bool>{false, false});
  CHECK(detect_collisions(std::vector<AccessAction>{{1, 1}, {1, 2}, {0, 0}}) ==
        std::vector<bool>{false, false, false});
}

TEST_CASE("interferer_sets: cross-satellite same pilot") {
  const std::vector<AccessAction> actions{{1, 1}, {2, 1}};
  const auto collided = detect_collisions(actions);
  const auto sets = interferer_sets(actions, collided);
  CHECK(sets[0] == std::vector<int>{2});
  CHECK(sets[1] == std::vector<int>{1});
}

TEST_CASE("interferer_sets: disjoint pilots") {
  const std::vector<AccessAction> actions{{1, 1}, {2, 2}};
  const auto sets = interferer_sets(actions, detect_collisions(actions));
  CHECK(sets[0].empty());
  CHECK(sets[1].empty());
}

TEST_CASE("interferer_sets: collided transmitters are silent") {
  // users 0 and 1 collide at satellite 1; satellite 1 therefore does not
  // transmit, so user 2 on the same pilot at satellite 2 sees no interference
  const std::vector<AccessAction> actions{{1, 1}, {1, 1}, {2, 1}};
  const auto collided = detect_collisions(actions);
  CHECK(collided == std::vector<bool>{true, true, false});
  const auto sets = interferer_sets(actions, collided);
  CHECK(sets[0].empty());
  CHECK(sets[1].empty());
  CHECK(sets[2].empty());
}

TEST_CASE("exhaustive oracle equivalence for J<=3, K<=2, P<=2") {
  for (int J = 1; J <= 3; ++J) {
    for (int K = 1; K <= 2; ++K) {
      for (int P = 1; P <= 2; ++P) {
        // enumerate all target vectors in {0..K}^J and pilot vectors in {1..P}^J
        const int target_combos = static_cast<int>(std::pow(K + 1, J));
        const int pilot_combos = static_cast<int>(std::pow(P, J));
        for (int t = 0; t < target_combos; ++t) {
          for (int p = 0; p < pilot_combos; ++p) {
            std::vector<AccessAction> actions(static_cast<std::size_t>(J));
            int tt = t, pp = p;
            for (int j = 0; j < J; ++j) {
              actions[static_cast<std::size_t>(j)].target = tt % (K + 1);
              tt /= (K + 1);
              const int pilot = 1 + pp % P;
              pp /= P;
              actions[static_cast<std::size_t>(j)].pilot =
                  actions[static_cast<std::size_t>(j)].target == 0 ? 0 : pilot;
            }
            const auto collided = detect_collisions(actions);
            const auto sets = interferer_sets(actions, collided);
            const auto expected = brute_force(actions);
            REQUIRE(collided == expected.collided);
            for (int j = 0; j < J; ++j) {
              const std::set<int> got(sets[static_cast<std::size_t>(j)].begin(),
                                      sets[static_cast<std::size_t>(j)].end());
              REQUIRE(got == expected.interferers[static_cast<std::size_t>(j)]);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("at most one non-collided user per (satellite, pilot)") {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int J = 1 + rng.uniform_int(6);
    const int K = 1 + rng.uniform_int(4);
    const int P = 1 + rng.uniform_int(3);
    std::vector<AccessAction> actions(static_cast<std::size_t>(J));
    for (auto& a : actions) {
      a.target = rng.uniform_int(K + 1);
      a.pilot = a.target == 0 ? 0 : 1 + rng.uniform_int(P);
    }
    const auto collided = detect_collisions(actions);
    std::set<std::pair<int, int>> seen;
    for (std::size_t j = 0; j < actions.size(); ++j) {
      if (actions[j].target == 0 || collided[j]) continue;
      CHECK(seen.insert({actions[j].target, actions[j].pilot}).second);
    }
  }
}

TEST_CASE("reward normalizer endpoints") {
  const auto cfg = small_env(2, 2, 2);
  Environment env(cfg);
  const double rmax = env.max_rate();
  const double rho = env.rho();
  CHECK(rho == doctest::Approx(0.5 * rmax));  // default weighting
  CHECK(env.reward_of(0.0, true) == doctest::Approx(-1.0));          // g(-rho)
  CHECK(env.reward_of(rmax, false) == doctest::Approx(1.0));         // g(R_max)
  CHECK(env.normalize_reward((rmax - rho) / 2.0) == doctest::Approx(0.0).epsilon(1e-12));
  // explicit rho respected
  Environment env2(small_env(2, 2, 2, 123.0));
  CHECK(env2.rho() == doctest::Approx(123.0));
}

TEST_CASE("step: all backoff") {
  Environment env(small_env(2, 3, 2));
  const auto outcome = env.step(std::vector<int>{0, 0, 0});
  const double backoff_reward = env.normalize_reward(0.0);
  for (const auto& u : outcome.users) {
    CHECK(u.rate_bps == 0.0);
    CHECK_FALSE(u.collided);
    CHECK(u.interferers.empty());
    CHECK(u.reward == doctest::Approx(backoff_reward));
  }
}

TEST_CASE("step: single user gets the interference-free rate") {
  const auto cfg = small_env(2, 1, 2);
  Environment env(cfg);
  const auto outcome = env.step(std::vector<int>{1});
  const auto pos = satellite_positions(cfg.constellation, 0);
  const double d = user_satellite_distance(cfg.users[0], pos[0], cfg.constellation);
  CHECK(outcome.users[0].rate_bps == doctest::Approx(link_rate(d, {}, cfg.budget)));
  CHECK_FALSE(outcome.users[0].collided);
  CHECK(outcome.users[0].interferers.empty());
}

TEST_CASE("step: mutual interference lowers both rates") {
  auto cfg = small_env(2, 2, 1);  // P=1 forces the shared pilot
  Environment env(cfg);
  const auto outcome = env.step(std::vector<int>{1, 2});
  const auto pos = satellite_positions(cfg.constellation, 0);
  for (int j = 0; j < 2; ++j) {
    const auto& u = outcome.users[static_cast<std::size_t>(j)];
    CHECK_FALSE(u.collided);
    CHECK(u.interferers.size() == 1);
    const double d = user_satellite_distance(cfg.users[static_cast<std::size_t>(j)],
                                             pos[static_cast<std::size_t>(u.target - 1)],
                                             cfg.constellation);
    CHECK(u.rate_bps < link_rate(d, {}, cfg.budget));
    CHECK(u.rate_bps > 0.0);
  }
}

TEST_CASE("step: interference switch removes interferer terms") {
  auto cfg = small_env(2, 2, 1);
  cfg.interference_enabled = false;
  Environment env(cfg);
  const auto outcome = env.step(std::vector<int>{1, 2});
  const auto pos = satellite_positions(cfg.constellation, 0);
  for (int j = 0; j < 2; ++j) {
    const auto& u = outcome.users[static_cast<std::size_t>(j)];
    CHECK(u.interferers.empty());
    const double d = user_satellite_distance(cfg.users[static_cast<std::size_t>(j)],
                                             pos[static_cast<std::size_t>(u.target - 1)],
                                             cfg.constellation);
    CHECK(u.rate_bps == doctest::Approx(link_rate(d, {}, cfg.budget)));
  }
}

TEST_CASE("step: invariants hold on random runs") {
  auto cfg = small_env(3, 4, 2);
  Environment env(cfg);
  Rng rng(17);
  for (int n = 0; n < 500; ++n) {
    std::vector<int> targets(4);
    for (auto& t : targets) t = rng.uniform_int(4);
    const auto outcome = env.step(targets);
    for (std::size_t j = 0; j < outcome.users.size(); ++j) {
      const auto& u = outcome.users[j];
      CHECK(u.reward >= -1.0);
      CHECK(u.reward <= 1.0);
      if (u.collided) CHECK(u.rate_bps == 0.0);
      if (u.target == 0) {
        CHECK_FALSE(u.collided);
        CHECK(u.rate_bps == 0.0);
        CHECK(u.pilot == 0);
      } else {
        CHECK(u.pilot >= 1);
        CHECK(u.pilot <= 2);
      }
      for (int sat : u.interferers) CHECK(sat != u.target);
    }
  }
}

TEST_CASE("step: deterministic per seed") {
  auto cfg = small_env(3, 3, 2);
  Environment env_a(cfg);
  Environment env_b(cfg);
  Rng action_rng(7);
  std::vector<std::vector<int>> plans;
  for (int n = 0; n < 100; ++n) {
    std::vector<int> t(3);
    for (auto& x : t) x = action_rng.uniform_int(4);
    plans.push_back(t);
  }
  for (const auto& t : plans) {
    const auto a = env_a.step(t);
    const auto b = env_b.step(t);
    REQUIRE(a.users.size() == b.users.size());
    for (std::size_t j = 0; j < a.users.size(); ++j) {
      CHECK(a.users[j].pilot == b.users[j].pilot);
      CHECK(a.users[j].collided == b.users[j].collided);
      CHECK(a.users[j].rate_bps == b.users[j].rate_bps);  // bit-identical
      CHECK(a.users[j].reward == b.users[j].reward);
      CHECK(a.users[j].interferers == b.users[j].interferers);
    }
  }
}

TEST_CASE("step: rejects malformed joint actions") {
  Environment env(small_env(2, 2, 2));
  CHECK_THROWS_AS(env.step(std::vector<int>{1}), std::invalid_argument);
  CHECK_THROWS_AS(env.step(std::vector<int>{1, 3}), std::invalid_argument);
  CHECK_THROWS_AS(env.step(std::vector<int>{-1, 0}), std::invalid_argument);
}

TEST_CASE("env config validation") {
  auto cfg = small_env(2, 2, 2);
  cfg.users[1].ground_position_km = 5000.0;
  CHECK_THROWS_AS(Environment{cfg}, std::invalid_argument);
  auto cfg2 = small_env(2, 2, 2);
  cfg2.slots_per_episode = 0;
  CHECK_THROWS_AS(Environment{cfg2}, std::invalid_argument);
}
