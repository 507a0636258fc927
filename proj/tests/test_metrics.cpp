#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <vector>

#include "leorach/config.hpp"
#include "leorach/metrics.hpp"
#include "leorach/train.hpp"

using namespace leorach;

namespace {

SlotOutcome make_slot(long slot, std::vector<UserOutcome> users) {
  SlotOutcome s;
  s.slot = slot;
  s.users = std::move(users);
  return s;
}

UserOutcome user(int target, int pilot, bool collided, double rate, double reward = 0.0) {
  UserOutcome u;
  u.target = target;
  u.pilot = pilot;
  u.collided = collided;
  u.rate_bps = rate;
  u.reward = reward;
  return u;
}

SignalingCostModel default_model() {
  SignalingCostModel model;
  model.bits_per_element = 32;
  model.widths.peer_msg_dim = 4;
  model.widths.uplink_code_dim = 4;
  model.widths.downlink_dim = 4;
  return model;
}

}  // namespace

TEST_CASE("throughput_and_collision: hand cases") {
  // all backoff over 10 slots, 5 users
  std::vector<SlotOutcome> idle;
  for (long n = 0; n < 10; ++n)
    idle.push_back(make_slot(n, std::vector<UserOutcome>(5, user(0, 0, false, 0.0))));
  auto [tput0, col0] = throughput_and_collision(idle);
  CHECK(tput0 == 0.0);
  CHECK(col0 == 0.0);  // zero-attempt convention

  // one slot, two successful users with rates 3 and 5
  std::vector<SlotOutcome> pair{
      make_slot(0, {user(1, 1, false, 3.0), user(2, 1, false, 5.0)})};
  auto [tput1, col1] = throughput_and_collision(pair);
  CHECK(tput1 == doctest::Approx(8.0));
  CHECK(col1 == 0.0);

  // 4 slots, 1 user, attempts in all, collision in one -> 25%
  std::vector<SlotOutcome> quarter;
  for (long n = 0; n < 4; ++n) quarter.push_back(make_slot(n, {user(1, 1, n == 2, n == 2 ? 0.0 : 1.0)}));
  auto [tput2, col2] = throughput_and_collision(quarter);
  CHECK(col2 == doctest::Approx(25.0));
  CHECK(tput2 == doctest::Approx(0.75));

  CHECK_THROWS_AS(throughput_and_collision({}), std::invalid_argument);
}

TEST_CASE("signaling_cost: closed forms") {
  const auto model = default_model();
  CHECK(signaling_cost(Variant::eRACH, 7, model) == 0);
  CHECK(signaling_cost(Variant::De2RACH, 1, model) == 0);  // no peers
  CHECK(signaling_cost(Variant::De2RACH, 5, model) == 2560);  // 5*4*4*32
  CHECK(signaling_cost(Variant::Ce2RACH, 5, model) == 1280);  // 5*(4+4)*32
  CHECK_THROWS_AS(signaling_cost(Variant::Ce2RACH, 0, model), std::invalid_argument);
}

TEST_CASE("signaling cost agrees with recorded traffic exactly") {
  Rng rng(3);
  for (Variant variant : {Variant::eRACH, Variant::De2RACH, Variant::Ce2RACH}) {
    for (int J : {1, 2, 3, 5, 8}) {
      AgentConfig cfg;
      cfg.variant = variant;
      cfg.num_users = J;
      cfg.num_satellites = 2;
      cfg.lower_hidden = {6};
      cfg.upper_hidden = {6};
      cfg.relay_hidden = {6};
      auto agent = ProtocolAgent::init(cfg, 17);

      std::vector<std::vector<double>> obs(static_cast<std::size_t>(J));
      for (auto& o : obs) {
        o.resize(static_cast<std::size_t>(cfg.observation_size()));
        for (double& v : o) v = rng.uniform(-1.0, 1.0);
      }
      TrafficRecord traffic;
      agent.slot_logits(obs, nullptr, &traffic);

      SignalingCostModel model;
      model.bits_per_element = 32;
      model.widths = cfg.widths;
      CHECK(traffic_bits(traffic, model.bits_per_element) ==
            signaling_cost(variant, J, model));
    }
  }
}

TEST_CASE("utilization_grid: classification and shape") {
  // all backoff -> every cell idle
  const std::vector<SlotOutcome> idle{make_slot(0, std::vector<UserOutcome>(3, user(0, 0, false, 0.0)))};
  const auto idle_grid = utilization_grid(idle, 2, 2);
  CHECK(idle_grid.size() == 4);  // K*P cells per slot
  for (const auto& c : idle_grid) CHECK(c.status == CellStatus::Idle);

  // two users on the same (satellite, pilot) -> collision cell
  const std::vector<SlotOutcome> crash{
      make_slot(0, {user(1, 2, true, 0.0), user(1, 2, true, 0.0), user(2, 1, false, 1.0)})};
  const auto grid = utilization_grid(crash, 2, 2);
  int collisions = 0, successes = 0, idles = 0;
  for (const auto& c : grid) {
    if (c.status == CellStatus::Collision) {
      ++collisions;
      CHECK(c.satellite == 1);
      CHECK(c.pilot == 2);
      CHECK(c.num_users == 2);
    } else if (c.status == CellStatus::Success) {
      ++successes;
      CHECK(c.satellite == 2);
      CHECK(c.pilot == 1);
      CHECK(c.user == 2);
    } else {
      ++idles;
    }
  }
  CHECK(collisions == 1);
  CHECK(successes == 1);
  CHECK(idles == 2);
}

TEST_CASE("utilization_grid: collision cells reconcile with per-user flags") {
  EnvConfig cfg;
  cfg.constellation = ConstellationConfig::equally_spaced(3, 2000.0, 500.0, 10.0, 1.0);
  cfg.budget.bandwidth_hz = 1e6;
  cfg.budget.num_pilots = 2;
  cfg.budget.noise_over_power = 1e-7;
  cfg.users = {{0, 100.0}, {1, 600.0}, {2, 1200.0}, {3, 1800.0}};
  cfg.slots_per_episode = 2000;
  cfg.rng_seed = 5;
  Environment env(cfg);
  Rng rng(6);

  std::vector<SlotOutcome> outcomes;
  long flagged = 0;
  for (int n = 0; n < 2000; ++n) {
    std::vector<int> targets(4);
    for (auto& t : targets) t = rng.uniform_int(4);
    outcomes.push_back(env.step(targets));
    for (const auto& u : outcomes.back().users)
      if (u.collided) ++flagged;
  }

  const auto grid = utilization_grid(outcomes, 3, 2);
  long in_collision_cells = 0;
  for (const auto& c : grid)
    if (c.status == CellStatus::Collision) in_collision_cells += c.num_users;
  CHECK(in_collision_cells == flagged);
}

TEST_CASE("sweep_users: growth laws and shape") {
  const auto model = default_model();
  const std::vector<int> counts{2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto rows = sweep_users(model, counts);
  CHECK(rows.size() == counts.size() * 3);

  // eRACH all zeros
  for (std::size_t i = 0; i < counts.size(); ++i) {
    CHECK(rows[i].variant == Variant::eRACH);
    CHECK(rows[i].bits_per_slot == 0);
  }
  // J in {2,4}: Ce2RACH doubles, De2RACH grows 2 -> 12 links (x6)
  const auto cost_of = [&](Variant v, int J) {
    for (const auto& r : rows)
      if (r.variant == v && r.num_users == J) return r.bits_per_slot;
    FAIL("row not found");
    return 0L;
  };
  CHECK(cost_of(Variant::Ce2RACH, 4) == 2 * cost_of(Variant::Ce2RACH, 2));
  CHECK(cost_of(Variant::De2RACH, 4) == 6 * cost_of(Variant::De2RACH, 2));

  // exact linearity / quadratic law over the whole list
  for (std::size_t i = 0; i + 2 < counts.size(); ++i) {
    const long d1 = cost_of(Variant::Ce2RACH, counts[i + 1]) - cost_of(Variant::Ce2RACH, counts[i]);
    const long d2 = cost_of(Variant::Ce2RACH, counts[i + 2]) - cost_of(Variant::Ce2RACH, counts[i + 1]);
    CHECK(d1 == d2);
    const long dd = (cost_of(Variant::De2RACH, counts[i + 2]) - cost_of(Variant::De2RACH, counts[i + 1])) -
                    (cost_of(Variant::De2RACH, counts[i + 1]) - cost_of(Variant::De2RACH, counts[i]));
    CHECK(dd == 2L * 4 * 32);  // constant positive second difference
  }
}

TEST_CASE("metrics CSV: write/read round trip") {
  std::vector<MetricsRecord> records;
  MetricsRecord r;
  r.run_id = "test";
  r.variant = Variant::De2RACH;
  r.seed = 42;
  r.episode = 7;
  r.avg_throughput_bps = 12345678.901234567;
  r.collision_pct = 11.9;
  r.signaling_bits_per_slot = 2560.0;
  records.push_back(r);

  const auto path = std::filesystem::temp_directory_path() / "leorach_metrics_test.csv";
  write_metrics_csv(path, records);
  const auto loaded = read_metrics_csv(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].run_id == "test");
  CHECK(loaded[0].variant == Variant::De2RACH);
  CHECK(loaded[0].seed == 42);
  CHECK(loaded[0].episode == 7);
  CHECK(loaded[0].avg_throughput_bps == r.avg_throughput_bps);  // bit-exact
  CHECK(loaded[0].collision_pct == r.collision_pct);
  std::filesystem::remove(path);
}

TEST_CASE("slots CSV: recomputed metrics match in-memory bit-exactly") {
  EnvConfig cfg;
  cfg.constellation = ConstellationConfig::equally_spaced(2, 2000.0, 500.0, 10.0, 1.0);
  cfg.budget.bandwidth_hz = 10e6;
  cfg.budget.num_pilots = 2;
  cfg.budget.noise_over_power = 1e-7;
  cfg.users = {{0, 300.0}, {1, 900.0}, {2, 1500.0}};
  cfg.slots_per_episode = 500;
  cfg.rng_seed = 7;
  Environment env(cfg);
  Rng rng(8);
  std::vector<SlotOutcome> outcomes;
  for (int n = 0; n < 500; ++n) {
    std::vector<int> targets(3);
    for (auto& t : targets) t = rng.uniform_int(3);
    outcomes.push_back(env.step(targets));
  }
  const auto in_memory = throughput_and_collision(outcomes);

  const auto path = std::filesystem::temp_directory_path() / "leorach_slots_test.csv";
  write_slots_csv(path, outcomes);
  const auto loaded = read_slots_csv(path);
  REQUIRE(loaded.size() == outcomes.size());
  const auto recomputed = throughput_and_collision(loaded);
  CHECK(recomputed.first == in_memory.first);    // bit-exact
  CHECK(recomputed.second == in_memory.second);
  std::filesystem::remove(path);
}

TEST_CASE("run config: defaults validate, JSON round trip, unknown keys rejected") {
  const auto defaults = RunConfig::defaults();
  defaults.validate();

  const std::string text = defaults.to_json_text();
  const auto parsed = RunConfig::from_json_text(text);
  CHECK(parsed.constellation.num_satellites == defaults.constellation.num_satellites);
  CHECK(parsed.users.size() == defaults.users.size());
  CHECK(parsed.variant == defaults.variant);
  CHECK(parsed.train.episodes == defaults.train.episodes);

  CHECK_THROWS_AS(RunConfig::from_json_text("{\"bogus\": 1}"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json_text("{\"train\": {\"episodez\": 5}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json_text("not json"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_json_text("{\"train\": {\"episodes\": 0}}"),
                  std::invalid_argument);

  // variant selection reaches the agent config
  const auto ce2 = RunConfig::from_json_text("{\"protocol\": {\"variant\": \"Ce2RACH\"}}");
  CHECK(ce2.make_agent_config().variant == Variant::Ce2RACH);
  CHECK(ce2.train.variant == Variant::Ce2RACH);
}
