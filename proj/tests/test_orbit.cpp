#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "leorach/orbit.hpp"
#include "leorach/rng.hpp"

using namespace leorach;

namespace {

ConstellationConfig make_config(std::vector<double> offsets, double advance_per_slot,
                                double lane_length, double altitude = 500.0) {
  ConstellationConfig cfg;
  cfg.num_satellites = static_cast<int>(offsets.size());
  cfg.lane_length_km = lane_length;
  cfg.altitude_km = altitude;
  cfg.orbit_velocity_kms = advance_per_slot;
  cfg.slot_duration_s = 1.0;
  cfg.initial_offsets_km = std::move(offsets);
  cfg.validate();
  return cfg;
}

// independent scalar evaluation of the rate formula, used as the oracle
double rate_oracle(double d, const std::vector<double>& interferers, double w, int p, double alpha,
                   double noise_over_power) {
  double denom = noise_over_power;
  for (double di : interferers) denom += 1.0 / std::pow(di, alpha);
  const double sinr = (1.0 / std::pow(d, alpha)) / denom;
  return (w / p) * std::log2(1.0 + sinr);
}

}  // namespace

TEST_CASE("satellite positions: zero-step identity") {
  const auto cfg = make_config({0.0}, 10.0, 100.0);
  CHECK(satellite_positions(cfg, 0) == std::vector<double>{0.0});
}

TEST_CASE("satellite positions: wraparound arithmetic") {
  const auto cfg = make_config({0.0}, 10.0, 100.0);
  CHECK(satellite_positions(cfg, 12)[0] == doctest::Approx(20.0));

  const auto cfg2 = make_config({0.0, 50.0}, 25.0, 100.0);
  const auto pos = satellite_positions(cfg2, 2);
  CHECK(pos[0] == doctest::Approx(50.0));
  CHECK(pos[1] == doctest::Approx(0.0));
}

TEST_CASE("satellite positions: wraparound period") {
  // L / (v*dt) = 20 slots
  const auto cfg = make_config({0.0, 37.5, 80.0}, 5.0, 100.0);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const long n = rng.uniform_int(1000);
    const auto a = satellite_positions(cfg, n);
    const auto b = satellite_positions(cfg, n + 20);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
  }
}

TEST_CASE("user-satellite distance: overhead pass") {
  const auto cfg = make_config({0.0}, 10.0, 100.0, 500.0);
  CHECK(user_satellite_distance({0, 30.0}, 30.0, cfg) == doctest::Approx(500.0));
}

TEST_CASE("user-satellite distance: wraparound shortest path") {
  auto cfg = make_config({0.0}, 10.0, 100.0, 500.0);
  // altitude is part of the config; hand-build the degenerate altitude=0 case
  cfg.altitude_km = 1e-12;
  CHECK(user_satellite_distance({0, 0.0}, 90.0, cfg) == doctest::Approx(10.0));
}

TEST_CASE("user-satellite distance: 3-4-5 triangle") {
  const auto cfg = make_config({0.0}, 10.0, 100.0, 40.0);
  CHECK(user_satellite_distance({0, 0.0}, 30.0, cfg) == doctest::Approx(50.0));
}

TEST_CASE("user-satellite distance: endpoint symmetry") {
  const auto cfg = make_config({0.0}, 10.0, 200.0, 35.0);
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.uniform(0.0, 200.0);
    const double b = rng.uniform(0.0, 200.0);
    CHECK(user_satellite_distance({0, a}, b, cfg) ==
          doctest::Approx(user_satellite_distance({0, b}, a, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("link rate: hand examples") {
  LinkBudget b1{1.0, 1, 2.0, 1.0};
  CHECK(link_rate(1.0, {}, b1) == doctest::Approx(1.0));

  LinkBudget b2{2.0, 2, 2.0, 0.0};
  const std::vector<double> one_interferer{1.0};
  CHECK(link_rate(1.0, one_interferer, b2) == doctest::Approx(1.0));

  LinkBudget b3{1.0, 1, 2.0, 3.0};
  CHECK(link_rate(1.0, {}, b3) == doctest::Approx(std::log2(4.0 / 3.0)));
}

TEST_CASE("link rate: monotone in distance and interference") {
  LinkBudget budget{5.0, 2, 2.5, 0.3};
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const double d = rng.uniform(0.5, 10.0);
    const double d2 = d + rng.uniform(0.1, 5.0);
    CHECK(link_rate(d2, {}, budget) < link_rate(d, {}, budget));

    const std::vector<double> interferer{rng.uniform(0.5, 10.0)};
    CHECK(link_rate(d, interferer, budget) < link_rate(d, {}, budget));
  }
}

TEST_CASE("link rate: bandwidth and pilot scaling") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const double d = rng.uniform(0.5, 5.0);
    const std::vector<double> interferers{rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0)};
    LinkBudget base{3.0, 1, 2.0, 0.7};
    LinkBudget doubled_w = base;
    doubled_w.bandwidth_hz *= 2.0;
    CHECK(link_rate(d, interferers, doubled_w) ==
          doctest::Approx(2.0 * link_rate(d, interferers, base)).epsilon(1e-12));

    LinkBudget doubled_p = base;
    doubled_p.num_pilots = 2;
    CHECK(link_rate(d, interferers, doubled_p) ==
          doctest::Approx(0.5 * link_rate(d, interferers, base)).epsilon(1e-12));
  }
}

TEST_CASE("link rate: cross-check against independent evaluation on 1000 random inputs") {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    LinkBudget budget;
    budget.bandwidth_hz = rng.uniform(0.1, 100.0);
    budget.num_pilots = 1 + rng.uniform_int(8);
    budget.pathloss_exponent = rng.uniform(2.0, 4.0);
    budget.noise_over_power = rng.uniform(0.0, 2.0);
    const double d = rng.uniform(0.1, 50.0);
    const int n_interferers = rng.uniform_int(4);
    std::vector<double> interferers;
    for (int i = 0; i < n_interferers; ++i) interferers.push_back(rng.uniform(0.1, 50.0));
    if (budget.noise_over_power == 0.0 && interferers.empty()) continue;

    const double got = link_rate(d, interferers, budget);
    const double want = rate_oracle(d, interferers, budget.bandwidth_hz, budget.num_pilots,
                                    budget.pathloss_exponent, budget.noise_over_power);
    CHECK(std::fabs(got - want) <= 1e-12 * std::max(1.0, std::fabs(want)));
  }
}

TEST_CASE("link rate: rejects non-positive distances") {
  LinkBudget budget{1.0, 1, 2.0, 1.0};
  CHECK_THROWS_AS(link_rate(0.0, {}, budget), std::invalid_argument);
  CHECK_THROWS_AS(link_rate(-1.0, {}, budget), std::invalid_argument);
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(link_rate(1.0, bad, budget), std::invalid_argument);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(make_config({}, 10.0, 100.0), std::invalid_argument);
  CHECK_THROWS_AS(make_config({0.0, 0.0}, 10.0, 100.0), std::invalid_argument);   // duplicate
  CHECK_THROWS_AS(make_config({0.0, 100.0}, 10.0, 100.0), std::invalid_argument); // out of range
  CHECK_THROWS_AS(make_config({0.0}, 0.0, 100.0), std::invalid_argument);

  LinkBudget bad;
  bad.bandwidth_hz = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  LinkBudget bad_alpha{1.0, 1, 1.5, 0.0};
  CHECK_THROWS_AS(bad_alpha.validate(), std::invalid_argument);
}

TEST_CASE("equally spaced constellation") {
  const auto cfg = ConstellationConfig::equally_spaced(4, 2000.0, 500.0, 10.0, 1.0);
  CHECK(cfg.initial_offsets_km == std::vector<double>{0.0, 500.0, 1000.0, 1500.0});
}
