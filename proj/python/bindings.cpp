#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "leorach/checkpoint.hpp"
#include "leorach/config.hpp"
#include "leorach/metrics.hpp"
#include "leorach/train.hpp"

namespace py = pybind11;
using namespace leorach;

namespace {

py::dict metrics_to_dict(const MetricsRecord& r) {
  py::dict d;
  d["run_id"] = r.run_id;
  d["variant"] = variant_name(r.variant);
  d["seed"] = r.seed;
  d["episode"] = r.episode;
  d["avg_throughput_bps"] = r.avg_throughput_bps;
  d["collision_pct"] = r.collision_pct;
  d["signaling_bits_per_slot"] = r.signaling_bits_per_slot;
  return d;
}

py::dict outcome_to_dict(const SlotOutcome& s) {
  py::dict d;
  d["slot"] = s.slot;
  py::list users;
  for (const auto& u : s.users) {
    py::dict e;
    e["target"] = u.target;
    e["pilot"] = u.pilot;
    e["collided"] = u.collided;
    e["interferers"] = u.interferers;
    e["rate_bps"] = u.rate_bps;
    e["reward"] = u.reward;
    users.append(e);
  }
  d["users"] = users;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Slotted random-access simulator and trainer for downlink LEO constellations";

  py::class_<ConstellationConfig>(m, "ConstellationConfig")
      .def(py::init<>())
      .def_static("equally_spaced", &ConstellationConfig::equally_spaced, py::arg("num_satellites"),
                  py::arg("lane_length_km"), py::arg("altitude_km"), py::arg("orbit_velocity_kms"),
                  py::arg("slot_duration_s"))
      .def_readwrite("num_satellites", &ConstellationConfig::num_satellites)
      .def_readwrite("lane_length_km", &ConstellationConfig::lane_length_km)
      .def_readwrite("altitude_km", &ConstellationConfig::altitude_km)
      .def_readwrite("orbit_velocity_kms", &ConstellationConfig::orbit_velocity_kms)
      .def_readwrite("slot_duration_s", &ConstellationConfig::slot_duration_s)
      .def_readwrite("initial_offsets_km", &ConstellationConfig::initial_offsets_km);

  py::class_<LinkBudget>(m, "LinkBudget")
      .def(py::init<>())
      .def_readwrite("bandwidth_hz", &LinkBudget::bandwidth_hz)
      .def_readwrite("num_pilots", &LinkBudget::num_pilots)
      .def_readwrite("pathloss_exponent", &LinkBudget::pathloss_exponent)
      .def_readwrite("noise_over_power", &LinkBudget::noise_over_power);

  m.def("satellite_positions", &satellite_positions, py::arg("config"), py::arg("slot"));
  m.def(
      "user_satellite_distance",
      [](double user_position_km, double sat_position_km, const ConstellationConfig& config) {
        return user_satellite_distance({0, user_position_km}, sat_position_km, config);
      },
      py::arg("user_position_km"), py::arg("sat_position_km"), py::arg("config"));
  m.def(
      "link_rate",
      [](double distance_km, const std::vector<double>& interferer_distances_km,
         const LinkBudget& budget) { return link_rate(distance_km, interferer_distances_km, budget); },
      py::arg("distance_km"), py::arg("interferer_distances_km"), py::arg("budget"));

  m.def(
      "detect_collisions",
      [](const std::vector<std::pair<int, int>>& actions) {
        std::vector<AccessAction> a;
        for (auto [t, p] : actions) a.push_back({t, p});
        const auto flags = detect_collisions(a);
        return std::vector<bool>(flags.begin(), flags.end());
      },
      py::arg("actions"), "Collision flags for a list of (target, pilot) pairs");
  m.def(
      "interferer_sets",
      [](const std::vector<std::pair<int, int>>& actions) {
        std::vector<AccessAction> a;
        for (auto [t, p] : actions) a.push_back({t, p});
        return interferer_sets(a, detect_collisions(a));
      },
      py::arg("actions"), "Interfering satellites per user for (target, pilot) pairs");

  py::class_<Environment>(m, "Environment")
      .def(py::init([](const std::string& config_json) {
             const RunConfig cfg = RunConfig::from_json_text(config_json);
             return Environment(cfg.make_env_config());
           }),
           py::arg("config_json"), "Build an environment from a run-config JSON document")
      .def("reset", py::overload_cast<std::uint64_t>(&Environment::reset), py::arg("seed"))
      .def("step",
           [](Environment& env, const std::vector<int>& targets) {
             return outcome_to_dict(env.step(targets));
           },
           py::arg("targets"))
      .def_property_readonly("slot", &Environment::slot)
      .def_property_readonly("num_users", &Environment::num_users)
      .def_property_readonly("num_satellites", &Environment::num_satellites)
      .def_property_readonly("num_pilots", &Environment::num_pilots)
      .def_property_readonly("rho", &Environment::rho)
      .def_property_readonly("max_rate", &Environment::max_rate);

  m.def("default_config_json", [] { return RunConfig::defaults().to_json_text(); });

  m.def(
      "signaling_cost",
      [](const std::string& variant, int num_users, int bits_per_element) {
        SignalingCostModel model;
        model.bits_per_element = bits_per_element;
        return signaling_cost(parse_variant(variant), num_users, model);
      },
      py::arg("variant"), py::arg("num_users"), py::arg("bits_per_element") = 32);

  m.def(
      "train",
      [](const std::string& config_json, std::uint64_t seed) {
        const RunConfig cfg = RunConfig::from_json_text(config_json);
        TrainInputs inputs;
        inputs.env = cfg.make_env_config();
        inputs.agent = cfg.make_agent_config();
        inputs.train = cfg.train;
        inputs.run_id = cfg.run_id;
        inputs.bits_per_element = cfg.bits_per_element;
        const TrainResult result = train_single(inputs, seed);
        py::dict d;
        d["seed"] = result.seed;
        d["best_eval_throughput_bps"] = result.best_eval_throughput_bps;
        d["checkpoint_text"] = serialize_checkpoint(result.best_segments);
        py::list history;
        for (const auto& r : result.history) history.append(metrics_to_dict(r));
        d["history"] = history;
        py::list eval_history;
        for (const auto& r : result.eval_history) eval_history.append(metrics_to_dict(r));
        d["eval_history"] = eval_history;
        return d;
      },
      py::arg("config_json"), py::arg("seed"),
      "Train one seed; returns history, eval curve, and the best checkpoint text");

  m.def(
      "evaluate_checkpoint",
      [](const std::string& config_json, const std::string& checkpoint_text, int episodes,
         std::uint64_t seed) {
        const RunConfig cfg = RunConfig::from_json_text(config_json);
        const SegmentMap segments = parse_checkpoint(checkpoint_text);
        const ProtocolAgent agent = ProtocolAgent::from_segments(cfg.make_agent_config(), segments);
        const EvalResult result =
            evaluate_greedy(cfg.make_env_config(), agent, episodes, mix_seed(seed, 0xEEE),
                            cfg.run_id, seed, 0, cfg.bits_per_element);
        py::dict d;
        d["metrics"] = metrics_to_dict(result.metrics);
        py::list outcomes;
        for (const auto& o : result.outcomes) outcomes.append(outcome_to_dict(o));
        d["outcomes"] = outcomes;
        return d;
      },
      py::arg("config_json"), py::arg("checkpoint_text"), py::arg("episodes") = 4,
      py::arg("seed") = 1);

  m.attr("__version__") = "0.1.0";
}
