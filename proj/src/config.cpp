#include "leorach/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace leorach {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& section, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = section.begin(); it != section.end(); ++it) {
    if (!known.contains(it.key()))
      throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const json& section, const std::string& key, const T& fallback) {
  if (!section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  // desk-scale scenario: 4 satellites on a 2000 km ring at 500 km altitude,
  // one satellite advances L/200 per slot; 3 clustered users contending for
  // 2 pilots
  cfg.constellation = ConstellationConfig::equally_spaced(4, 2000.0, 500.0, 10.0, 1.0);
  cfg.budget.bandwidth_hz = 10e6;
  cfg.budget.num_pilots = 2;
  cfg.budget.pathloss_exponent = 2.0;
  cfg.budget.noise_over_power = 1e-7;
  cfg.users = {{0, 900.0}, {1, 1000.0}, {2, 1100.0}};
  cfg.train.variant = cfg.variant;
  return cfg;
}

EnvConfig RunConfig::make_env_config() const {
  EnvConfig env;
  env.constellation = constellation;
  env.budget = budget;
  env.users = users;
  env.rho = rho;
  env.slots_per_episode = slots_per_episode;
  env.interference_enabled = interference;
  return env;
}

AgentConfig RunConfig::make_agent_config() const {
  AgentConfig agent;
  agent.variant = variant;
  agent.num_users = static_cast<int>(users.size());
  agent.num_satellites = constellation.num_satellites;
  agent.widths = widths;
  agent.lower_hidden = lower_hidden;
  agent.upper_hidden = upper_hidden;
  agent.relay_hidden = relay_hidden;
  agent.relay_mixing = relay_mixing;
  agent.share_parameters = share_parameters;
  return agent;
}

SignalingCostModel RunConfig::make_cost_model() const {
  SignalingCostModel model;
  model.bits_per_element = bits_per_element;
  model.widths = widths;
  return model;
}

void RunConfig::validate() const {
  make_env_config().validate();
  make_agent_config().validate();
  TrainConfig t = train;
  t.slots_per_episode = slots_per_episode;
  t.validate();
  if (bits_per_element < 1) throw std::invalid_argument("config: bits_per_element must be >= 1");
  if (run_id.empty()) throw std::invalid_argument("config: run_id must not be empty");
  for (char c : run_id)
    if (c == ',' || c == '\n')
      throw std::invalid_argument("config: run_id must not contain commas or newlines");
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown_keys(root, {"run_id", "constellation", "budget", "users", "env", "protocol",
                             "train", "cost", "output"},
                      "the top level");

  RunConfig cfg = defaults();
  cfg.run_id = get_or(root, "run_id", cfg.run_id);

  if (root.contains("constellation")) {
    const json& c = root.at("constellation");
    reject_unknown_keys(c, {"num_satellites", "lane_length_km", "altitude_km",
                            "orbit_velocity_kms", "slot_duration_s", "initial_offsets_km"},
                        "constellation");
    ConstellationConfig cc;
    cc.num_satellites = get_or(c, "num_satellites", 4);
    cc.lane_length_km = get_or(c, "lane_length_km", 2000.0);
    cc.altitude_km = get_or(c, "altitude_km", 500.0);
    cc.orbit_velocity_kms = get_or(c, "orbit_velocity_kms", 10.0);
    cc.slot_duration_s = get_or(c, "slot_duration_s", 1.0);
    if (c.contains("initial_offsets_km")) {
      cc.initial_offsets_km = c.at("initial_offsets_km").get<std::vector<double>>();
    } else {
      cc = ConstellationConfig::equally_spaced(cc.num_satellites, cc.lane_length_km,
                                               cc.altitude_km, cc.orbit_velocity_kms,
                                               cc.slot_duration_s);
    }
    cfg.constellation = cc;
  }

  if (root.contains("budget")) {
    const json& b = root.at("budget");
    reject_unknown_keys(b, {"bandwidth_hz", "num_pilots", "pathloss_exponent", "noise_over_power"},
                        "budget");
    cfg.budget.bandwidth_hz = get_or(b, "bandwidth_hz", cfg.budget.bandwidth_hz);
    cfg.budget.num_pilots = get_or(b, "num_pilots", cfg.budget.num_pilots);
    cfg.budget.pathloss_exponent = get_or(b, "pathloss_exponent", cfg.budget.pathloss_exponent);
    cfg.budget.noise_over_power = get_or(b, "noise_over_power", cfg.budget.noise_over_power);
  }

  if (root.contains("users")) {
    const json& u = root.at("users");
    reject_unknown_keys(u, {"positions_km"}, "users");
    const auto positions = u.at("positions_km").get<std::vector<double>>();
    cfg.users.clear();
    for (std::size_t i = 0; i < positions.size(); ++i)
      cfg.users.push_back({static_cast<int>(i), positions[i]});
  }

  if (root.contains("env")) {
    const json& e = root.at("env");
    reject_unknown_keys(e, {"rho", "slots_per_episode", "interference"}, "env");
    cfg.rho = get_or(e, "rho", cfg.rho);
    cfg.slots_per_episode = get_or(e, "slots_per_episode", cfg.slots_per_episode);
    cfg.interference = get_or(e, "interference", cfg.interference);
  }

  if (root.contains("protocol")) {
    const json& p = root.at("protocol");
    reject_unknown_keys(p, {"variant", "widths", "lower_hidden", "upper_hidden", "relay_hidden",
                            "relay_mixing", "share_parameters"},
                        "protocol");
    if (p.contains("variant")) cfg.variant = parse_variant(p.at("variant").get<std::string>());
    if (p.contains("widths")) {
      const json& w = p.at("widths");
      reject_unknown_keys(w, {"latent", "peer_msg", "uplink_raw", "uplink_code", "downlink",
                              "downlink_decoded"},
                          "protocol.widths");
      cfg.widths.latent_dim = get_or(w, "latent", cfg.widths.latent_dim);
      cfg.widths.peer_msg_dim = get_or(w, "peer_msg", cfg.widths.peer_msg_dim);
      cfg.widths.uplink_raw_dim = get_or(w, "uplink_raw", cfg.widths.uplink_raw_dim);
      cfg.widths.uplink_code_dim = get_or(w, "uplink_code", cfg.widths.uplink_code_dim);
      cfg.widths.downlink_dim = get_or(w, "downlink", cfg.widths.downlink_dim);
      cfg.widths.downlink_decoded_dim =
          get_or(w, "downlink_decoded", cfg.widths.downlink_decoded_dim);
    }
    cfg.lower_hidden = get_or(p, "lower_hidden", cfg.lower_hidden);
    cfg.upper_hidden = get_or(p, "upper_hidden", cfg.upper_hidden);
    cfg.relay_hidden = get_or(p, "relay_hidden", cfg.relay_hidden);
    cfg.relay_mixing = get_or(p, "relay_mixing", cfg.relay_mixing);
    cfg.share_parameters = get_or(p, "share_parameters", cfg.share_parameters);
  }

  if (root.contains("train")) {
    const json& t = root.at("train");
    reject_unknown_keys(t, {"episodes", "gamma", "entropy_coef", "critic_coef", "learning_rate",
                            "seeds", "eval_every", "eval_episodes", "critic_hidden"},
                        "train");
    cfg.train.episodes = get_or(t, "episodes", cfg.train.episodes);
    cfg.train.gamma = get_or(t, "gamma", cfg.train.gamma);
    cfg.train.entropy_coef = get_or(t, "entropy_coef", cfg.train.entropy_coef);
    cfg.train.critic_coef = get_or(t, "critic_coef", cfg.train.critic_coef);
    cfg.train.learning_rate = get_or(t, "learning_rate", cfg.train.learning_rate);
    cfg.train.seeds = get_or(t, "seeds", cfg.train.seeds);
    cfg.train.eval_every = get_or(t, "eval_every", cfg.train.eval_every);
    cfg.train.eval_episodes = get_or(t, "eval_episodes", cfg.train.eval_episodes);
    cfg.train.critic_hidden = get_or(t, "critic_hidden", cfg.train.critic_hidden);
  }

  if (root.contains("cost")) {
    const json& c = root.at("cost");
    reject_unknown_keys(c, {"bits_per_element"}, "cost");
    cfg.bits_per_element = get_or(c, "bits_per_element", cfg.bits_per_element);
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    reject_unknown_keys(o, {"dir"}, "output");
    cfg.out_dir = get_or(o, "dir", cfg.out_dir);
  }

  cfg.train.variant = cfg.variant;
  cfg.train.slots_per_episode = cfg.slots_per_episode;
  cfg.validate();
  return cfg;
}

std::string RunConfig::to_json_text() const {
  json root;
  root["run_id"] = run_id;
  root["constellation"] = {{"num_satellites", constellation.num_satellites},
                           {"lane_length_km", constellation.lane_length_km},
                           {"altitude_km", constellation.altitude_km},
                           {"orbit_velocity_kms", constellation.orbit_velocity_kms},
                           {"slot_duration_s", constellation.slot_duration_s},
                           {"initial_offsets_km", constellation.initial_offsets_km}};
  root["budget"] = {{"bandwidth_hz", budget.bandwidth_hz},
                    {"num_pilots", budget.num_pilots},
                    {"pathloss_exponent", budget.pathloss_exponent},
                    {"noise_over_power", budget.noise_over_power}};
  std::vector<double> positions;
  for (const auto& u : users) positions.push_back(u.ground_position_km);
  root["users"] = {{"positions_km", positions}};
  root["env"] = {{"rho", rho},
                 {"slots_per_episode", slots_per_episode},
                 {"interference", interference}};
  root["protocol"] = {{"variant", variant_name(variant)},
                      {"widths",
                       {{"latent", widths.latent_dim},
                        {"peer_msg", widths.peer_msg_dim},
                        {"uplink_raw", widths.uplink_raw_dim},
                        {"uplink_code", widths.uplink_code_dim},
                        {"downlink", widths.downlink_dim},
                        {"downlink_decoded", widths.downlink_decoded_dim}}},
                      {"lower_hidden", lower_hidden},
                      {"upper_hidden", upper_hidden},
                      {"relay_hidden", relay_hidden},
                      {"relay_mixing", relay_mixing},
                      {"share_parameters", share_parameters}};
  root["train"] = {{"episodes", train.episodes},
                   {"gamma", train.gamma},
                   {"entropy_coef", train.entropy_coef},
                   {"critic_coef", train.critic_coef},
                   {"learning_rate", train.learning_rate},
                   {"seeds", train.seeds},
                   {"eval_every", train.eval_every},
                   {"eval_episodes", train.eval_episodes},
                   {"critic_hidden", train.critic_hidden}};
  root["cost"] = {{"bits_per_element", bits_per_element}};
  root["output"] = {{"dir", out_dir}};
  return root.dump(2) + "\n";
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

}  // namespace leorach
