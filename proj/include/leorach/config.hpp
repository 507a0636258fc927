#pragma once

#include <filesystem>
#include <string>

#include "leorach/env.hpp"
#include "leorach/metrics.hpp"
#include "leorach/protocol.hpp"
#include "leorach/train.hpp"

namespace leorach {

// One document configures a whole run: geometry, radio, users, protocol
// wiring, training budget, and outputs. Unknown keys are rejected at load so
// typos surface immediately.
struct RunConfig {
  std::string run_id = "run";

  ConstellationConfig constellation;
  LinkBudget budget;
  std::vector<GroundUser> users;

  double rho = -1.0;  // < 0 selects the default 0.5 * R_max
  bool interference = true;
  int slots_per_episode = 100;

  Variant variant = Variant::eRACH;
  ProtocolWidths widths;
  std::vector<int> lower_hidden = {64, 64};
  std::vector<int> upper_hidden = {64};
  std::vector<int> relay_hidden = {64};
  bool relay_mixing = true;
  bool share_parameters = false;

  TrainConfig train;
  int bits_per_element = 32;
  std::string out_dir = "out";

  static RunConfig defaults();
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_json_text(const std::string& text);
  std::string to_json_text() const;

  EnvConfig make_env_config() const;
  AgentConfig make_agent_config() const;
  SignalingCostModel make_cost_model() const;

  void validate() const;
};

}  // namespace leorach
