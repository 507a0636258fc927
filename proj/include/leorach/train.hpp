#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "leorach/env.hpp"
#include "leorach/metrics.hpp"
#include "leorach/nn.hpp"
#include "leorach/protocol.hpp"

namespace leorach {

struct TrainConfig {
  int episodes = 2000;
  int slots_per_episode = 100;
  double gamma = 0.95;
  double entropy_coef = 0.01;   // beta
  double critic_coef = 0.5;     // weight of the value-regression term
  double learning_rate = 3e-4;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  Variant variant = Variant::eRACH;
  int eval_every = 100;   // evaluation cadence in episodes
  int eval_episodes = 4;  // greedy episodes per evaluation point
  std::vector<int> critic_hidden = {64, 64};

  void validate() const;
};

// Rebuilds per-user observations from environment feedback, slot by slot.
class ObservationTracker {
public:
  explicit ObservationTracker(const EnvConfig& config);

  void reset();
  std::vector<std::vector<double>> observe(long slot) const;
  void record(const SlotOutcome& outcome);

private:
  const EnvConfig* config_;
  std::vector<UserFeedback> feedback_;
};

// Everything one training episode produces, slot-aligned.
struct RolloutBuffer {
  std::vector<SlotTrace> traces;
  std::vector<std::vector<int>> targets;        // [slot][user]
  std::vector<std::vector<double>> log_probs;   // [slot][user]
  std::vector<std::vector<double>> entropies;   // [slot][user]
  std::vector<std::vector<double>> rewards;     // [slot][user]
  std::vector<double> values;                   // [slot]
  std::vector<ForwardCache> critic_caches;      // [slot]
  std::vector<std::vector<double>> joint_observations;  // [slot] critic inputs
  std::vector<SlotOutcome> outcomes;
  std::vector<TrafficRecord> traffic;

  int length() const { return static_cast<int>(traces.size()); }
  int num_users() const { return rewards.empty() ? 0 : static_cast<int>(rewards.front().size()); }
};

// Runs one episode with sampled actions, recording everything update() needs.
// The environment must be freshly reset.
RolloutBuffer collect_episode(Environment& env, const ProtocolAgent& agent, const DenseNet& critic,
                              Rng& policy_rng);

struct ReturnsResult {
  std::vector<std::vector<double>> returns;     // discounted Monte-Carlo, [slot][user]
  std::vector<std::vector<double>> advantages;  // normalized to zero mean / unit variance
  std::vector<double> value_targets;            // per-slot critic regression target
};

// G_n = sum_{t>=n} gamma^{t-n} r_t per user; advantage = G - V(joint state),
// normalized across the whole batch; the critic target is the per-slot mean
// return over users.
ReturnsResult compute_returns(const RolloutBuffer& buffer, double gamma);

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double critic_loss = 0.0;
  double mean_entropy = 0.0;
};

// One optimizer step on the episode batch:
//   loss = sum_{j,n} [ -log pi_j(a_j[n]) * A_j[n] - beta * H_j[n] ]
//        + critic_coef * sum_n (V(s_n) - G_n)^2
// Gradients flow through the full message graph of the variant. Throws on a
// non-finite loss.
UpdateDiagnostics update(ProtocolAgent& agent, DenseNet& critic, const RolloutBuffer& buffer,
                         const ReturnsResult& returns, double entropy_coef, double critic_coef,
                         AgentGrads& agent_grads, DenseGrads& critic_grads,
                         AgentOptimizer& agent_opt, AdamState& critic_opt);

// The exact scalar the update differentiates, with advantages and value
// targets held fixed. Used by the finite-difference checks.
double episode_loss(const ProtocolAgent& agent, const DenseNet& critic,
                    const RolloutBuffer& buffer, const ReturnsResult& returns,
                    double entropy_coef, double critic_coef);

struct TrainInputs {
  EnvConfig env;
  AgentConfig agent;
  TrainConfig train;
  std::string run_id = "run";
  int bits_per_element = 32;
};

struct TrainResult {
  std::uint64_t seed = 0;
  SegmentMap best_segments;    // actor + critic at the best greedy evaluation
  SegmentMap final_segments;
  double best_eval_throughput_bps = 0.0;
  std::vector<MetricsRecord> history;       // one record per training episode
  std::vector<MetricsRecord> eval_history;  // one record per evaluation point
};

// Full training loop for one seed: collect -> returns -> update, with greedy
// evaluations every eval_every episodes (and after the last one).
TrainResult train_single(const TrainInputs& inputs, std::uint64_t seed);

// Convenience: one result per configured seed, sequentially.
std::vector<TrainResult> train_all_seeds(const TrainInputs& inputs);

struct EvalResult {
  MetricsRecord metrics;
  std::vector<SlotOutcome> outcomes;
  std::vector<TrafficRecord> traffic;
};

// Greedy (argmax) evaluation over a number of episodes; env randomness only
// comes from pilot draws, seeded per episode from seed_base.
EvalResult evaluate_greedy(const EnvConfig& env_config, const ProtocolAgent& agent, int episodes,
                           std::uint64_t seed_base, const std::string& run_id,
                           std::uint64_t seed_label, long episode_label, int bits_per_element);

// Mean network throughput of the uniform-random policy, same action space,
// measured in the same harness (baseline for learning-progress checks).
double random_policy_throughput(const EnvConfig& env_config, int episodes,
                                std::uint64_t seed_base);

}  // namespace leorach
