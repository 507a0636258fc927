#include "leorach/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace leorach {

namespace {

// sub-stream tags for deriving independent rngs from one run seed
constexpr std::uint64_t kAgentStream = 0x01;
constexpr std::uint64_t kCriticStream = 0x02;
constexpr std::uint64_t kEnvEpisodeBase = 0x1000;
constexpr std::uint64_t kPolicyEpisodeBase = 0x2000'0000;
constexpr std::uint64_t kEvalEpisodeBase = 0x4000'0000'0000ULL;

std::vector<double> concat_observations(const std::vector<std::vector<double>>& obs) {
  std::vector<double> joint;
  for (const auto& o : obs) joint.insert(joint.end(), o.begin(), o.end());
  return joint;
}

MetricsRecord metrics_from(const std::string& run_id, Variant variant, std::uint64_t seed,
                           long episode, std::span<const SlotOutcome> outcomes,
                           std::span<const TrafficRecord> traffic, int bits_per_element) {
  auto [throughput, collision] = throughput_and_collision(outcomes);
  double bits = 0.0;
  for (const auto& t : traffic) bits += static_cast<double>(traffic_bits(t, bits_per_element));
  if (!traffic.empty()) bits /= static_cast<double>(traffic.size());
  MetricsRecord r;
  r.run_id = run_id;
  r.variant = variant;
  r.seed = seed;
  r.episode = episode;
  r.avg_throughput_bps = throughput;
  r.collision_pct = collision;
  r.signaling_bits_per_slot = bits;
  return r;
}

}  // namespace

void TrainConfig::validate() const {
  if (episodes < 1) throw std::invalid_argument("train: episodes must be >= 1");
  if (slots_per_episode < 1) throw std::invalid_argument("train: slots_per_episode must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("train: gamma must be in [0, 1]");
  if (entropy_coef < 0.0) throw std::invalid_argument("train: entropy_coef must be >= 0");
  if (critic_coef < 0.0) throw std::invalid_argument("train: critic_coef must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (seeds.empty()) throw std::invalid_argument("train: need at least one seed");
  if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("train: eval_episodes must be >= 1");
}

ObservationTracker::ObservationTracker(const EnvConfig& config) : config_(&config) { reset(); }

void ObservationTracker::reset() {
  feedback_.assign(config_->users.size(), UserFeedback{});
}

std::vector<std::vector<double>> ObservationTracker::observe(long slot) const {
  std::vector<std::vector<double>> obs;
  obs.reserve(config_->users.size());
  for (std::size_t j = 0; j < config_->users.size(); ++j)
    obs.push_back(make_observation(config_->constellation, config_->users[j], slot, feedback_[j]));
  return obs;
}

void ObservationTracker::record(const SlotOutcome& outcome) {
  for (std::size_t j = 0; j < outcome.users.size(); ++j) {
    const auto& u = outcome.users[j];
    feedback_[j] = UserFeedback{u.target, u.collided, u.reward};
  }
}

RolloutBuffer collect_episode(Environment& env, const ProtocolAgent& agent, const DenseNet& critic,
                              Rng& policy_rng) {
  const int slots = env.config().slots_per_episode;
  const int J = env.num_users();
  RolloutBuffer buffer;
  buffer.traces.resize(static_cast<std::size_t>(slots));

  ObservationTracker tracker(env.config());
  for (int n = 0; n < slots; ++n) {
    const std::vector<std::vector<double>> obs = tracker.observe(env.slot());
    JointActResult act =
        joint_act(agent, obs, policy_rng, &buffer.traces[static_cast<std::size_t>(n)]);
    const SlotOutcome outcome = env.step(act.targets);

    std::vector<double> rewards(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) rewards[static_cast<std::size_t>(j)] =
        outcome.users[static_cast<std::size_t>(j)].reward;

    std::vector<double> joint = concat_observations(obs);
    ForwardCache critic_cache;
    const std::vector<double> value = forward(critic, joint, &critic_cache);

    buffer.targets.push_back(std::move(act.targets));
    buffer.log_probs.push_back(std::move(act.log_probs));
    buffer.entropies.push_back(std::move(act.entropies));
    buffer.rewards.push_back(std::move(rewards));
    buffer.values.push_back(value[0]);
    buffer.critic_caches.push_back(std::move(critic_cache));
    buffer.joint_observations.push_back(std::move(joint));
    buffer.traffic.push_back(std::move(act.traffic));
    tracker.record(outcome);
    buffer.outcomes.push_back(outcome);
  }
  return buffer;
}

ReturnsResult compute_returns(const RolloutBuffer& buffer, double gamma) {
  const int T = buffer.length();
  const int J = buffer.num_users();
  if (T == 0) throw std::invalid_argument("compute_returns: empty buffer");

  ReturnsResult res;
  res.returns.assign(static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(J), 0.0));
  for (int j = 0; j < J; ++j) {
    double running = 0.0;
    for (int n = T - 1; n >= 0; --n) {
      running = buffer.rewards[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] +
                gamma * running;
      res.returns[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] = running;
    }
  }

  res.value_targets.resize(static_cast<std::size_t>(T));
  for (int n = 0; n < T; ++n) {
    double sum = 0.0;
    for (int j = 0; j < J; ++j) sum += res.returns[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
    res.value_targets[static_cast<std::size_t>(n)] = sum / static_cast<double>(J);
  }

  res.advantages = res.returns;
  double mean = 0.0;
  for (int n = 0; n < T; ++n)
    for (int j = 0; j < J; ++j) {
      res.advantages[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)] -=
          buffer.values[static_cast<std::size_t>(n)];
      mean += res.advantages[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
    }
  const double count = static_cast<double>(T) * static_cast<double>(J);
  mean /= count;
  double var = 0.0;
  for (const auto& row : res.advantages)
    for (double a : row) var += (a - mean) * (a - mean);
  var /= count;
  const double std_dev = std::sqrt(var);
  if (count > 1.0 && std_dev > 0.0) {
    for (auto& row : res.advantages)
      for (double& a : row) a = (a - mean) / std_dev;
  }
  return res;
}

UpdateDiagnostics update(ProtocolAgent& agent, DenseNet& critic, const RolloutBuffer& buffer,
                         const ReturnsResult& returns, double entropy_coef, double critic_coef,
                         AgentGrads& agent_grads, DenseGrads& critic_grads,
                         AgentOptimizer& agent_opt, AdamState& critic_opt) {
  const int T = buffer.length();
  const int J = buffer.num_users();
  agent_grads.zero();
  critic_grads.zero();

  UpdateDiagnostics diag;
  double entropy_sum = 0.0;

  for (int n = 0; n < T; ++n) {
    const std::size_t sn = static_cast<std::size_t>(n);
    // critic regression toward the per-slot return target
    const double v = buffer.values[sn];
    const double g = returns.value_targets[sn];
    diag.critic_loss += critic_coef * (v - g) * (v - g);
    const double dv = 2.0 * critic_coef * (v - g);
    backward(critic, buffer.critic_caches[sn], std::vector<double>{dv}, critic_grads);

    // policy gradient through the variant's message graph
    std::vector<std::vector<double>> logit_grads(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
      const std::size_t sj = static_cast<std::size_t>(j);
      const std::vector<double>& logits = buffer.traces[sn].logits[sj];
      const std::vector<double> probs = softmax(logits);
      const double h = entropy_of(probs);
      const int action = buffer.targets[sn][sj];
      const double adv = returns.advantages[sn][sj];
      const double logp = std::log(probs[static_cast<std::size_t>(action)]);

      diag.policy_loss += -logp * adv - entropy_coef * h;
      entropy_sum += h;

      std::vector<double> dlogits(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i) {
        const double onehot = (static_cast<int>(i) == action) ? 1.0 : 0.0;
        const double dlogp = -(onehot - probs[i]) * adv;
        const double dentropy = entropy_coef * probs[i] * (std::log(probs[i]) + h);
        dlogits[i] = dlogp + dentropy;
      }
      logit_grads[sj] = std::move(dlogits);
    }
    agent.slot_backward(buffer.traces[sn], logit_grads, agent_grads);
  }

  if (!std::isfinite(diag.policy_loss) || !std::isfinite(diag.critic_loss))
    throw std::runtime_error("update: non-finite loss (policy=" + std::to_string(diag.policy_loss) +
                             ", critic=" + std::to_string(diag.critic_loss) + ")");

  agent.apply_gradients(agent_grads, agent_opt);
  adam_step(critic, critic_grads, critic_opt);

  diag.mean_entropy = entropy_sum / (static_cast<double>(T) * static_cast<double>(J));
  return diag;
}

double episode_loss(const ProtocolAgent& agent, const DenseNet& critic,
                    const RolloutBuffer& buffer, const ReturnsResult& returns,
                    double entropy_coef, double critic_coef) {
  const int T = buffer.length();
  const int J = buffer.num_users();
  double loss = 0.0;
  for (int n = 0; n < T; ++n) {
    const std::size_t sn = static_cast<std::size_t>(n);
    const std::vector<std::vector<double>> logits =
        agent.slot_logits(buffer.traces[sn].observations);
    for (int j = 0; j < J; ++j) {
      const std::size_t sj = static_cast<std::size_t>(j);
      const std::vector<double> probs = softmax(logits[sj]);
      const double h = entropy_of(probs);
      const double logp = std::log(probs[static_cast<std::size_t>(buffer.targets[sn][sj])]);
      loss += -logp * returns.advantages[sn][sj] - entropy_coef * h;
    }
    const std::vector<double> v = forward(critic, buffer.joint_observations[sn]);
    const double d = v[0] - returns.value_targets[sn];
    loss += critic_coef * d * d;
  }
  return loss;
}

EvalResult evaluate_greedy(const EnvConfig& env_config, const ProtocolAgent& agent, int episodes,
                           std::uint64_t seed_base, const std::string& run_id,
                           std::uint64_t seed_label, long episode_label, int bits_per_element) {
  EvalResult result;
  Environment env(env_config);
  ObservationTracker tracker(env_config);
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(mix_seed(seed_base, static_cast<std::uint64_t>(ep)));
    tracker.reset();
    for (int n = 0; n < env_config.slots_per_episode; ++n) {
      const auto obs = tracker.observe(env.slot());
      TrafficRecord traffic;
      const std::vector<int> targets = greedy_act(agent, obs, &traffic);
      const SlotOutcome outcome = env.step(targets);
      tracker.record(outcome);
      result.outcomes.push_back(outcome);
      result.traffic.push_back(std::move(traffic));
    }
  }
  result.metrics = metrics_from(run_id, agent.config().variant, seed_label, episode_label,
                                result.outcomes, result.traffic, bits_per_element);
  return result;
}

double random_policy_throughput(const EnvConfig& env_config, int episodes,
                                std::uint64_t seed_base) {
  Environment env(env_config);
  const int J = static_cast<int>(env_config.users.size());
  const int K = env_config.constellation.num_satellites;
  std::vector<SlotOutcome> outcomes;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(mix_seed(seed_base, 2 * static_cast<std::uint64_t>(ep)));
    Rng action_rng(mix_seed(seed_base, 2 * static_cast<std::uint64_t>(ep) + 1));
    for (int n = 0; n < env_config.slots_per_episode; ++n) {
      std::vector<int> targets(static_cast<std::size_t>(J));
      for (int j = 0; j < J; ++j) targets[static_cast<std::size_t>(j)] = action_rng.uniform_int(K + 1);
      outcomes.push_back(env.step(targets));
    }
  }
  return throughput_and_collision(outcomes).first;
}

TrainResult train_single(const TrainInputs& inputs, std::uint64_t seed) {
  inputs.train.validate();
  inputs.agent.validate();

  EnvConfig env_config = inputs.env;
  env_config.slots_per_episode = inputs.train.slots_per_episode;
  Environment env(env_config);

  ProtocolAgent agent = ProtocolAgent::init(inputs.agent, mix_seed(seed, kAgentStream));
  const int J = inputs.agent.num_users;
  const std::vector<int> critic_dims = [&] {
    std::vector<int> dims;
    dims.push_back(J * inputs.agent.observation_size());
    dims.insert(dims.end(), inputs.train.critic_hidden.begin(), inputs.train.critic_hidden.end());
    dims.push_back(1);
    return dims;
  }();
  DenseNet critic = init_dense(critic_dims, mix_seed(seed, kCriticStream));

  AdamConfig adam;
  adam.learning_rate = inputs.train.learning_rate;
  AgentGrads agent_grads = agent.make_grads();
  AgentOptimizer agent_opt = agent.make_optimizer(adam);
  DenseGrads critic_grads = make_grads(critic);
  AdamState critic_opt = make_adam(critic, adam);

  TrainResult result;
  result.seed = seed;
  result.best_eval_throughput_bps = -1.0;

  for (int ep = 0; ep < inputs.train.episodes; ++ep) {
    env.reset(mix_seed(seed, kEnvEpisodeBase + static_cast<std::uint64_t>(ep)));
    Rng policy_rng(mix_seed(seed, kPolicyEpisodeBase + static_cast<std::uint64_t>(ep)));
    RolloutBuffer buffer = collect_episode(env, agent, critic, policy_rng);
    const ReturnsResult returns = compute_returns(buffer, inputs.train.gamma);
    update(agent, critic, buffer, returns, inputs.train.entropy_coef, inputs.train.critic_coef,
           agent_grads, critic_grads, agent_opt, critic_opt);

    result.history.push_back(metrics_from(inputs.run_id, inputs.train.variant, seed, ep,
                                          buffer.outcomes, buffer.traffic,
                                          inputs.bits_per_element));

    const bool last = ep + 1 == inputs.train.episodes;
    if ((ep + 1) % inputs.train.eval_every == 0 || last) {
      EvalResult eval = evaluate_greedy(
          env_config, agent, inputs.train.eval_episodes,
          mix_seed(seed, kEvalEpisodeBase + static_cast<std::uint64_t>(ep)), inputs.run_id, seed,
          ep, inputs.bits_per_element);
      result.eval_history.push_back(eval.metrics);
      if (eval.metrics.avg_throughput_bps > result.best_eval_throughput_bps) {
        result.best_eval_throughput_bps = eval.metrics.avg_throughput_bps;
        result.best_segments = agent.to_segments();
        result.best_segments["critic"] = critic;
      }
    }
  }

  result.final_segments = agent.to_segments();
  result.final_segments["critic"] = critic;
  return result;
}

std::vector<TrainResult> train_all_seeds(const TrainInputs& inputs) {
  std::vector<TrainResult> results;
  results.reserve(inputs.train.seeds.size());
  for (std::uint64_t seed : inputs.train.seeds) results.push_back(train_single(inputs, seed));
  return results;
}

}  // namespace leorach
