#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leorach/checkpoint.hpp"
#include "leorach/env.hpp"
#include "leorach/nn.hpp"
#include "leorach/orbit.hpp"

namespace leorach {

enum class Variant { eRACH, De2RACH, Ce2RACH };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);  // throws on unknown names

// -------- observations --------

// One-slot feedback folded into the next observation.
struct UserFeedback {
  int prev_target = 0;        // 0 = backoff
  bool prev_collided = false;
  double prev_reward = 0.0;   // already normalized to [-1, 1]
};

int observation_dim(int num_satellites);  // K + (K+1) + 3

// Per-user local state: K signed wrapped satellite offsets normalized by L/2,
// one-hot of the previous action, previous collision flag, previous reward,
// and the slot phase within the constellation wrap period. Every entry lies
// in [-1, 1].
std::vector<double> make_observation(const ConstellationConfig& constellation,
                                     const GroundUser& user, long slot,
                                     const UserFeedback& feedback);

// -------- message accounting --------

enum class MessageDirection { PeerToPeer, Uplink, Downlink };

struct MessageRecord {
  int sender = -1;    // user index, or -1 for the relay
  int receiver = -1;  // user index, or -1 for the relay
  MessageDirection direction = MessageDirection::PeerToPeer;
  int width = 0;      // real-valued elements carried
};

struct TrafficRecord {
  std::vector<MessageRecord> messages;

  long total_elements() const;
  long count() const { return static_cast<long>(messages.size()); }
};

// -------- actor architectures --------

struct ProtocolWidths {
  int latent_dim = 8;            // z_j fed to the upper segment
  int peer_msg_dim = 4;          // De2RACH per-peer message width
  int uplink_raw_dim = 8;        // Ce2RACH pre-compression uplink width
  int uplink_code_dim = 4;       // Ce2RACH transmitted uplink width
  int downlink_dim = 4;          // Ce2RACH transmitted downlink width
  int downlink_decoded_dim = 8;  // decoder output fed to the upper segment
};

struct AgentConfig {
  Variant variant = Variant::eRACH;
  int num_users = 1;
  int num_satellites = 1;
  ProtocolWidths widths;
  std::vector<int> lower_hidden = {64, 64};
  std::vector<int> upper_hidden = {64};
  std::vector<int> relay_hidden = {64};
  // Default: the relay mixes all users' uplinks (cross-user coupling). The
  // per-user pass-through ablation routes each uplink through the shared
  // relay weights in isolation.
  bool relay_mixing = true;
  bool share_parameters = false;

  int observation_size() const { return observation_dim(num_satellites); }
  int num_actions() const { return num_satellites + 1; }
  void validate() const;
};

// Everything recorded during one slot's forward pass, enough to replay the
// exact backward pass later.
struct SlotTrace {
  std::vector<std::vector<double>> observations;
  std::vector<ForwardCache> lower, upper;
  std::vector<ForwardCache> uplink_encoder, downlink_decoder;  // Ce2RACH
  ForwardCache relay;                                          // mixing relay
  std::vector<ForwardCache> relay_per_user;                    // ablation relay
  std::vector<std::vector<double>> logits;
};

// Gradients for every parameter owner, mirroring the agent's layout.
struct AgentGrads {
  std::vector<DenseGrads> lower, upper, uplink_encoder, downlink_decoder;
  DenseGrads relay;

  void zero();
};

// Optimizer state per segment, mirroring AgentGrads.
struct AgentOptimizer {
  std::vector<AdamState> lower, upper, uplink_encoder, downlink_decoder;
  AdamState relay;
};

// The three actor variants behind one interface. eRACH runs each user's
// lower/upper stack in isolation; De2RACH splices peer-to-peer messages
// between the segments; Ce2RACH routes compressed uplinks through a relay
// segment shared by all users and decodes per-user downlinks.
class ProtocolAgent {
public:
  static ProtocolAgent init(const AgentConfig& config, std::uint64_t seed);

  const AgentConfig& config() const { return config_; }

  // ----- per-segment ops (exposed for tests and composition) -----

  // eRACH: logits = upper_j(lower_j(s_j))
  std::vector<double> erach_logits(int user, std::span<const double> observation) const;

  struct EmitResult {
    std::vector<double> latent;                      // z_j
    std::vector<std::vector<double>> messages;       // ordered by ascending recipient
  };
  // De2RACH: lower_j's output split into z_j and J-1 outgoing messages.
  EmitResult de2rach_emit(int user, std::span<const double> observation) const;

  // De2RACH: logits = upper_j(z_j ++ incoming messages ordered by ascending
  // sender index). Throws unless exactly J-1 messages of the right width.
  std::vector<double> de2rach_logits(int user, std::span<const double> latent,
                                     const std::vector<std::vector<double>>& incoming) const;

  struct UplinkResult {
    std::vector<double> latent;  // z_j
    std::vector<double> uplink;  // compressed m_j^up
  };
  // Ce2RACH: lower_j's output split into z_j and a raw uplink, which the
  // per-user encoder compresses to uplink_code_dim.
  UplinkResult ce2rach_uplink(int user, std::span<const double> observation) const;

  // Ce2RACH: the shared relay consumes all J uplinks (ordered by user index)
  // and emits one compressed downlink per user.
  std::vector<std::vector<double>> relay_downlinks(
      const std::vector<std::vector<double>>& uplinks) const;

  // Ce2RACH: logits = upper_j(z_j ++ decoder_j(m_j^dn)).
  std::vector<double> ce2rach_logits(int user, std::span<const double> latent,
                                     std::span<const double> downlink) const;

  // ----- full-slot pipeline -----

  // Runs the variant's wiring for all users at once. Optionally records the
  // forward caches (for training) and the transmitted messages.
  std::vector<std::vector<double>> slot_logits(const std::vector<std::vector<double>>& observations,
                                               SlotTrace* trace = nullptr,
                                               TrafficRecord* traffic = nullptr) const;

  // Backpropagates per-user logit gradients through the slot's full message
  // graph, accumulating into grads (zero it before the first slot).
  void slot_backward(const SlotTrace& trace, const std::vector<std::vector<double>>& logit_grads,
                     AgentGrads& grads) const;

  AgentGrads make_grads() const;
  AgentOptimizer make_optimizer(const AdamConfig& adam) const;
  void apply_gradients(const AgentGrads& grads, AgentOptimizer& opt);

  // ----- persistence -----

  SegmentMap to_segments() const;
  static ProtocolAgent from_segments(const AgentConfig& config, const SegmentMap& segments);

  // number of distinct parameter owners for per-user segments (J, or 1 when
  // parameters are shared)
  int num_owners() const { return config_.share_parameters ? 1 : config_.num_users; }
  int owner_of(int user) const { return config_.share_parameters ? 0 : user; }

  DenseNet& lower(int owner) { return lower_[static_cast<std::size_t>(owner)]; }
  DenseNet& upper(int owner) { return upper_[static_cast<std::size_t>(owner)]; }
  DenseNet& uplink_encoder(int owner) { return uplink_encoder_[static_cast<std::size_t>(owner)]; }
  DenseNet& downlink_decoder(int owner) { return downlink_decoder_[static_cast<std::size_t>(owner)]; }
  DenseNet& relay() { return relay_; }
  const DenseNet& relay() const { return relay_; }

private:
  ProtocolAgent() = default;

  std::vector<double> upper_input_de2rach(int user, std::span<const double> latent,
                                          const std::vector<std::vector<double>>& incoming) const;

  AgentConfig config_;
  std::vector<DenseNet> lower_, upper_;
  std::vector<DenseNet> uplink_encoder_, downlink_decoder_;  // Ce2RACH only
  DenseNet relay_;                                           // Ce2RACH only
};

// -------- one-slot orchestration --------

struct JointActResult {
  std::vector<int> targets;
  std::vector<double> log_probs;
  std::vector<double> entropies;
  std::vector<std::vector<double>> logits;
  TrafficRecord traffic;
};

// Samples one action per user from the variant's policy and records every
// transmitted message for cost accounting.
JointActResult joint_act(const ProtocolAgent& agent,
                         const std::vector<std::vector<double>>& observations, Rng& rng,
                         SlotTrace* trace = nullptr);

// Deterministic argmax actions for evaluation.
std::vector<int> greedy_act(const ProtocolAgent& agent,
                            const std::vector<std::vector<double>>& observations,
                            TrafficRecord* traffic = nullptr);

}  // namespace leorach
