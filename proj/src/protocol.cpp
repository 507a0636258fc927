#include "leorach/protocol.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace leorach {

namespace {

// chunk index of recipient k inside sender j's outgoing block
int recipient_chunk(int sender, int recipient) {
  return recipient < sender ? recipient : recipient - 1;
}

std::vector<int> chain_dims(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> dims;
  dims.reserve(hidden.size() + 2);
  dims.push_back(input);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

struct SegmentDims {
  std::vector<int> lower, upper, uplink_encoder, downlink_decoder, relay;
};

SegmentDims segment_dims(const AgentConfig& cfg) {
  const int J = cfg.num_users;
  const auto& w = cfg.widths;
  SegmentDims d;
  int lower_out = w.latent_dim;
  int upper_in = w.latent_dim;
  switch (cfg.variant) {
    case Variant::eRACH:
      break;
    case Variant::De2RACH:
      lower_out += (J - 1) * w.peer_msg_dim;
      upper_in += (J - 1) * w.peer_msg_dim;
      break;
    case Variant::Ce2RACH:
      lower_out += w.uplink_raw_dim;
      upper_in += w.downlink_decoded_dim;
      d.uplink_encoder = {w.uplink_raw_dim, w.uplink_code_dim};
      d.downlink_decoder = {w.downlink_dim, w.downlink_decoded_dim};
      d.relay = cfg.relay_mixing
                    ? chain_dims(J * w.uplink_code_dim, cfg.relay_hidden, J * w.downlink_dim)
                    : chain_dims(w.uplink_code_dim, cfg.relay_hidden, w.downlink_dim);
      break;
  }
  d.lower = chain_dims(cfg.observation_size(), cfg.lower_hidden, lower_out);
  d.upper = chain_dims(upper_in, cfg.upper_hidden, cfg.num_actions());
  return d;
}

void check_dims(const DenseNet& net, const std::vector<int>& expected, const std::string& name) {
  if (net.layer_dims != expected)
    throw std::invalid_argument("protocol: segment '" + name + "' has unexpected layer dims");
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::eRACH: return "eRACH";
    case Variant::De2RACH: return "De2RACH";
    case Variant::Ce2RACH: return "Ce2RACH";
  }
  throw std::logic_error("variant_name: unreachable");
}

Variant parse_variant(const std::string& name) {
  std::string lowered;
  for (char c : name) lowered.push_back(static_cast<char>(std::tolower(c)));
  if (lowered == "erach") return Variant::eRACH;
  if (lowered == "de2rach") return Variant::De2RACH;
  if (lowered == "ce2rach") return Variant::Ce2RACH;
  throw std::invalid_argument("unknown protocol variant '" + name + "'");
}

int observation_dim(int num_satellites) { return 2 * num_satellites + 4; }

std::vector<double> make_observation(const ConstellationConfig& constellation,
                                     const GroundUser& user, long slot,
                                     const UserFeedback& feedback) {
  const int K = constellation.num_satellites;
  if (feedback.prev_target < 0 || feedback.prev_target > K)
    throw std::invalid_argument("make_observation: previous target out of range");
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(observation_dim(K)));

  const std::vector<double> sat_pos = satellite_positions(constellation, slot);
  const double half_lane = constellation.lane_length_km / 2.0;
  for (double pos : sat_pos)
    obs.push_back(signed_wrapped_offset(pos, user.ground_position_km,
                                        constellation.lane_length_km) / half_lane);

  for (int a = 0; a <= K; ++a) obs.push_back(a == feedback.prev_target ? 1.0 : 0.0);
  obs.push_back(feedback.prev_collided ? 1.0 : 0.0);
  obs.push_back(feedback.prev_reward);

  const double period = constellation.wrap_period_slots();
  obs.push_back(std::fmod(static_cast<double>(slot), period) / period);
  return obs;
}

long TrafficRecord::total_elements() const {
  long total = 0;
  for (const auto& m : messages) total += m.width;
  return total;
}

void AgentConfig::validate() const {
  if (num_users < 1) throw std::invalid_argument("agent: num_users must be >= 1");
  if (num_satellites < 1) throw std::invalid_argument("agent: num_satellites must be >= 1");
  const auto& w = widths;
  if (w.latent_dim < 1) throw std::invalid_argument("agent: latent_dim must be >= 1");
  if (variant == Variant::De2RACH && w.peer_msg_dim < 1)
    throw std::invalid_argument("agent: peer_msg_dim must be >= 1");
  if (variant == Variant::Ce2RACH) {
    if (w.uplink_raw_dim < 1 || w.uplink_code_dim < 1 || w.downlink_dim < 1 ||
        w.downlink_decoded_dim < 1)
      throw std::invalid_argument("agent: Ce2RACH message widths must be >= 1");
    if (w.uplink_code_dim >= w.uplink_raw_dim)
      throw std::invalid_argument("agent: uplink_code_dim must compress (be < uplink_raw_dim)");
  }
  for (const auto* hidden : {&lower_hidden, &upper_hidden, &relay_hidden})
    for (int h : *hidden)
      if (h < 1) throw std::invalid_argument("agent: hidden widths must be >= 1");
}

ProtocolAgent ProtocolAgent::init(const AgentConfig& config, std::uint64_t seed) {
  config.validate();
  const SegmentDims dims = segment_dims(config);

  ProtocolAgent agent;
  agent.config_ = config;
  const int owners = agent.num_owners();
  for (int i = 0; i < owners; ++i) {
    agent.lower_.push_back(init_dense(dims.lower, mix_seed(seed, 4 * i + 0)));
    agent.upper_.push_back(init_dense(dims.upper, mix_seed(seed, 4 * i + 1)));
    if (config.variant == Variant::Ce2RACH) {
      agent.uplink_encoder_.push_back(init_dense(dims.uplink_encoder, mix_seed(seed, 4 * i + 2)));
      agent.downlink_decoder_.push_back(
          init_dense(dims.downlink_decoder, mix_seed(seed, 4 * i + 3)));
    }
  }
  if (config.variant == Variant::Ce2RACH)
    agent.relay_ = init_dense(dims.relay, mix_seed(seed, 0x5e1aULL));
  return agent;
}

std::vector<double> ProtocolAgent::erach_logits(int user, std::span<const double> observation) const {
  if (config_.variant != Variant::eRACH)
    throw std::logic_error("erach_logits: agent is not an eRACH variant");
  const int o = owner_of(user);
  const std::vector<double> latent = forward(lower_[static_cast<std::size_t>(o)], observation);
  return forward(upper_[static_cast<std::size_t>(o)], latent);
}

ProtocolAgent::EmitResult ProtocolAgent::de2rach_emit(int user,
                                                      std::span<const double> observation) const {
  if (config_.variant != Variant::De2RACH)
    throw std::logic_error("de2rach_emit: agent is not a De2RACH variant");
  const int J = config_.num_users;
  const int dz = config_.widths.latent_dim;
  const int dm = config_.widths.peer_msg_dim;
  const std::vector<double> out = forward(lower_[static_cast<std::size_t>(owner_of(user))],
                                          observation);
  EmitResult res;
  res.latent.assign(out.begin(), out.begin() + dz);
  res.messages.reserve(static_cast<std::size_t>(J - 1));
  for (int chunk = 0; chunk < J - 1; ++chunk) {
    const auto begin = out.begin() + dz + chunk * dm;
    res.messages.emplace_back(begin, begin + dm);
  }
  return res;
}

std::vector<double> ProtocolAgent::upper_input_de2rach(
    int user, std::span<const double> latent,
    const std::vector<std::vector<double>>& incoming) const {
  const int J = config_.num_users;
  const int dz = config_.widths.latent_dim;
  const int dm = config_.widths.peer_msg_dim;
  (void)user;
  if (static_cast<int>(latent.size()) != dz)
    throw std::invalid_argument("de2rach_logits: latent width mismatch");
  if (static_cast<int>(incoming.size()) != J - 1)
    throw std::invalid_argument("de2rach_logits: expected " + std::to_string(J - 1) +
                                " incoming messages, got " + std::to_string(incoming.size()));
  std::vector<double> input(latent.begin(), latent.end());
  for (const auto& m : incoming) {
    if (static_cast<int>(m.size()) != dm)
      throw std::invalid_argument("de2rach_logits: incoming message width mismatch");
    input.insert(input.end(), m.begin(), m.end());
  }
  return input;
}

std::vector<double> ProtocolAgent::de2rach_logits(
    int user, std::span<const double> latent,
    const std::vector<std::vector<double>>& incoming) const {
  if (config_.variant != Variant::De2RACH)
    throw std::logic_error("de2rach_logits: agent is not a De2RACH variant");
  const std::vector<double> input = upper_input_de2rach(user, latent, incoming);
  return forward(upper_[static_cast<std::size_t>(owner_of(user))], input);
}

ProtocolAgent::UplinkResult ProtocolAgent::ce2rach_uplink(
    int user, std::span<const double> observation) const {
  if (config_.variant != Variant::Ce2RACH)
    throw std::logic_error("ce2rach_uplink: agent is not a Ce2RACH variant");
  const int o = owner_of(user);
  const int dz = config_.widths.latent_dim;
  const std::vector<double> out = forward(lower_[static_cast<std::size_t>(o)], observation);
  UplinkResult res;
  res.latent.assign(out.begin(), out.begin() + dz);
  const std::vector<double> raw(out.begin() + dz, out.end());
  res.uplink = forward(uplink_encoder_[static_cast<std::size_t>(o)], raw);
  return res;
}

std::vector<std::vector<double>> ProtocolAgent::relay_downlinks(
    const std::vector<std::vector<double>>& uplinks) const {
  if (config_.variant != Variant::Ce2RACH)
    throw std::logic_error("relay_downlinks: agent is not a Ce2RACH variant");
  const int J = config_.num_users;
  const int dc = config_.widths.uplink_code_dim;
  const int dd = config_.widths.downlink_dim;
  if (static_cast<int>(uplinks.size()) != J)
    throw std::invalid_argument("relay_downlinks: expected " + std::to_string(J) + " uplinks");
  for (const auto& u : uplinks)
    if (static_cast<int>(u.size()) != dc)
      throw std::invalid_argument("relay_downlinks: uplink width mismatch");

  std::vector<std::vector<double>> downlinks;
  downlinks.reserve(static_cast<std::size_t>(J));
  if (config_.relay_mixing) {
    std::vector<double> input;
    input.reserve(static_cast<std::size_t>(J * dc));
    for (const auto& u : uplinks) input.insert(input.end(), u.begin(), u.end());
    const std::vector<double> output = forward(relay_, input);
    for (int j = 0; j < J; ++j)
      downlinks.emplace_back(output.begin() + j * dd, output.begin() + (j + 1) * dd);
  } else {
    for (int j = 0; j < J; ++j)
      downlinks.push_back(forward(relay_, uplinks[static_cast<std::size_t>(j)]));
  }
  return downlinks;
}

std::vector<double> ProtocolAgent::ce2rach_logits(int user, std::span<const double> latent,
                                                  std::span<const double> downlink) const {
  if (config_.variant != Variant::Ce2RACH)
    throw std::logic_error("ce2rach_logits: agent is not a Ce2RACH variant");
  const int o = owner_of(user);
  const std::vector<double> decoded = forward(downlink_decoder_[static_cast<std::size_t>(o)],
                                              downlink);
  std::vector<double> input(latent.begin(), latent.end());
  input.insert(input.end(), decoded.begin(), decoded.end());
  return forward(upper_[static_cast<std::size_t>(o)], input);
}

std::vector<std::vector<double>> ProtocolAgent::slot_logits(
    const std::vector<std::vector<double>>& observations, SlotTrace* trace,
    TrafficRecord* traffic) const {
  const int J = config_.num_users;
  const auto& w = config_.widths;
  if (static_cast<int>(observations.size()) != J)
    throw std::invalid_argument("slot_logits: expected one observation per user");

  if (trace) {
    *trace = SlotTrace{};
    trace->observations = observations;
    trace->lower.resize(static_cast<std::size_t>(J));
    trace->upper.resize(static_cast<std::size_t>(J));
  }

  std::vector<std::vector<double>> logits(static_cast<std::size_t>(J));

  switch (config_.variant) {
    case Variant::eRACH: {
      for (int j = 0; j < J; ++j) {
        const int o = owner_of(j);
        const std::vector<double> latent =
            forward(lower_[static_cast<std::size_t>(o)], observations[static_cast<std::size_t>(j)],
                    trace ? &trace->lower[static_cast<std::size_t>(j)] : nullptr);
        logits[static_cast<std::size_t>(j)] =
            forward(upper_[static_cast<std::size_t>(o)], latent,
                    trace ? &trace->upper[static_cast<std::size_t>(j)] : nullptr);
      }
      break;
    }
    case Variant::De2RACH: {
      const int dz = w.latent_dim;
      const int dm = w.peer_msg_dim;
      std::vector<std::vector<double>> lower_out(static_cast<std::size_t>(J));
      for (int j = 0; j < J; ++j)
        lower_out[static_cast<std::size_t>(j)] =
            forward(lower_[static_cast<std::size_t>(owner_of(j))],
                    observations[static_cast<std::size_t>(j)],
                    trace ? &trace->lower[static_cast<std::size_t>(j)] : nullptr);

      for (int j = 0; j < J; ++j) {
        // own latent, then incoming messages ordered by ascending sender
        std::vector<double> input(lower_out[static_cast<std::size_t>(j)].begin(),
                                  lower_out[static_cast<std::size_t>(j)].begin() + dz);
        for (int k = 0; k < J; ++k) {
          if (k == j) continue;
          const int chunk = recipient_chunk(k, j);
          const auto& src = lower_out[static_cast<std::size_t>(k)];
          input.insert(input.end(), src.begin() + dz + chunk * dm,
                       src.begin() + dz + (chunk + 1) * dm);
        }
        logits[static_cast<std::size_t>(j)] =
            forward(upper_[static_cast<std::size_t>(owner_of(j))], input,
                    trace ? &trace->upper[static_cast<std::size_t>(j)] : nullptr);
      }
      if (traffic) {
        for (int j = 0; j < J; ++j)
          for (int k = 0; k < J; ++k)
            if (k != j)
              traffic->messages.push_back({j, k, MessageDirection::PeerToPeer, dm});
      }
      break;
    }
    case Variant::Ce2RACH: {
      const int dz = w.latent_dim;
      const int dc = w.uplink_code_dim;
      const int dd = w.downlink_dim;
      if (trace) {
        trace->uplink_encoder.resize(static_cast<std::size_t>(J));
        trace->downlink_decoder.resize(static_cast<std::size_t>(J));
        if (!config_.relay_mixing) trace->relay_per_user.resize(static_cast<std::size_t>(J));
      }

      std::vector<std::vector<double>> latents(static_cast<std::size_t>(J));
      std::vector<std::vector<double>> uplinks(static_cast<std::size_t>(J));
      for (int j = 0; j < J; ++j) {
        const int o = owner_of(j);
        const std::vector<double> out =
            forward(lower_[static_cast<std::size_t>(o)], observations[static_cast<std::size_t>(j)],
                    trace ? &trace->lower[static_cast<std::size_t>(j)] : nullptr);
        latents[static_cast<std::size_t>(j)].assign(out.begin(), out.begin() + dz);
        const std::vector<double> raw(out.begin() + dz, out.end());
        uplinks[static_cast<std::size_t>(j)] =
            forward(uplink_encoder_[static_cast<std::size_t>(o)], raw,
                    trace ? &trace->uplink_encoder[static_cast<std::size_t>(j)] : nullptr);
        if (traffic) traffic->messages.push_back({j, -1, MessageDirection::Uplink, dc});
      }

      std::vector<std::vector<double>> downlinks(static_cast<std::size_t>(J));
      if (config_.relay_mixing) {
        std::vector<double> relay_in;
        relay_in.reserve(static_cast<std::size_t>(J * dc));
        for (const auto& u : uplinks) relay_in.insert(relay_in.end(), u.begin(), u.end());
        const std::vector<double> relay_out =
            forward(relay_, relay_in, trace ? &trace->relay : nullptr);
        for (int j = 0; j < J; ++j)
          downlinks[static_cast<std::size_t>(j)].assign(relay_out.begin() + j * dd,
                                                        relay_out.begin() + (j + 1) * dd);
      } else {
        for (int j = 0; j < J; ++j)
          downlinks[static_cast<std::size_t>(j)] =
              forward(relay_, uplinks[static_cast<std::size_t>(j)],
                      trace ? &trace->relay_per_user[static_cast<std::size_t>(j)] : nullptr);
      }

      for (int j = 0; j < J; ++j) {
        const int o = owner_of(j);
        if (traffic) traffic->messages.push_back({-1, j, MessageDirection::Downlink, dd});
        const std::vector<double> decoded =
            forward(downlink_decoder_[static_cast<std::size_t>(o)],
                    downlinks[static_cast<std::size_t>(j)],
                    trace ? &trace->downlink_decoder[static_cast<std::size_t>(j)] : nullptr);
        std::vector<double> input(latents[static_cast<std::size_t>(j)].begin(),
                                  latents[static_cast<std::size_t>(j)].end());
        input.insert(input.end(), decoded.begin(), decoded.end());
        logits[static_cast<std::size_t>(j)] =
            forward(upper_[static_cast<std::size_t>(o)], input,
                    trace ? &trace->upper[static_cast<std::size_t>(j)] : nullptr);
      }
      break;
    }
  }
  if (trace) trace->logits = logits;
  return logits;
}

void AgentGrads::zero() {
  for (auto* group : {&lower, &upper, &uplink_encoder, &downlink_decoder})
    for (auto& g : *group) g.zero();
  relay.zero();
}

AgentGrads ProtocolAgent::make_grads() const {
  AgentGrads g;
  for (const auto& net : lower_) g.lower.push_back(leorach::make_grads(net));
  for (const auto& net : upper_) g.upper.push_back(leorach::make_grads(net));
  for (const auto& net : uplink_encoder_) g.uplink_encoder.push_back(leorach::make_grads(net));
  for (const auto& net : downlink_decoder_) g.downlink_decoder.push_back(leorach::make_grads(net));
  if (config_.variant == Variant::Ce2RACH) g.relay = leorach::make_grads(relay_);
  return g;
}

AgentOptimizer ProtocolAgent::make_optimizer(const AdamConfig& adam) const {
  AgentOptimizer opt;
  for (const auto& net : lower_) opt.lower.push_back(make_adam(net, adam));
  for (const auto& net : upper_) opt.upper.push_back(make_adam(net, adam));
  for (const auto& net : uplink_encoder_) opt.uplink_encoder.push_back(make_adam(net, adam));
  for (const auto& net : downlink_decoder_) opt.downlink_decoder.push_back(make_adam(net, adam));
  if (config_.variant == Variant::Ce2RACH) opt.relay = make_adam(relay_, adam);
  return opt;
}

void ProtocolAgent::apply_gradients(const AgentGrads& grads, AgentOptimizer& opt) {
  for (std::size_t i = 0; i < lower_.size(); ++i) adam_step(lower_[i], grads.lower[i], opt.lower[i]);
  for (std::size_t i = 0; i < upper_.size(); ++i) adam_step(upper_[i], grads.upper[i], opt.upper[i]);
  for (std::size_t i = 0; i < uplink_encoder_.size(); ++i)
    adam_step(uplink_encoder_[i], grads.uplink_encoder[i], opt.uplink_encoder[i]);
  for (std::size_t i = 0; i < downlink_decoder_.size(); ++i)
    adam_step(downlink_decoder_[i], grads.downlink_decoder[i], opt.downlink_decoder[i]);
  if (config_.variant == Variant::Ce2RACH) adam_step(relay_, grads.relay, opt.relay);
}

void ProtocolAgent::slot_backward(const SlotTrace& trace,
                                  const std::vector<std::vector<double>>& logit_grads,
                                  AgentGrads& grads) const {
  const int J = config_.num_users;
  const auto& w = config_.widths;
  if (static_cast<int>(logit_grads.size()) != J)
    throw std::invalid_argument("slot_backward: expected one logit gradient per user");

  switch (config_.variant) {
    case Variant::eRACH: {
      for (int j = 0; j < J; ++j) {
        const int o = owner_of(j);
        const std::vector<double> dlatent =
            backward(upper_[static_cast<std::size_t>(o)], trace.upper[static_cast<std::size_t>(j)],
                     logit_grads[static_cast<std::size_t>(j)],
                     grads.upper[static_cast<std::size_t>(o)]);
        backward(lower_[static_cast<std::size_t>(o)], trace.lower[static_cast<std::size_t>(j)],
                 dlatent, grads.lower[static_cast<std::size_t>(o)]);
      }
      break;
    }
    case Variant::De2RACH: {
      const int dz = w.latent_dim;
      const int dm = w.peer_msg_dim;
      const int lower_out_dim = dz + (J - 1) * dm;
      std::vector<std::vector<double>> dlower_out(
          static_cast<std::size_t>(J), std::vector<double>(static_cast<std::size_t>(lower_out_dim), 0.0));

      for (int j = 0; j < J; ++j) {
        const std::vector<double> dinput =
            backward(upper_[static_cast<std::size_t>(owner_of(j))],
                     trace.upper[static_cast<std::size_t>(j)],
                     logit_grads[static_cast<std::size_t>(j)],
                     grads.upper[static_cast<std::size_t>(owner_of(j))]);
        // own latent
        for (int i = 0; i < dz; ++i)
          dlower_out[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] +=
              dinput[static_cast<std::size_t>(i)];
        // message gradients flow back to each sender's outgoing chunk
        int pos = dz;
        for (int k = 0; k < J; ++k) {
          if (k == j) continue;
          const int chunk = recipient_chunk(k, j);
          for (int i = 0; i < dm; ++i)
            dlower_out[static_cast<std::size_t>(k)][static_cast<std::size_t>(dz + chunk * dm + i)] +=
                dinput[static_cast<std::size_t>(pos + i)];
          pos += dm;
        }
      }
      for (int j = 0; j < J; ++j)
        backward(lower_[static_cast<std::size_t>(owner_of(j))],
                 trace.lower[static_cast<std::size_t>(j)], dlower_out[static_cast<std::size_t>(j)],
                 grads.lower[static_cast<std::size_t>(owner_of(j))]);
      break;
    }
    case Variant::Ce2RACH: {
      const int dz = w.latent_dim;
      const int dc = w.uplink_code_dim;
      const int dd = w.downlink_dim;

      std::vector<std::vector<double>> dlatent(static_cast<std::size_t>(J));
      std::vector<std::vector<double>> ddownlink(static_cast<std::size_t>(J));
      for (int j = 0; j < J; ++j) {
        const int o = owner_of(j);
        const std::vector<double> dinput =
            backward(upper_[static_cast<std::size_t>(o)], trace.upper[static_cast<std::size_t>(j)],
                     logit_grads[static_cast<std::size_t>(j)],
                     grads.upper[static_cast<std::size_t>(o)]);
        dlatent[static_cast<std::size_t>(j)].assign(dinput.begin(), dinput.begin() + dz);
        const std::vector<double> ddecoded(dinput.begin() + dz, dinput.end());
        ddownlink[static_cast<std::size_t>(j)] =
            backward(downlink_decoder_[static_cast<std::size_t>(o)],
                     trace.downlink_decoder[static_cast<std::size_t>(j)], ddecoded,
                     grads.downlink_decoder[static_cast<std::size_t>(o)]);
      }

      std::vector<std::vector<double>> duplink(static_cast<std::size_t>(J));
      if (config_.relay_mixing) {
        std::vector<double> drelay_out(static_cast<std::size_t>(J * dd), 0.0);
        for (int j = 0; j < J; ++j)
          for (int i = 0; i < dd; ++i)
            drelay_out[static_cast<std::size_t>(j * dd + i)] =
                ddownlink[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        const std::vector<double> drelay_in = backward(relay_, trace.relay, drelay_out, grads.relay);
        for (int j = 0; j < J; ++j)
          duplink[static_cast<std::size_t>(j)].assign(drelay_in.begin() + j * dc,
                                                      drelay_in.begin() + (j + 1) * dc);
      } else {
        for (int j = 0; j < J; ++j)
          duplink[static_cast<std::size_t>(j)] =
              backward(relay_, trace.relay_per_user[static_cast<std::size_t>(j)],
                       ddownlink[static_cast<std::size_t>(j)], grads.relay);
      }

      for (int j = 0; j < J; ++j) {
        const int o = owner_of(j);
        const std::vector<double> draw =
            backward(uplink_encoder_[static_cast<std::size_t>(o)],
                     trace.uplink_encoder[static_cast<std::size_t>(j)],
                     duplink[static_cast<std::size_t>(j)],
                     grads.uplink_encoder[static_cast<std::size_t>(o)]);
        std::vector<double> dlower_out(dlatent[static_cast<std::size_t>(j)].begin(),
                                       dlatent[static_cast<std::size_t>(j)].end());
        dlower_out.insert(dlower_out.end(), draw.begin(), draw.end());
        backward(lower_[static_cast<std::size_t>(o)], trace.lower[static_cast<std::size_t>(j)],
                 dlower_out, grads.lower[static_cast<std::size_t>(o)]);
      }
      break;
    }
  }
}

SegmentMap ProtocolAgent::to_segments() const {
  SegmentMap segments;
  const int owners = num_owners();
  for (int i = 0; i < owners; ++i) {
    const std::string prefix =
        config_.share_parameters ? std::string("shared") : "user" + std::to_string(i);
    segments[prefix + ".lower"] = lower_[static_cast<std::size_t>(i)];
    segments[prefix + ".upper"] = upper_[static_cast<std::size_t>(i)];
    if (config_.variant == Variant::Ce2RACH) {
      segments[prefix + ".uplink_encoder"] = uplink_encoder_[static_cast<std::size_t>(i)];
      segments[prefix + ".downlink_decoder"] = downlink_decoder_[static_cast<std::size_t>(i)];
    }
  }
  if (config_.variant == Variant::Ce2RACH) segments["relay"] = relay_;
  return segments;
}

ProtocolAgent ProtocolAgent::from_segments(const AgentConfig& config, const SegmentMap& segments) {
  config.validate();
  const SegmentDims dims = segment_dims(config);

  ProtocolAgent agent;
  agent.config_ = config;
  const int owners = agent.num_owners();
  auto fetch = [&](const std::string& name) -> const DenseNet& {
    auto it = segments.find(name);
    if (it == segments.end())
      throw std::invalid_argument("protocol: checkpoint is missing segment '" + name + "'");
    return it->second;
  };
  for (int i = 0; i < owners; ++i) {
    const std::string prefix =
        config.share_parameters ? std::string("shared") : "user" + std::to_string(i);
    agent.lower_.push_back(fetch(prefix + ".lower"));
    check_dims(agent.lower_.back(), dims.lower, prefix + ".lower");
    agent.upper_.push_back(fetch(prefix + ".upper"));
    check_dims(agent.upper_.back(), dims.upper, prefix + ".upper");
    if (config.variant == Variant::Ce2RACH) {
      agent.uplink_encoder_.push_back(fetch(prefix + ".uplink_encoder"));
      check_dims(agent.uplink_encoder_.back(), dims.uplink_encoder, prefix + ".uplink_encoder");
      agent.downlink_decoder_.push_back(fetch(prefix + ".downlink_decoder"));
      check_dims(agent.downlink_decoder_.back(), dims.downlink_decoder,
                 prefix + ".downlink_decoder");
    }
  }
  if (config.variant == Variant::Ce2RACH) {
    agent.relay_ = fetch("relay");
    check_dims(agent.relay_, dims.relay, "relay");
  }
  return agent;
}

JointActResult joint_act(const ProtocolAgent& agent,
                         const std::vector<std::vector<double>>& observations, Rng& rng,
                         SlotTrace* trace) {
  JointActResult res;
  res.logits = agent.slot_logits(observations, trace, &res.traffic);
  const int J = agent.config().num_users;
  res.targets.resize(static_cast<std::size_t>(J));
  res.log_probs.resize(static_cast<std::size_t>(J));
  res.entropies.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    const SampleResult s = softmax_sample(res.logits[static_cast<std::size_t>(j)], rng);
    res.targets[static_cast<std::size_t>(j)] = s.index;
    res.log_probs[static_cast<std::size_t>(j)] = s.log_prob;
    res.entropies[static_cast<std::size_t>(j)] = s.entropy;
  }
  return res;
}

std::vector<int> greedy_act(const ProtocolAgent& agent,
                            const std::vector<std::vector<double>>& observations,
                            TrafficRecord* traffic) {
  const std::vector<std::vector<double>> logits = agent.slot_logits(observations, nullptr, traffic);
  std::vector<int> targets;
  targets.reserve(logits.size());
  for (const auto& l : logits) targets.push_back(argmax(l));
  return targets;
}

}  // namespace leorach
