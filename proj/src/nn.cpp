#include "leorach/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace leorach {

namespace {

double apply_activation(Activation act, double x) {
  return act == Activation::Tanh ? std::tanh(x) : x;
}

// derivative expressed through the activation output (tanh' = 1 - y^2)
double activation_grad(Activation act, double y) {
  return act == Activation::Tanh ? 1.0 - y * y : 1.0;
}

void check_dims_match(const DenseNet& net, const ForwardCache& cache) {
  const std::size_t layers = net.weights.size();
  if (cache.inputs.size() != layers || cache.pre.size() != layers)
    throw std::invalid_argument("backward: cache does not match this network");
  for (std::size_t l = 0; l < layers; ++l) {
    if (static_cast<int>(cache.inputs[l].size()) != net.layer_dims[l] ||
        static_cast<int>(cache.pre[l].size()) != net.layer_dims[l + 1])
      throw std::invalid_argument("backward: cache does not match this network");
  }
}

}  // namespace

std::size_t DenseNet::num_parameters() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.data.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

DenseNet init_dense(const std::vector<int>& layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2)
    throw std::invalid_argument("init_dense: need at least input and output dims");
  for (int d : layer_dims)
    if (d < 1) throw std::invalid_argument("init_dense: layer dims must be positive");

  DenseNet net;
  net.layer_dims = layer_dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
  }
  return net;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardCache* cache) {
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::invalid_argument("forward: input width " + std::to_string(input.size()) +
                                " does not match first layer dim " +
                                std::to_string(net.input_dim()));
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  std::vector<double> x(input.begin(), input.end());
  const int layers = net.num_layers();
  for (int l = 0; l < layers; ++l) {
    const Matrix& w = net.weights[static_cast<std::size_t>(l)];
    const auto& b = net.biases[static_cast<std::size_t>(l)];
    std::vector<double> z(static_cast<std::size_t>(w.rows));
    for (int r = 0; r < w.rows; ++r) {
      double acc = b[static_cast<std::size_t>(r)];
      const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
      for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = acc;
    }
    const Activation act = (l + 1 == layers) ? net.output_activation : net.hidden_activation;
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre.push_back(z);
    }
    std::vector<double> y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) y[i] = apply_activation(act, z[i]);
    x = std::move(y);
  }
  return x;
}

void DenseGrads::zero() {
  for (auto& w : weights) std::fill(w.data.begin(), w.data.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

DenseGrads make_grads(const DenseNet& net) {
  DenseGrads g;
  for (const auto& w : net.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

std::vector<double> backward(const DenseNet& net, const ForwardCache& cache,
                             std::span<const double> output_grad, DenseGrads& grads) {
  check_dims_match(net, cache);
  if (static_cast<int>(output_grad.size()) != net.output_dim())
    throw std::invalid_argument("backward: output gradient width mismatch");
  if (grads.weights.size() != net.weights.size())
    throw std::invalid_argument("backward: gradient container shape mismatch");

  const int layers = net.num_layers();
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix& w = net.weights[static_cast<std::size_t>(l)];
    const auto& z = cache.pre[static_cast<std::size_t>(l)];
    const auto& in = cache.inputs[static_cast<std::size_t>(l)];
    const Activation act = (l + 1 == layers) ? net.output_activation : net.hidden_activation;

    // delta currently holds dL/dy for this layer; fold in the activation
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double y = apply_activation(act, z[i]);
      delta[i] *= activation_grad(act, y);
    }

    Matrix& dw = grads.weights[static_cast<std::size_t>(l)];
    auto& db = grads.biases[static_cast<std::size_t>(l)];
    for (int r = 0; r < w.rows; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      db[static_cast<std::size_t>(r)] += d;
      double* dw_row = &dw.data[static_cast<std::size_t>(r) * w.cols];
      for (int c = 0; c < w.cols; ++c) dw_row[c] += d * in[static_cast<std::size_t>(c)];
    }

    std::vector<double> prev(static_cast<std::size_t>(w.cols), 0.0);
    for (int r = 0; r < w.rows; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
      for (int c = 0; c < w.cols; ++c) prev[static_cast<std::size_t>(c)] += d * row[c];
    }
    delta = std::move(prev);
  }
  return delta;  // gradient w.r.t. the network input
}

AdamState make_adam(const DenseNet& net, const AdamConfig& config) {
  AdamState st;
  st.config = config;
  for (const auto& w : net.weights) {
    st.m_weights.emplace_back(w.rows, w.cols);
    st.v_weights.emplace_back(w.rows, w.cols);
  }
  for (const auto& b : net.biases) {
    st.m_biases.emplace_back(b.size(), 0.0);
    st.v_biases.emplace_back(b.size(), 0.0);
  }
  return st;
}

void adam_step(DenseNet& net, const DenseGrads& grads, AdamState& state) {
  if (grads.weights.size() != net.weights.size() || state.m_weights.size() != net.weights.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const auto& cfg = state.config;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  auto update = [&](double& param, double g, double& m, double& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  };

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    if (grads.weights[l].rows != w.rows || grads.weights[l].cols != w.cols)
      throw std::invalid_argument("adam_step: weight gradient shape mismatch");
    for (std::size_t i = 0; i < w.data.size(); ++i)
      update(w.data[i], grads.weights[l].data[i], state.m_weights[l].data[i],
             state.v_weights[l].data[i]);
    auto& b = net.biases[l];
    for (std::size_t i = 0; i < b.size(); ++i)
      update(b[i], grads.biases[l][i], state.m_biases[l][i], state.v_biases[l][i]);
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: need at least one logit");
  double max_logit = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite logit");
    max_logit = std::max(max_logit, v);
  }
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

SampleResult softmax_sample(std::span<const double> logits, Rng& rng) {
  const std::vector<double> probs = softmax(logits);
  const double u = rng.uniform01();
  double cum = 0.0;
  int chosen = static_cast<int>(probs.size()) - 1;  // guard against fp round-off
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) {
      chosen = static_cast<int>(i);
      break;
    }
  }
  SampleResult res;
  res.index = chosen;
  res.log_prob = std::log(probs[static_cast<std::size_t>(chosen)]);
  res.entropy = entropy_of(probs);
  return res;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty input");
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  return best;
}

Autoencoder make_autoencoder(const std::vector<int>& encoder_dims,
                             const std::vector<int>& decoder_dims, std::uint64_t seed) {
  Autoencoder ae;
  ae.encoder = init_dense(encoder_dims, mix_seed(seed, 0));
  ae.decoder = init_dense(decoder_dims, mix_seed(seed, 1));
  if (ae.encoder.output_dim() >= ae.encoder.input_dim())
    throw std::invalid_argument("autoencoder: bottleneck must be narrower than the input");
  if (ae.decoder.input_dim() != ae.encoder.output_dim())
    throw std::invalid_argument("autoencoder: decoder input must match encoder output");
  return ae;
}

std::vector<double> encode(const Autoencoder& ae, std::span<const double> raw,
                           ForwardCache* cache) {
  return forward(ae.encoder, raw, cache);
}

std::vector<double> decode(const Autoencoder& ae, std::span<const double> code,
                           ForwardCache* cache) {
  return forward(ae.decoder, code, cache);
}

}  // namespace leorach
