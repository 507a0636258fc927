#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leorach/rng.hpp"

namespace leorach {

// Row-major dense matrix, just enough for the feed-forward nets here.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Activation { Tanh, Identity };

// A fully-connected network: layer_dims.front() inputs, layer_dims.back()
// outputs, tanh on hidden layers and identity on the output by default.
// weights[l] has shape (layer_dims[l+1] x layer_dims[l]).
struct DenseNet {
  std::vector<int> layer_dims;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::Tanh;
  Activation output_activation = Activation::Identity;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t num_parameters() const;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
DenseNet init_dense(const std::vector<int>& layer_dims, std::uint64_t seed);

// Activations recorded by forward() so backward() can replay the pass.
// inputs[0] is the network input; pre[l] the pre-activation of layer l.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
};

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            ForwardCache* cache = nullptr);

// Per-layer parameter gradients. Accumulated: backward() adds into an
// existing DenseGrads so shared segments can gather contributions from
// several call sites before the optimizer step.
struct DenseGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  void zero();
};

DenseGrads make_grads(const DenseNet& net);

// Backpropagates output_grad through the cached pass, accumulating parameter
// gradients into grads and returning the gradient w.r.t. the network input
// (so gradients can continue across message boundaries between networks).
std::vector<double> backward(const DenseNet& net, const ForwardCache& cache,
                             std::span<const double> output_grad, DenseGrads& grads);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;
};

AdamState make_adam(const DenseNet& net, const AdamConfig& config);

// One adaptive-moment descent step with bias correction; mutates net and state.
void adam_step(DenseNet& net, const DenseGrads& grads, AdamState& state);

// -------- stochastic policy head --------

struct SampleResult {
  int index = 0;
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Max-subtracted softmax; throws on non-finite logits.
std::vector<double> softmax(std::span<const double> logits);

double entropy_of(std::span<const double> probs);

SampleResult softmax_sample(std::span<const double> logits, Rng& rng);

// Deterministic head used at evaluation time: lowest index wins ties.
int argmax(std::span<const double> values);

// -------- autoencoder --------

// Encoder compresses (bottleneck strictly narrower than its input); decoder
// consumes codes of the encoder's output width.
struct Autoencoder {
  DenseNet encoder;
  DenseNet decoder;

  int raw_dim() const { return encoder.input_dim(); }
  int code_dim() const { return encoder.output_dim(); }
  int reconstructed_dim() const { return decoder.output_dim(); }
};

Autoencoder make_autoencoder(const std::vector<int>& encoder_dims,
                             const std::vector<int>& decoder_dims, std::uint64_t seed);

std::vector<double> encode(const Autoencoder& ae, std::span<const double> raw,
                           ForwardCache* cache = nullptr);
std::vector<double> decode(const Autoencoder& ae, std::span<const double> code,
                           ForwardCache* cache = nullptr);

}  // namespace leorach
