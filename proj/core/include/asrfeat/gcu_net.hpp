#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "asrfeat/matrix.hpp"
#include "asrfeat/mfcc.hpp"

namespace asrfeat {

// Hyperparameters of the dilated gated-convolution stack. The dilation
// schedule is repeated once per block.
struct ModelConfig {
  int n_mfcc = 20;
  int channels = 128;
  int n_blocks = 3;
  std::vector<int> dilations_per_block = {1, 2, 4, 8, 16};
  int kernel_size = 7;

  int layers_per_block() const { return static_cast<int>(dilations_per_block.size()); }
  int total_layers() const { return n_blocks * layers_per_block(); }
  int feature_dim() const { return total_layers() * channels; }
  int dilation(int layer) const { return dilations_per_block[layer % layers_per_block()]; }

  // Schedule 1, 2, 4, ... of the given length; what the weight file implies.
  static std::vector<int> doubling_schedule(int layers_per_block);

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// 1-D convolution parameters. weight is out x in x k row-major, stored in f32
// because that is the on-disk precision; arithmetic is done in double.
struct ConvWeights {
  int out_channels = 0;
  int in_channels = 0;
  int kernel = 1;
  std::vector<float> weight;
  std::vector<float> bias;

  ConvWeights() = default;
  ConvWeights(int out, int in, int k)
      : out_channels(out), in_channels(in), kernel(k),
        weight(static_cast<std::size_t>(out) * in * k, 0.0f), bias(out, 0.0f) {}

  float& at(int o, int i, int t) {
    return weight[(static_cast<std::size_t>(o) * in_channels + i) * kernel + t];
  }
  float at(int o, int i, int t) const {
    return weight[(static_cast<std::size_t>(o) * in_channels + i) * kernel + t];
  }
  int fan_in() const { return in_channels * kernel; }

  bool operator==(const ConvWeights&) const = default;
};

struct GcuLayerWeights {
  ConvWeights filter;    // channels x channels x kernel_size
  ConvWeights gate;      // channels x channels x kernel_size
  ConvWeights residual;  // channels x channels x 1

  bool operator==(const GcuLayerWeights&) const = default;
};

struct WeightSet {
  ConvWeights input_proj;  // channels x n_mfcc x 1
  std::vector<GcuLayerWeights> layers;

  // Zero tensors shaped for cfg.
  static WeightSet zeros(const ModelConfig& cfg);

  // Throws ConfigWeightMismatch if any tensor shape disagrees with cfg.
  void check_matches(const ModelConfig& cfg) const;

  bool operator==(const WeightSet&) const = default;
};

// Gated activations of every layer, laid out [layer][channel][frame].
struct ActivationTensor {
  std::size_t layers = 0;
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::vector<double> values;
  std::string utterance_id;

  ActivationTensor() = default;
  ActivationTensor(std::size_t l, std::size_t c, std::size_t t)
      : layers(l), channels(c), frames(t), values(l * c * t, 0.0) {}

  double& at(std::size_t l, std::size_t c, std::size_t t) {
    return values[(l * channels + c) * frames + t];
  }
  double at(std::size_t l, std::size_t c, std::size_t t) const {
    return values[(l * channels + c) * frames + t];
  }
  std::span<const double> series(std::size_t l, std::size_t c) const {
    return {values.data() + (l * channels + c) * frames, frames};
  }
};

// Non-causal "same" dilated convolution of x (in x T) with zero padding of
// dilation*(k-1)/2 on each side. Each output starts from the bias and
// accumulates over input channel, then kernel tap, in index order.
Matrix dilated_conv(const Matrix& x, const ConvWeights& w, int dilation);

struct GcuOutput {
  Matrix z;       // tanh(filter) * sigmoid(gate)
  Matrix x_next;  // x + residual_1x1(z)
};

GcuOutput gcu_block_forward(const Matrix& x, const GcuLayerWeights& w, int dilation);

// Runs the full stack on one utterance and records z of every layer.
ActivationTensor forward_collect(const ModelConfig& cfg, const WeightSet& w, const MfccSequence& mfcc);

}  // namespace asrfeat
