#include "asrfeat/gcu_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "asrfeat/error.hpp"

namespace asrfeat {
namespace {

std::string shape_str(const ConvWeights& w) {
  return std::to_string(w.out_channels) + "x" + std::to_string(w.in_channels) + "x" +
         std::to_string(w.kernel);
}

void expect_shape(const ConvWeights& w, int out, int in, int k, const std::string& name) {
  const bool ok = w.out_channels == out && w.in_channels == in && w.kernel == k &&
                  w.weight.size() == static_cast<std::size_t>(out) * in * k &&
                  w.bias.size() == static_cast<std::size_t>(out);
  if (!ok) {
    throw Error(ErrorCode::ConfigWeightMismatch,
                name + " is " + shape_str(w) + ", expected " + std::to_string(out) + "x" +
                    std::to_string(in) + "x" + std::to_string(k));
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<int> ModelConfig::doubling_schedule(int layers_per_block) {
  std::vector<int> d(layers_per_block);
  for (int i = 0; i < layers_per_block; ++i) d[i] = 1 << i;
  return d;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (n_mfcc <= 0) fail("n_mfcc must be positive");
  if (channels <= 0) fail("channels must be positive");
  if (n_blocks <= 0) fail("n_blocks must be positive");
  if (dilations_per_block.empty()) fail("dilation schedule is empty");
  for (int d : dilations_per_block) {
    if (d < 1) fail("dilations must be >= 1");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) fail("kernel_size must be odd and >= 1");
}

WeightSet WeightSet::zeros(const ModelConfig& cfg) {
  cfg.validate();
  WeightSet w;
  w.input_proj = ConvWeights(cfg.channels, cfg.n_mfcc, 1);
  w.layers.resize(cfg.total_layers());
  for (auto& layer : w.layers) {
    layer.filter = ConvWeights(cfg.channels, cfg.channels, cfg.kernel_size);
    layer.gate = ConvWeights(cfg.channels, cfg.channels, cfg.kernel_size);
    layer.residual = ConvWeights(cfg.channels, cfg.channels, 1);
  }
  return w;
}

void WeightSet::check_matches(const ModelConfig& cfg) const {
  expect_shape(input_proj, cfg.channels, cfg.n_mfcc, 1, "input_proj");
  if (layers.size() != static_cast<std::size_t>(cfg.total_layers())) {
    throw Error(ErrorCode::ConfigWeightMismatch, std::to_string(layers.size()) + " layers, expected " +
                                                     std::to_string(cfg.total_layers()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string tag = "layer " + std::to_string(l);
    expect_shape(layers[l].filter, cfg.channels, cfg.channels, cfg.kernel_size, tag + " filter");
    expect_shape(layers[l].gate, cfg.channels, cfg.channels, cfg.kernel_size, tag + " gate");
    expect_shape(layers[l].residual, cfg.channels, cfg.channels, 1, tag + " residual");
  }
}

Matrix dilated_conv(const Matrix& x, const ConvWeights& w, int dilation) {
  if (dilation < 1) throw Error(ErrorCode::ShapeMismatch, "dilation must be >= 1");
  if (w.kernel < 1 || w.kernel % 2 == 0) throw Error(ErrorCode::ShapeMismatch, "kernel must be odd");
  if (x.rows() != static_cast<std::size_t>(w.in_channels) ||
      w.weight.size() != static_cast<std::size_t>(w.out_channels) * w.in_channels * w.kernel ||
      w.bias.size() != static_cast<std::size_t>(w.out_channels)) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.rows()) +
                                              " channels, weights are " + shape_str(w));
  }
  const auto frames = static_cast<std::ptrdiff_t>(x.cols());
  const int half = (w.kernel - 1) / 2;
  Matrix out(w.out_channels, x.cols());
  for (int o = 0; o < w.out_channels; ++o) {
    double* acc = out.row(o).data();
    const double b = w.bias[o];
    for (std::ptrdiff_t t = 0; t < frames; ++t) acc[t] = b;
    for (int i = 0; i < w.in_channels; ++i) {
      const double* src = x.row(i).data();
      for (int tap = 0; tap < w.kernel; ++tap) {
        const double coef = w.at(o, i, tap);
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(tap - half) * dilation;
        // Taps that land in the zero padding contribute nothing.
        const std::ptrdiff_t t_begin = std::max<std::ptrdiff_t>(0, -shift);
        const std::ptrdiff_t t_end = std::min<std::ptrdiff_t>(frames, frames - shift);
        for (std::ptrdiff_t t = t_begin; t < t_end; ++t) acc[t] += coef * src[t + shift];
      }
    }
  }
  return out;
}

GcuOutput gcu_block_forward(const Matrix& x, const GcuLayerWeights& w, int dilation) {
  const Matrix filt = dilated_conv(x, w.filter, dilation);
  const Matrix gate = dilated_conv(x, w.gate, dilation);
  // tanh and the sigmoid both round to exactly 1 far from zero; keep the
  // product inside the open interval (-1, 1).
  constexpr double kMaxMagnitude = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  GcuOutput out;
  out.z = Matrix(filt.rows(), filt.cols());
  for (std::size_t i = 0; i < filt.data().size(); ++i) {
    const double z = std::tanh(filt.data()[i]) * sigmoid(gate.data()[i]);
    out.z.data()[i] = std::clamp(z, -kMaxMagnitude, kMaxMagnitude);
  }
  out.x_next = dilated_conv(out.z, w.residual, 1);
  if (out.x_next.rows() != x.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "residual projection changes the channel count");
  }
  for (std::size_t i = 0; i < x.data().size(); ++i) out.x_next.data()[i] += x.data()[i];
  return out;
}

ActivationTensor forward_collect(const ModelConfig& cfg, const WeightSet& w, const MfccSequence& mfcc) {
  cfg.validate();
  w.check_matches(cfg);
  if (mfcc.n_mfcc() != static_cast<std::size_t>(cfg.n_mfcc)) {
    throw Error(ErrorCode::ConfigWeightMismatch, "MFCC input has " + std::to_string(mfcc.n_mfcc()) +
                                                     " rows, model expects " + std::to_string(cfg.n_mfcc));
  }
  const std::size_t frames = mfcc.frames();
  ActivationTensor acts(cfg.total_layers(), cfg.channels, frames);
  acts.utterance_id = mfcc.utterance_id;

  Matrix x = dilated_conv(mfcc.coeffs, w.input_proj, 1);
  for (int l = 0; l < cfg.total_layers(); ++l) {
    GcuOutput step = gcu_block_forward(x, w.layers[l], cfg.dilation(l));
    const auto finite = [](const Matrix& m) {
      return std::all_of(m.data().begin(), m.data().end(), [](double v) { return std::isfinite(v); });
    };
    if (!finite(step.z) || !finite(step.x_next)) {
      throw Error(ErrorCode::NonFiniteActivation,
                  mfcc.utterance_id + ": layer " + std::to_string(l) + " produced a non-finite value");
    }
    std::copy(step.z.data().begin(), step.z.data().end(),
              acts.values.begin() + static_cast<std::ptrdiff_t>(l) * cfg.channels * frames);
    x = std::move(step.x_next);
  }
  return acts;
}

}  // namespace asrfeat
