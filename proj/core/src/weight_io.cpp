#include "asrfeat/weight_io.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "asrfeat/error.hpp"
#include "byte_io.hpp"
#include "file_util.hpp"

namespace asrfeat {
namespace {

constexpr std::size_t kHeaderBytes = 4 + 4 + 5 * 4;
constexpr std::size_t kChecksumBytes = 8;

std::uint64_t conv_floats(int out, int in, int k) {
  return static_cast<std::uint64_t>(out) * in * k + static_cast<std::uint64_t>(out);
}

template <typename Fn>
void for_each_conv(WeightSet& w, Fn&& fn) {
  fn(w.input_proj);
  for (auto& layer : w.layers) {
    fn(layer.filter);
    fn(layer.gate);
    fn(layer.residual);
  }
}

template <typename Fn>
void for_each_conv(const WeightSet& w, Fn&& fn) {
  fn(w.input_proj);
  for (const auto& layer : w.layers) {
    fn(layer.filter);
    fn(layer.gate);
    fn(layer.residual);
  }
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t weight_payload_bytes(const ModelConfig& cfg) {
  const std::uint64_t per_layer = 2 * conv_floats(cfg.channels, cfg.channels, cfg.kernel_size) +
                                  conv_floats(cfg.channels, cfg.channels, 1);
  return 4 * (conv_floats(cfg.channels, cfg.n_mfcc, 1) +
              static_cast<std::uint64_t>(cfg.total_layers()) * per_layer);
}

std::uint64_t write_weights(const WeightSet& w, const ModelConfig& cfg, const std::filesystem::path& path) {
  cfg.validate();
  w.check_matches(cfg);
  detail::ByteWriter out;
  out.tag("GCUW");
  out.u32(kWeightFormatVersion);
  out.u32(static_cast<std::uint32_t>(cfg.n_mfcc));
  out.u32(static_cast<std::uint32_t>(cfg.channels));
  out.u32(static_cast<std::uint32_t>(cfg.n_blocks));
  out.u32(static_cast<std::uint32_t>(cfg.layers_per_block()));
  out.u32(static_cast<std::uint32_t>(cfg.kernel_size));
  for_each_conv(w, [&](const ConvWeights& c) {
    for (float v : c.weight) out.f32(v);
    for (float v : c.bias) out.f32(v);
  });
  const std::span<const std::uint8_t> payload(out.bytes().data() + kHeaderBytes, out.size() - kHeaderBytes);
  const std::uint64_t checksum = fnv1a64(payload);
  out.u64(checksum);
  detail::write_file_bytes(path, out.bytes());
  return checksum;
}

std::pair<ModelConfig, WeightSet> read_weights(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  const std::string name = path.string();
  if (bytes.size() < 8) throw Error(ErrorCode::TruncatedFile, name + ": shorter than the header");
  if (std::memcmp(bytes.data(), "GCUW", 4) != 0) throw Error(ErrorCode::BadMagic, name);
  const std::uint32_t version = detail::load_u32(bytes.data() + 4);
  if (version != kWeightFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported, name + ": version " + std::to_string(version));
  }
  if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::TruncatedFile, name + ": shorter than the header");

  const std::uint8_t* h = bytes.data() + 8;
  ModelConfig cfg;
  cfg.n_mfcc = static_cast<int>(detail::load_u32(h));
  cfg.channels = static_cast<int>(detail::load_u32(h + 4));
  cfg.n_blocks = static_cast<int>(detail::load_u32(h + 8));
  const auto layers_per_block = static_cast<int>(detail::load_u32(h + 12));
  cfg.kernel_size = static_cast<int>(detail::load_u32(h + 16));
  if (layers_per_block <= 0 || layers_per_block > 30) {
    throw Error(ErrorCode::InvalidConfig, name + ": layers_per_block " + std::to_string(layers_per_block));
  }
  cfg.dilations_per_block = ModelConfig::doubling_schedule(layers_per_block);
  cfg.validate();

  const std::uint64_t payload_len = weight_payload_bytes(cfg);
  const std::uint64_t expected = kHeaderBytes + payload_len + kChecksumBytes;
  if (bytes.size() < expected) {
    throw Error(ErrorCode::TruncatedFile, name + ": " + std::to_string(bytes.size()) + " bytes, header implies " +
                                              std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::TruncatedFile, name + ": trailing bytes after checksum");
  }
  const std::span<const std::uint8_t> payload(bytes.data() + kHeaderBytes, payload_len);
  const std::uint64_t stored = detail::load_u64(bytes.data() + kHeaderBytes + payload_len);
  if (fnv1a64(payload) != stored) throw Error(ErrorCode::ChecksumMismatch, name);

  WeightSet w = WeightSet::zeros(cfg);
  const std::uint8_t* p = payload.data();
  for_each_conv(w, [&](ConvWeights& c) {
    for (float& v : c.weight) {
      v = detail::load_f32(p);
      p += 4;
    }
    for (float& v : c.bias) {
      v = detail::load_f32(p);
      p += 4;
    }
  });
  return {cfg, std::move(w)};
}

WeightSet synth_weights(const ModelConfig& cfg, std::uint64_t seed) {
  WeightSet w = WeightSet::zeros(cfg);
  SplitMix64 rng(seed);
  for_each_conv(w, [&](ConvWeights& c) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(c.fan_in()));
    auto draw = [&] {
      const double x = (2.0 * rng.next_unit() - 1.0) * scale;
      auto f = static_cast<float>(x);
      // Rounding to f32 must not push the value past the bound.
      if (std::abs(static_cast<double>(f)) > scale) f = std::nextafter(f, 0.0f);
      return f;
    };
    for (float& v : c.weight) v = draw();
    for (float& v : c.bias) v = draw();
  });
  return w;
}

}  // namespace asrfeat
