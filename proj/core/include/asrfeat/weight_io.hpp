#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>

#include "asrfeat/gcu_net.hpp"

namespace asrfeat {

// On-disk layout (all little-endian):
//   "GCUW"  u32 version=1
//   u32 n_mfcc, channels, n_blocks, layers_per_block, kernel_size
//   f32 payload: input_proj W, b; then per layer W_f, b_f, W_g, b_g, W_r, b_r
//   u64 FNV-1a over the payload bytes
inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

// Payload size in bytes implied by cfg.
std::uint64_t weight_payload_bytes(const ModelConfig& cfg);

// Returns the payload checksum that was written.
std::uint64_t write_weights(const WeightSet& w, const ModelConfig& cfg,
                            const std::filesystem::path& path);

// The returned config uses the doubling dilation schedule, the only one the
// header can describe.
std::pair<ModelConfig, WeightSet> read_weights(const std::filesystem::path& path);

// splitmix64 generator; the constants are those of Steele, Lea and Flood.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Deterministic synthetic weights: every tensor (bias included) is drawn
// uniformly from [-s, s], s = 1/sqrt(in_channels * kernel) of its conv, in
// file order from a single splitmix64 stream.
WeightSet synth_weights(const ModelConfig& cfg, std::uint64_t seed);

}  // namespace asrfeat
