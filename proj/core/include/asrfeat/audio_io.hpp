#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace asrfeat {

inline constexpr int kDefaultSampleRateHz = 16000;

// Mono PCM audio normalized to [-1, 1]. Immutable once loaded.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  std::string source_path;

  double duration_seconds() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

// Reads a RIFF/WAVE file holding mono 16-bit PCM or 32-bit IEEE float.
// int16 samples are divided by 32768 so that -32768 maps to exactly -1.0.
// Float samples outside [-1, 1] are rejected as UnsupportedEncoding.
AudioBuffer load_wav(const std::filesystem::path& path);

// Throws SampleRateMismatch unless buf.sample_rate_hz == expected_hz.
void validate_rate(const AudioBuffer& buf, int expected_hz);

enum class WavSampleFormat { kPcm16, kFloat32 };

// Writes mono samples; values are clipped to [-1, 1] before quantization.
// int16 quantization is round(x * 32768) clamped to [-32768, 32767].
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz, WavSampleFormat format = WavSampleFormat::kPcm16);

}  // namespace asrfeat
