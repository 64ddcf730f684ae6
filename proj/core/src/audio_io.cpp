#include "asrfeat/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "asrfeat/error.hpp"
#include "byte_io.hpp"
#include "file_util.hpp"

namespace asrfeat {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

bool tag_is(const std::uint8_t* p, const char* tag) { return std::memcmp(p, tag, 4) == 0; }

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  const std::string name = path.string();
  if (bytes.size() < 12 || !tag_is(bytes.data(), "RIFF") || !tag_is(bytes.data() + 8, "WAVE")) {
    throw Error(ErrorCode::UnsupportedEncoding, name + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0;
  std::uint16_t num_channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t len = detail::load_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (tag_is(chunk, "fmt ")) {
      if (len < 16 || len > avail) throw Error(ErrorCode::UnsupportedEncoding, name + ": bad fmt chunk");
      format = detail::load_u16(chunk + 8);
      num_channels = detail::load_u16(chunk + 10);
      sample_rate = detail::load_u32(chunk + 12);
      bits = detail::load_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (len < 26) throw Error(ErrorCode::UnsupportedEncoding, name + ": bad extensible fmt");
        // First two bytes of the subformat GUID carry the actual format tag.
        format = detail::load_u16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (tag_is(chunk, "data")) {
      data = chunk + 8;
      // Tolerate writers that leave the length unpatched.
      data_len = std::min(len, avail);
      break;
    }
    pos = body + len + (len & 1);
  }

  if (!have_fmt) throw Error(ErrorCode::UnsupportedEncoding, name + ": missing fmt chunk");
  if (num_channels != 1) {
    throw Error(ErrorCode::UnsupportedEncoding,
                name + ": " + std::to_string(num_channels) + " channels, mono required");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::UnsupportedEncoding, name + ": format tag " + std::to_string(format) +
                                                    " with " + std::to_string(bits) + " bits");
  }
  if (sample_rate == 0) throw Error(ErrorCode::UnsupportedEncoding, name + ": zero sample rate");
  if (data == nullptr) throw Error(ErrorCode::EmptyAudio, name + ": no data chunk");

  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(sample_rate);
  buf.source_path = name;
  if (pcm16) {
    const std::size_t n = data_len / 2;
    buf.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto raw = static_cast<std::int16_t>(detail::load_u16(data + 2 * i));
      buf.samples[i] = static_cast<double>(raw) / 32768.0;
    }
  } else {
    const std::size_t n = data_len / 4;
    buf.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = detail::load_f32(data + 4 * i);
      if (!std::isfinite(v) || std::abs(v) > 1.0) {
        throw Error(ErrorCode::UnsupportedEncoding,
                    name + ": float sample " + std::to_string(i) + " outside [-1, 1]");
      }
      buf.samples[i] = v;
    }
  }
  if (buf.samples.empty()) throw Error(ErrorCode::EmptyAudio, name);
  return buf;
}

void validate_rate(const AudioBuffer& buf, int expected_hz) {
  if (buf.sample_rate_hz != expected_hz) {
    throw Error(ErrorCode::SampleRateMismatch,
                buf.source_path + ": sample rate " + std::to_string(buf.sample_rate_hz) +
                    " Hz, expected " + std::to_string(expected_hz) + " Hz");
  }
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz, WavSampleFormat format) {
  const bool pcm16 = format == WavSampleFormat::kPcm16;
  const std::uint16_t bytes_per_sample = pcm16 ? 2 : 4;
  const auto data_len = static_cast<std::uint32_t>(samples.size() * bytes_per_sample);

  detail::ByteWriter w;
  w.tag("RIFF");
  w.u32(36 + data_len);
  w.tag("WAVE");
  w.tag("fmt ");
  w.u32(16);
  w.u16(pcm16 ? kFormatPcm : kFormatFloat);
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(sample_rate_hz));
  w.u32(static_cast<std::uint32_t>(sample_rate_hz) * bytes_per_sample);
  w.u16(bytes_per_sample);
  w.u16(static_cast<std::uint16_t>(bytes_per_sample * 8));
  w.tag("data");
  w.u32(data_len);
  for (double x : samples) {
    const double clipped = std::clamp(x, -1.0, 1.0);
    if (pcm16) {
      const double q = std::clamp(std::round(clipped * 32768.0), -32768.0, 32767.0);
      w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      w.f32(static_cast<float>(clipped));
    }
  }
  detail::write_file_bytes(path, w.bytes());
}

}  // namespace asrfeat
