#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <vector>

#include "asrfeat/audio_io.hpp"
#include "asrfeat/error.hpp"
#include "oracles.hpp"

using namespace asrfeat;
using asrfeat::testing::TempDir;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an asrfeat::Error");
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("int16 samples normalize by 32768") {
  TempDir dir("audio");
  const std::vector<std::int16_t> raw = {0, 16384, -32768};
  testing::write_pcm16_raw(dir / "a.wav", raw, 16000);
  const AudioBuffer buf = load_wav(dir / "a.wav");
  REQUIRE(buf.samples.size() == 3);
  CHECK(buf.samples[0] == 0.0);
  CHECK(buf.samples[1] == 0.5);
  CHECK(buf.samples[2] == -1.0);
  CHECK(buf.sample_rate_hz == 16000);
}

TEST_CASE("one second at 16 kHz round-trips header and length") {
  TempDir dir("audio");
  std::vector<std::int16_t> raw(16000);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::int16_t>((i * 37) % 2000 - 1000);
  testing::write_pcm16_raw(dir / "one.wav", raw, 16000);
  const AudioBuffer buf = load_wav(dir / "one.wav");
  CHECK(buf.samples.size() == 16000);
  CHECK(buf.sample_rate_hz == 16000);
  CHECK(buf.duration_seconds() == doctest::Approx(1.0));
}

TEST_CASE("stereo and non-PCM inputs are rejected") {
  TempDir dir("audio");
  const std::vector<std::int16_t> raw = {1, 2, 3, 4};
  testing::write_pcm16_raw(dir / "stereo.wav", raw, 16000, 2);
  CHECK(code_of([&] { load_wav(dir / "stereo.wav"); }) == ErrorCode::UnsupportedEncoding);

  // 8-bit PCM: patch bits-per-sample of a valid file
  testing::write_pcm16_raw(dir / "pcm8.wav", raw, 16000);
  {
    std::fstream f(dir / "pcm8.wav", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(34);
    const char eight[2] = {8, 0};
    f.write(eight, 2);
  }
  CHECK(code_of([&] { load_wav(dir / "pcm8.wav"); }) == ErrorCode::UnsupportedEncoding);

  std::ofstream(dir / "junk.wav") << "definitely not audio";
  CHECK(code_of([&] { load_wav(dir / "junk.wav"); }) == ErrorCode::UnsupportedEncoding);
}

TEST_CASE("missing and empty files") {
  TempDir dir("audio");
  CHECK(code_of([&] { load_wav(dir / "nope.wav"); }) == ErrorCode::MissingFile);
  testing::write_pcm16_raw(dir / "empty.wav", std::vector<std::int16_t>{}, 16000);
  CHECK(code_of([&] { load_wav(dir / "empty.wav"); }) == ErrorCode::EmptyAudio);
}

TEST_CASE("float32 files load verbatim") {
  TempDir dir("audio");
  const std::vector<double> x = {0.25, -0.75, 1.0, -1.0, 0.0};
  write_wav(dir / "f.wav", x, 22050, WavSampleFormat::kFloat32);
  const AudioBuffer buf = load_wav(dir / "f.wav");
  CHECK(buf.sample_rate_hz == 22050);
  CHECK(buf.samples == x);
}

TEST_CASE("validate_rate") {
  AudioBuffer buf{{0.0}, 16000, "x"};
  CHECK_NOTHROW(validate_rate(buf, 16000));
  CHECK(code_of([&] { validate_rate(buf, 22050); }) == ErrorCode::SampleRateMismatch);
  buf.sample_rate_hz = 44100;
  try {
    validate_rate(buf, 16000);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SampleRateMismatch);
    const std::string msg = e.what();
    CHECK(msg.find("44100") != std::string::npos);
    CHECK(msg.find("16000") != std::string::npos);
  }
}

TEST_CASE("property: int16 write/load round trip within one quantization step") {
  TempDir dir("audio");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(1 + rng() % 3000);
    for (auto& v : x) v = amp(rng);
    write_wav(dir / "rt.wav", x, 16000);
    const AudioBuffer buf = load_wav(dir / "rt.wav");
    REQUIRE(buf.samples.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(buf.samples[i] - x[i]) <= 1.0 / 32768.0);
      CHECK(std::abs(buf.samples[i]) <= 1.0);
    }
  }
}
