#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "asrfeat/error.hpp"
#include "asrfeat/weight_io.hpp"
#include "oracles.hpp"

using namespace asrfeat;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.n_mfcc = 3;
  cfg.channels = 4;
  cfg.n_blocks = 2;
  cfg.dilations_per_block = {1, 2};
  cfg.kernel_size = 3;
  return cfg;
}

void write_raw(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode read_code(const std::filesystem::path& p) {
  try {
    read_weights(p);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an asrfeat::Error");
  return ErrorCode::ParseError;
}

std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  return b[off] | (b[off + 1] << 8) | (b[off + 2] << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64({}) == 0xcbf29ce484222325ULL);
  const std::string a = "a";
  CHECK(fnv1a64({reinterpret_cast<const std::uint8_t*>(a.data()), a.size()}) == 0xaf63dc4c8601ec8cULL);
  const std::string fb = "foobar";
  CHECK(fnv1a64({reinterpret_cast<const std::uint8_t*>(fb.data()), fb.size()}) == 0x85944171f73967e8ULL);
}

TEST_CASE("splitmix64 reference sequence") {
  // First outputs for seed 1234567 as published with the reference C code.
  SplitMix64 g(1234567);
  CHECK(g.next() == 6457827717110365317ULL);
  CHECK(g.next() == 3203168211198807973ULL);
  CHECK(g.next() == 9817491932198370423ULL);
}

TEST_CASE("payload size for the default config") {
  ModelConfig cfg;
  const std::uint64_t per_layer = 2 * (128 * 128 * 7 + 128) + (128 * 128 + 128);
  CHECK(weight_payload_bytes(cfg) == 4 * (128 * 20 + 128 + 15 * per_layer));
}

TEST_CASE("round trip is bitwise and the header is laid out as documented") {
  testing::TempDir dir("wio");
  const ModelConfig cfg = small_config();
  const WeightSet w = synth_weights(cfg, 42);
  const auto sum = write_weights(w, cfg, dir / "w.bin");
  const auto bytes = testing::read_bytes(dir / "w.bin");
  REQUIRE(bytes.size() == 28 + weight_payload_bytes(cfg) + 8);
  CHECK(std::memcmp(bytes.data(), "GCUW", 4) == 0);
  CHECK(u32_at(bytes, 4) == 1);
  CHECK(u32_at(bytes, 8) == 3);
  CHECK(u32_at(bytes, 12) == 4);
  CHECK(u32_at(bytes, 16) == 2);
  CHECK(u32_at(bytes, 20) == 2);
  CHECK(u32_at(bytes, 24) == 3);
  CHECK(fnv1a64({bytes.data() + 28, bytes.size() - 36}) == sum);
  // first payload value is input_proj W[0][0][0]
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + 28, 4);
  CHECK(first == w.input_proj.weight[0]);

  const auto [cfg2, w2] = read_weights(dir / "w.bin");
  CHECK(cfg2 == cfg);
  CHECK(w2 == w);
}

TEST_CASE("corrupt files are rejected with the right code") {
  testing::TempDir dir("wio_bad");
  const ModelConfig cfg = small_config();
  write_weights(synth_weights(cfg, 1), cfg, dir / "ok.bin");
  const auto good = testing::read_bytes(dir / "ok.bin");

  auto flipped = good;
  flipped[40] ^= 0x01;
  write_raw(dir / "flip.bin", flipped);
  CHECK(read_code(dir / "flip.bin") == ErrorCode::ChecksumMismatch);

  auto magic = good;
  magic[0] = 'X';
  write_raw(dir / "magic.bin", magic);
  CHECK(read_code(dir / "magic.bin") == ErrorCode::BadMagic);

  auto version = good;
  version[4] = 2;
  write_raw(dir / "version.bin", version);
  CHECK(read_code(dir / "version.bin") == ErrorCode::VersionUnsupported);

  write_raw(dir / "short.bin", {good.begin(), good.end() - 20});
  CHECK(read_code(dir / "short.bin") == ErrorCode::TruncatedFile);
  write_raw(dir / "tiny.bin", {good.begin(), good.begin() + 3});
  CHECK(read_code(dir / "tiny.bin") == ErrorCode::TruncatedFile);

  CHECK(read_code(dir / "absent.bin") == ErrorCode::MissingFile);
}

TEST_CASE("write to an unwritable path fails with IoFailure") {
  const ModelConfig cfg = small_config();
  try {
    write_weights(synth_weights(cfg, 1), cfg, "/nonexistent_dir_asrfeat/w.bin");
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }
}

TEST_CASE("synth_weights is deterministic, seed dependent and bounded") {
  const ModelConfig cfg = small_config();
  const WeightSet a = synth_weights(cfg, 7);
  CHECK(a == synth_weights(cfg, 7));
  CHECK_FALSE(a == synth_weights(cfg, 8));
  a.check_matches(cfg);

  auto bounded = [](const ConvWeights& c) {
    const double s = 1.0 / std::sqrt(static_cast<double>(c.fan_in()));
    for (float v : c.weight) REQUIRE(std::abs(static_cast<double>(v)) <= s);
    for (float v : c.bias) REQUIRE(std::abs(static_cast<double>(v)) <= s);
  };
  bounded(a.input_proj);
  for (const auto& l : a.layers) {
    bounded(l.filter);
    bounded(l.gate);
    bounded(l.residual);
  }
}

TEST_CASE("same seed gives byte-identical files") {
  testing::TempDir dir("wio_det");
  const ModelConfig cfg = small_config();
  write_weights(synth_weights(cfg, 3), cfg, dir / "a.bin");
  write_weights(synth_weights(cfg, 3), cfg, dir / "b.bin");
  CHECK(testing::read_bytes(dir / "a.bin") == testing::read_bytes(dir / "b.bin"));
}
