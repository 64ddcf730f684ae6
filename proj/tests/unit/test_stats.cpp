#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <random>

#include "asrfeat/stats.hpp"
#include "oracles.hpp"

using namespace asrfeat;
using testing::error_code_of;

namespace {

FeatureMatrix speaker_matrix(std::size_t layers, std::size_t channels, std::size_t n, std::uint64_t seed) {
  FeatureMatrix fm = FeatureMatrix::neural("s", {layers, channels, Pooling::kMean});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(layers * channels);
    for (auto& x : v) x = u(rng);
    const double val = 3.0 + v[0];
    v[1] = 0.25;  // constant column
    fm.append({"u" + std::to_string(i), "Ses01F", 1, val, 3.0 - 0.5 * v[2]}, v);
  }
  return fm;
}

}  // namespace

TEST_CASE("pearson worked examples") {
  const std::vector<double> x = {1, 2, 3, 4};
  CHECK(pearson(x, std::vector<double>{2, 4, 6, 8}) == doctest::Approx(1.0));
  CHECK(pearson(x, std::vector<double>{8, 6, 4, 2}) == doctest::Approx(-1.0));
  CHECK(pearson(x, std::vector<double>{1, -1, -1, 1}) == doctest::Approx(0.0));
  CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) == doctest::Approx(0.5));
}

TEST_CASE("pearson errors") {
  CHECK(error_code_of([] { pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}); }) ==
        ErrorCode::LengthMismatch);
  CHECK(error_code_of([] { pearson(std::vector<double>{1}, std::vector<double>{1}); }) == ErrorCode::TooFewSamples);
  CHECK(error_code_of([] { pearson(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}); }) ==
        ErrorCode::ZeroVariance);
}

TEST_CASE("pearson is symmetric, bounded and affine invariant") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = testing::white_noise(3 + rng() % 40, 5.0, rng());
    const auto y = testing::white_noise(x.size(), 1.0, rng());
    const double r = pearson(x, y);
    CHECK(std::abs(r) <= 1.0);
    CHECK(pearson(y, x) == doctest::Approx(r).epsilon(1e-12));
    std::vector<double> ax(x);
    for (auto& v : ax) v = 3.5 * v - 100.0;
    CHECK(pearson(ax, y) == doctest::Approx(r).epsilon(1e-9));
    for (auto& v : ax) v = -v;
    CHECK(pearson(ax, y) == doctest::Approx(-r).epsilon(1e-9));
  }
}

TEST_CASE("pearson survives a large common offset") {
  const std::vector<double> x = {1e9 + 1, 1e9 + 2, 1e9 + 3, 1e9 + 4};
  CHECK(pearson(x, std::vector<double>{1, 2, 3, 4}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("correlation_map grid and degenerate cells") {
  const FeatureMatrix fm = speaker_matrix(3, 4, 30, 5);
  const CorrelationMap m = correlation_map(fm, Dimension::kValence, 3, 4);
  CHECK(m.speaker_id == "Ses01F");
  CHECK(m.values.size() == 12);
  CHECK(m.at(0, 0) == doctest::Approx(1.0));
  CHECK(m.at(0, 1) == 0.0);
  CHECK(m.degenerate_count == 1);
  const CorrelationMap a = correlation_map(fm, Dimension::kArousal, 3, 4);
  CHECK(a.at(0, 2) == doctest::Approx(-1.0));
  for (std::size_t j = 0; j < 12; ++j) {
    std::vector<double> col(fm.rows()), tgt(fm.rows());
    for (std::size_t r = 0; r < fm.rows(); ++r) {
      col[r] = fm.at(r, j);
      tgt[r] = fm.meta()[r].valence;
    }
    if (j != 1) CHECK(m.values[j] == pearson(col, tgt));
  }
}

TEST_CASE("correlation_map is invariant to row order") {
  const FeatureMatrix fm = speaker_matrix(2, 3, 12, 7);
  FeatureMatrix rev = FeatureMatrix::neural("s", {2, 3, Pooling::kMean});
  for (std::size_t r = fm.rows(); r-- > 0;) rev.append(fm.meta()[r], fm.row(r));
  const auto a = correlation_map(fm, Dimension::kValence, 2, 3);
  const auto b = correlation_map(rev, Dimension::kValence, 2, 3);
  for (std::size_t j = 0; j < a.values.size(); ++j) CHECK(a.values[j] == doctest::Approx(b.values[j]).epsilon(1e-12));
}

TEST_CASE("correlation_map errors") {
  const FeatureMatrix fm = speaker_matrix(2, 3, 1, 1);
  CHECK(error_code_of([&] { correlation_map(fm, Dimension::kValence, 2, 3); }) == ErrorCode::TooFewUtterances);
  CHECK(error_code_of([&] { correlation_map(fm, Dimension::kValence, 3, 3); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("heatmap CSV layout and round trip") {
  testing::TempDir dir("heat");
  const CorrelationMap m = correlation_map(speaker_matrix(15, 8, 20, 3), Dimension::kValence, 15, 8);
  export_heatmap_csv(m, dir / "h.csv");
  std::size_t comment = 0, rows = 0;
  {
    std::ifstream in(dir / "h.csv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("#", 0) == 0) {
        ++comment;
      } else {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
      }
    }
  }
  CHECK(comment == 3);
  CHECK(rows == 15);
  const CorrelationMap back = read_heatmap_csv(dir / "h.csv");
  CHECK(back.layers == 15);
  CHECK(back.channels == 8);
  CHECK(back.speaker_id == m.speaker_id);
  CHECK(back.degenerate_count == m.degenerate_count);
  for (std::size_t j = 0; j < m.values.size(); ++j) CHECK(back.values[j] == doctest::Approx(m.values[j]).epsilon(1e-8));
}
