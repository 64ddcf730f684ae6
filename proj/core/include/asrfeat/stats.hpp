#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "asrfeat/features.hpp"

namespace asrfeat {

// Product-moment correlation. Throws LengthMismatch, TooFewSamples (n < 2) or
// ZeroVariance.
double pearson(std::span<const double> x, std::span<const double> y);

// layers x channels grid of per-feature correlations with one target.
struct CorrelationMap {
  std::size_t layers = 0;
  std::size_t channels = 0;
  std::vector<double> values;  // row-major, layer then channel
  Dimension dimension = Dimension::kValence;
  std::string speaker_id;
  std::size_t degenerate_count = 0;

  double at(std::size_t l, std::size_t c) const { return values[l * channels + c]; }
};

// fm must hold only the speaker's rows. Zero-variance cells are set to 0 and
// counted instead of failing.
CorrelationMap correlation_map(const FeatureMatrix& fm, Dimension dim, std::size_t layers,
                               std::size_t channels);

// "# speaker=", "# dimension=", "# degenerate=" then one CSV row per layer,
// values with 9 significant digits.
void export_heatmap_csv(const CorrelationMap& m, const std::filesystem::path& path);
CorrelationMap read_heatmap_csv(const std::filesystem::path& path);

}  // namespace asrfeat
