#include "asrfeat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "asrfeat/csv.hpp"
#include "asrfeat/error.hpp"
#include "file_util.hpp"

namespace asrfeat {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "pearson needs at least 2 points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMap correlation_map(const FeatureMatrix& fm, Dimension dim, std::size_t layers, std::size_t channels) {
  if (layers * channels != fm.cols()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(layers) + "x" + std::to_string(channels) +
                                                  " map for " + std::to_string(fm.cols()) + " features");
  }
  if (fm.rows() < 2) {
    throw Error(ErrorCode::TooFewUtterances, std::to_string(fm.rows()) + " utterance(s); need at least 2");
  }
  CorrelationMap m;
  m.layers = layers;
  m.channels = channels;
  m.dimension = dim;
  m.values.assign(layers * channels, 0.0);
  const auto speakers = fm.speakers();
  m.speaker_id = speakers.size() == 1 ? speakers.front() : "mixed";

  std::vector<double> target(fm.rows());
  for (std::size_t r = 0; r < fm.rows(); ++r) target[r] = fm.meta()[r].target(dim);
  std::vector<double> column(fm.rows());
  for (std::size_t j = 0; j < fm.cols(); ++j) {
    for (std::size_t r = 0; r < fm.rows(); ++r) column[r] = fm.at(r, j);
    try {
      m.values[j] = pearson(column, target);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
      m.values[j] = 0.0;
      ++m.degenerate_count;
    }
  }
  return m;
}

void export_heatmap_csv(const CorrelationMap& m, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "# speaker=" << m.speaker_id << '\n';
  out << "# dimension=" << to_string(m.dimension) << '\n';
  out << "# degenerate=" << m.degenerate_count << '\n';
  for (std::size_t l = 0; l < m.layers; ++l) {
    for (std::size_t c = 0; c < m.channels; ++c) {
      if (c) out << ',';
      out << csv::format_double(m.at(l, c), 9);
    }
    out << '\n';
  }
  detail::write_file_text(path, out.str());
}

CorrelationMap read_heatmap_csv(const std::filesystem::path& path) {
  CorrelationMap m;
  for (const auto& line : csv::read_lines(path)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "speaker") m.speaker_id = value;
      if (key == "dimension") m.dimension = parse_dimension(value);
      if (key == "degenerate") m.degenerate_count = static_cast<std::size_t>(csv::parse_int(value));
      continue;
    }
    const auto fields = csv::split_line(line);
    if (m.layers == 0) m.channels = fields.size();
    if (fields.size() != m.channels) {
      throw Error(ErrorCode::ParseError, path.string() + ": ragged heatmap row " + std::to_string(m.layers + 1));
    }
    for (const auto& f : fields) m.values.push_back(csv::parse_double(f));
    ++m.layers;
  }
  return m;
}

}  // namespace asrfeat
