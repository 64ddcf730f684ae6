#include "asrfeat/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "asrfeat/csv.hpp"
#include "asrfeat/error.hpp"
#include "file_util.hpp"

namespace asrfeat {
namespace {

constexpr std::size_t kMetaColumns = 5;
constexpr const char* kMetaHeader[kMetaColumns] = {"utterance_id", "speaker_id", "session", "valence", "arousal"};

std::string feature_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%04zu", j);
  return buf;
}

NeuralFeatureVector empty_like(const ActivationTensor& a) {
  if (a.frames == 0) throw Error(ErrorCode::EmptyTensor, a.utterance_id + ": tensor has no frames");
  NeuralFeatureVector v;
  v.layers = a.layers;
  v.channels = a.channels;
  v.utterance_id = a.utterance_id;
  v.values.resize(a.layers * a.channels);
  return v;
}

}  // namespace

std::string_view to_string(Pooling p) { return p == Pooling::kMean ? "mean" : "max"; }

Pooling parse_pooling(std::string_view text) {
  if (text == "mean") return Pooling::kMean;
  if (text == "max") return Pooling::kMax;
  throw Error(ErrorCode::ParseError, "pooling must be mean or max, got '" + std::string(text) + "'");
}

NeuralFeatureVector mean_pool(const ActivationTensor& a) {
  NeuralFeatureVector v = empty_like(a);
  for (std::size_t j = 0; j < v.values.size(); ++j) {
    const auto s = a.series(j / a.channels, j % a.channels);
    double sum = 0.0;
    for (double x : s) sum += x;
    v.values[j] = sum / static_cast<double>(a.frames);
  }
  return v;
}

NeuralFeatureVector max_pool(const ActivationTensor& a) {
  NeuralFeatureVector v = empty_like(a);
  for (std::size_t j = 0; j < v.values.size(); ++j) {
    const auto s = a.series(j / a.channels, j % a.channels);
    v.values[j] = *std::max_element(s.begin(), s.end());
  }
  return v;
}

NeuralFeatureVector pool(const ActivationTensor& a, Pooling p) {
  return p == Pooling::kMean ? mean_pool(a) : max_pool(a);
}

LayerSelector LayerSelector::parse(std::string_view text) {
  if (text == "all") return {};
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const auto head = text.substr(0, colon);
    LayerSelector sel;
    if (head == "first") {
      sel.kind = LayerSelectorKind::kFirst;
    } else if (head == "last") {
      sel.kind = LayerSelectorKind::kLast;
    } else {
      throw Error(ErrorCode::ParseError, "unknown layer selector '" + std::string(text) + "'");
    }
    sel.k = csv::parse_int(text.substr(colon + 1));
    return sel;
  }
  throw Error(ErrorCode::ParseError, "layer selector must be all, first:K or last:K, got '" + std::string(text) + "'");
}

std::string LayerSelector::to_string() const {
  switch (kind) {
    case LayerSelectorKind::kAll: return "all";
    case LayerSelectorKind::kFirst: return "first:" + std::to_string(k);
    case LayerSelectorKind::kLast: return "last:" + std::to_string(k);
  }
  return "all";
}

std::vector<std::size_t> layer_feature_indices(std::size_t layers, std::size_t channels, const LayerSelector& sel) {
  std::size_t first_layer = 0;
  std::size_t count = layers;
  if (sel.kind != LayerSelectorKind::kAll) {
    if (sel.k < 1 || static_cast<std::size_t>(sel.k) > layers) {
      throw Error(ErrorCode::KOutOfRange, sel.to_string() + " with " + std::to_string(layers) + " layers");
    }
    count = static_cast<std::size_t>(sel.k);
    first_layer = sel.kind == LayerSelectorKind::kFirst ? 0 : layers - count;
  }
  std::vector<std::size_t> idx(count * channels);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = first_layer * channels + i;
  return idx;
}

std::vector<std::size_t> layer_feature_indices(const ModelConfig& cfg, const LayerSelector& sel) {
  return layer_feature_indices(static_cast<std::size_t>(cfg.total_layers()),
                               static_cast<std::size_t>(cfg.channels), sel);
}

std::string_view to_string(Dimension d) { return d == Dimension::kValence ? "valence" : "arousal"; }

Dimension parse_dimension(std::string_view text) {
  if (text == "valence") return Dimension::kValence;
  if (text == "arousal") return Dimension::kArousal;
  throw Error(ErrorCode::ParseError, "dimension must be valence or arousal, got '" + std::string(text) + "'");
}

FeatureMatrix::FeatureMatrix(std::string feature_set_name, std::vector<std::string> feature_names)
    : set_name_(std::move(feature_set_name)), names_(std::move(feature_names)) {}

FeatureMatrix FeatureMatrix::neural(std::string feature_set_name, const FeatureLayout& layout) {
  std::vector<std::string> names(layout.layers * layout.channels);
  for (std::size_t j = 0; j < names.size(); ++j) names[j] = feature_name(j);
  FeatureMatrix fm(std::move(feature_set_name), std::move(names));
  fm.layout_ = layout;
  return fm;
}

void FeatureMatrix::append(UtteranceMeta meta, std::span<const double> values) {
  if (values.size() != cols()) {
    throw Error(ErrorCode::DimensionMismatch, meta.utterance_id + ": " + std::to_string(values.size()) +
                                                  " values for " + std::to_string(cols()) + " columns");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::RangeViolation, meta.utterance_id + ": non-finite feature");
  }
  for (double t : {meta.valence, meta.arousal}) {
    if (!(t >= 1.0 && t <= 5.0)) {
      throw Error(ErrorCode::RangeViolation, meta.utterance_id + ": target outside [1, 5]");
    }
  }
  if (index_.contains(meta.utterance_id)) throw Error(ErrorCode::DuplicateId, meta.utterance_id);
  index_.emplace(meta.utterance_id, meta_.size());
  meta_.push_back(std::move(meta));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::size_t> FeatureMatrix::find(std::string_view utterance_id) const {
  const auto it = index_.find(std::string(utterance_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Matrix FeatureMatrix::gather_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

FeatureMatrix FeatureMatrix::restrict_to_speaker(std::string_view speaker_id) const {
  FeatureMatrix out(set_name_, names_);
  out.layout_ = layout_;
  for (std::size_t r = 0; r < rows(); ++r) {
    if (meta_[r].speaker_id == speaker_id) out.append(meta_[r], row(r));
  }
  return out;
}

std::vector<std::string> FeatureMatrix::speakers() const {
  std::set<std::string> s;
  for (const auto& m : meta_) s.insert(m.speaker_id);
  return {s.begin(), s.end()};
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& fm) {
  std::ostringstream out;
  out << "# feature_set=" << fm.feature_set_name() << '\n';
  if (fm.layout()) {
    out << "# layout=layer-major\n";
    out << "# layers=" << fm.layout()->layers << '\n';
    out << "# channels=" << fm.layout()->channels << '\n';
    out << "# pool=" << to_string(fm.layout()->pooling) << '\n';
  }
  for (std::size_t i = 0; i < kMetaColumns; ++i) out << (i ? "," : "") << kMetaHeader[i];
  for (const auto& n : fm.feature_names()) out << ',' << csv::escape(n);
  out << '\n';
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    const auto& m = fm.meta()[r];
    out << csv::escape(m.utterance_id) << ',' << csv::escape(m.speaker_id) << ',' << m.session << ','
        << csv::format_double(m.valence, 17) << ',' << csv::format_double(m.arousal, 17);
    for (double v : fm.row(r)) out << ',' << csv::format_double(v, 17);
    out << '\n';
  }
  detail::write_file_text(path, out.str());
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  std::size_t i = 0;
  std::string set_name = path.stem().string();
  FeatureLayout layout;
  bool have_layers = false;
  bool have_channels = false;
  for (; i < lines.size() && (lines[i].empty() || lines[i][0] == '#'); ++i) {
    const std::string& line = lines[i];
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(1, eq - 1);
    key.erase(0, key.find_first_not_of(' '));
    const std::string value = line.substr(eq + 1);
    if (key == "feature_set") set_name = value;
    if (key == "layers") { layout.layers = static_cast<std::size_t>(csv::parse_int(value)); have_layers = true; }
    if (key == "channels") { layout.channels = static_cast<std::size_t>(csv::parse_int(value)); have_channels = true; }
    if (key == "pool") layout.pooling = parse_pooling(value);
  }
  if (i == lines.size()) throw Error(ErrorCode::ParseError, path.string() + ": missing header row");

  const auto header = csv::split_line(lines[i]);
  if (header.size() < kMetaColumns + 1) {
    throw Error(ErrorCode::ParseError, path.string() + ": header needs metadata columns and at least one feature");
  }
  for (std::size_t c = 0; c < kMetaColumns; ++c) {
    if (header[c] != kMetaHeader[c]) {
      throw Error(ErrorCode::ParseError, path.string() + ": column " + std::to_string(c) + " must be '" +
                                             kMetaHeader[c] + "', found '" + header[c] + "'");
    }
  }
  FeatureMatrix fm(set_name, {header.begin() + kMetaColumns, header.end()});
  if (have_layers && have_channels) {
    if (layout.layers * layout.channels != fm.cols()) {
      throw Error(ErrorCode::ParseError, path.string() + ": layers x channels does not match the column count");
    }
    fm.set_layout(layout);
  }

  std::vector<double> values(fm.cols());
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(i + 1);
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::ParseError, where + ": " + std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(header.size()));
    }
    try {
      UtteranceMeta meta{fields[0], fields[1], csv::parse_int(fields[2]), csv::parse_double(fields[3]),
                         csv::parse_double(fields[4])};
      for (std::size_t c = 0; c < values.size(); ++c) values[c] = csv::parse_double(fields[kMetaColumns + c]);
      fm.append(std::move(meta), values);
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return fm;
}

}  // namespace asrfeat
