#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "asrfeat/gcu_net.hpp"
#include "asrfeat/matrix.hpp"

namespace asrfeat {

enum class Pooling { kMean, kMax };

std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view text);

// Per-utterance pooled activations. Index j belongs to layer j / channels and
// channel j % channels (layer-major).
struct NeuralFeatureVector {
  std::vector<double> values;
  std::size_t layers = 0;
  std::size_t channels = 0;
  std::string utterance_id;

  std::size_t layer_of(std::size_t j) const { return j / channels; }
  std::size_t channel_of(std::size_t j) const { return j % channels; }
};

NeuralFeatureVector mean_pool(const ActivationTensor& a);
NeuralFeatureVector max_pool(const ActivationTensor& a);
NeuralFeatureVector pool(const ActivationTensor& a, Pooling p);

enum class LayerSelectorKind { kAll, kFirst, kLast };

struct LayerSelector {
  LayerSelectorKind kind = LayerSelectorKind::kAll;
  int k = 0;

  // "all", "first:<k>" or "last:<k>".
  static LayerSelector parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const LayerSelector&) const = default;
};

std::vector<std::size_t> layer_feature_indices(std::size_t layers, std::size_t channels,
                                               const LayerSelector& sel);
std::vector<std::size_t> layer_feature_indices(const ModelConfig& cfg, const LayerSelector& sel);

enum class Dimension { kValence, kArousal };

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view text);

struct UtteranceMeta {
  std::string utterance_id;
  std::string speaker_id;
  int session = 0;
  double valence = 0.0;
  double arousal = 0.0;

  double target(Dimension d) const { return d == Dimension::kValence ? valence : arousal; }
};

// Layer/channel geometry of a neural feature set, carried in file headers.
struct FeatureLayout {
  std::size_t layers = 0;
  std::size_t channels = 0;
  Pooling pooling = Pooling::kMean;
};

// N utterances x D features plus per-row metadata.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::string feature_set_name, std::vector<std::string> feature_names);

  // Names f0000, f0001, ... sized layers * channels.
  static FeatureMatrix neural(std::string feature_set_name, const FeatureLayout& layout);

  void append(UtteranceMeta meta, std::span<const double> values);

  std::size_t rows() const { return meta_.size(); }
  std::size_t cols() const { return names_.size(); }

  const std::string& feature_set_name() const { return set_name_; }
  void set_feature_set_name(std::string name) { set_name_ = std::move(name); }
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::vector<UtteranceMeta>& meta() const { return meta_; }
  const std::optional<FeatureLayout>& layout() const { return layout_; }
  void set_layout(const FeatureLayout& layout) { layout_ = layout; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::optional<std::size_t> find(std::string_view utterance_id) const;

  // Copies the given rows (in that order) into a dense matrix.
  Matrix gather_rows(std::span<const std::size_t> rows) const;

  // Rows belonging to one speaker, in file order.
  FeatureMatrix restrict_to_speaker(std::string_view speaker_id) const;

  std::vector<std::string> speakers() const;

 private:
  std::string set_name_;
  std::vector<std::string> names_;
  std::vector<UtteranceMeta> meta_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<FeatureLayout> layout_;
};

// CSV with optional leading "# key=value" comment lines, then the header
// utterance_id,speaker_id,session,valence,arousal,<feature names...>.
// Values are printed with 17 significant digits so that re-reading is exact.
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& fm);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

}  // namespace asrfeat
