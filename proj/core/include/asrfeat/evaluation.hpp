#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "asrfeat/features.hpp"
#include "asrfeat/regression.hpp"

namespace asrfeat {

struct UtteranceRecord {
  std::string utterance_id;
  int session = 0;
  std::string speaker_id;
  std::filesystem::path wav_path;
  double valence = 0.0;
  double arousal = 0.0;
  std::optional<std::vector<double>> valence_ratings;
  std::optional<std::vector<double>> arousal_ratings;

  double target(Dimension d) const { return d == Dimension::kValence ? valence : arousal; }
  UtteranceMeta meta() const { return {utterance_id, speaker_id, session, valence, arousal}; }
};

class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::vector<UtteranceRecord> records);

  const std::vector<UtteranceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  // Sorted unique speaker ids.
  std::vector<std::string> speakers() const;
  const UtteranceRecord* find(const std::string& utterance_id) const;

 private:
  std::vector<UtteranceRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Header: utterance_id,session,speaker_id,wav_path,valence,arousal
//         [,valence_ratings,arousal_ratings]  (ratings ';'-separated)
// Relative wav paths are resolved against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

// Keeps records whose rating spread (max - min) is <= max_spread for both
// valence and arousal.
DatasetManifest consistency_filter(const DatasetManifest& m, double max_spread = 1.0);

struct Fold {
  std::string speaker_id;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// One fold per speaker, ordered by speaker id; ids keep manifest order.
std::vector<Fold> loso_folds(const DatasetManifest& m);

inline constexpr std::array<Dimension, 2> kDimensions = {Dimension::kArousal, Dimension::kValence};

struct LosoConfig {
  // Number of selected features; unset keeps every candidate column.
  std::optional<std::size_t> k = 100;
  LayerSelector selector;
  std::string filter_description = "none";
  int workers = 1;
  // Keep fitted models in the report (for audit dumps and tests).
  bool keep_models = false;
};

struct FoldResult {
  std::string speaker_id;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  // Indexed like kDimensions.
  std::array<double, 2> mse{};
  std::array<std::vector<std::size_t>, 2> selected;
  // Filled only when LosoConfig::keep_models is set.
  std::array<std::optional<RegressionModel>, 2> models;
};

struct DimensionSummary {
  double mean = 0.0;
  double variance = 0.0;  // population variance across folds
  double stddev = 0.0;
};

struct EvaluationReport {
  std::string feature_set_name;
  std::string k_description;
  std::string selector;
  std::string filter_description;
  std::size_t n_utterances = 0;
  std::vector<FoldResult> folds;
  std::array<DimensionSummary, 2> summary;  // indexed like kDimensions

  const DimensionSummary& summary_for(Dimension d) const;
};

DimensionSummary summarize(const std::vector<double>& fold_mse);

// Leave-one-speaker-out fit and evaluation for both dimensions. Scaling and
// selection see training rows only. Targets come from the manifest; fm rows
// are matched by utterance id. Throws FoldFailure naming the speaker when a
// fold cannot be fitted.
EvaluationReport run_loso(const FeatureMatrix& fm, const DatasetManifest& m, const LosoConfig& cfg);

struct ComparisonRow {
  std::string feature_set_name;
  // arousal mean, arousal variance, valence mean, valence variance
  std::array<double, 4> values{};
  std::array<bool, 4> best{};
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  static constexpr std::array<const char*, 4> kColumns = {"arousal_mean", "arousal_variance",
                                                          "valence_mean", "valence_variance"};
};

// Rows in input order; the lowest mean in each dimension is flagged.
ComparisonTable compare_feature_sets(const std::vector<EvaluationReport>& reports);

void write_report_csv(const EvaluationReport& r, const std::filesystem::path& path);
void write_comparison_csv(const ComparisonTable& t, const std::filesystem::path& path);
std::string format_comparison_text(const ComparisonTable& t);

}  // namespace asrfeat
