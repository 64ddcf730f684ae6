#include "asrfeat/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "asrfeat/csv.hpp"
#include "asrfeat/error.hpp"
#include "asrfeat/parallel.hpp"
#include "file_util.hpp"

namespace asrfeat {
namespace {

constexpr const char* kManifestColumns[] = {"utterance_id", "session", "speaker_id", "wav_path", "valence", "arousal"};
constexpr const char* kRatingColumns[] = {"valence_ratings", "arousal_ratings"};

std::optional<std::vector<double>> parse_ratings(const std::string& field) {
  if (field.empty()) return std::nullopt;
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= field.size()) {
    const auto semi = field.find(';', start);
    const auto end = semi == std::string::npos ? field.size() : semi;
    out.push_back(csv::parse_double(std::string_view(field).substr(start, end - start)));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

std::string join_ratings(const std::optional<std::vector<double>>& r) {
  if (!r) return {};
  std::string out;
  for (std::size_t i = 0; i < r->size(); ++i) {
    if (i) out += ';';
    out += csv::format_double((*r)[i], 17);
  }
  return out;
}

void check_scale(double v, const std::string& what) {
  if (!(v >= 1.0 && v <= 5.0)) {
    throw Error(ErrorCode::RangeViolation, what + " = " + csv::format_double(v, 9) + " outside [1, 5]");
  }
}

void check_ratings(const std::optional<std::vector<double>>& ratings, double scalar, const std::string& what) {
  if (!ratings) return;
  double sum = 0.0;
  for (double r : *ratings) {
    check_scale(r, what + " rating");
    sum += r;
  }
  const double mean = sum / static_cast<double>(ratings->size());
  if (std::abs(mean - scalar) > 1e-6) {
    throw Error(ErrorCode::RangeViolation, what + " = " + csv::format_double(scalar, 9) +
                                               " is not the mean of its ratings (" + csv::format_double(mean, 9) + ")");
  }
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

std::size_t dim_slot(Dimension d) { return d == Dimension::kArousal ? 0 : 1; }

}  // namespace

DatasetManifest::DatasetManifest(std::vector<UtteranceRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].utterance_id, i).second) {
      throw Error(ErrorCode::DuplicateId, records_[i].utterance_id);
    }
  }
}

std::vector<std::string> DatasetManifest::speakers() const {
  std::set<std::string> s;
  for (const auto& r : records_) s.insert(r.speaker_id);
  return {s.begin(), s.end()};
}

const UtteranceRecord* DatasetManifest::find(const std::string& utterance_id) const {
  const auto it = index_.find(utterance_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw Error(ErrorCode::ParseError, path.string() + ": empty manifest");
  const auto header = csv::split_line(lines[0]);
  const bool with_ratings = header.size() == 8;
  if (header.size() != 6 && !with_ratings) {
    throw Error(ErrorCode::ParseError, path.string() + ": expected 6 or 8 columns, found " + std::to_string(header.size()));
  }
  for (std::size_t c = 0; c < 6; ++c) {
    if (header[c] != kManifestColumns[c]) {
      throw Error(ErrorCode::ParseError, path.string() + ": column " + std::to_string(c + 1) + " must be '" +
                                             kManifestColumns[c] + "'");
    }
  }
  if (with_ratings && (header[6] != kRatingColumns[0] || header[7] != kRatingColumns[1])) {
    throw Error(ErrorCode::ParseError, path.string() + ": rating columns must be valence_ratings,arousal_ratings");
  }

  const std::filesystem::path base = path.parent_path();
  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path.string() + " row " + std::to_string(i + 1);
    try {
      const auto f = csv::split_line(lines[i]);
      if (f.size() != header.size()) {
        throw Error(ErrorCode::ParseError, std::to_string(f.size()) + " fields, expected " + std::to_string(header.size()));
      }
      UtteranceRecord rec;
      rec.utterance_id = f[0];
      rec.session = csv::parse_int(f[1]);
      rec.speaker_id = f[2];
      if (rec.utterance_id.empty() || rec.speaker_id.empty() || f[3].empty()) {
        throw Error(ErrorCode::ParseError, "utterance_id, speaker_id and wav_path must be non-empty");
      }
      std::filesystem::path wav(f[3]);
      rec.wav_path = wav.is_absolute() ? wav : base / wav;
      rec.valence = csv::parse_double(f[4]);
      rec.arousal = csv::parse_double(f[5]);
      check_scale(rec.valence, "valence");
      check_scale(rec.arousal, "arousal");
      if (with_ratings) {
        rec.valence_ratings = parse_ratings(f[6]);
        rec.arousal_ratings = parse_ratings(f[7]);
        check_ratings(rec.valence_ratings, rec.valence, "valence");
        check_ratings(rec.arousal_ratings, rec.arousal, "arousal");
      }
      if (!seen.insert(rec.utterance_id).second) throw Error(ErrorCode::DuplicateId, rec.utterance_id);
      records.push_back(std::move(rec));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return DatasetManifest(std::move(records));
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  const bool with_ratings = std::any_of(m.records().begin(), m.records().end(), [](const UtteranceRecord& r) {
    return r.valence_ratings.has_value() || r.arousal_ratings.has_value();
  });
  std::ostringstream out;
  out << "utterance_id,session,speaker_id,wav_path,valence,arousal";
  if (with_ratings) out << ",valence_ratings,arousal_ratings";
  out << '\n';
  for (const auto& r : m.records()) {
    out << csv::escape(r.utterance_id) << ',' << r.session << ',' << csv::escape(r.speaker_id) << ','
        << csv::escape(r.wav_path.string()) << ',' << csv::format_double(r.valence, 17) << ','
        << csv::format_double(r.arousal, 17);
    if (with_ratings) out << ',' << join_ratings(r.valence_ratings) << ',' << join_ratings(r.arousal_ratings);
    out << '\n';
  }
  detail::write_file_text(path, out.str());
}

DatasetManifest consistency_filter(const DatasetManifest& m, double max_spread) {
  std::vector<UtteranceRecord> kept;
  for (const auto& r : m.records()) {
    if (!r.valence_ratings || !r.arousal_ratings || r.valence_ratings->empty() || r.arousal_ratings->empty()) {
      throw Error(ErrorCode::ConsistencyDataMissing, r.utterance_id + " has no per-annotator ratings");
    }
    if (spread(*r.valence_ratings) <= max_spread && spread(*r.arousal_ratings) <= max_spread) kept.push_back(r);
  }
  return DatasetManifest(std::move(kept));
}

std::vector<Fold> loso_folds(const DatasetManifest& m) {
  const auto speakers = m.speakers();
  if (speakers.size() < 2) {
    throw Error(ErrorCode::TooFewSpeakers, std::to_string(speakers.size()) + " speaker(s); LOSO needs at least 2");
  }
  std::vector<Fold> folds;
  for (const auto& s : speakers) {
    Fold f;
    f.speaker_id = s;
    for (const auto& r : m.records()) (r.speaker_id == s ? f.test_ids : f.train_ids).push_back(r.utterance_id);
    folds.push_back(std::move(f));
  }
  return folds;
}

const DimensionSummary& EvaluationReport::summary_for(Dimension d) const { return summary[dim_slot(d)]; }

DimensionSummary summarize(const std::vector<double>& fold_mse) {
  DimensionSummary s;
  if (fold_mse.empty()) return s;
  const auto n = static_cast<double>(fold_mse.size());
  for (double v : fold_mse) s.mean += v;
  s.mean /= n;
  for (double v : fold_mse) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= n;
  s.stddev = std::sqrt(s.variance);
  return s;
}

EvaluationReport run_loso(const FeatureMatrix& fm, const DatasetManifest& m, const LosoConfig& cfg) {
  std::vector<std::size_t> candidates;
  if (fm.layout()) {
    candidates = layer_feature_indices(fm.layout()->layers, fm.layout()->channels, cfg.selector);
  } else if (cfg.selector.kind == LayerSelectorKind::kAll) {
    candidates = layer_feature_indices(1, fm.cols(), cfg.selector);
  } else {
    throw Error(ErrorCode::KOutOfRange, "feature set '" + fm.feature_set_name() +
                                            "' has no layer layout; only the 'all' selector applies");
  }
  const std::size_t k = cfg.k.value_or(candidates.size());
  if (k > candidates.size()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds the " + std::to_string(candidates.size()) +
                                          " features allowed by selector " + cfg.selector.to_string());
  }

  std::map<std::string, std::size_t> fm_row;
  for (const auto& r : m.records()) {
    const auto row = fm.find(r.utterance_id);
    if (!row) {
      throw Error(ErrorCode::DimensionMismatch, "feature set '" + fm.feature_set_name() + "' has no row for " + r.utterance_id);
    }
    fm_row.emplace(r.utterance_id, *row);
  }

  const std::vector<Fold> folds = loso_folds(m);
  EvaluationReport report;
  report.feature_set_name = fm.feature_set_name();
  report.k_description = cfg.k ? std::to_string(k) : "all";
  report.selector = cfg.selector.to_string();
  report.filter_description = cfg.filter_description;
  report.n_utterances = m.size();
  report.folds.resize(folds.size());

  parallel_for(folds.size(), cfg.workers, [&](std::size_t f) {
    const Fold& fold = folds[f];
    FoldResult& out = report.folds[f];
    out.speaker_id = fold.speaker_id;
    out.n_train = fold.train_ids.size();
    out.n_test = fold.test_ids.size();
    try {
      std::vector<std::size_t> train_rows;
      std::vector<std::size_t> test_rows;
      for (const auto& id : fold.train_ids) train_rows.push_back(fm_row.at(id));
      for (const auto& id : fold.test_ids) test_rows.push_back(fm_row.at(id));
      const Matrix x_train = fm.gather_rows(train_rows);
      const Matrix x_test = fm.gather_rows(test_rows);
      for (Dimension d : kDimensions) {
        std::vector<double> y_train;
        std::vector<double> y_test;
        for (const auto& id : fold.train_ids) y_train.push_back(m.find(id)->target(d));
        for (const auto& id : fold.test_ids) y_test.push_back(m.find(id)->target(d));
        RegressionModel model = fit_selected_regression(x_train, y_train, k, candidates);
        model.target_name = std::string(to_string(d));
        const std::size_t slot = dim_slot(d);
        out.mse[slot] = mse(predict(model, x_test), y_test);
        out.selected[slot] = model.selected_indices;
        if (cfg.keep_models) out.models[slot] = std::move(model);
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::FoldFailure, "speaker " + fold.speaker_id + ": " + e.what());
    }
  });

  for (Dimension d : kDimensions) {
    std::vector<double> per_fold;
    for (const auto& fr : report.folds) per_fold.push_back(fr.mse[dim_slot(d)]);
    report.summary[dim_slot(d)] = summarize(per_fold);
  }
  return report;
}

ComparisonTable compare_feature_sets(const std::vector<EvaluationReport>& reports) {
  ComparisonTable table;
  if (reports.empty()) return table;
  const auto& ref = reports.front().folds;
  for (const auto& r : reports) {
    bool same = r.folds.size() == ref.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i) {
      same = r.folds[i].speaker_id == ref[i].speaker_id && r.folds[i].n_test == ref[i].n_test;
    }
    if (!same) {
      throw Error(ErrorCode::FoldStructureMismatch, "report '" + r.feature_set_name + "' has different folds than '" +
                                                        reports.front().feature_set_name + "'");
    }
    ComparisonRow row;
    row.feature_set_name = r.feature_set_name;
    const auto& a = r.summary_for(Dimension::kArousal);
    const auto& v = r.summary_for(Dimension::kValence);
    row.values = {a.mean, a.variance, v.mean, v.variance};
    table.rows.push_back(std::move(row));
  }
  for (std::size_t col : {0u, 2u}) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
      if (table.rows[i].values[col] < table.rows[best].values[col]) best = i;
    }
    table.rows[best].best[col] = true;
  }
  return table;
}

void write_report_csv(const EvaluationReport& r, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "# feature_set=" << r.feature_set_name << '\n';
  out << "# k=" << r.k_description << '\n';
  out << "# selector=" << r.selector << '\n';
  out << "# filter=" << r.filter_description << '\n';
  out << "# utterances=" << r.n_utterances << '\n';
  out << "row,speaker,n_train,n_test,arousal_mse,valence_mse\n";
  for (const auto& f : r.folds) {
    out << "fold," << csv::escape(f.speaker_id) << ',' << f.n_train << ',' << f.n_test << ','
        << csv::format_double(f.mse[0], 17) << ',' << csv::format_double(f.mse[1], 17) << '\n';
  }
  const auto& a = r.summary[0];
  const auto& v = r.summary[1];
  out << "mean,,,," << csv::format_double(a.mean, 17) << ',' << csv::format_double(v.mean, 17) << '\n';
  out << "variance,,,," << csv::format_double(a.variance, 17) << ',' << csv::format_double(v.variance, 17) << '\n';
  out << "std,,,," << csv::format_double(a.stddev, 17) << ',' << csv::format_double(v.stddev, 17) << '\n';
  detail::write_file_text(path, out.str());
}

void write_comparison_csv(const ComparisonTable& t, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t col : {0u, 2u}) {
    out << "# best_" << (col == 0 ? "arousal" : "valence") << '=';
    for (const auto& row : t.rows) {
      if (row.best[col]) out << row.feature_set_name;
    }
    out << '\n';
  }
  out << "feature_set";
  for (const char* c : ComparisonTable::kColumns) out << ',' << c;
  out << '\n';
  for (const auto& row : t.rows) {
    out << csv::escape(row.feature_set_name);
    for (double v : row.values) out << ',' << csv::format_double(v, 17);
    out << '\n';
  }
  detail::write_file_text(path, out.str());
}

std::string format_comparison_text(const ComparisonTable& t) {
  std::size_t name_width = 11;
  for (const auto& row : t.rows) name_width = std::max(name_width, row.feature_set_name.size());
  const int w = static_cast<int>(name_width);
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s | %-21s | %-21s\n", w, "", "Arousal", "Valence");
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-*s | %10s %10s | %10s %10s\n", w, "Feature set", "Mean", "Variance", "Mean",
                "Variance");
  out << buf;
  out << std::string(name_width + 49, '-') << '\n';
  for (const auto& row : t.rows) {
    std::string cells[4];
    for (std::size_t c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof(buf), "%.4f%s", row.values[c], row.best[c] ? "*" : "");
      cells[c] = buf;
    }
    std::snprintf(buf, sizeof(buf), "%-*s | %10s %10s | %10s %10s\n", w, row.feature_set_name.c_str(),
                  cells[0].c_str(), cells[1].c_str(), cells[2].c_str(), cells[3].c_str());
    out << buf;
  }
  out << "(* lowest mean MSE per dimension)\n";
  return out.str();
}

}  // namespace asrfeat
