#include "asrfeat_tools/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "asrfeat/audio_io.hpp"
#include "asrfeat/error.hpp"
#include "asrfeat/evaluation.hpp"
#include "asrfeat/features.hpp"
#include "asrfeat/gcu_net.hpp"
#include "asrfeat/mfcc.hpp"
#include "asrfeat/parallel.hpp"
#include "asrfeat/regression.hpp"
#include "asrfeat/stats.hpp"
#include "asrfeat/weight_io.hpp"

namespace asrfeat::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return hex64(fnv1a64(bytes));
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

fs::path provenance_path_for(const fs::path& output_file) {
  return fs::path(output_file.string() + ".run.json");
}

ordered_json model_config_json(const ModelConfig& c) {
  return {{"n_mfcc", c.n_mfcc},
          {"channels", c.channels},
          {"n_blocks", c.n_blocks},
          {"dilations_per_block", c.dilations_per_block},
          {"kernel_size", c.kernel_size}};
}

ordered_json mfcc_config_json(const MfccConfig& c) {
  return {{"sample_rate_hz", c.sample_rate_hz}, {"frame_len", c.frame_len}, {"hop_len", c.hop_len},
          {"n_mels", c.n_mels},                 {"n_mfcc", c.n_mfcc},       {"fmin_hz", c.fmin_hz},
          {"fmax_hz", c.resolved_fmax()},       {"log_floor", c.log_floor}, {"window", "hann"},
          {"log", "natural"}};
}

// ---- synth-weights -------------------------------------------------------

struct SynthOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<int> n_mfcc, channels, n_blocks, layers_per_block, kernel_size;
};

ModelConfig load_model_config(const SynthOptions& o) {
  ModelConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw Error(ErrorCode::MissingFile, o.config_path);
    ordered_json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, o.config_path + ": " + e.what());
    }
    cfg.n_mfcc = j.value("n_mfcc", cfg.n_mfcc);
    cfg.channels = j.value("channels", cfg.channels);
    cfg.n_blocks = j.value("n_blocks", cfg.n_blocks);
    cfg.kernel_size = j.value("kernel_size", cfg.kernel_size);
    if (j.contains("layers_per_block")) {
      cfg.dilations_per_block = ModelConfig::doubling_schedule(j["layers_per_block"].get<int>());
    }
  }
  if (o.n_mfcc) cfg.n_mfcc = *o.n_mfcc;
  if (o.channels) cfg.channels = *o.channels;
  if (o.n_blocks) cfg.n_blocks = *o.n_blocks;
  if (o.layers_per_block) cfg.dilations_per_block = ModelConfig::doubling_schedule(*o.layers_per_block);
  if (o.kernel_size) cfg.kernel_size = *o.kernel_size;
  cfg.validate();
  return cfg;
}

int cmd_synth_weights(const SynthOptions& o, std::ostream& out) {
  const ModelConfig cfg = load_model_config(o);
  const WeightSet w = synth_weights(cfg, o.seed);
  const std::uint64_t checksum = write_weights(w, cfg, o.out);
  out << "wrote " << o.out << " (" << weight_payload_bytes(cfg) << " payload bytes)\n";
  out << "checksum=" << hex64(checksum) << '\n';

  ordered_json run = {{"tool", "asrfeat"}, {"version", kToolVersion}, {"command", "synth-weights"},
                      {"seed", o.seed},    {"model", model_config_json(cfg)},
                      {"outputs", {{{"path", o.out}, {"payload_checksum", hex64(checksum)}}}}};
  write_json(provenance_path_for(o.out), run);
  return 0;
}

// ---- extract -------------------------------------------------------------

struct ExtractOptions {
  std::string weights;
  std::string manifest;
  std::string out;
  std::string pool = "mean";
  std::string name = "neural";
  std::string dump_mfcc_dir;
  int workers = 0;
  MfccConfig mfcc;
};

int cmd_extract(ExtractOptions o, std::ostream& out, std::ostream& err) {
  const Pooling pooling = parse_pooling(o.pool);
  const auto [model_cfg, weights] = read_weights(o.weights);
  const DatasetManifest manifest = load_manifest(o.manifest);
  o.mfcc.n_mfcc = model_cfg.n_mfcc;
  const MfccExtractor extractor(o.mfcc);
  const int workers = o.workers > 0 ? o.workers : default_worker_count();
  if (!o.dump_mfcc_dir.empty()) fs::create_directories(o.dump_mfcc_dir);

  const auto& records = manifest.records();
  std::vector<std::vector<double>> rows(records.size());
  std::vector<std::string> failures(records.size());
  std::mutex log_mutex;
  std::size_t done = 0;
  const auto started = std::chrono::steady_clock::now();

  parallel_for(records.size(), workers, [&](std::size_t i) {
    const auto& rec = records[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const AudioBuffer audio = load_wav(rec.wav_path);
      const MfccSequence mfcc = extractor.compute(audio, rec.utterance_id);
      if (!o.dump_mfcc_dir.empty()) write_mfcc_dump(fs::path(o.dump_mfcc_dir) / (rec.utterance_id + ".mfcc"), mfcc);
      const ActivationTensor acts = forward_collect(model_cfg, weights, mfcc);
      rows[i] = pool(acts, pooling).values;
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::lock_guard lock(log_mutex);
    ++done;
    char line[512];
    std::snprintf(line, sizeof(line), "[extract] %zu/%zu %s %.3fs%s\n", done, records.size(),
                  rec.utterance_id.c_str(), secs, failures[i].empty() ? "" : " FAILED");
    err << line;
  });

  std::size_t n_failed = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (failures[i].empty()) continue;
    if (n_failed++ == 0) err << "extraction failed for:\n";
    err << "  " << records[i].utterance_id << ": " << failures[i] << '\n';
  }
  if (n_failed > 0) {
    err << n_failed << " of " << records.size() << " utterances failed; no output written\n";
    return 1;
  }

  FeatureLayout layout{static_cast<std::size_t>(model_cfg.total_layers()),
                       static_cast<std::size_t>(model_cfg.channels), pooling};
  FeatureMatrix fm = FeatureMatrix::neural(o.name, layout);
  for (std::size_t i = 0; i < records.size(); ++i) fm.append(records[i].meta(), rows[i]);
  write_feature_csv(o.out, fm);

  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  char summary[256];
  std::snprintf(summary, sizeof(summary), "wrote %s: %zu rows x %zu features in %.2fs\n", o.out.c_str(), fm.rows(),
                fm.cols(), total);
  out << summary;

  ordered_json run = {{"tool", "asrfeat"},
                      {"version", kToolVersion},
                      {"command", "extract"},
                      {"pool", o.pool},
                      {"feature_set", o.name},
                      {"model", model_config_json(model_cfg)},
                      {"mfcc", mfcc_config_json(o.mfcc)},
                      {"inputs",
                       {{{"path", o.weights}, {"fnv1a64", file_checksum(o.weights)}},
                        {{"path", o.manifest}, {"fnv1a64", file_checksum(o.manifest)}}}},
                      {"outputs", {{{"path", o.out}, {"fnv1a64", file_checksum(o.out)}}}}};
  write_json(provenance_path_for(o.out), run);
  return 0;
}

// ---- correlate -----------------------------------------------------------

struct CorrelateOptions {
  std::string features;
  std::string speaker;
  std::string dim;
  std::string out;
  std::optional<int> layers, channels;
};

int cmd_correlate(const CorrelateOptions& o, std::ostream& out) {
  const Dimension dim = parse_dimension(o.dim);
  const FeatureMatrix fm = read_feature_csv(o.features);
  std::size_t layers = fm.layout() ? fm.layout()->layers : 0;
  std::size_t channels = fm.layout() ? fm.layout()->channels : 0;
  if (o.layers) layers = static_cast<std::size_t>(*o.layers);
  if (o.channels) channels = static_cast<std::size_t>(*o.channels);
  if (layers == 0 || channels == 0) {
    throw Error(ErrorCode::DimensionMismatch, o.features + " has no layer layout; pass --layers and --channels");
  }
  const auto speakers = fm.speakers();
  if (std::find(speakers.begin(), speakers.end(), o.speaker) == speakers.end()) {
    throw Error(ErrorCode::TooFewUtterances, "speaker '" + o.speaker + "' not found in " + o.features);
  }
  const CorrelationMap map = correlation_map(fm.restrict_to_speaker(o.speaker), dim, layers, channels);
  export_heatmap_csv(map, o.out);
  out << "wrote " << o.out << ": " << map.layers << "x" << map.channels << " (degenerate=" << map.degenerate_count
      << ")\n";

  ordered_json run = {{"tool", "asrfeat"},
                      {"version", kToolVersion},
                      {"command", "correlate"},
                      {"speaker", o.speaker},
                      {"dimension", o.dim},
                      {"layers", layers},
                      {"channels", channels},
                      {"inputs", {{{"path", o.features}, {"fnv1a64", file_checksum(o.features)}}}},
                      {"outputs", {{{"path", o.out}, {"fnv1a64", file_checksum(o.out)}}}}};
  write_json(provenance_path_for(o.out), run);
  return 0;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateOptions {
  std::string features;
  std::vector<std::string> baselines;
  std::string manifest;
  bool consistent_only = false;
  double max_spread = 1.0;
  std::vector<std::string> layers;
  std::size_t k = 100;
  std::optional<std::size_t> baseline_k;
  std::string out;
  int workers = 0;
  bool dump_models = false;
};

std::string selector_suffix(const LayerSelector& sel) {
  std::string s = sel.to_string();
  s.erase(std::remove(s.begin(), s.end(), ':'), s.end());
  return s;
}

std::string safe_file_stem(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  if (o.features.empty() && o.baselines.empty()) {
    throw Error(ErrorCode::ParseError, "evaluate needs --features and/or --baseline");
  }
  DatasetManifest manifest = load_manifest(o.manifest);
  std::string filter = "none";
  if (o.consistent_only) {
    const std::size_t before = manifest.size();
    manifest = consistency_filter(manifest, o.max_spread);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "annotator spread <= %g", o.max_spread);
    filter = buf;
    err << "[evaluate] consistency filter kept " << manifest.size() << " of " << before << " utterances\n";
  }
  const int workers = o.workers > 0 ? o.workers : default_worker_count();

  struct Job {
    const FeatureMatrix* fm;
    std::string name;
    LosoConfig cfg;
  };
  std::vector<FeatureMatrix> sets;
  sets.reserve(1 + o.baselines.size());
  std::vector<Job> jobs;
  ordered_json inputs = ordered_json::array();
  inputs.push_back({{"path", o.manifest}, {"fnv1a64", file_checksum(o.manifest)}});

  if (!o.features.empty()) {
    sets.push_back(read_feature_csv(o.features));
    inputs.push_back({{"path", o.features}, {"fnv1a64", file_checksum(o.features)}});
    const std::vector<std::string> selectors = o.layers.empty() ? std::vector<std::string>{"all"} : o.layers;
    for (const auto& text : selectors) {
      Job job{&sets.back(), {}, {}};
      job.cfg.selector = LayerSelector::parse(text);
      job.cfg.k = o.k;
      job.name = sets.back().feature_set_name() + "-" + selector_suffix(job.cfg.selector);
      jobs.push_back(std::move(job));
    }
  }
  for (const auto& path : o.baselines) {
    sets.push_back(read_feature_csv(path));
    inputs.push_back({{"path", path}, {"fnv1a64", file_checksum(path)}});
    Job job{&sets.back(), sets.back().feature_set_name(), {}};
    job.cfg.k = o.baseline_k;
    jobs.push_back(std::move(job));
  }

  fs::create_directories(o.out);
  std::vector<EvaluationReport> reports;
  ordered_json outputs = ordered_json::array();
  for (auto& job : jobs) {
    job.cfg.filter_description = filter;
    job.cfg.workers = workers;
    job.cfg.keep_models = o.dump_models;
    err << "[evaluate] " << job.name << " (selector " << job.cfg.selector.to_string() << ", k "
        << (job.cfg.k ? std::to_string(*job.cfg.k) : std::string("all")) << ")\n";
    EvaluationReport report = run_loso(*job.fm, manifest, job.cfg);
    report.feature_set_name = job.name;
    const fs::path report_path = fs::path(o.out) / ("report_" + safe_file_stem(job.name) + ".csv");
    write_report_csv(report, report_path);
    outputs.push_back({{"path", report_path.string()}, {"fnv1a64", file_checksum(report_path)}});
    if (o.dump_models) {
      const fs::path model_dir = fs::path(o.out) / "models";
      fs::create_directories(model_dir);
      for (const auto& fold : report.folds) {
        for (std::size_t slot = 0; slot < kDimensions.size(); ++slot) {
          if (!fold.models[slot]) continue;
          write_model_csv(*fold.models[slot],
                          model_dir / (safe_file_stem(job.name) + "_" + safe_file_stem(fold.speaker_id) + "_" +
                                       std::string(to_string(kDimensions[slot])) + ".csv"));
        }
      }
    }
    reports.push_back(std::move(report));
  }

  const ComparisonTable table = compare_feature_sets(reports);
  const fs::path csv_path = fs::path(o.out) / "comparison.csv";
  const fs::path txt_path = fs::path(o.out) / "comparison.txt";
  write_comparison_csv(table, csv_path);
  const std::string text = format_comparison_text(table);
  {
    std::ofstream txt(txt_path, std::ios::trunc);
    txt << text;
    if (!txt) throw Error(ErrorCode::IoFailure, "cannot write " + txt_path.string());
  }
  out << text;
  outputs.push_back({{"path", csv_path.string()}, {"fnv1a64", file_checksum(csv_path)}});
  outputs.push_back({{"path", txt_path.string()}, {"fnv1a64", file_checksum(txt_path)}});

  ordered_json sets_json = ordered_json::array();
  for (const auto& job : jobs) {
    sets_json.push_back({{"name", job.name},
                         {"selector", job.cfg.selector.to_string()},
                         {"k", job.cfg.k ? ordered_json(*job.cfg.k) : ordered_json("all")}});
  }
  ordered_json run = {{"tool", "asrfeat"},
                      {"version", kToolVersion},
                      {"command", "evaluate"},
                      {"filter", filter},
                      {"consistent_only", o.consistent_only},
                      {"max_spread", o.max_spread},
                      {"feature_sets", sets_json},
                      {"variance", "population (ddof=0) across folds"},
                      {"inputs", inputs},
                      {"outputs", outputs}};
  write_json(fs::path(o.out) / "run.json", run);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural speech features for valence/arousal regression"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth-weights", "Write deterministic synthetic network weights");
  synth_cmd->add_option("--config", synth.config_path, "JSON model config (defaults: 20 MFCC, 128 ch, 3x5 layers, k=7)");
  synth_cmd->add_option("--seed", synth.seed, "splitmix64 seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output weight file")->required();
  synth_cmd->add_option("--n-mfcc", synth.n_mfcc);
  synth_cmd->add_option("--channels", synth.channels);
  synth_cmd->add_option("--n-blocks", synth.n_blocks);
  synth_cmd->add_option("--layers-per-block", synth.layers_per_block);
  synth_cmd->add_option("--kernel-size", synth.kernel_size);

  ExtractOptions extract;
  auto* extract_cmd = app.add_subcommand("extract", "Compute pooled GCU activations for every manifest utterance");
  extract_cmd->add_option("--weights", extract.weights, "Weight file")->required();
  extract_cmd->add_option("--manifest", extract.manifest, "Manifest CSV")->required();
  extract_cmd->add_option("--out", extract.out, "Output feature CSV")->required();
  extract_cmd->add_option("--pool", extract.pool, "mean or max")->capture_default_str()
      ->check(CLI::IsMember({"mean", "max"}));
  extract_cmd->add_option("--name", extract.name, "Feature set name")->capture_default_str();
  extract_cmd->add_option("--workers", extract.workers, "Worker threads (default: ASRFEAT_WORKERS or all cores)");
  extract_cmd->add_option("--dump-mfcc", extract.dump_mfcc_dir, "Directory for <utterance>.mfcc dumps");
  extract_cmd->add_option("--sample-rate", extract.mfcc.sample_rate_hz)->capture_default_str();
  extract_cmd->add_option("--frame-len", extract.mfcc.frame_len)->capture_default_str();
  extract_cmd->add_option("--hop-len", extract.mfcc.hop_len)->capture_default_str();
  extract_cmd->add_option("--n-mels", extract.mfcc.n_mels)->capture_default_str();
  extract_cmd->add_option("--fmin", extract.mfcc.fmin_hz)->capture_default_str();
  extract_cmd->add_option("--fmax", extract.mfcc.fmax_hz, "Upper mel edge (default: sample_rate/2)");
  extract_cmd->add_option("--log-floor", extract.mfcc.log_floor)->capture_default_str();

  CorrelateOptions corr;
  auto* corr_cmd = app.add_subcommand("correlate", "Per-speaker Pearson heatmap of features vs a target");
  corr_cmd->add_option("--features", corr.features, "Feature CSV")->required();
  corr_cmd->add_option("--speaker", corr.speaker, "Speaker id")->required();
  corr_cmd->add_option("--dim", corr.dim, "valence or arousal")->required()
      ->check(CLI::IsMember({"valence", "arousal"}));
  corr_cmd->add_option("--out", corr.out, "Heatmap CSV")->required();
  corr_cmd->add_option("--layers", corr.layers, "Override layer count");
  corr_cmd->add_option("--channels", corr.channels, "Override channels per layer");

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Leave-one-speaker-out regression and comparison table");
  eval_cmd->add_option("--features", eval.features, "Neural feature CSV");
  eval_cmd->add_option("--baseline", eval.baselines, "External feature CSV (repeatable)");
  eval_cmd->add_option("--manifest", eval.manifest, "Manifest CSV")->required();
  eval_cmd->add_flag("--consistent-only", eval.consistent_only, "Keep only utterances with consistent annotators");
  eval_cmd->add_option("--max-spread", eval.max_spread, "Largest allowed annotator spread")->capture_default_str();
  eval_cmd->add_option("--layers", eval.layers, "Layer selector(s): all, first:K, last:K (repeatable)");
  eval_cmd->add_option("--k", eval.k, "Features kept by F-score selection")->capture_default_str();
  eval_cmd->add_option("--baseline-k", eval.baseline_k, "Apply selection to baseline sets too (default: use all)");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required();
  eval_cmd->add_option("--workers", eval.workers, "Worker threads for folds");
  eval_cmd->add_flag("--dump-models", eval.dump_models, "Write per-fold model CSVs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth_cmd) return cmd_synth_weights(synth, out);
    if (*extract_cmd) return cmd_extract(extract, out, err);
    if (*corr_cmd) return cmd_correlate(corr, out);
    if (*eval_cmd) return cmd_evaluate(eval, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace asrfeat::tools
