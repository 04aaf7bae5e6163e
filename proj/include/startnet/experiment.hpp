#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "startnet/clsnet.hpp"
#include "startnet/eval.hpp"
#include "startnet/fusion.hpp"
#include "startnet/locnet.hpp"

namespace startnet {

enum class Variant { kStartNetPg, kStartNetCe, kClsNetOnly };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

/// Resolved experiment configuration. Defaults follow the published
/// hyperparameters (sequence length 64, T_loc 16, n 8, gamma 0.9, sigma 0.1,
/// LocNet hidden 128, lr and weight decay 5e-4, detection threshold 0,
/// offsets 1-10 s at 4 chunks/s); data-scale knobs are desk-sized.
struct ExperimentConfig {
  std::string data_dir = "data";
  std::string checkpoint_dir = "checkpoints";
  std::string report_dir = "reports";
  std::uint64_t seed = 7;

  // synthetic data
  int num_classes = 4;
  int feature_dim = 8;
  long stream_length = 400;
  int num_train = 200;
  int num_val = 20;
  int num_test = 50;
  double mean_segment_chunks = 12.0;
  double mean_gap_chunks = 36.0;
  double noise_std = 0.45;
  int start_blur_chunks = 3;
  double chunks_per_second = 4.0;

  // classifier
  int cls_hidden = 64;
  int cls_seq_len = 64;
  int cls_batch = 32;
  int cls_epochs = 8;

  // localizer
  int loc_hidden = 128;
  int loc_t = 16;
  int loc_batch = 32;
  int loc_iterations = 1200;
  int history_len = 8;
  double gamma = 0.9;
  double sigma = 0.1;
  double alpha = -1;  // < 0: derived from the sampled distribution
  bool balanced_sampling = false;

  // optimization
  double lr = 5e-4;
  double weight_decay = 5e-4;
  double clip_norm = 5.0;
  double lambda_policy = 1.0;
  double lambda_baseline = 1.0;

  // detection / evaluation
  double threshold = 0.0;
  std::string variant = "startnet-pg";
  std::vector<double> offsets_seconds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> depths = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  bool strict_offset_boundary = false;

  void validate() const;

  /// Canonical JSON echo embedded in every artifact.
  std::string echo_json() const;
};

/// Starts from defaults, with STARTNET_DATA_ROOT (when set) as data_dir.
ExperimentConfig config_from_env();

/// Applies one flat `key = value` assignment; unknown keys are errors.
/// List-valued keys take comma-separated values.
void apply_config_key(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Flat key-value config file: `key = value`, '#' comments, blank lines.
void load_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// The set of keys apply_config_key accepts (for CLI flag generation).
std::vector<std::string> config_keys();

/// -------- pipeline commands (shared by the CLI and the test suites) ------

struct GenResult {
  std::vector<std::filesystem::path> train_files, val_files, test_files;
};

/// Writes train/val/test splits with disjoint per-stream seeds under
/// data_dir/{train,val,test}/stream_####.jsonl.
GenResult run_gen(const ExperimentConfig& config);

struct TrainClsResult {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_curve_csv;
  std::vector<double> loss_curve;
};
TrainClsResult run_train_cls(const ExperimentConfig& config);

struct TrainLocResult {
  std::filesystem::path checkpoint;
  std::filesystem::path curve_csv;
  double alpha_used = 0;
  std::vector<LocBatchStats> curve;
};
/// Trains the localizer on frozen classifier scores. The variant selects
/// policy-gradient or cross-entropy training; clsnet-only is rejected.
TrainLocResult run_train_loc(const ExperimentConfig& config);

/// In-process detection pipeline for one stream: classifier scores, then
/// (unless clsnet-only) localizer probabilities and late fusion, then the
/// three-condition start generation.
std::vector<StartPrediction> detect_stream(const ClsModel& cls, const LocModel* loc,
                                           Variant variant, double threshold,
                                           const ChunkStream& stream, long stream_id);

struct DetectResult {
  std::filesystem::path predictions_jsonl;
  std::filesystem::path predictions_csv;
  std::vector<StartPrediction> predictions;
};
/// `input` is one stream file or a directory of them (sorted file order
/// assigns stream ids). Optional dump_dir receives per-stream score and
/// start-probability streams.
DetectResult run_detect(const ExperimentConfig& config, const std::filesystem::path& input,
                        const std::filesystem::path& output_jsonl,
                        const std::filesystem::path& dump_dir = {});

struct EvalResult {
  std::filesystem::path report_json;
  std::filesystem::path report_csv;
  EvalReport report;
};
/// Ground truth is derived from the stream files under `data_input` (file or
/// directory; ids follow sorted order, matching run_detect).
EvalResult run_eval(const ExperimentConfig& config, const std::filesystem::path& predictions_path,
                    const std::filesystem::path& data_input,
                    const std::filesystem::path& output_prefix);

/// Merges evaluation reports into one comparison CSV (one row per report,
/// p-mAP columns over the offset x depth grid).
void run_report(const std::vector<std::filesystem::path>& reports,
                const std::filesystem::path& output_csv);

/// Sorted stream files of a corpus directory (or the single file itself).
std::vector<std::filesystem::path> list_stream_files(const std::filesystem::path& input);

}  // namespace startnet
