#include "startnet/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jsonl_util.hpp"

namespace startnet {

using nlohmann::json;

namespace {
constexpr std::uint64_t kMeansStream = 0xD0;
constexpr std::uint64_t kTrainSplit = 0xD1;
constexpr std::uint64_t kValSplit = 0xD2;
constexpr std::uint64_t kTestSplit = 0xD3;
constexpr std::uint64_t kClsInit = 0xD4;
constexpr std::uint64_t kLocInit = 0xD5;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "startnet-pg") return Variant::kStartNetPg;
  if (name == "startnet-ce") return Variant::kStartNetCe;
  if (name == "clsnet-only") return Variant::kClsNetOnly;
  throw ValidationError("unknown variant '" + name +
                        "' (expected startnet-pg, startnet-ce or clsnet-only)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kStartNetPg: return "startnet-pg";
    case Variant::kStartNetCe: return "startnet-ce";
    case Variant::kClsNetOnly: return "clsnet-only";
  }
  throw ValidationError("unknown variant");
}

void ExperimentConfig::validate() const {
  parse_variant(variant);
  if (num_classes < 2) throw ValidationError("config: num_classes must be >= 2");
  if (feature_dim < 1) throw ValidationError("config: feature_dim must be positive");
  if (stream_length < 2) throw ValidationError("config: stream_length must be >= 2");
  if (num_train < 1 || num_val < 0 || num_test < 1) {
    throw ValidationError("config: need at least one train and one test stream");
  }
  if (!(mean_segment_chunks >= 1 && mean_gap_chunks >= 1)) {
    throw ValidationError("config: mean segment/gap lengths must be >= 1");
  }
  if (noise_std < 0) throw ValidationError("config: noise_std must be >= 0");
  if (start_blur_chunks < 0) throw ValidationError("config: start_blur_chunks must be >= 0");
  if (!(chunks_per_second > 0)) throw ValidationError("config: chunks_per_second must be > 0");
  if (cls_hidden < 1 || cls_seq_len < 1 || cls_batch < 1 || cls_epochs < 0) {
    throw ValidationError("config: classifier hyperparameters out of range");
  }
  if (cls_seq_len > stream_length) {
    throw ValidationError("config: cls_seq_len exceeds stream_length");
  }
  if (loc_hidden < 1 || loc_t < 1 || loc_batch < 1 || loc_iterations < 0 || history_len < 0) {
    throw ValidationError("config: localizer hyperparameters out of range");
  }
  if (loc_t > stream_length) throw ValidationError("config: loc_t exceeds stream_length");
  if (!(gamma >= 0 && gamma <= 1)) throw ValidationError("config: gamma must lie in [0, 1]");
  if (!(sigma > 0)) throw ValidationError("config: sigma must be > 0");
  if (!(lr > 0) || weight_decay < 0 || !(clip_norm > 0)) {
    throw ValidationError("config: optimizer hyperparameters out of range");
  }
  if (lambda_policy < 0 || lambda_baseline < 0) {
    throw ValidationError("config: lambda weights must be >= 0");
  }
  EvalConfig ec{offsets_seconds, depths, chunks_per_second, strict_offset_boundary};
  ec.validate();
}

std::string ExperimentConfig::echo_json() const {
  json j{{"format_version", kFormatVersion},
         {"data_dir", data_dir},
         {"checkpoint_dir", checkpoint_dir},
         {"report_dir", report_dir},
         {"seed", seed},
         {"num_classes", num_classes},
         {"feature_dim", feature_dim},
         {"stream_length", stream_length},
         {"num_train", num_train},
         {"num_val", num_val},
         {"num_test", num_test},
         {"mean_segment_chunks", mean_segment_chunks},
         {"mean_gap_chunks", mean_gap_chunks},
         {"noise_std", noise_std},
         {"start_blur_chunks", start_blur_chunks},
         {"chunks_per_second", chunks_per_second},
         {"cls_hidden", cls_hidden},
         {"cls_seq_len", cls_seq_len},
         {"cls_batch", cls_batch},
         {"cls_epochs", cls_epochs},
         {"loc_hidden", loc_hidden},
         {"loc_t", loc_t},
         {"loc_batch", loc_batch},
         {"loc_iterations", loc_iterations},
         {"history_len", history_len},
         {"gamma", gamma},
         {"sigma", sigma},
         {"alpha", alpha},
         {"balanced_sampling", balanced_sampling},
         {"lr", lr},
         {"weight_decay", weight_decay},
         {"clip_norm", clip_norm},
         {"lambda_policy", lambda_policy},
         {"lambda_baseline", lambda_baseline},
         {"threshold", threshold},
         {"variant", variant},
         {"offsets_seconds", offsets_seconds},
         {"depths", depths},
         {"strict_offset_boundary", strict_offset_boundary}};
  return j.dump();
}

ExperimentConfig config_from_env() {
  ExperimentConfig config;
  if (const char* root = std::getenv("STARTNET_DATA_ROOT"); root != nullptr && *root != '\0') {
    config.data_dir = root;
  }
  return config;
}

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
  std::istringstream in(value);
  T out;
  in >> out;
  if (in.fail() || !in.eof()) {
    throw ValidationError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::vector<double> parse_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_number<double>(item, key));
  }
  if (out.empty()) throw ValidationError("config key '" + key + "': empty list");
  return out;
}

}  // namespace

void apply_config_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "data_dir") c.data_dir = value;
  else if (key == "checkpoint_dir") c.checkpoint_dir = value;
  else if (key == "report_dir") c.report_dir = value;
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, key);
  else if (key == "num_classes") c.num_classes = parse_number<int>(value, key);
  else if (key == "feature_dim") c.feature_dim = parse_number<int>(value, key);
  else if (key == "stream_length") c.stream_length = parse_number<long>(value, key);
  else if (key == "num_train") c.num_train = parse_number<int>(value, key);
  else if (key == "num_val") c.num_val = parse_number<int>(value, key);
  else if (key == "num_test") c.num_test = parse_number<int>(value, key);
  else if (key == "mean_segment_chunks") c.mean_segment_chunks = parse_number<double>(value, key);
  else if (key == "mean_gap_chunks") c.mean_gap_chunks = parse_number<double>(value, key);
  else if (key == "noise_std") c.noise_std = parse_number<double>(value, key);
  else if (key == "start_blur_chunks") c.start_blur_chunks = parse_number<int>(value, key);
  else if (key == "chunks_per_second") c.chunks_per_second = parse_number<double>(value, key);
  else if (key == "cls_hidden") c.cls_hidden = parse_number<int>(value, key);
  else if (key == "cls_seq_len") c.cls_seq_len = parse_number<int>(value, key);
  else if (key == "cls_batch") c.cls_batch = parse_number<int>(value, key);
  else if (key == "cls_epochs") c.cls_epochs = parse_number<int>(value, key);
  else if (key == "loc_hidden") c.loc_hidden = parse_number<int>(value, key);
  else if (key == "loc_t") c.loc_t = parse_number<int>(value, key);
  else if (key == "loc_batch") c.loc_batch = parse_number<int>(value, key);
  else if (key == "loc_iterations") c.loc_iterations = parse_number<int>(value, key);
  else if (key == "history_len") c.history_len = parse_number<int>(value, key);
  else if (key == "gamma") c.gamma = parse_number<double>(value, key);
  else if (key == "sigma") c.sigma = parse_number<double>(value, key);
  else if (key == "alpha") c.alpha = parse_number<double>(value, key);
  else if (key == "balanced_sampling") c.balanced_sampling = parse_bool(value, key);
  else if (key == "lr") c.lr = parse_number<double>(value, key);
  else if (key == "weight_decay") c.weight_decay = parse_number<double>(value, key);
  else if (key == "clip_norm") c.clip_norm = parse_number<double>(value, key);
  else if (key == "lambda_policy") c.lambda_policy = parse_number<double>(value, key);
  else if (key == "lambda_baseline") c.lambda_baseline = parse_number<double>(value, key);
  else if (key == "threshold") c.threshold = parse_number<double>(value, key);
  else if (key == "variant") c.variant = value;
  else if (key == "offsets_seconds") c.offsets_seconds = parse_list(value, key);
  else if (key == "depths") c.depths = parse_list(value, key);
  else if (key == "strict_offset_boundary") c.strict_offset_boundary = parse_bool(value, key);
  else throw ValidationError("unknown config key '" + key + "'");
}

std::vector<std::string> config_keys() {
  return {"data_dir",      "checkpoint_dir", "report_dir",        "seed",
          "num_classes",   "feature_dim",    "stream_length",     "num_train",
          "num_val",       "num_test",       "mean_segment_chunks", "mean_gap_chunks",
          "noise_std",     "start_blur_chunks", "chunks_per_second", "cls_hidden",
          "cls_seq_len",   "cls_batch",      "cls_epochs",        "loc_hidden",
          "loc_t",         "loc_batch",      "loc_iterations",    "history_len",
          "gamma",         "sigma",          "alpha",             "balanced_sampling",
          "lr",            "weight_decay",   "clip_norm",         "lambda_policy",
          "lambda_baseline", "threshold",    "variant",           "offsets_seconds",
          "depths",        "strict_offset_boundary"};
}

void load_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto begin = s.find_first_not_of(" \t\r");
      if (begin == std::string::npos) return std::string();
      const auto end = s.find_last_not_of(" \t\r");
      return s.substr(begin, end - begin + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config file '" + path.string() + "' line " +
                            std::to_string(line_number) + ": expected 'key = value'");
    }
    apply_config_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

namespace {

SyntheticConfig synthetic_config(const ExperimentConfig& c) {
  SyntheticConfig s;
  s.num_classes = c.num_classes;
  s.feature_dim = c.feature_dim;
  s.stream_length = c.stream_length;
  s.mean_segment_chunks = c.mean_segment_chunks;
  s.mean_gap_chunks = c.mean_gap_chunks;
  s.class_means = default_class_means(c.num_classes, c.feature_dim, mix_seed(c.seed, kMeansStream));
  s.noise_std = c.noise_std;
  s.start_blur_chunks = c.start_blur_chunks;
  s.chunks_per_second = c.chunks_per_second;
  return s;
}

std::vector<std::filesystem::path> write_split(const ExperimentConfig& c,
                                               const SyntheticConfig& synth,
                                               const std::filesystem::path& dir,
                                               std::uint64_t split_tag, int count) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  const std::string echo = c.echo_json();
  for (int i = 0; i < count; ++i) {
    const ChunkStream stream = generate_stream(synth, mix_seed(c.seed, split_tag, i));
    char name[32];
    std::snprintf(name, sizeof(name), "stream_%04d.jsonl", i);
    const std::filesystem::path path = dir / name;
    save_stream(path, stream, echo);
    files.push_back(path);
  }
  return files;
}

std::vector<ChunkStream> load_corpus(const std::vector<std::filesystem::path>& files) {
  std::vector<ChunkStream> streams;
  streams.reserve(files.size());
  for (const auto& f : files) streams.push_back(load_stream(f));
  return streams;
}

void write_curve_csv(const std::filesystem::path& path, const std::string& echo,
                     const std::string& header, const std::vector<std::string>& rows) {
  std::ofstream out = detail::open_output(path);
  out << "# config: " << echo << "\n" << header << "\n";
  for (const std::string& r : rows) out << r << "\n";
}

}  // namespace

std::vector<std::filesystem::path> list_stream_files(const std::filesystem::path& input) {
  if (std::filesystem::is_regular_file(input)) return {input};
  if (!std::filesystem::is_directory(input)) {
    throw ValidationError("'" + input.string() + "' is neither a stream file nor a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(input)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ValidationError("no .jsonl stream files under '" + input.string() + "'");
  }
  return files;
}

GenResult run_gen(const ExperimentConfig& config) {
  config.validate();
  const SyntheticConfig synth = synthetic_config(config);
  const std::filesystem::path root(config.data_dir);
  GenResult result;
  result.train_files = write_split(config, synth, root / "train", kTrainSplit, config.num_train);
  result.val_files = write_split(config, synth, root / "val", kValSplit, config.num_val);
  result.test_files = write_split(config, synth, root / "test", kTestSplit, config.num_test);
  return result;
}

TrainClsResult run_train_cls(const ExperimentConfig& config) {
  config.validate();
  const std::vector<ChunkStream> streams =
      load_corpus(list_stream_files(std::filesystem::path(config.data_dir) / "train"));
  ClsModel model = ClsModel::random_init(streams.front().feature_dim(), config.cls_hidden,
                                         streams.front().num_classes,
                                         mix_seed(config.seed, kClsInit));
  ClsTrainConfig train{config.cls_seq_len, config.cls_batch,  config.cls_epochs, config.lr,
                       config.weight_decay, config.clip_norm, config.seed};
  const ClsTrainResult trained = train_clsnet(model, streams, train);

  std::filesystem::create_directories(config.checkpoint_dir);
  TrainClsResult result;
  result.loss_curve = trained.loss_curve;
  result.checkpoint = std::filesystem::path(config.checkpoint_dir) / "clsnet.json";
  result.loss_curve_csv = std::filesystem::path(config.checkpoint_dir) / "clsnet_loss.csv";
  save_cls_checkpoint(result.checkpoint, model, config.echo_json());
  std::vector<std::string> rows;
  for (std::size_t e = 0; e < trained.loss_curve.size(); ++e) {
    rows.push_back(std::to_string(e) + "," + format_double(trained.loss_curve[e]));
  }
  write_curve_csv(result.loss_curve_csv, config.echo_json(), "epoch,mean_cross_entropy", rows);
  return result;
}

TrainLocResult run_train_loc(const ExperimentConfig& config) {
  config.validate();
  const Variant variant = parse_variant(config.variant);
  if (variant == Variant::kClsNetOnly) {
    throw ValidationError("train-loc: variant clsnet-only has no localizer to train");
  }
  const ClsModel cls =
      load_cls_checkpoint(std::filesystem::path(config.checkpoint_dir) / "clsnet.json");
  const std::vector<ChunkStream> streams =
      load_corpus(list_stream_files(std::filesystem::path(config.data_dir) / "train"));
  const std::vector<std::vector<Vector>> scores = cls_infer_corpus(cls, streams);
  std::vector<std::vector<std::uint8_t>> flags;
  flags.reserve(streams.size());
  for (const ChunkStream& s : streams) flags.push_back(s.start_flags);

  LocModel model = LocModel::random_init(cls.num_classes, config.history_len, config.loc_hidden,
                                         mix_seed(config.seed, kLocInit));
  LocTrainConfig train;
  train.t_loc = config.loc_t;
  train.batch = config.loc_batch;
  train.iterations = config.loc_iterations;
  train.gamma = config.gamma;
  train.sigma = config.sigma;
  train.alpha = config.alpha;
  train.balanced = config.balanced_sampling;
  train.lr = config.lr;
  train.weight_decay = config.weight_decay;
  train.clip_norm = config.clip_norm;
  train.lambda_policy = config.lambda_policy;
  train.lambda_baseline = config.lambda_baseline;
  train.seed = config.seed;

  const bool ce = variant == Variant::kStartNetCe;
  const LocTrainResult trained = ce ? train_locnet_ce(model, scores, flags, train)
                                    : train_locnet(model, scores, flags, train);

  std::filesystem::create_directories(config.checkpoint_dir);
  const std::string stem = ce ? "locnet_ce" : "locnet_pg";
  TrainLocResult result;
  result.alpha_used = trained.alpha_used;
  result.curve = trained.curve;
  result.checkpoint = std::filesystem::path(config.checkpoint_dir) / (stem + ".json");
  result.curve_csv = std::filesystem::path(config.checkpoint_dir) / (stem + "_curve.csv");
  save_loc_checkpoint(result.checkpoint, model, config.echo_json());
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < trained.curve.size(); ++i) {
    const LocBatchStats& s = trained.curve[i];
    rows.push_back(std::to_string(i) + "," + format_double(s.mean_total_reward) + "," +
                   format_double(s.mean_return) + "," + format_double(s.baseline_loss));
  }
  write_curve_csv(result.curve_csv, config.echo_json(),
                  ce ? "iteration,unused,unused,mean_ce_loss"
                     : "iteration,mean_total_reward,mean_return,baseline_loss",
                  rows);
  return result;
}

std::vector<StartPrediction> detect_stream(const ClsModel& cls, const LocModel* loc,
                                           Variant variant, double threshold,
                                           const ChunkStream& stream, long stream_id) {
  const std::vector<Vector> scores = cls_infer_stream(cls, stream);
  if (variant == Variant::kClsNetOnly) {
    return clsnet_only_starts(scores, threshold, stream_id);
  }
  if (loc == nullptr) throw ValidationError("detect_stream: localizer required for this variant");
  const std::vector<double> start_probs = loc_infer_stream(*loc, scores);
  std::vector<Vector> fused;
  fused.reserve(scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) {
    fused.push_back(fuse(scores[t], start_probs[t]));
  }
  return generate_starts(fused, threshold, stream_id);
}

DetectResult run_detect(const ExperimentConfig& config, const std::filesystem::path& input,
                        const std::filesystem::path& output_jsonl,
                        const std::filesystem::path& dump_dir) {
  config.validate();
  const Variant variant = parse_variant(config.variant);
  const ClsModel cls =
      load_cls_checkpoint(std::filesystem::path(config.checkpoint_dir) / "clsnet.json");
  LocModel loc;
  const bool needs_loc = variant != Variant::kClsNetOnly;
  if (needs_loc) {
    const std::string stem = variant == Variant::kStartNetCe ? "locnet_ce" : "locnet_pg";
    loc = load_loc_checkpoint(std::filesystem::path(config.checkpoint_dir) / (stem + ".json"));
    if (loc.num_classes != cls.num_classes) {
      throw ValidationError("run_detect: classifier and localizer disagree on K");
    }
  }
  if (!dump_dir.empty()) std::filesystem::create_directories(dump_dir);

  DetectResult result;
  const std::vector<std::filesystem::path> files = list_stream_files(input);
  for (std::size_t id = 0; id < files.size(); ++id) {
    const ChunkStream stream = load_stream(files[id]);
    std::vector<StartPrediction> preds = detect_stream(cls, needs_loc ? &loc : nullptr, variant,
                                                       config.threshold, stream,
                                                       static_cast<long>(id));
    result.predictions.insert(result.predictions.end(), preds.begin(), preds.end());
    if (!dump_dir.empty()) {
      char name[48];
      std::snprintf(name, sizeof(name), "scores_%04zu.jsonl", id);
      const std::vector<Vector> scores = cls_infer_stream(cls, stream);
      save_score_stream(dump_dir / name, scores, config.echo_json());
      if (needs_loc) {
        std::snprintf(name, sizeof(name), "start_probs_%04zu.jsonl", id);
        save_start_prob_stream(dump_dir / name, loc_infer_stream(loc, scores),
                               config.echo_json());
      }
    }
  }
  if (output_jsonl.has_parent_path()) {
    std::filesystem::create_directories(output_jsonl.parent_path());
  }
  result.predictions_jsonl = output_jsonl;
  result.predictions_csv = output_jsonl;
  result.predictions_csv.replace_extension(".csv");
  save_predictions(result.predictions_jsonl, result.predictions, config.echo_json());
  save_predictions_csv(result.predictions_csv, result.predictions, config.echo_json());
  return result;
}

EvalResult run_eval(const ExperimentConfig& config, const std::filesystem::path& predictions_path,
                    const std::filesystem::path& data_input,
                    const std::filesystem::path& output_prefix) {
  config.validate();
  const std::vector<StartPrediction> predictions = load_predictions(predictions_path);
  std::vector<GroundTruthStart> gts;
  const std::vector<std::filesystem::path> files = list_stream_files(data_input);
  double cps = config.chunks_per_second;
  for (std::size_t id = 0; id < files.size(); ++id) {
    const ChunkStream stream = load_stream(files[id]);
    if (id == 0) cps = stream.chunks_per_second;
    const std::vector<GroundTruthStart> starts =
        ground_truth_starts(stream, static_cast<long>(id));
    gts.insert(gts.end(), starts.begin(), starts.end());
  }
  EvalConfig ec{config.offsets_seconds, config.depths, cps, config.strict_offset_boundary};
  EvalResult result;
  result.report = evaluate(predictions, gts, ec);
  result.report_json = output_prefix;
  result.report_json += ".report.json";
  result.report_csv = output_prefix;
  result.report_csv += ".report.csv";
  if (result.report_json.has_parent_path()) {
    std::filesystem::create_directories(result.report_json.parent_path());
  }
  write_report_json(result.report_json, result.report, config.echo_json());
  write_report_csv(result.report_csv, result.report, config.echo_json());
  return result;
}

void run_report(const std::vector<std::filesystem::path>& reports,
                const std::filesystem::path& output_csv) {
  if (reports.empty()) throw ValidationError("report: need at least one report file");
  std::vector<EvalReport> loaded;
  for (const auto& path : reports) loaded.push_back(read_report_json(path));
  for (std::size_t k = 1; k < loaded.size(); ++k) {
    if (loaded[k].config.offsets_seconds != loaded[0].config.offsets_seconds ||
        loaded[k].config.depths != loaded[0].config.depths) {
      throw ValidationError("report: '" + reports[k].string() +
                            "' evaluates a different offset/depth grid");
    }
  }
  if (output_csv.has_parent_path()) std::filesystem::create_directories(output_csv.parent_path());
  std::ofstream out = detail::open_output(output_csv);
  out << "name";
  for (double o : loaded[0].config.offsets_seconds) {
    for (double d : loaded[0].config.depths) {
      out << ",off" << format_double(o) << "_rec" << format_double(d);
    }
  }
  out << "\n";
  for (std::size_t k = 0; k < loaded.size(); ++k) {
    out << reports[k].stem().string();
    for (std::size_t o = 0; o < loaded[k].pmap.size(); ++o) {
      for (double v : loaded[k].pmap[o]) out << "," << format_double(v);
    }
    out << "\n";
  }
}

}  // namespace startnet
