#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "startnet/common.hpp"
#include "startnet/rng.hpp"

namespace startnet {

/// Causally ordered sequence of per-chunk feature vectors with class labels
/// (0 = background) and derived start flags.
struct ChunkStream {
  double chunks_per_second = 4.0;
  int num_classes = 0;  // K, including background class 0
  std::vector<Vector> features;
  std::vector<int> labels;
  std::vector<std::uint8_t> start_flags;

  long size() const { return static_cast<long>(labels.size()); }
  int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Ground-truth start point: chunk index plus positive class.
struct GroundTruthStart {
  long stream = 0;
  long t = 0;
  int class_id = 0;
};

/// flag[t] = 1 exactly at the first chunk of each maximal non-background run
/// (a class change between two non-background chunks starts a new run).
std::vector<std::uint8_t> derive_start_labels(const std::vector<int>& labels);

std::vector<GroundTruthStart> ground_truth_starts(const ChunkStream& stream, long stream_id = 0);

struct SyntheticConfig {
  int num_classes = 4;  // including background
  int feature_dim = 8;
  long stream_length = 400;
  double mean_segment_chunks = 12.0;  // geometric
  double mean_gap_chunks = 36.0;      // geometric
  std::vector<Vector> class_means;    // size num_classes; [0] is background
  double noise_std = 0.45;
  int start_blur_chunks = 3;  // features ramp from background to class mean
  double chunks_per_second = 4.0;

  void validate() const;
};

/// Unit-norm random mean per positive class; background mean is a unit-norm
/// draw as well so background/action distances are comparable.
std::vector<Vector> default_class_means(int num_classes, int feature_dim, std::uint64_t seed);

/// Alternating background/action segments with geometric lengths. Features
/// are class mean + Gaussian noise; within the blur window after each start
/// the mean ramps linearly from the background mean to the class mean.
ChunkStream generate_stream(const SyntheticConfig& config, std::uint64_t seed);

/// alpha = (#chunks with g=0) / (#chunks with g=1) across the corpus.
double imbalance_ratio(const std::vector<ChunkStream>& streams);
double imbalance_ratio_flags(const std::vector<std::vector<std::uint8_t>>& flag_streams);

/// Reference to one training window: stream index plus start chunk.
struct WindowRef {
  int stream = 0;
  long t0 = 0;
};

/// Samples fixed-length windows from a corpus of start-flag sequences,
/// uniformly or with positive/negative balancing (equal counts per batch).
class SequenceSampler {
 public:
  SequenceSampler(const std::vector<std::vector<std::uint8_t>>& flag_streams, long window,
                  bool balanced);

  /// Balanced mode requires an even batch size and returns batch/2 windows
  /// from each pool (positives first).
  std::vector<WindowRef> sample_batch(int batch, Rng& rng) const;

  const std::vector<WindowRef>& positive_pool() const { return positive_; }
  const std::vector<WindowRef>& negative_pool() const { return negative_; }
  const std::vector<WindowRef>& all_windows() const { return all_; }
  bool balanced() const { return balanced_; }
  long window() const { return window_; }

  /// Negative/positive chunk ratio of the sampled distribution (the two
  /// pools at equal weight when balancing, the full window population
  /// otherwise).
  double sampled_imbalance_ratio() const;

 private:
  std::vector<WindowRef> positive_, negative_, all_;
  double pos_mean_g1_ = 0, pos_mean_g0_ = 0, neg_mean_g0_ = 0;
  double all_mean_g1_ = 0, all_mean_g0_ = 0;
  long window_ = 0;
  bool balanced_ = false;
};

/// JSON-lines stream files: a header record
///   {"version", "kind", "K", "feature_dim", "chunks_per_second", "length"}
/// followed by one record {"t", "f", "y", "g"} per chunk. Round trips are
/// bit-exact for all fields.
void save_stream(const std::filesystem::path& path, const ChunkStream& stream,
                 const std::string& config_echo = {});
ChunkStream load_stream(const std::filesystem::path& path);

}  // namespace startnet
