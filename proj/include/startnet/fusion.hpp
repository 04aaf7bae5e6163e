#pragma once

#include <filesystem>
#include <vector>

#include "startnet/common.hpp"

namespace startnet {

/// Per-class start scores from late fusion:
///   as[k] = s * p[k]       for positive classes k >= 1
///   as[0] = (1 - s) * p[0] for background.
Vector fuse(const Vector& class_scores, double s_start);

/// Online start prediction: chunk index, positive class, confidence.
struct StartPrediction {
  long stream = 0;
  long t = 0;
  int class_id = 0;
  double confidence = 0;
};

/// Online start generation over a stream of per-chunk K-vectors (fused
/// scores, or raw classifier scores for the classifier-only variant).
/// A prediction is emitted at t iff
///   (i)   the argmax class is not background,
///   (ii)  it differs from the argmax class at t-1 (background before t=0),
///   (iii) its score strictly exceeds the threshold.
/// The previous class tracks the argmax even when no prediction is emitted.
std::vector<StartPrediction> generate_starts(const std::vector<Vector>& class_scores,
                                             double threshold, long stream_id = 0);

/// generate_starts applied directly to classifier score streams.
std::vector<StartPrediction> clsnet_only_starts(const std::vector<Vector>& class_scores,
                                                double threshold, long stream_id = 0);

/// Predictions as .jsonl ({"stream", "t", "class", "confidence"}) behind a
/// header record; CSV export carries the same columns.
void save_predictions(const std::filesystem::path& path,
                      const std::vector<StartPrediction>& predictions,
                      const std::string& config_echo = {});
std::vector<StartPrediction> load_predictions(const std::filesystem::path& path);
void save_predictions_csv(const std::filesystem::path& path,
                          const std::vector<StartPrediction>& predictions,
                          const std::string& config_echo = {});

}  // namespace startnet
