#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "startnet/fusion.hpp"
#include "startnet/stream.hpp"

namespace startnet {

/// Outcome of duplicate-free greedy matching for one class at one offset.
/// `ranked` is the prediction list sorted by (confidence desc, time asc,
/// stream asc); `tp[i]` flags whether ranked[i] matched; `matched_gt[i]` is
/// the index into the ground-truth list (-1 for false positives).
struct MatchResult {
  std::vector<StartPrediction> ranked;
  std::vector<char> tp;
  std::vector<int> matched_gt;
  long num_gt = 0;
};

/// Greedy matching under the point-level protocol: predictions in descending
/// confidence order each claim the unmatched ground truth of the same stream
/// minimizing |t_pred - t_gt|, subject to the distance being within
/// `offset_chunks` (<= by default, < in strict mode). Equidistant ties go to
/// the earlier ground truth. Inputs are one class's predictions and starts.
MatchResult match(const std::vector<StartPrediction>& predictions,
                  const std::vector<GroundTruthStart>& ground_truths, long offset_chunks,
                  bool strict_boundary = false);

/// Point-level AP at recall depth X: the PR curve is truncated where recall
/// reaches X, i.e. precision is summed at the ranks of the first
/// N_X = ceil(X * num_gt) true positives and divided by N_X. X = 1 recovers
/// standard AP.
double p_ap(const MatchResult& result, double depth_recall);

struct EvalConfig {
  std::vector<double> offsets_seconds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> depths = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double chunks_per_second = 4.0;
  bool strict_boundary = false;

  void validate() const;
};

/// Full evaluation grid. p-mAP averages p-AP over classes with at least one
/// ground truth; the per-depth average additionally averages over offsets.
struct EvalReport {
  EvalConfig config;
  std::vector<int> classes;
  std::map<int, long> gt_counts;
  std::map<int, long> pred_counts;
  // indexed [class][offset][depth] / [offset][depth] / [depth]
  std::map<int, std::vector<std::vector<double>>> per_class_pap;
  std::vector<std::vector<double>> pmap;
  std::vector<double> avg_pmap;

  double pmap_at(double offset_seconds, double depth) const;
};

/// Runs the protocol over all classes and offsets. Offsets convert to
/// chunks as floor(seconds * chunks_per_second). Verifies that per-class
/// p-AP is non-decreasing across the offset sweep and throws NumericError
/// on violation. Throws ValidationError when no class has ground truth.
EvalReport evaluate(const std::vector<StartPrediction>& predictions,
                    const std::vector<GroundTruthStart>& ground_truths, const EvalConfig& config);

void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       const std::string& config_echo = {});
EvalReport read_report_json(const std::filesystem::path& path);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report,
                      const std::string& config_echo = {});

}  // namespace startnet
