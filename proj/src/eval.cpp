#include "startnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "jsonl_util.hpp"

namespace startnet {

using nlohmann::json;

namespace {
// Guards the N_X ceiling against round-off, e.g. 0.3 * 10 = 2.999...96 must
// still give N_X = 3 while 0.1 * 10 = 1.000...06 must give N_X = 1.
constexpr double kRecallTol = 1e-9;
}

MatchResult match(const std::vector<StartPrediction>& predictions,
                  const std::vector<GroundTruthStart>& ground_truths, long offset_chunks,
                  bool strict_boundary) {
  if (offset_chunks < 0) throw ValidationError("match: offset must be >= 0");
  MatchResult result;
  result.ranked = predictions;
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const StartPrediction& a, const StartPrediction& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     if (a.t != b.t) return a.t < b.t;
                     return a.stream < b.stream;
                   });
  result.tp.assign(result.ranked.size(), 0);
  result.matched_gt.assign(result.ranked.size(), -1);
  result.num_gt = static_cast<long>(ground_truths.size());

  std::vector<char> gt_taken(ground_truths.size(), 0);
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const StartPrediction& pred = result.ranked[i];
    int best = -1;
    long best_dist = 0;
    for (std::size_t j = 0; j < ground_truths.size(); ++j) {
      if (gt_taken[j]) continue;
      const GroundTruthStart& gt = ground_truths[j];
      if (gt.stream != pred.stream) continue;
      const long dist = std::abs(gt.t - pred.t);
      const bool within = strict_boundary ? dist < offset_chunks : dist <= offset_chunks;
      if (!within) continue;
      if (best < 0 || dist < best_dist ||
          (dist == best_dist && gt.t < ground_truths[static_cast<std::size_t>(best)].t)) {
        best = static_cast<int>(j);
        best_dist = dist;
      }
    }
    if (best >= 0) {
      gt_taken[static_cast<std::size_t>(best)] = 1;
      result.tp[i] = 1;
      result.matched_gt[i] = best;
    }
  }
  return result;
}

double p_ap(const MatchResult& result, double depth_recall) {
  if (result.num_gt < 1) throw ValidationError("p_ap: needs at least one ground truth");
  if (!(depth_recall > 0.0 && depth_recall <= 1.0)) {
    throw ValidationError("p_ap: depth must lie in (0, 1]");
  }
  // The PR curve is truncated where recall reaches the depth: the first
  // N_X = ceil(X * num_gt) true positives contribute their precision.
  const long n_depth = static_cast<long>(
      std::ceil(depth_recall * static_cast<double>(result.num_gt) - kRecallTol));
  long tp_count = 0;
  double precision_sum = 0.0;
  for (std::size_t i = 0; i < result.tp.size(); ++i) {
    if (!result.tp[i]) continue;
    ++tp_count;
    if (tp_count > n_depth) break;
    precision_sum += static_cast<double>(tp_count) / static_cast<double>(i + 1);
  }
  return precision_sum / static_cast<double>(n_depth);
}

void EvalConfig::validate() const {
  if (offsets_seconds.empty() || depths.empty()) {
    throw ValidationError("EvalConfig: offsets and depths must be non-empty");
  }
  for (double o : offsets_seconds) {
    if (!(o >= 0)) throw ValidationError("EvalConfig: offsets must be >= 0");
  }
  for (double d : depths) {
    if (!(d > 0 && d <= 1)) throw ValidationError("EvalConfig: depths must lie in (0, 1]");
  }
  if (!(chunks_per_second > 0)) throw ValidationError("EvalConfig: chunks_per_second must be > 0");
}

double EvalReport::pmap_at(double offset_seconds, double depth) const {
  for (std::size_t o = 0; o < config.offsets_seconds.size(); ++o) {
    if (config.offsets_seconds[o] != offset_seconds) continue;
    for (std::size_t d = 0; d < config.depths.size(); ++d) {
      if (config.depths[d] == depth) return pmap[o][d];
    }
  }
  throw ValidationError("EvalReport: requested offset/depth not in the evaluated grid");
}

EvalReport evaluate(const std::vector<StartPrediction>& predictions,
                    const std::vector<GroundTruthStart>& ground_truths, const EvalConfig& config) {
  config.validate();
  EvalReport report;
  report.config = config;

  std::set<int> class_set;
  for (const GroundTruthStart& gt : ground_truths) {
    if (gt.class_id <= 0) throw ValidationError("evaluate: ground truth with background class");
    class_set.insert(gt.class_id);
  }
  if (class_set.empty()) {
    throw ValidationError("evaluate: no ground-truth starts; p-mAP undefined");
  }
  report.classes.assign(class_set.begin(), class_set.end());

  const std::size_t n_offsets = config.offsets_seconds.size();
  const std::size_t n_depths = config.depths.size();
  report.pmap.assign(n_offsets, std::vector<double>(n_depths, 0.0));

  for (int cls : report.classes) {
    std::vector<StartPrediction> cls_preds;
    for (const StartPrediction& p : predictions) {
      if (p.class_id == cls) cls_preds.push_back(p);
    }
    std::vector<GroundTruthStart> cls_gts;
    for (const GroundTruthStart& gt : ground_truths) {
      if (gt.class_id == cls) cls_gts.push_back(gt);
    }
    report.gt_counts[cls] = static_cast<long>(cls_gts.size());
    report.pred_counts[cls] = static_cast<long>(cls_preds.size());

    std::vector<std::vector<double>> grid(n_offsets, std::vector<double>(n_depths, 0.0));
    for (std::size_t o = 0; o < n_offsets; ++o) {
      const long offset_chunks =
          static_cast<long>(std::floor(config.offsets_seconds[o] * config.chunks_per_second));
      const MatchResult m = match(cls_preds, cls_gts, offset_chunks, config.strict_boundary);
      for (std::size_t d = 0; d < n_depths; ++d) grid[o][d] = p_ap(m, config.depths[d]);
    }
    // tolerance only absorbs round-off; the protocol itself is monotone
    for (std::size_t d = 0; d < n_depths; ++d) {
      for (std::size_t o = 1; o < n_offsets; ++o) {
        if (config.offsets_seconds[o] >= config.offsets_seconds[o - 1] &&
            grid[o][d] < grid[o - 1][d] - 1e-12) {
          throw NumericError("evaluate: p-AP for class " + std::to_string(cls) +
                             " decreased between offsets " +
                             std::to_string(config.offsets_seconds[o - 1]) + "s and " +
                             std::to_string(config.offsets_seconds[o]) + "s");
        }
      }
    }
    for (std::size_t o = 0; o < n_offsets; ++o) {
      for (std::size_t d = 0; d < n_depths; ++d) {
        report.pmap[o][d] += grid[o][d] / static_cast<double>(report.classes.size());
      }
    }
    report.per_class_pap[cls] = std::move(grid);
  }

  report.avg_pmap.assign(n_depths, 0.0);
  for (std::size_t d = 0; d < n_depths; ++d) {
    for (std::size_t o = 0; o < n_offsets; ++o) {
      report.avg_pmap[d] += report.pmap[o][d] / static_cast<double>(n_offsets);
    }
  }
  return report;
}

namespace {

json report_to_json(const EvalReport& report, const std::string& config_echo) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "eval_report";
  if (!config_echo.empty()) doc["config"] = json::parse(config_echo);
  doc["protocol"] = {
      {"offsets_seconds", report.config.offsets_seconds},
      {"depths", report.config.depths},
      {"chunks_per_second", report.config.chunks_per_second},
      {"offset_boundary", report.config.strict_boundary ? "strict" : "lte"},
      {"depth_formula", "N_X = ceil(X * num_gt); precision summed over the first N_X TPs"},
      {"tie_break", "confidence desc, time asc; equidistant ground truths -> earlier"}};
  doc["classes"] = report.classes;
  json gt = json::object(), pr = json::object(), pap = json::object();
  for (const auto& [cls, count] : report.gt_counts) gt[std::to_string(cls)] = count;
  for (const auto& [cls, count] : report.pred_counts) pr[std::to_string(cls)] = count;
  for (const auto& [cls, grid] : report.per_class_pap) pap[std::to_string(cls)] = grid;
  doc["gt_counts"] = std::move(gt);
  doc["pred_counts"] = std::move(pr);
  doc["per_class_pap"] = std::move(pap);
  doc["pmap"] = report.pmap;
  doc["avg_pmap"] = report.avg_pmap;
  return doc;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       const std::string& config_echo) {
  std::ofstream out = detail::open_output(path);
  out << report_to_json(report, config_echo).dump(1) << "\n";
}

EvalReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_report_json: cannot open '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("read_report_json: '" + path.string() + "' is not valid JSON: " +
                          e.what());
  }
  try {
    if (doc.at("kind").get<std::string>() != "eval_report") {
      throw ValidationError("read_report_json: '" + path.string() + "' is not an eval report");
    }
    EvalReport report;
    const json& protocol = doc.at("protocol");
    report.config.offsets_seconds = protocol.at("offsets_seconds").get<std::vector<double>>();
    report.config.depths = protocol.at("depths").get<std::vector<double>>();
    report.config.chunks_per_second = protocol.at("chunks_per_second").get<double>();
    report.config.strict_boundary = protocol.at("offset_boundary").get<std::string>() == "strict";
    report.classes = doc.at("classes").get<std::vector<int>>();
    for (const auto& [key, value] : doc.at("gt_counts").items()) {
      report.gt_counts[std::stoi(key)] = value.get<long>();
    }
    for (const auto& [key, value] : doc.at("pred_counts").items()) {
      report.pred_counts[std::stoi(key)] = value.get<long>();
    }
    for (const auto& [key, value] : doc.at("per_class_pap").items()) {
      report.per_class_pap[std::stoi(key)] = value.get<std::vector<std::vector<double>>>();
    }
    report.pmap = doc.at("pmap").get<std::vector<std::vector<double>>>();
    report.avg_pmap = doc.at("avg_pmap").get<std::vector<double>>();
    return report;
  } catch (const json::exception& e) {
    throw ValidationError("read_report_json: malformed report '" + path.string() + "': " +
                          e.what());
  }
}

namespace {

std::string trim_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, const EvalReport& report,
                      const std::string& config_echo) {
  std::ofstream out = detail::open_output(path);
  if (!config_echo.empty()) out << "# config: " << config_echo << "\n";
  out << "offset_seconds";
  for (double d : report.config.depths) out << ",rec_" << trim_number(d);
  out << "\n";
  for (std::size_t o = 0; o < report.config.offsets_seconds.size(); ++o) {
    out << trim_number(report.config.offsets_seconds[o]);
    for (double v : report.pmap[o]) out << "," << trim_number(v);
    out << "\n";
  }
  out << "avg";
  for (double v : report.avg_pmap) out << "," << trim_number(v);
  out << "\n";
}

}  // namespace startnet
