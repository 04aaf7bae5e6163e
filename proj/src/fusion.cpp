#include "startnet/fusion.hpp"

#include <string>

#include <json.hpp>

#include "jsonl_util.hpp"

namespace startnet {

using nlohmann::json;

Vector fuse(const Vector& class_scores, double s_start) {
  if (class_scores.size() < 2) {
    throw ValidationError("fuse: need at least background plus one action class");
  }
  if (!(s_start >= 0.0 && s_start <= 1.0)) {
    throw ValidationError("fuse: start probability " + std::to_string(s_start) +
                          " outside [0, 1]");
  }
  Vector fused = s_start * class_scores;
  fused(0) = (1.0 - s_start) * class_scores(0);
  return fused;
}

namespace {

int argmax_first(const Vector& v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return best;
}

}  // namespace

std::vector<StartPrediction> generate_starts(const std::vector<Vector>& class_scores,
                                             double threshold, long stream_id) {
  std::vector<StartPrediction> predictions;
  int prev_class = 0;  // background before the stream begins
  for (long t = 0; t < static_cast<long>(class_scores.size()); ++t) {
    const Vector& scores = class_scores[static_cast<std::size_t>(t)];
    const int current = argmax_first(scores);
    if (current != 0 && current != prev_class && scores(current) > threshold) {
      predictions.push_back({stream_id, t, current, scores(current)});
    }
    prev_class = current;
  }
  return predictions;
}

std::vector<StartPrediction> clsnet_only_starts(const std::vector<Vector>& class_scores,
                                                double threshold, long stream_id) {
  return generate_starts(class_scores, threshold, stream_id);
}

void save_predictions(const std::filesystem::path& path,
                      const std::vector<StartPrediction>& predictions,
                      const std::string& config_echo) {
  std::ofstream out = detail::open_output(path);
  json header{{"version", kFormatVersion},
              {"kind", "start_predictions"},
              {"count", predictions.size()}};
  if (!config_echo.empty()) header["config"] = json::parse(config_echo);
  out << header.dump() << "\n";
  for (const StartPrediction& p : predictions) {
    out << json{{"stream", p.stream}, {"t", p.t}, {"class", p.class_id},
                {"confidence", p.confidence}}
               .dump()
        << "\n";
  }
}

std::vector<StartPrediction> load_predictions(const std::filesystem::path& path) {
  std::vector<StartPrediction> predictions;
  bool saw_header = false;
  long expected = -1;
  detail::for_each_jsonl(path, [&](long line, const json& record) {
    if (!saw_header) {
      if (record.value("kind", "") != "start_predictions") {
        throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                              ": expected a start_predictions header record");
      }
      expected = record.at("count").get<long>();
      saw_header = true;
      return;
    }
    StartPrediction p;
    p.stream = record.value("stream", 0L);
    p.t = record.at("t").get<long>();
    p.class_id = record.at("class").get<int>();
    p.confidence = record.at("confidence").get<double>();
    if (p.class_id <= 0) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                            ": field 'class' must be a positive action class");
    }
    predictions.push_back(p);
  });
  if (!saw_header) throw ValidationError("'" + path.string() + "': empty predictions file");
  if (static_cast<long>(predictions.size()) != expected) {
    throw ValidationError("'" + path.string() + "': truncated predictions file");
  }
  return predictions;
}

void save_predictions_csv(const std::filesystem::path& path,
                          const std::vector<StartPrediction>& predictions,
                          const std::string& config_echo) {
  std::ofstream out = detail::open_output(path);
  if (!config_echo.empty()) out << "# config: " << config_echo << "\n";
  out << "stream,t,class,confidence\n";
  char buf[64];
  for (const StartPrediction& p : predictions) {
    std::snprintf(buf, sizeof(buf), "%.17g", p.confidence);
    out << p.stream << "," << p.t << "," << p.class_id << "," << buf << "\n";
  }
}

}  // namespace startnet
