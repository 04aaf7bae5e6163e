#include "startnet/stream.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "jsonl_util.hpp"

namespace startnet {

using nlohmann::json;

void ChunkStream::validate() const {
  if (num_classes < 2) throw ValidationError("ChunkStream: num_classes must be >= 2");
  if (!(chunks_per_second > 0)) throw ValidationError("ChunkStream: chunks_per_second must be > 0");
  if (features.size() != labels.size()) {
    throw ValidationError("ChunkStream: field 'features' has length " +
                          std::to_string(features.size()) + " but 'labels' has " +
                          std::to_string(labels.size()));
  }
  if (start_flags.size() != labels.size()) {
    throw ValidationError("ChunkStream: field 'start_flags' has length " +
                          std::to_string(start_flags.size()) + " but 'labels' has " +
                          std::to_string(labels.size()));
  }
  const int dim = feature_dim();
  for (std::size_t t = 0; t < features.size(); ++t) {
    if (features[t].size() != dim) {
      throw ValidationError("ChunkStream: field 'features' has inconsistent dimension at t=" +
                            std::to_string(t));
    }
    if (!features[t].allFinite()) {
      throw ValidationError("ChunkStream: field 'features' has non-finite value at t=" +
                            std::to_string(t));
    }
    if (labels[t] < 0 || labels[t] >= num_classes) {
      throw ValidationError("ChunkStream: field 'labels' out of range at t=" + std::to_string(t));
    }
  }
  const std::vector<std::uint8_t> derived = derive_start_labels(labels);
  for (std::size_t t = 0; t < derived.size(); ++t) {
    if (derived[t] != start_flags[t]) {
      throw ValidationError(
          "ChunkStream: field 'start_flags' inconsistent with labels at t=" + std::to_string(t));
    }
  }
}

std::vector<std::uint8_t> derive_start_labels(const std::vector<int>& labels) {
  std::vector<std::uint8_t> flags(labels.size(), 0);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == 0) continue;
    if (t == 0 || labels[t - 1] != labels[t]) flags[t] = 1;
  }
  return flags;
}

std::vector<GroundTruthStart> ground_truth_starts(const ChunkStream& stream, long stream_id) {
  std::vector<GroundTruthStart> starts;
  for (long t = 0; t < stream.size(); ++t) {
    if (stream.start_flags[static_cast<std::size_t>(t)]) {
      starts.push_back({stream_id, t, stream.labels[static_cast<std::size_t>(t)]});
    }
  }
  return starts;
}

void SyntheticConfig::validate() const {
  if (num_classes < 2) throw ValidationError("SyntheticConfig: num_classes must be >= 2");
  if (feature_dim < 1) throw ValidationError("SyntheticConfig: feature_dim must be positive");
  if (stream_length < 1) throw ValidationError("SyntheticConfig: stream_length must be positive");
  if (!(mean_segment_chunks >= 1) || !(mean_gap_chunks >= 1)) {
    throw ValidationError("SyntheticConfig: mean segment/gap lengths must be >= 1");
  }
  if (noise_std < 0) throw ValidationError("SyntheticConfig: noise_std must be >= 0");
  if (start_blur_chunks < 0) throw ValidationError("SyntheticConfig: blur width must be >= 0");
  if (!(chunks_per_second > 0)) {
    throw ValidationError("SyntheticConfig: chunks_per_second must be > 0");
  }
  if (static_cast<int>(class_means.size()) != num_classes) {
    throw ValidationError("SyntheticConfig: need one mean vector per class (got " +
                          std::to_string(class_means.size()) + ", expected " +
                          std::to_string(num_classes) + ")");
  }
  for (const Vector& m : class_means) {
    if (m.size() != feature_dim || !m.allFinite()) {
      throw ValidationError("SyntheticConfig: class mean with wrong dimension or non-finite value");
    }
  }
}

std::vector<Vector> default_class_means(int num_classes, int feature_dim, std::uint64_t seed) {
  Rng rng = derive_rng(seed, 0xC1A55ULL);
  std::vector<Vector> means;
  means.reserve(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) {
    Vector m(feature_dim);
    for (int d = 0; d < feature_dim; ++d) m(d) = rng.normal();
    means.push_back(m.normalized());
  }
  return means;
}

ChunkStream generate_stream(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng = derive_rng(seed, 0x57EA17ULL);
  ChunkStream stream;
  stream.chunks_per_second = config.chunks_per_second;
  stream.num_classes = config.num_classes;
  stream.labels.reserve(static_cast<std::size_t>(config.stream_length));

  // Segment plan: alternating background gaps and single-class segments.
  bool in_gap = true;
  while (static_cast<long>(stream.labels.size()) < config.stream_length) {
    const long remaining = config.stream_length - static_cast<long>(stream.labels.size());
    if (in_gap) {
      const long len = std::min<long>(rng.geometric(config.mean_gap_chunks), remaining);
      stream.labels.insert(stream.labels.end(), static_cast<std::size_t>(len), 0);
    } else {
      const long len = std::min<long>(rng.geometric(config.mean_segment_chunks), remaining);
      const int cls = static_cast<int>(rng.uniform_int(1, config.num_classes - 1));
      stream.labels.insert(stream.labels.end(), static_cast<std::size_t>(len), cls);
    }
    in_gap = !in_gap;
  }
  stream.start_flags = derive_start_labels(stream.labels);

  stream.features.reserve(stream.labels.size());
  const Vector& bg = config.class_means[0];
  long chunks_since_start = -1;  // -1 outside any blur window
  for (std::size_t t = 0; t < stream.labels.size(); ++t) {
    const int cls = stream.labels[t];
    if (stream.start_flags[t]) chunks_since_start = 0;
    Vector mean = config.class_means[static_cast<std::size_t>(cls)];
    if (cls != 0 && chunks_since_start >= 0 && chunks_since_start < config.start_blur_chunks) {
      const double w = static_cast<double>(chunks_since_start + 1) /
                       static_cast<double>(config.start_blur_chunks + 1);
      mean = (1.0 - w) * bg + w * mean;
    }
    if (cls != 0 && chunks_since_start >= 0) ++chunks_since_start;
    if (cls == 0) chunks_since_start = -1;
    Vector f = mean;
    if (config.noise_std > 0) {
      for (Eigen::Index d = 0; d < f.size(); ++d) f(d) += config.noise_std * rng.normal();
    }
    stream.features.push_back(std::move(f));
  }
  return stream;
}

namespace {

double ratio_from_counts(long negatives, long positives) {
  if (positives == 0) {
    throw ValidationError("imbalance_ratio: no positive start flags in the corpus");
  }
  return static_cast<double>(negatives) / static_cast<double>(positives);
}

}  // namespace

double imbalance_ratio(const std::vector<ChunkStream>& streams) {
  long positives = 0, negatives = 0;
  for (const ChunkStream& s : streams) {
    for (std::uint8_t g : s.start_flags) (g ? positives : negatives)++;
  }
  return ratio_from_counts(negatives, positives);
}

double imbalance_ratio_flags(const std::vector<std::vector<std::uint8_t>>& flag_streams) {
  long positives = 0, negatives = 0;
  for (const auto& flags : flag_streams) {
    for (std::uint8_t g : flags) (g ? positives : negatives)++;
  }
  return ratio_from_counts(negatives, positives);
}

SequenceSampler::SequenceSampler(const std::vector<std::vector<std::uint8_t>>& flag_streams,
                                 long window, bool balanced)
    : window_(window), balanced_(balanced) {
  if (window < 1) throw ValidationError("SequenceSampler: window length must be positive");
  long pos_g1 = 0, pos_g0 = 0, all_g1 = 0, all_g0 = 0;
  for (std::size_t s = 0; s < flag_streams.size(); ++s) {
    const auto& flags = flag_streams[s];
    const long len = static_cast<long>(flags.size());
    for (long t0 = 0; t0 + window <= len; ++t0) {
      long g1 = 0;
      for (long j = 0; j < window; ++j) g1 += flags[static_cast<std::size_t>(t0 + j)];
      const WindowRef ref{static_cast<int>(s), t0};
      all_.push_back(ref);
      all_g1 += g1;
      all_g0 += window - g1;
      if (g1 > 0) {
        positive_.push_back(ref);
        pos_g1 += g1;
        pos_g0 += window - g1;
      } else {
        negative_.push_back(ref);
      }
    }
  }
  if (all_.empty()) throw ValidationError("SequenceSampler: no windows of the requested length");
  if (!positive_.empty()) {
    pos_mean_g1_ = static_cast<double>(pos_g1) / static_cast<double>(positive_.size());
    pos_mean_g0_ = static_cast<double>(pos_g0) / static_cast<double>(positive_.size());
  }
  neg_mean_g0_ = static_cast<double>(window);
  all_mean_g1_ = static_cast<double>(all_g1) / static_cast<double>(all_.size());
  all_mean_g0_ = static_cast<double>(all_g0) / static_cast<double>(all_.size());
}

std::vector<WindowRef> SequenceSampler::sample_batch(int batch, Rng& rng) const {
  if (batch < 1) throw ValidationError("SequenceSampler: batch must be positive");
  std::vector<WindowRef> out;
  out.reserve(static_cast<std::size_t>(batch));
  if (balanced_) {
    if (batch % 2 != 0) {
      throw ValidationError("SequenceSampler: balanced sampling needs an even batch size");
    }
    if (positive_.empty() || negative_.empty()) {
      throw ValidationError(
          "SequenceSampler: positive or negative window pool is empty; disable balancing");
    }
    for (int k = 0; k < batch / 2; ++k) {
      out.push_back(positive_[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(positive_.size()) - 1))]);
    }
    for (int k = 0; k < batch / 2; ++k) {
      out.push_back(negative_[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(negative_.size()) - 1))]);
    }
  } else {
    for (int k = 0; k < batch; ++k) {
      out.push_back(all_[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(all_.size()) - 1))]);
    }
  }
  return out;
}

double SequenceSampler::sampled_imbalance_ratio() const {
  if (balanced_) {
    if (positive_.empty()) {
      throw ValidationError("SequenceSampler: no positive windows; imbalance ratio undefined");
    }
    const double g1 = 0.5 * pos_mean_g1_;
    const double g0 = 0.5 * pos_mean_g0_ + 0.5 * neg_mean_g0_;
    return g0 / g1;
  }
  if (all_mean_g1_ == 0) {
    throw ValidationError("SequenceSampler: no positive windows; imbalance ratio undefined");
  }
  return all_mean_g0_ / all_mean_g1_;
}

void save_stream(const std::filesystem::path& path, const ChunkStream& stream,
                 const std::string& config_echo) {
  stream.validate();
  std::ofstream out = detail::open_output(path);
  json header{{"version", kFormatVersion},
              {"kind", "chunk_stream"},
              {"K", stream.num_classes},
              {"feature_dim", stream.feature_dim()},
              {"chunks_per_second", stream.chunks_per_second},
              {"length", stream.size()}};
  if (!config_echo.empty()) header["config"] = json::parse(config_echo);
  out << header.dump() << "\n";
  for (long t = 0; t < stream.size(); ++t) {
    const auto idx = static_cast<std::size_t>(t);
    json record{{"t", t},
                {"f", std::vector<double>(stream.features[idx].data(),
                                          stream.features[idx].data() + stream.features[idx].size())},
                {"y", stream.labels[idx]},
                {"g", static_cast<int>(stream.start_flags[idx])}};
    out << record.dump() << "\n";
  }
}

ChunkStream load_stream(const std::filesystem::path& path) {
  ChunkStream stream;
  long expected_length = -1;
  int feature_dim = -1;
  bool saw_header = false;
  detail::for_each_jsonl(path, [&](long line, const json& record) {
    if (!saw_header) {
      if (record.value("kind", "") != "chunk_stream") {
        throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                              ": expected a chunk_stream header record");
      }
      if (record.at("version").get<int>() != kFormatVersion) {
        throw ValidationError("'" + path.string() + "': unsupported format version");
      }
      stream.num_classes = record.at("K").get<int>();
      stream.chunks_per_second = record.at("chunks_per_second").get<double>();
      feature_dim = record.at("feature_dim").get<int>();
      expected_length = record.at("length").get<long>();
      saw_header = true;
      return;
    }
    const long t = record.at("t").get<long>();
    if (t != stream.size()) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                            ": field 't' out of order (got " + std::to_string(t) + ", expected " +
                            std::to_string(stream.size()) + ")");
    }
    std::vector<double> f = record.at("f").get<std::vector<double>>();
    if (static_cast<int>(f.size()) != feature_dim) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                            ": field 'f' has length " + std::to_string(f.size()) + ", expected " +
                            std::to_string(feature_dim));
    }
    stream.features.push_back(Eigen::Map<const Vector>(f.data(), static_cast<long>(f.size())));
    stream.labels.push_back(record.at("y").get<int>());
    stream.start_flags.push_back(static_cast<std::uint8_t>(record.at("g").get<int>()));
  });
  if (!saw_header) throw ValidationError("'" + path.string() + "': empty stream file");
  if (stream.size() != expected_length) {
    throw ValidationError("'" + path.string() + "': truncated stream (header announces " +
                          std::to_string(expected_length) + " chunks, file holds " +
                          std::to_string(stream.size()) + ")");
  }
  stream.validate();
  return stream;
}

}  // namespace startnet
