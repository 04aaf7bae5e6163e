#include "startnet/clsnet.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "jsonl_util.hpp"
#include "startnet/adam.hpp"
#include "startnet/checkpoint.hpp"

namespace startnet {

using nlohmann::json;

namespace {
constexpr std::uint64_t kInitStream = 0xC15;
constexpr std::uint64_t kSampleStream = 0xC25;
constexpr std::uint64_t kProbeStream = 0xC35;
}  // namespace

ClsModel ClsModel::random_init(int feature_dim, int hidden_dim, int num_classes,
                               std::uint64_t seed) {
  if (num_classes < 2) throw ValidationError("ClsModel: num_classes must be >= 2");
  Rng rng = derive_rng(seed, kInitStream);
  ClsModel model;
  model.lstm = LstmParams::random_init(feature_dim, hidden_dim, rng);
  model.head = AffineHead::random_init(hidden_dim, num_classes, rng);
  model.num_classes = num_classes;
  return model;
}

std::vector<ParamSlot> ClsModel::slots() {
  std::vector<ParamSlot> s = lstm_slots(lstm);
  for (ParamSlot& h : head_slots(head)) s.push_back(h);
  return s;
}

Vector cls_step(const ClsModel& model, ClsStreamState& state, const Vector& feature) {
  if (state.t == 0 && state.recurrent.h.size() == 0) {
    state.recurrent = RecurrentState::zeros(model.lstm.hidden_dim);
  }
  state.recurrent = lstm_step(model.lstm, state.recurrent, feature);
  ++state.t;
  return affine_softmax(model.head, state.recurrent.h);
}

std::vector<Vector> cls_infer_stream(const ClsModel& model, const ChunkStream& stream) {
  ClsStreamState state;
  std::vector<Vector> scores;
  scores.reserve(static_cast<std::size_t>(stream.size()));
  for (const Vector& f : stream.features) scores.push_back(cls_step(model, state, f));
  return scores;
}

std::vector<std::vector<Vector>> cls_infer_corpus(const ClsModel& model,
                                                  const std::vector<ChunkStream>& streams) {
  std::vector<std::vector<Vector>> out;
  out.reserve(streams.size());
  for (const ChunkStream& s : streams) out.push_back(cls_infer_stream(model, s));
  return out;
}

namespace {

struct WindowIndex {
  // cumulative window counts per stream for uniform global sampling
  std::vector<long> cumulative;
  long total = 0;

  WindowIndex(const std::vector<ChunkStream>& streams, int seq_len) {
    for (const ChunkStream& s : streams) {
      if (s.size() < seq_len) {
        throw ValidationError("train_clsnet: stream of length " + std::to_string(s.size()) +
                              " is shorter than seq_len=" + std::to_string(seq_len));
      }
      total += s.size() - seq_len + 1;
      cumulative.push_back(total);
    }
  }

  WindowRef pick(Rng& rng) const {
    const long g = rng.uniform_int(0, total - 1);
    std::size_t s = 0;
    while (cumulative[s] <= g) ++s;
    const long before = s == 0 ? 0 : cumulative[s - 1];
    return WindowRef{static_cast<int>(s), g - before};
  }
};

/// Forward one window, accumulate CE and the per-step output gradients
/// scaled by `grad_scale`. Returns the summed cross-entropy of the window.
double window_forward_backward(const ClsModel& model, const ChunkStream& stream, long t0,
                               int seq_len, double grad_scale, GradientBundle* grads) {
  RecurrentState state = RecurrentState::zeros(model.lstm.hidden_dim);
  std::vector<LstmStepCache> caches(static_cast<std::size_t>(seq_len));
  std::vector<Vector> d_h(static_cast<std::size_t>(seq_len));
  double ce = 0.0;
  for (int j = 0; j < seq_len; ++j) {
    const auto idx = static_cast<std::size_t>(t0 + j);
    state = lstm_step_cached(model.lstm, state, stream.features[idx],
                             caches[static_cast<std::size_t>(j)]);
    const Vector logits = affine_apply(model.head, state.h);
    const Vector p = softmax(logits);
    const int label = stream.labels[idx];
    ce += -std::log(std::max(p(label), 1e-300));
    if (grads != nullptr) {
      Vector d_logits = p;
      d_logits(label) -= 1.0;
      d_logits *= grad_scale;
      d_h[static_cast<std::size_t>(j)] =
          affine_backward(model.head, state.h, d_logits, grads->head);
    }
  }
  if (grads != nullptr) lstm_sequence_backward(model.lstm, caches, d_h, grads->lstm);
  return ce;
}

}  // namespace

ClsTrainResult train_clsnet(ClsModel& model, const std::vector<ChunkStream>& streams,
                            const ClsTrainConfig& config) {
  if (streams.empty()) throw ValidationError("train_clsnet: no training streams");
  if (config.seq_len < 1 || config.batch < 1 || config.epochs < 0) {
    throw ValidationError("train_clsnet: seq_len and batch must be positive, epochs >= 0");
  }
  const WindowIndex windows(streams, config.seq_len);

  ClsTrainResult result;
  // Pre-training probe loss on a deterministic window sample.
  {
    Rng probe_rng = derive_rng(config.seed, kProbeStream);
    const int probe_count = static_cast<int>(std::min<long>(32, windows.total));
    double ce = 0.0;
    for (int k = 0; k < probe_count; ++k) {
      const WindowRef w = windows.pick(probe_rng);
      ce += window_forward_backward(model, streams[static_cast<std::size_t>(w.stream)], w.t0,
                                    config.seq_len, 0.0, nullptr);
    }
    result.loss_curve.push_back(ce / (static_cast<double>(probe_count) * config.seq_len));
  }
  if (config.epochs == 0) return result;

  std::vector<ParamSlot> params = model.slots();
  AdamState adam(params);
  const AdamConfig adam_config{config.lr, config.weight_decay};

  long total_chunks = 0;
  for (const ChunkStream& s : streams) total_chunks += s.size();
  const long windows_per_epoch = std::max<long>(1, total_chunks / config.seq_len);
  const long batches_per_epoch = (windows_per_epoch + config.batch - 1) / config.batch;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng = derive_rng(config.seed, kSampleStream, static_cast<std::uint64_t>(epoch));
    double epoch_ce = 0.0;
    long epoch_chunks = 0;
    for (long b = 0; b < batches_per_epoch; ++b) {
      GradientBundle grads{LstmGradients::zeros_like(model.lstm),
                           HeadGradients::zeros_like(model.head)};
      const double grad_scale = 1.0 / (static_cast<double>(config.batch) * config.seq_len);
      double batch_ce = 0.0;
      for (int k = 0; k < config.batch; ++k) {
        const WindowRef w = windows.pick(rng);
        batch_ce += window_forward_backward(model, streams[static_cast<std::size_t>(w.stream)],
                                            w.t0, config.seq_len, grad_scale, &grads);
      }
      if (!std::isfinite(batch_ce)) {
        throw NumericError("train_clsnet: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b));
      }
      std::vector<ParamSlot> grad_view = bundle_slots(grads);
      clip_global_norm(grad_view, config.clip_norm);
      adam.update(params, grad_view, adam_config);
      epoch_ce += batch_ce;
      epoch_chunks += static_cast<long>(config.batch) * config.seq_len;
    }
    result.loss_curve.push_back(epoch_ce / static_cast<double>(epoch_chunks));
  }
  return result;
}

double frame_accuracy(const ClsModel& model, const std::vector<ChunkStream>& streams) {
  long correct = 0, total = 0;
  for (const ChunkStream& stream : streams) {
    const std::vector<Vector> scores = cls_infer_stream(model, stream);
    for (long t = 0; t < stream.size(); ++t) {
      Eigen::Index argmax = 0;
      scores[static_cast<std::size_t>(t)].maxCoeff(&argmax);
      if (static_cast<int>(argmax) == stream.labels[static_cast<std::size_t>(t)]) ++correct;
      ++total;
    }
  }
  if (total == 0) throw ValidationError("frame_accuracy: empty corpus");
  return static_cast<double>(correct) / static_cast<double>(total);
}

void save_cls_checkpoint(const std::filesystem::path& path, const ClsModel& model,
                         const std::string& config_echo) {
  std::vector<NamedTensor> tensors;
  tensors.push_back(to_named("lstm.w_i", model.lstm.w_i));
  tensors.push_back(to_named("lstm.u_i", model.lstm.u_i));
  tensors.push_back(to_named("lstm.b_i", model.lstm.b_i));
  tensors.push_back(to_named("lstm.w_f", model.lstm.w_f));
  tensors.push_back(to_named("lstm.u_f", model.lstm.u_f));
  tensors.push_back(to_named("lstm.b_f", model.lstm.b_f));
  tensors.push_back(to_named("lstm.w_g", model.lstm.w_g));
  tensors.push_back(to_named("lstm.u_g", model.lstm.u_g));
  tensors.push_back(to_named("lstm.b_g", model.lstm.b_g));
  tensors.push_back(to_named("lstm.w_o", model.lstm.w_o));
  tensors.push_back(to_named("lstm.u_o", model.lstm.u_o));
  tensors.push_back(to_named("lstm.b_o", model.lstm.b_o));
  tensors.push_back(to_named("head.w", model.head.w));
  tensors.push_back(to_named("head.b", model.head.b));
  write_checkpoint(path, "clsnet",
                   {{"input_dim", model.lstm.input_dim},
                    {"hidden_dim", model.lstm.hidden_dim},
                    {"num_classes", model.num_classes}},
                   tensors, config_echo);
}

namespace {

LstmParams lstm_from_checkpoint(const Checkpoint& ckpt, int input_dim, int hidden_dim) {
  LstmParams p = LstmParams::zeros(input_dim, hidden_dim);
  p.w_i = matrix_from(ckpt.tensor_at("lstm.w_i"));
  p.u_i = matrix_from(ckpt.tensor_at("lstm.u_i"));
  p.b_i = vector_from(ckpt.tensor_at("lstm.b_i"));
  p.w_f = matrix_from(ckpt.tensor_at("lstm.w_f"));
  p.u_f = matrix_from(ckpt.tensor_at("lstm.u_f"));
  p.b_f = vector_from(ckpt.tensor_at("lstm.b_f"));
  p.w_g = matrix_from(ckpt.tensor_at("lstm.w_g"));
  p.u_g = matrix_from(ckpt.tensor_at("lstm.u_g"));
  p.b_g = vector_from(ckpt.tensor_at("lstm.b_g"));
  p.w_o = matrix_from(ckpt.tensor_at("lstm.w_o"));
  p.u_o = matrix_from(ckpt.tensor_at("lstm.u_o"));
  p.b_o = vector_from(ckpt.tensor_at("lstm.b_o"));
  p.validate();
  return p;
}

AffineHead head_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix, int hidden_dim,
                                int out_dim) {
  AffineHead head;
  head.w = matrix_from(ckpt.tensor_at(prefix + ".w"));
  head.b = vector_from(ckpt.tensor_at(prefix + ".b"));
  if (head.w.rows() != out_dim || head.w.cols() != hidden_dim || head.b.size() != out_dim) {
    throw ValidationError("checkpoint: head '" + prefix + "' has inconsistent shape");
  }
  return head;
}

}  // namespace

ClsModel load_cls_checkpoint(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != "clsnet") {
    throw ValidationError("load_cls_checkpoint: '" + path.string() + "' holds kind '" + ckpt.kind +
                          "', expected 'clsnet'");
  }
  const int input_dim = static_cast<int>(ckpt.meta_at("input_dim"));
  const int hidden_dim = static_cast<int>(ckpt.meta_at("hidden_dim"));
  const int num_classes = static_cast<int>(ckpt.meta_at("num_classes"));
  ClsModel model;
  model.lstm = lstm_from_checkpoint(ckpt, input_dim, hidden_dim);
  model.head = head_from_checkpoint(ckpt, "head", hidden_dim, num_classes);
  model.num_classes = num_classes;
  return model;
}

void save_score_stream(const std::filesystem::path& path, const std::vector<Vector>& scores,
                       const std::string& config_echo) {
  std::ofstream out = detail::open_output(path);
  const int k = scores.empty() ? 0 : static_cast<int>(scores[0].size());
  json header{{"version", kFormatVersion},
              {"kind", "score_stream"},
              {"K", k},
              {"length", scores.size()}};
  if (!config_echo.empty()) header["config"] = json::parse(config_echo);
  out << header.dump() << "\n";
  for (std::size_t t = 0; t < scores.size(); ++t) {
    json record{{"t", t},
                {"p", std::vector<double>(scores[t].data(), scores[t].data() + scores[t].size())}};
    out << record.dump() << "\n";
  }
}

std::vector<Vector> load_score_stream(const std::filesystem::path& path) {
  std::vector<Vector> scores;
  bool saw_header = false;
  long expected_length = -1;
  int k = -1;
  detail::for_each_jsonl(path, [&](long line, const json& record) {
    if (!saw_header) {
      if (record.value("kind", "") != "score_stream") {
        throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                              ": expected a score_stream header record");
      }
      k = record.at("K").get<int>();
      expected_length = record.at("length").get<long>();
      saw_header = true;
      return;
    }
    std::vector<double> p = record.at("p").get<std::vector<double>>();
    if (static_cast<int>(p.size()) != k) {
      throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                            ": field 'p' has length " + std::to_string(p.size()) + ", expected " +
                            std::to_string(k));
    }
    scores.push_back(Eigen::Map<const Vector>(p.data(), static_cast<long>(p.size())));
  });
  if (!saw_header) throw ValidationError("'" + path.string() + "': empty score file");
  if (static_cast<long>(scores.size()) != expected_length) {
    throw ValidationError("'" + path.string() + "': truncated score stream");
  }
  return scores;
}

}  // namespace startnet
