#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "startnet/lstm.hpp"
#include "startnet/stream.hpp"

namespace startnet {

/// Per-chunk action classifier: one LSTM plus a softmax head over the K
/// classes (background included).
struct ClsModel {
  LstmParams lstm;
  AffineHead head;
  int num_classes = 0;

  static ClsModel random_init(int feature_dim, int hidden_dim, int num_classes,
                              std::uint64_t seed);

  std::vector<ParamSlot> slots();
};

struct ClsStreamState {
  RecurrentState recurrent;
  long t = 0;
};

/// One online step: consumes the chunk feature, returns the class
/// distribution p_t and advances the state. Strictly causal.
Vector cls_step(const ClsModel& model, ClsStreamState& state, const Vector& feature);

/// cls_step folded over the stream from the zero state.
std::vector<Vector> cls_infer_stream(const ClsModel& model, const ChunkStream& stream);
std::vector<std::vector<Vector>> cls_infer_corpus(const ClsModel& model,
                                                  const std::vector<ChunkStream>& streams);

struct ClsTrainConfig {
  int seq_len = 64;
  int batch = 32;
  int epochs = 8;
  double lr = 5e-4;
  double weight_decay = 5e-4;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
};

/// loss_curve[0] is the pre-training loss on a deterministic probe sample
/// (about ln K at a fresh initialization); entry e >= 1 is the mean training
/// cross-entropy seen during epoch e.
struct ClsTrainResult {
  std::vector<double> loss_curve;
};

/// Minimizes mean per-chunk cross-entropy over random contiguous windows
/// (hidden state reset at window start). Deterministic given the seed.
ClsTrainResult train_clsnet(ClsModel& model, const std::vector<ChunkStream>& streams,
                            const ClsTrainConfig& config);

/// Fraction of chunks whose argmax score matches the label.
double frame_accuracy(const ClsModel& model, const std::vector<ChunkStream>& streams);

void save_cls_checkpoint(const std::filesystem::path& path, const ClsModel& model,
                         const std::string& config_echo = {});
ClsModel load_cls_checkpoint(const std::filesystem::path& path);

/// Score streams as .jsonl ({"t", "p": [K floats]}) with a header record.
void save_score_stream(const std::filesystem::path& path, const std::vector<Vector>& scores,
                       const std::string& config_echo = {});
std::vector<Vector> load_score_stream(const std::filesystem::path& path);

}  // namespace startnet
