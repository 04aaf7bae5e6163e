#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "startnet/clsnet.hpp"
#include "startnet/gradcheck.hpp"

using namespace startnet;

namespace {

ChunkStream toy_stream(int num_classes, int dim, long length, std::uint64_t seed,
                       double noise = 0.0) {
  SyntheticConfig config;
  config.num_classes = num_classes;
  config.feature_dim = dim;
  config.stream_length = length;
  config.mean_segment_chunks = 8;
  config.mean_gap_chunks = 12;
  config.class_means = default_class_means(num_classes, dim, 5);
  config.noise_std = noise;
  config.start_blur_chunks = 0;
  return generate_stream(config, seed);
}

ClsModel zero_model(int dim, int hidden, int k) {
  ClsModel model;
  model.lstm = LstmParams::zeros(dim, hidden);
  model.head = AffineHead::zeros(hidden, k);
  model.num_classes = k;
  return model;
}

bool models_identical(const ClsModel& a, const ClsModel& b) {
  ClsModel& ma = const_cast<ClsModel&>(a);
  ClsModel& mb = const_cast<ClsModel&>(b);
  auto sa = ma.slots();
  auto sb = mb.slots();
  for (std::size_t k = 0; k < sa.size(); ++k) {
    for (std::ptrdiff_t j = 0; j < sa[k].size; ++j) {
      if (sa[k].data[j] != sb[k].data[j]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("cls_step: zero model emits the uniform distribution") {
  const int k = 4;
  const ClsModel model = zero_model(3, 8, k);
  const ChunkStream stream = toy_stream(k, 3, 40, 1, 0.2);
  const std::vector<Vector> scores = cls_infer_stream(model, stream);
  for (const Vector& p : scores) {
    for (int c = 0; c < k; ++c) CHECK(p(c) == 0.25);
  }
}

TEST_CASE("cls_infer_stream: deterministic and simplex-valued") {
  const ChunkStream stream = toy_stream(3, 4, 60, 2, 0.3);
  const ClsModel model = ClsModel::random_init(4, 12, 3, 9);
  const std::vector<Vector> a = cls_infer_stream(model, stream);
  const std::vector<Vector> b = cls_infer_stream(model, stream);
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t] == b[t]);
    CHECK(a[t].sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a[t].minCoeff() > 0.0);
  }
}

TEST_CASE("cls_infer_stream: causal, prefix outputs equal full-stream outputs") {
  const ChunkStream stream = toy_stream(3, 4, 50, 3, 0.3);
  const ClsModel model = ClsModel::random_init(4, 10, 3, 31);
  const std::vector<Vector> full = cls_infer_stream(model, stream);
  for (long cut : {1L, 7L, 25L, 49L}) {
    ChunkStream prefix = stream;
    prefix.features.resize(static_cast<std::size_t>(cut));
    prefix.labels.resize(static_cast<std::size_t>(cut));
    prefix.start_flags = derive_start_labels(prefix.labels);
    const std::vector<Vector> partial = cls_infer_stream(model, prefix);
    REQUIRE(partial.size() == static_cast<std::size_t>(cut));
    for (long t = 0; t < cut; ++t) {
      CHECK(partial[static_cast<std::size_t>(t)] == full[static_cast<std::size_t>(t)]);
    }
  }
}

TEST_CASE("train_clsnet: initial loss is about ln K") {
  std::vector<ChunkStream> streams{toy_stream(4, 6, 200, 4, 0.4), toy_stream(4, 6, 200, 5, 0.4)};
  ClsModel model = ClsModel::random_init(6, 16, 4, 77);
  ClsTrainConfig config;
  config.seq_len = 32;
  config.epochs = 0;
  const ClsTrainResult result = train_clsnet(model, streams, config);
  REQUIRE(result.loss_curve.size() == 1);
  CHECK(result.loss_curve[0] == doctest::Approx(std::log(4.0)).epsilon(0.08));
}

TEST_CASE("train_clsnet: zero epochs leave the model untouched") {
  std::vector<ChunkStream> streams{toy_stream(3, 4, 120, 6, 0.3)};
  ClsModel model = ClsModel::random_init(4, 8, 3, 12);
  const ClsModel before = model;
  ClsTrainConfig config;
  config.seq_len = 16;
  config.epochs = 0;
  (void)train_clsnet(model, streams, config);
  CHECK(models_identical(model, before));
}

TEST_CASE("train_clsnet: separable data reaches high frame accuracy") {
  std::vector<ChunkStream> streams;
  for (std::uint64_t s = 0; s < 4; ++s) streams.push_back(toy_stream(3, 4, 240, 10 + s, 0.0));
  ClsModel model = ClsModel::random_init(4, 16, 3, 42);
  ClsTrainConfig config;
  config.seq_len = 32;
  config.batch = 8;
  config.epochs = 100;
  config.lr = 5e-3;
  config.seed = 1;
  const ClsTrainResult result = train_clsnet(model, streams, config);
  CHECK(result.loss_curve.back() < result.loss_curve.front());
  CHECK(frame_accuracy(model, streams) >= 0.98);
}

TEST_CASE("train_clsnet: same seed, same checkpoint") {
  std::vector<ChunkStream> streams{toy_stream(3, 4, 160, 20, 0.3)};
  ClsTrainConfig config;
  config.seq_len = 16;
  config.batch = 4;
  config.epochs = 2;
  config.seed = 123;
  ClsModel a = ClsModel::random_init(4, 8, 3, 50);
  ClsModel b = ClsModel::random_init(4, 8, 3, 50);
  const ClsTrainResult ra = train_clsnet(a, streams, config);
  const ClsTrainResult rb = train_clsnet(b, streams, config);
  CHECK(models_identical(a, b));
  CHECK(ra.loss_curve == rb.loss_curve);
}

TEST_CASE("train_clsnet: cross-entropy gradient passes the finite-difference check") {
  const ChunkStream stream = toy_stream(3, 3, 40, 30, 0.4);
  ClsModel model = ClsModel::random_init(3, 4, 3, 60);
  const int len = 5;
  const long t0 = 7;

  // forward/backward over one window: mean CE and its analytic gradient
  auto window_loss = [&]() {
    RecurrentState state = RecurrentState::zeros(model.lstm.hidden_dim);
    double ce = 0.0;
    for (int j = 0; j < len; ++j) {
      const auto idx = static_cast<std::size_t>(t0 + j);
      state = lstm_step(model.lstm, state, stream.features[idx]);
      const Vector p = affine_softmax(model.head, state.h);
      ce += -std::log(p(stream.labels[idx]));
    }
    return ce / len;
  };

  std::vector<Vector> inputs, d_out;
  {
    RecurrentState state = RecurrentState::zeros(model.lstm.hidden_dim);
    for (int j = 0; j < len; ++j) {
      const auto idx = static_cast<std::size_t>(t0 + j);
      inputs.push_back(stream.features[idx]);
      state = lstm_step(model.lstm, state, stream.features[idx]);
      Vector d = affine_softmax(model.head, state.h);
      d(stream.labels[idx]) -= 1.0;
      d_out.push_back(d / len);
    }
  }
  GradientBundle analytic = sequence_grads(model.lstm, model.head, inputs, d_out);
  std::vector<ParamSlot> params = model.slots();
  const double err = finite_diff_max_rel_error(window_loss, params, bundle_slots(analytic), 1e-6);
  CHECK(err < 1e-4);
}

TEST_CASE("cls checkpoint: save/load round trip is exact") {
  ClsModel model = ClsModel::random_init(5, 7, 3, 91);
  const auto path = std::filesystem::temp_directory_path() / "startnet_cls_ckpt.json";
  save_cls_checkpoint(path, model);
  const ClsModel loaded = load_cls_checkpoint(path);
  CHECK(loaded.num_classes == model.num_classes);
  CHECK(models_identical(loaded, model));
  std::filesystem::remove(path);
}

TEST_CASE("score streams: save/load round trip is exact") {
  const ChunkStream stream = toy_stream(3, 4, 30, 40, 0.3);
  const ClsModel model = ClsModel::random_init(4, 6, 3, 14);
  const std::vector<Vector> scores = cls_infer_stream(model, stream);
  const auto path = std::filesystem::temp_directory_path() / "startnet_scores.jsonl";
  save_score_stream(path, scores);
  const std::vector<Vector> loaded = load_score_stream(path);
  REQUIRE(loaded.size() == scores.size());
  for (std::size_t t = 0; t < scores.size(); ++t) CHECK(loaded[t] == scores[t]);
  std::filesystem::remove(path);
}
