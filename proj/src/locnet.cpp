#include "startnet/locnet.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "jsonl_util.hpp"
#include "startnet/checkpoint.hpp"

namespace startnet {

using nlohmann::json;

namespace {
constexpr std::uint64_t kInitStream = 0x10C;
constexpr std::uint64_t kSampleStream = 0x20C;
constexpr std::uint64_t kRolloutStream = 0x30C;
constexpr std::uint64_t kProbeStream = 0x40C;

double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

LocModel LocModel::random_init(int num_classes, int history_len, int hidden_dim,
                               std::uint64_t seed) {
  if (num_classes < 2) throw ValidationError("LocModel: num_classes must be >= 2");
  if (history_len < 0) throw ValidationError("LocModel: history_len must be >= 0");
  Rng rng = derive_rng(seed, kInitStream);
  LocModel model;
  model.lstm = LstmParams::random_init(num_classes + history_len, hidden_dim, rng);
  model.policy = AffineHead::random_init(hidden_dim, 2, rng);
  model.baseline = AffineHead::random_init(hidden_dim, 1, rng);
  model.num_classes = num_classes;
  model.history_len = history_len;
  return model;
}

std::vector<ParamSlot> LocModel::slots() {
  std::vector<ParamSlot> s = lstm_slots(lstm);
  for (ParamSlot& p : head_slots(policy, "policy")) s.push_back(p);
  for (ParamSlot& p : head_slots(baseline, "baseline")) s.push_back(p);
  return s;
}

std::vector<ParamSlot> LocModel::policy_slots() {
  std::vector<ParamSlot> s = lstm_slots(lstm);
  for (ParamSlot& p : head_slots(policy, "policy")) s.push_back(p);
  return s;
}

std::vector<ParamSlot> LocModel::baseline_slots() { return head_slots(baseline, "baseline"); }

DecisionHistory::DecisionHistory(int n) {
  if (n < 0) throw ValidationError("DecisionHistory: n must be >= 0");
  window_ = Vector::Zero(n);
}

void DecisionHistory::push(double s_start) {
  const int n = static_cast<int>(window_.size());
  if (n == 0) return;
  for (int j = 0; j + 1 < n; ++j) window_(j) = window_(j + 1);
  window_(n - 1) = s_start;
}

namespace {

Vector loc_input(const LocModel& model, const Vector& scores, const Vector& history) {
  if (scores.size() != model.num_classes) {
    throw ValidationError("loc_step: score vector has length " + std::to_string(scores.size()) +
                          ", expected K=" + std::to_string(model.num_classes));
  }
  if (history.size() != model.history_len) {
    throw ValidationError("loc_step: history has length " + std::to_string(history.size()) +
                          ", expected n=" + std::to_string(model.history_len));
  }
  Vector input(scores.size() + history.size());
  input << scores, history;
  return input;
}

}  // namespace

LocStep loc_step(const LocModel& model, RecurrentState& state, const Vector& scores,
                 DecisionHistory& history) {
  const Vector input = loc_input(model, scores, history.window());
  state = lstm_step(model.lstm, state, input);
  LocStep out;
  const Vector s = affine_softmax(model.policy, state.h);
  out.s = Eigen::Vector2d(s(0), s(1));
  out.s_start = s(0);
  out.value = affine_apply(model.baseline, state.h)(0);
  history.push(out.s_start);
  return out;
}

double sample_decision(double s_start, double sigma, Rng& rng) {
  const double d = s_start + sigma * rng.normal();
  return std::clamp(d, 0.0, 1.0);
}

double immediate_reward(int g, double d, double alpha) {
  return alpha * g * d - (1 - g) * d;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> returns(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::ptrdiff_t t = static_cast<std::ptrdiff_t>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[static_cast<std::size_t>(t)] + gamma * acc;
    returns[static_cast<std::size_t>(t)] = acc;
  }
  return returns;
}

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const TrajectoryStep& s : steps) sum += s.reward;
  return sum;
}

namespace {

Trajectory rollout_impl(const LocModel& model, const std::vector<Vector>& scores,
                        const std::vector<std::uint8_t>& start_flags, long t0, long t_len,
                        double alpha, double sigma, double gamma, Rng* rng) {
  if (t0 < 0 || t0 + t_len > static_cast<long>(scores.size())) {
    throw ValidationError("rollout: window [" + std::to_string(t0) + ", " +
                          std::to_string(t0 + t_len) + ") out of stream bounds");
  }
  if (scores.size() != start_flags.size()) {
    throw ValidationError("rollout: score and flag sequences have different lengths");
  }
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(t_len));
  RecurrentState state = RecurrentState::zeros(model.lstm.hidden_dim);
  DecisionHistory history(model.history_len);
  for (long j = 0; j < t_len; ++j) {
    const auto idx = static_cast<std::size_t>(t0 + j);
    TrajectoryStep step;
    step.scores = scores[idx];
    step.history = history.window();
    const LocStep out = loc_step(model, state, step.scores, history);
    step.s_start = out.s_start;
    step.value = out.value;
    step.decision = rng != nullptr ? sample_decision(out.s_start, sigma, *rng) : out.s_start;
    step.start_label = start_flags[idx];
    step.reward = immediate_reward(step.start_label, step.decision, alpha);
    traj.steps.push_back(std::move(step));
  }
  std::vector<double> rewards;
  rewards.reserve(traj.steps.size());
  for (const TrajectoryStep& s : traj.steps) rewards.push_back(s.reward);
  const std::vector<double> returns = discounted_returns(rewards, gamma);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) traj.steps[t].ret = returns[t];
  return traj;
}

}  // namespace

Trajectory rollout(const LocModel& model, const std::vector<Vector>& scores,
                   const std::vector<std::uint8_t>& start_flags, long t0, long t_len, double alpha,
                   double sigma, double gamma, Rng& rng) {
  return rollout_impl(model, scores, start_flags, t0, t_len, alpha, sigma, gamma, &rng);
}

Trajectory rollout_greedy(const LocModel& model, const std::vector<Vector>& scores,
                          const std::vector<std::uint8_t>& start_flags, long t0, long t_len,
                          double alpha, double gamma) {
  return rollout_impl(model, scores, start_flags, t0, t_len, alpha, 0.0, gamma, nullptr);
}

LocGradients LocGradients::zeros_like(const LocModel& m) {
  return LocGradients{LstmGradients::zeros_like(m.lstm), HeadGradients::zeros_like(m.policy),
                      HeadGradients::zeros_like(m.baseline)};
}

std::vector<ParamSlot> LocGradients::slots() {
  std::vector<ParamSlot> s = lstm_slots(lstm);
  for (ParamSlot& p : head_slots(policy, "policy")) s.push_back(p);
  for (ParamSlot& p : head_slots(baseline, "baseline")) s.push_back(p);
  return s;
}

std::vector<ParamSlot> LocGradients::policy_slots() {
  std::vector<ParamSlot> s = lstm_slots(lstm);
  for (ParamSlot& p : head_slots(policy, "policy")) s.push_back(p);
  return s;
}

std::vector<ParamSlot> LocGradients::baseline_slots() { return head_slots(baseline, "baseline"); }

namespace {

/// Replays one trajectory against its recorded inputs, returning caches and
/// the recomputed policy distribution / value per step.
struct Replay {
  std::vector<LstmStepCache> caches;
  std::vector<Vector> policy_probs;  // 2-dim each
  std::vector<double> values;
};

Replay replay_trajectory(const LocModel& model, const Trajectory& traj) {
  Replay rep;
  rep.caches.resize(traj.steps.size());
  rep.policy_probs.reserve(traj.steps.size());
  rep.values.reserve(traj.steps.size());
  RecurrentState state = RecurrentState::zeros(model.lstm.hidden_dim);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const TrajectoryStep& step = traj.steps[t];
    const Vector input = loc_input(model, step.scores, step.history);
    state = lstm_step_cached(model.lstm, state, input, rep.caches[t]);
    rep.policy_probs.push_back(affine_softmax(model.policy, state.h));
    rep.values.push_back(affine_apply(model.baseline, state.h)(0));
  }
  return rep;
}

}  // namespace

double loc_surrogate_loss(const LocModel& model, const std::vector<Trajectory>& batch,
                          double sigma, double lambda_policy) {
  if (batch.empty()) throw ValidationError("loc_surrogate_loss: empty batch");
  const double inv_2sigma2 = 1.0 / (2.0 * sigma * sigma);
  double loss = 0.0;
  for (const Trajectory& traj : batch) {
    const Replay rep = replay_trajectory(model, traj);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const TrajectoryStep& step = traj.steps[t];
      const double advantage = step.ret - step.value;  // frozen
      const double residual = step.decision - rep.policy_probs[t](0);
      loss += advantage * residual * residual * inv_2sigma2;
    }
  }
  return lambda_policy * loss / static_cast<double>(batch.size());
}

double loc_baseline_loss(const LocModel& model, const std::vector<Trajectory>& batch,
                         double lambda_baseline) {
  if (batch.empty()) throw ValidationError("loc_baseline_loss: empty batch");
  double loss = 0.0;
  for (const Trajectory& traj : batch) {
    const Replay rep = replay_trajectory(model, traj);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const double err = traj.steps[t].ret - rep.values[t];
      loss += 0.5 * err * err;
    }
  }
  return lambda_baseline * loss / static_cast<double>(batch.size());
}

LocGradients loc_policy_gradients(const LocModel& model, const std::vector<Trajectory>& batch,
                                  double sigma, double lambda_policy, double lambda_baseline,
                                  LocBatchStats* stats) {
  if (batch.empty()) throw ValidationError("loc_policy_gradients: empty batch");
  if (!(sigma > 0)) throw ValidationError("loc_policy_gradients: sigma must be > 0");
  LocGradients grads = LocGradients::zeros_like(model);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  double sum_return = 0, sum_baseline_loss = 0, sum_total_reward = 0;
  long steps_total = 0;

  for (const Trajectory& traj : batch) {
    const Replay rep = replay_trajectory(model, traj);
    std::vector<Vector> d_h(traj.steps.size());
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const TrajectoryStep& step = traj.steps[t];
      const Vector& probs = rep.policy_probs[t];
      const double s_start = probs(0);
      const double advantage = step.ret - step.value;  // constant w.r.t. parameters

      // policy side: d/ds of -A log pi(d | s) = -A (d - s) / sigma^2
      const double d_s = -lambda_policy * advantage * (step.decision - s_start) * inv_sigma2 *
                         inv_batch;
      // through the 2-way softmax: ds0/dz = s0 s1 [1, -1]
      Eigen::Vector2d d_logits;
      d_logits(0) = d_s * probs(0) * probs(1);
      d_logits(1) = -d_logits(0);
      d_h[t] = affine_backward(model.policy, rep.caches[t].h, d_logits, grads.policy);

      // baseline side: head-only least squares on detached activations
      const double d_v = lambda_baseline * (rep.values[t] - step.ret) * inv_batch;
      grads.baseline.w.row(0) += d_v * rep.caches[t].h.transpose();
      grads.baseline.b(0) += d_v;

      sum_return += step.ret;
      const double err = step.ret - rep.values[t];
      sum_baseline_loss += 0.5 * err * err;
      ++steps_total;
    }
    lstm_sequence_backward(model.lstm, rep.caches, d_h, grads.lstm);
    sum_total_reward += traj.total_reward();
  }
  if (stats != nullptr) {
    stats->mean_return = sum_return / static_cast<double>(steps_total);
    stats->baseline_loss = sum_baseline_loss / static_cast<double>(steps_total);
    stats->mean_total_reward = sum_total_reward * inv_batch;
  }
  return grads;
}

LocBatchStats policy_gradient_step(LocModel& model, const std::vector<Trajectory>& batch,
                                   AdamState& adam, const AdamConfig& adam_config, double sigma,
                                   double clip_norm, double lambda_policy,
                                   double lambda_baseline) {
  LocBatchStats stats;
  LocGradients grads =
      loc_policy_gradients(model, batch, sigma, lambda_policy, lambda_baseline, &stats);
  std::vector<ParamSlot> grad_view = grads.slots();
  const double norm = global_norm(grad_view);
  if (!std::isfinite(norm)) {
    throw NumericError("policy_gradient_step: non-finite policy surrogate gradient");
  }
  clip_global_norm(grad_view, clip_norm);
  std::vector<ParamSlot> params = model.slots();
  adam.update(params, grad_view, adam_config);
  return stats;
}

double loc_ce_loss(const LocModel& model, const std::vector<Trajectory>& batch, double beta) {
  if (batch.empty()) throw ValidationError("loc_ce_loss: empty batch");
  double loss = 0.0;
  for (const Trajectory& traj : batch) {
    RecurrentState state = RecurrentState::zeros(model.lstm.hidden_dim);
    for (const TrajectoryStep& step : traj.steps) {
      const Vector input = loc_input(model, step.scores, step.history);
      state = lstm_step(model.lstm, state, input);
      const Vector logits = affine_apply(model.policy, state.h);
      const double delta = logits(0) - logits(1);  // start-vs-nonstart logit
      loss += step.start_label ? beta * softplus(-delta) : softplus(delta);
    }
  }
  return loss / static_cast<double>(batch.size());
}

LocGradients loc_ce_gradients(const LocModel& model, const std::vector<Trajectory>& batch,
                              double beta, double* mean_loss) {
  if (batch.empty()) throw ValidationError("loc_ce_gradients: empty batch");
  LocGradients grads = LocGradients::zeros_like(model);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Trajectory& traj : batch) {
    const Replay rep = replay_trajectory(model, traj);
    std::vector<Vector> d_h(traj.steps.size());
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const TrajectoryStep& step = traj.steps[t];
      const Vector logits = affine_apply(model.policy, rep.caches[t].h);
      const double delta = logits(0) - logits(1);
      const double s = logistic(delta);
      loss += step.start_label ? beta * softplus(-delta) : softplus(delta);
      const double d_delta =
          (step.start_label ? -beta * (1.0 - s) : s) * inv_batch;
      Eigen::Vector2d d_logits(d_delta, -d_delta);
      d_h[t] = affine_backward(model.policy, rep.caches[t].h, d_logits, grads.policy);
    }
    lstm_sequence_backward(model.lstm, rep.caches, d_h, grads.lstm);
  }
  if (mean_loss != nullptr) *mean_loss = loss * inv_batch;
  return grads;
}

namespace {

LocTrainResult train_loc_impl(LocModel& model, const std::vector<std::vector<Vector>>& scores,
                              const std::vector<std::vector<std::uint8_t>>& flags,
                              const LocTrainConfig& config, bool cross_entropy) {
  if (scores.size() != flags.size() || scores.empty()) {
    throw ValidationError("train_locnet: need matching, non-empty score and flag corpora");
  }
  for (std::size_t s = 0; s < scores.size(); ++s) {
    if (scores[s].size() != flags[s].size()) {
      throw ValidationError("train_locnet: stream " + std::to_string(s) +
                            " has mismatched score/flag lengths");
    }
  }
  if (config.t_loc < 1 || config.batch < 1 || config.iterations < 0) {
    throw ValidationError("train_locnet: t_loc and batch must be positive, iterations >= 0");
  }
  const SequenceSampler sampler(flags, config.t_loc, config.balanced);
  const double alpha = config.alpha >= 0 ? config.alpha : sampler.sampled_imbalance_ratio();

  LocTrainResult result;
  result.alpha_used = alpha;
  if (config.iterations == 0) return result;

  std::vector<ParamSlot> params = cross_entropy ? model.policy_slots() : model.slots();
  AdamState adam(params);
  const AdamConfig adam_config{config.lr, config.weight_decay};

  for (int iter = 0; iter < config.iterations; ++iter) {
    Rng sample_rng = derive_rng(config.seed, kSampleStream, static_cast<std::uint64_t>(iter));
    const std::vector<WindowRef> windows = sampler.sample_batch(config.batch, sample_rng);
    std::vector<Trajectory> batch;
    batch.reserve(windows.size());
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const WindowRef& w = windows[k];
      const auto stream = static_cast<std::size_t>(w.stream);
      if (cross_entropy) {
        batch.push_back(rollout_greedy(model, scores[stream], flags[stream], w.t0, config.t_loc,
                                       alpha, config.gamma));
      } else {
        // per-sequence rng stream so rollouts are order-independent
        Rng rollout_rng = derive_rng(config.seed, kRolloutStream,
                                     static_cast<std::uint64_t>(iter) * config.batch + k);
        batch.push_back(rollout(model, scores[stream], flags[stream], w.t0, config.t_loc, alpha,
                                config.sigma, config.gamma, rollout_rng));
      }
    }
    LocBatchStats stats;
    if (cross_entropy) {
      double mean_loss = 0;
      LocGradients grads = loc_ce_gradients(model, batch, alpha, &mean_loss);
      if (!std::isfinite(mean_loss)) {
        throw NumericError("train_locnet_ce: non-finite loss at iteration " +
                           std::to_string(iter));
      }
      std::vector<ParamSlot> grad_view = grads.policy_slots();
      clip_global_norm(grad_view, config.clip_norm);
      adam.update(params, grad_view, adam_config);
      stats.baseline_loss = mean_loss;
    } else {
      stats = policy_gradient_step(model, batch, adam, adam_config, config.sigma,
                                   config.clip_norm, config.lambda_policy,
                                   config.lambda_baseline);
    }
    result.curve.push_back(stats);
  }
  return result;
}

}  // namespace

LocTrainResult train_locnet(LocModel& model, const std::vector<std::vector<Vector>>& score_streams,
                            const std::vector<std::vector<std::uint8_t>>& flag_streams,
                            const LocTrainConfig& config) {
  return train_loc_impl(model, score_streams, flag_streams, config, false);
}

LocTrainResult train_locnet_ce(LocModel& model,
                               const std::vector<std::vector<Vector>>& score_streams,
                               const std::vector<std::vector<std::uint8_t>>& flag_streams,
                               const LocTrainConfig& config) {
  return train_loc_impl(model, score_streams, flag_streams, config, true);
}

std::vector<double> loc_infer_stream(const LocModel& model, const std::vector<Vector>& scores) {
  RecurrentState state = RecurrentState::zeros(model.lstm.hidden_dim);
  DecisionHistory history(model.history_len);
  std::vector<double> out;
  out.reserve(scores.size());
  for (const Vector& p : scores) {
    out.push_back(loc_step(model, state, p, history).s_start);
  }
  return out;
}

double mean_greedy_reward(const LocModel& model, const std::vector<std::vector<Vector>>& scores,
                          const std::vector<std::vector<std::uint8_t>>& flags, long t_loc,
                          double alpha, int count, std::uint64_t seed) {
  const SequenceSampler sampler(flags, t_loc, false);
  Rng rng = derive_rng(seed, kProbeStream);
  const std::vector<WindowRef> windows = sampler.sample_batch(count, rng);
  double total = 0.0;
  for (const WindowRef& w : windows) {
    const auto s = static_cast<std::size_t>(w.stream);
    total += rollout_greedy(model, scores[s], flags[s], w.t0, t_loc, alpha, 0.0).total_reward();
  }
  return total / static_cast<double>(windows.size());
}

void save_loc_checkpoint(const std::filesystem::path& path, const LocModel& model,
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
  tensors.push_back(to_named("policy.w", model.policy.w));
  tensors.push_back(to_named("policy.b", model.policy.b));
  tensors.push_back(to_named("baseline.w", model.baseline.w));
  tensors.push_back(to_named("baseline.b", model.baseline.b));
  write_checkpoint(path, "locnet",
                   {{"num_classes", model.num_classes},
                    {"history_len", model.history_len},
                    {"hidden_dim", model.lstm.hidden_dim}},
                   tensors, config_echo);
}

LocModel load_loc_checkpoint(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != "locnet") {
    throw ValidationError("load_loc_checkpoint: '" + path.string() + "' holds kind '" + ckpt.kind +
                          "', expected 'locnet'");
  }
  const int num_classes = static_cast<int>(ckpt.meta_at("num_classes"));
  const int history_len = static_cast<int>(ckpt.meta_at("history_len"));
  const int hidden_dim = static_cast<int>(ckpt.meta_at("hidden_dim"));
  LocModel model;
  model.num_classes = num_classes;
  model.history_len = history_len;
  model.lstm = LstmParams::zeros(num_classes + history_len, hidden_dim);
  model.lstm.w_i = matrix_from(ckpt.tensor_at("lstm.w_i"));
  model.lstm.u_i = matrix_from(ckpt.tensor_at("lstm.u_i"));
  model.lstm.b_i = vector_from(ckpt.tensor_at("lstm.b_i"));
  model.lstm.w_f = matrix_from(ckpt.tensor_at("lstm.w_f"));
  model.lstm.u_f = matrix_from(ckpt.tensor_at("lstm.u_f"));
  model.lstm.b_f = vector_from(ckpt.tensor_at("lstm.b_f"));
  model.lstm.w_g = matrix_from(ckpt.tensor_at("lstm.w_g"));
  model.lstm.u_g = matrix_from(ckpt.tensor_at("lstm.u_g"));
  model.lstm.b_g = vector_from(ckpt.tensor_at("lstm.b_g"));
  model.lstm.w_o = matrix_from(ckpt.tensor_at("lstm.w_o"));
  model.lstm.u_o = matrix_from(ckpt.tensor_at("lstm.u_o"));
  model.lstm.b_o = vector_from(ckpt.tensor_at("lstm.b_o"));
  model.lstm.validate();
  model.policy.w = matrix_from(ckpt.tensor_at("policy.w"));
  model.policy.b = vector_from(ckpt.tensor_at("policy.b"));
  model.baseline.w = matrix_from(ckpt.tensor_at("baseline.w"));
  model.baseline.b = vector_from(ckpt.tensor_at("baseline.b"));
  if (model.policy.w.rows() != 2 || model.policy.w.cols() != hidden_dim ||
      model.baseline.w.rows() != 1 || model.baseline.w.cols() != hidden_dim) {
    throw ValidationError("load_loc_checkpoint: head tensors have inconsistent shapes");
  }
  return model;
}

void save_start_prob_stream(const std::filesystem::path& path, const std::vector<double>& probs,
                            const std::string& config_echo) {
  std::ofstream out = detail::open_output(path);
  json header{{"version", kFormatVersion}, {"kind", "start_prob_stream"}, {"length", probs.size()}};
  if (!config_echo.empty()) header["config"] = json::parse(config_echo);
  out << header.dump() << "\n";
  for (std::size_t t = 0; t < probs.size(); ++t) {
    out << json{{"t", t}, {"s", probs[t]}}.dump() << "\n";
  }
}

std::vector<double> load_start_prob_stream(const std::filesystem::path& path) {
  std::vector<double> probs;
  bool saw_header = false;
  long expected_length = -1;
  detail::for_each_jsonl(path, [&](long line, const json& record) {
    if (!saw_header) {
      if (record.value("kind", "") != "start_prob_stream") {
        throw ValidationError("'" + path.string() + "' line " + std::to_string(line) +
                              ": expected a start_prob_stream header record");
      }
      expected_length = record.at("length").get<long>();
      saw_header = true;
      return;
    }
    probs.push_back(record.at("s").get<double>());
  });
  if (!saw_header) throw ValidationError("'" + path.string() + "': empty start-probability file");
  if (static_cast<long>(probs.size()) != expected_length) {
    throw ValidationError("'" + path.string() + "': truncated start-probability stream");
  }
  return probs;
}

}  // namespace startnet
