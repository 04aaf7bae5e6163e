#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "startnet/adam.hpp"
#include "startnet/lstm.hpp"
#include "startnet/stream.hpp"

namespace startnet {

/// Class-agnostic start localizer. The cell consumes [p_t, H_{t-1}] (class
/// scores concatenated with the last n start probabilities); the policy head
/// emits a (start, non-start) distribution, the baseline head a value
/// estimate. Start probability is component 0.
struct LocModel {
  LstmParams lstm;
  AffineHead policy;
  AffineHead baseline;
  int num_classes = 0;
  int history_len = 0;

  static LocModel random_init(int num_classes, int history_len, int hidden_dim,
                              std::uint64_t seed);

  std::vector<ParamSlot> slots();
  std::vector<ParamSlot> policy_slots();    // cell + policy head
  std::vector<ParamSlot> baseline_slots();  // baseline head only
};

/// Rolling window of the last n start probabilities, zero-initialized,
/// most-recent-last. n = 0 disables history conditioning.
class DecisionHistory {
 public:
  explicit DecisionHistory(int n);

  void push(double s_start);
  const Vector& window() const { return window_; }
  int size() const { return static_cast<int>(window_.size()); }

 private:
  Vector window_;
};

struct LocStep {
  double s_start = 0;   // policy start probability
  double value = 0;     // baseline estimate
  Eigen::Vector2d s;    // full (start, non-start) distribution
};

/// One online step: feeds [p_t, H_{t-1}] through the cell, emits the policy
/// distribution and baseline value, appends s_start to the history.
LocStep loc_step(const LocModel& model, RecurrentState& state, const Vector& scores,
                 DecisionHistory& history);

/// d = clamp(s + sigma * z, 0, 1), z standard normal.
double sample_decision(double s_start, double sigma, Rng& rng);

/// r = alpha * g * d - (1 - g) * d.
double immediate_reward(int g, double d, double alpha);

/// R_t = sum_{i>=0} gamma^i r_{t+i}, zero beyond the sequence end.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma);

/// One step of a recorded rollout. `history` is the window content fed as
/// input at this step (H_{t-1}), recorded so gradient passes can replay the
/// sequence against fixed inputs.
struct TrajectoryStep {
  Vector scores;
  Vector history;
  double s_start = 0;
  double decision = 0;
  int start_label = 0;
  double reward = 0;
  double ret = 0;
  double value = 0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double total_reward() const;
};

/// Stochastic rollout for policy-gradient training: decisions sampled from
/// N(s_t, sigma^2) and clamped; the history records s_t itself.
Trajectory rollout(const LocModel& model, const std::vector<Vector>& scores,
                   const std::vector<std::uint8_t>& start_flags, long t0, long t_len, double alpha,
                   double sigma, double gamma, Rng& rng);

/// Deterministic rollout (d = s); rewards/returns still filled in, so the
/// same record feeds the cross-entropy variant and greedy evaluation.
Trajectory rollout_greedy(const LocModel& model, const std::vector<Vector>& scores,
                          const std::vector<std::uint8_t>& start_flags, long t0, long t_len,
                          double alpha, double gamma);

struct LocGradients {
  LstmGradients lstm;
  HeadGradients policy;
  HeadGradients baseline;

  static LocGradients zeros_like(const LocModel& m);
  std::vector<ParamSlot> slots();
  std::vector<ParamSlot> policy_slots();
  std::vector<ParamSlot> baseline_slots();
};

struct LocBatchStats {
  double mean_return = 0;        // mean of R_t over all steps
  double baseline_loss = 0;      // mean of 0.5 (R_t - V_t)^2
  double mean_total_reward = 0;  // mean per-sequence summed reward
};

/// Frozen-advantage policy surrogate
///   sum_t (R_t - V_t) (d_t - s_t)^2 / (2 sigma^2),
/// which equals -sum_t (R_t - V_t) log pi(d_t | s_t) up to an additive
/// constant independent of the parameters. Advantages and inputs come from
/// the recorded trajectories; the value is averaged over the batch. This is
/// the scalar whose exact gradient the training step follows (policy side).
double loc_surrogate_loss(const LocModel& model, const std::vector<Trajectory>& batch,
                          double sigma, double lambda_policy = 1.0);

/// Baseline l2 loss 0.5 (R_t - V_t)^2 as a function of the baseline head
/// alone (cell activations replayed from the recorded inputs).
double loc_baseline_loss(const LocModel& model, const std::vector<Trajectory>& batch,
                         double lambda_baseline = 1.0);

/// Analytic gradients of lambda_policy * surrogate + lambda_baseline * l2.
/// The baseline loss touches only the baseline head; advantages are
/// constants taken from the trajectories.
LocGradients loc_policy_gradients(const LocModel& model, const std::vector<Trajectory>& batch,
                                  double sigma, double lambda_policy, double lambda_baseline,
                                  LocBatchStats* stats = nullptr);

/// Gradient step over a batch of trajectories: accumulate, clip, Adam.
LocBatchStats policy_gradient_step(LocModel& model, const std::vector<Trajectory>& batch,
                                   AdamState& adam, const AdamConfig& adam_config, double sigma,
                                   double clip_norm, double lambda_policy = 1.0,
                                   double lambda_baseline = 1.0);

/// Per-step weighted cross-entropy on the start probability, computed in
/// logit space: beta * g * softplus(-delta) + (1 - g) * softplus(delta) with
/// delta the start-vs-nonstart logit difference. Batch mean over sequences.
double loc_ce_loss(const LocModel& model, const std::vector<Trajectory>& batch, double beta);
LocGradients loc_ce_gradients(const LocModel& model, const std::vector<Trajectory>& batch,
                              double beta, double* mean_loss = nullptr);

struct LocTrainConfig {
  int t_loc = 16;
  int batch = 32;
  int iterations = 1200;
  double gamma = 0.9;
  double sigma = 0.1;
  double alpha = -1;  // < 0: computed from the sampled distribution
  bool balanced = false;
  double lr = 5e-4;
  double weight_decay = 5e-4;
  double clip_norm = 5.0;
  double lambda_policy = 1.0;
  double lambda_baseline = 1.0;
  std::uint64_t seed = 0;
};

struct LocTrainResult {
  std::vector<LocBatchStats> curve;  // one entry per iteration
  double alpha_used = 0;
};

/// Policy-gradient training: sample windows, roll out, compute returns,
/// update. Deterministic given the seed.
LocTrainResult train_locnet(LocModel& model, const std::vector<std::vector<Vector>>& score_streams,
                            const std::vector<std::vector<std::uint8_t>>& flag_streams,
                            const LocTrainConfig& config);

/// Cross-entropy ablation: same sampling, greedy rollouts, per-frame
/// weighted cross-entropy instead of policy gradient. beta follows the same
/// imbalance-ratio convention as alpha. Curve entries carry the mean loss in
/// `baseline_loss` and zero reward fields.
LocTrainResult train_locnet_ce(LocModel& model,
                               const std::vector<std::vector<Vector>>& score_streams,
                               const std::vector<std::vector<std::uint8_t>>& flag_streams,
                               const LocTrainConfig& config);

/// Deterministic greedy inference: no sampling, s_t enters the history.
std::vector<double> loc_infer_stream(const LocModel& model, const std::vector<Vector>& scores);

/// Mean greedy per-sequence total reward over a deterministic probe sample
/// of windows.
double mean_greedy_reward(const LocModel& model, const std::vector<std::vector<Vector>>& scores,
                          const std::vector<std::vector<std::uint8_t>>& flags, long t_loc,
                          double alpha, int count, std::uint64_t seed);

void save_loc_checkpoint(const std::filesystem::path& path, const LocModel& model,
                         const std::string& config_echo = {});
LocModel load_loc_checkpoint(const std::filesystem::path& path);

/// Start-probability streams as .jsonl ({"t", "s"}) with a header record.
void save_start_prob_stream(const std::filesystem::path& path, const std::vector<double>& probs,
                            const std::string& config_echo = {});
std::vector<double> load_start_prob_stream(const std::filesystem::path& path);

}  // namespace startnet
