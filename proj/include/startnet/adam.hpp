#pragma once

#include <vector>

#include "startnet/common.hpp"

namespace startnet {

struct AdamConfig {
  double lr = 5e-4;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with decoupled weight decay. Moment buffers are laid out per slot;
/// the slot list passed to update() must match the construction layout.
class AdamState {
 public:
  explicit AdamState(const std::vector<ParamSlot>& params);

  /// One optimizer step. Throws NumericError naming the offending parameter
  /// if any gradient entry is non-finite.
  void update(const std::vector<ParamSlot>& params, const std::vector<ParamSlot>& grads,
              const AdamConfig& config);

  long step_count() const { return step_; }

 private:
  std::vector<std::vector<double>> m_, v_;
  std::vector<std::ptrdiff_t> sizes_;
  long step_ = 0;
};

double global_norm(const std::vector<ParamSlot>& grads);

/// Scales gradients in place so their global norm is at most max_norm.
void clip_global_norm(const std::vector<ParamSlot>& grads, double max_norm);

}  // namespace startnet
