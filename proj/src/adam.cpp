#include "startnet/adam.hpp"

#include <cmath>

namespace startnet {

AdamState::AdamState(const std::vector<ParamSlot>& params) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const ParamSlot& s : params) {
    m_.emplace_back(static_cast<std::size_t>(s.size), 0.0);
    v_.emplace_back(static_cast<std::size_t>(s.size), 0.0);
    sizes_.push_back(s.size);
  }
}

void AdamState::update(const std::vector<ParamSlot>& params, const std::vector<ParamSlot>& grads,
                       const AdamConfig& config) {
  if (params.size() != sizes_.size() || grads.size() != sizes_.size()) {
    throw ValidationError("AdamState::update: slot count does not match optimizer state");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamSlot& p = params[k];
    const ParamSlot& g = grads[k];
    if (p.size != sizes_[k] || g.size != sizes_[k]) {
      throw ValidationError("AdamState::update: slot '" + p.name + "' changed size");
    }
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::ptrdiff_t j = 0; j < p.size; ++j) {
      const double grad = g.data[j];
      if (!std::isfinite(grad)) {
        throw NumericError("adam_update: non-finite gradient in parameter '" + g.name + "'");
      }
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * grad;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * grad * grad;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      // decoupled weight decay
      p.data[j] -= config.lr * (m_hat / (std::sqrt(v_hat) + config.eps) +
                                config.weight_decay * p.data[j]);
    }
  }
}

double global_norm(const std::vector<ParamSlot>& grads) {
  double sq = 0.0;
  for (const ParamSlot& g : grads) {
    for (std::ptrdiff_t j = 0; j < g.size; ++j) sq += g.data[j] * g.data[j];
  }
  return std::sqrt(sq);
}

void clip_global_norm(const std::vector<ParamSlot>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (const ParamSlot& g : grads) {
    for (std::ptrdiff_t j = 0; j < g.size; ++j) g.data[j] *= scale;
  }
}

}  // namespace startnet
