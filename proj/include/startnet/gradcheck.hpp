#pragma once

#include <functional>
#include <vector>

#include "startnet/common.hpp"

namespace startnet {

/// Central-difference verification of analytic gradients.
///
/// `loss` must be a deterministic function of the parameters behind `params`
/// (it is re-evaluated with each scalar perturbed by +/-eps and the original
/// values restored afterwards). `analytic` mirrors `params` slot for slot.
/// Returns max over all scalars of
///   |analytic - fd| / max(|analytic|, |fd|, 1e-12).
/// Throws NumericError if the loss evaluates non-finite.
double finite_diff_max_rel_error(const std::function<double()>& loss,
                                 const std::vector<ParamSlot>& params,
                                 const std::vector<ParamSlot>& analytic, double eps);

}  // namespace startnet
