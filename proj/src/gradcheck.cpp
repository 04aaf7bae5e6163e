#include "startnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace startnet {

double finite_diff_max_rel_error(const std::function<double()>& loss,
                                 const std::vector<ParamSlot>& params,
                                 const std::vector<ParamSlot>& analytic, double eps) {
  if (!(eps > 0.0)) throw ValidationError("finite_diff_max_rel_error: eps must be > 0");
  if (params.size() != analytic.size()) {
    throw ValidationError("finite_diff_max_rel_error: slot count mismatch");
  }
  double max_rel = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ParamSlot& p = params[k];
    const ParamSlot& a = analytic[k];
    if (p.size != a.size) {
      throw ValidationError("finite_diff_max_rel_error: slot '" + p.name + "' size mismatch");
    }
    for (std::ptrdiff_t j = 0; j < p.size; ++j) {
      const double saved = p.data[j];
      p.data[j] = saved + eps;
      const double lp = loss();
      p.data[j] = saved - eps;
      const double lm = loss();
      p.data[j] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw NumericError("finite_diff_max_rel_error: non-finite loss at parameter '" + p.name +
                           "'");
      }
      const double fd = (lp - lm) / (2.0 * eps);
      const double an = a.data[j];
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-12});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace startnet
