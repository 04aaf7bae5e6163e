#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace startnet::test {

namespace {

double scalar_sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::vector<double> gate_preactivation(const Matrix& w, const Matrix& u, const Vector& b,
                                       const std::vector<double>& x,
                                       const std::vector<double>& h) {
  std::vector<double> out(static_cast<std::size_t>(b.size()), 0.0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = b(static_cast<Eigen::Index>(r));
    for (std::size_t c = 0; c < x.size(); ++c) {
      acc += w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * x[c];
    }
    for (std::size_t c = 0; c < h.size(); ++c) {
      acc += u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * h[c];
    }
    out[r] = acc;
  }
  return out;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> scalar_lstm_step(
    const LstmParams& params, const std::vector<double>& h_prev,
    const std::vector<double>& c_prev, const std::vector<double>& x) {
  const std::size_t hidden = static_cast<std::size_t>(params.hidden_dim);
  const std::vector<double> pre_i = gate_preactivation(params.w_i, params.u_i, params.b_i, x, h_prev);
  const std::vector<double> pre_f = gate_preactivation(params.w_f, params.u_f, params.b_f, x, h_prev);
  const std::vector<double> pre_g = gate_preactivation(params.w_g, params.u_g, params.b_g, x, h_prev);
  const std::vector<double> pre_o = gate_preactivation(params.w_o, params.u_o, params.b_o, x, h_prev);
  std::vector<double> h(hidden), c(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double i = scalar_sigmoid(pre_i[j]);
    const double f = scalar_sigmoid(pre_f[j]);
    const double g = std::tanh(pre_g[j]);
    const double o = scalar_sigmoid(pre_o[j]);
    c[j] = f * c_prev[j] + i * g;
    h[j] = o * std::tanh(c[j]);
  }
  return {h, c};
}

OracleMatch oracle_match(std::vector<StartPrediction> preds,
                         const std::vector<GroundTruthStart>& gts, long offset_chunks,
                         bool strict) {
  // selection sort keeps the comparison rules explicit
  std::vector<StartPrediction> ranked;
  while (!preds.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < preds.size(); ++i) {
      const StartPrediction& a = preds[i];
      const StartPrediction& b = preds[best];
      const bool better = a.confidence > b.confidence ||
                          (a.confidence == b.confidence && a.t < b.t) ||
                          (a.confidence == b.confidence && a.t == b.t && a.stream < b.stream);
      if (better) best = i;
    }
    ranked.push_back(preds[best]);
    preds.erase(preds.begin() + static_cast<std::ptrdiff_t>(best));
  }

  std::vector<bool> used(gts.size(), false);
  std::vector<bool> tp(ranked.size(), false);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    long chosen = -1;
    long chosen_dist = 0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (used[j]) continue;
      if (gts[j].stream != ranked[i].stream) continue;
      const long dist = std::labs(gts[j].t - ranked[i].t);
      const bool ok = strict ? dist < offset_chunks : dist <= offset_chunks;
      if (!ok) continue;
      if (chosen < 0 || dist < chosen_dist ||
          (dist == chosen_dist && gts[j].t < gts[static_cast<std::size_t>(chosen)].t)) {
        chosen = static_cast<long>(j);
        chosen_dist = dist;
      }
    }
    if (chosen >= 0) {
      used[static_cast<std::size_t>(chosen)] = true;
      tp[i] = true;
    }
  }
  return {ranked, tp};
}

double oracle_p_ap(const std::vector<bool>& ranked_tp, long num_gt, double depth) {
  const long n_depth = static_cast<long>(
      std::ceil(depth * static_cast<double>(num_gt) - 1e-9));
  double precision_sum = 0.0;
  long tp_seen = 0;
  for (std::size_t rank = 0; rank < ranked_tp.size(); ++rank) {
    if (!ranked_tp[rank]) continue;
    ++tp_seen;
    if (tp_seen > n_depth) break;
    precision_sum += static_cast<double>(tp_seen) / static_cast<double>(rank + 1);
  }
  return precision_sum / static_cast<double>(n_depth);
}

double oracle_pmap(const std::vector<StartPrediction>& preds,
                   const std::vector<GroundTruthStart>& gts, double offset_seconds,
                   double chunks_per_second, double depth, bool strict) {
  std::set<int> classes;
  for (const GroundTruthStart& gt : gts) classes.insert(gt.class_id);
  const long offset_chunks =
      static_cast<long>(std::floor(offset_seconds * chunks_per_second));
  double sum = 0.0;
  for (int cls : classes) {
    std::vector<StartPrediction> cls_preds;
    std::vector<GroundTruthStart> cls_gts;
    for (const StartPrediction& p : preds) {
      if (p.class_id == cls) cls_preds.push_back(p);
    }
    for (const GroundTruthStart& g : gts) {
      if (g.class_id == cls) cls_gts.push_back(g);
    }
    const OracleMatch m = oracle_match(cls_preds, cls_gts, offset_chunks, strict);
    sum += oracle_p_ap(m.tp, static_cast<long>(cls_gts.size()), depth);
  }
  return sum / static_cast<double>(classes.size());
}

}  // namespace startnet::test
