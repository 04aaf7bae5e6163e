#pragma once

#include <string>
#include <vector>

#include "startnet/common.hpp"
#include "startnet/rng.hpp"

namespace startnet {

/// Gate parameters of a single LSTM cell. Weight layout: `w_*` maps the
/// input (hidden x input), `u_*` maps the previous hidden state
/// (hidden x hidden). Gate order everywhere is input, forget, candidate,
/// output.
struct LstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  Matrix w_i, w_f, w_g, w_o;
  Matrix u_i, u_f, u_g, u_o;
  Vector b_i, b_f, b_g, b_o;

  static LstmParams zeros(int input_dim, int hidden_dim);

  /// Uniform [-k, k] with k = 1/sqrt(hidden_dim); forget-gate bias 1.0.
  static LstmParams random_init(int input_dim, int hidden_dim, Rng& rng);

  void validate() const;
};

struct RecurrentState {
  Vector h, c;
  static RecurrentState zeros(int hidden_dim);
};

/// Affine output layer y = w * h + b, with `w` stored out_dim x hidden_dim.
struct AffineHead {
  Matrix w;
  Vector b;

  static AffineHead zeros(int hidden_dim, int out_dim);
  static AffineHead random_init(int hidden_dim, int out_dim, Rng& rng);

  int hidden_dim() const { return static_cast<int>(w.cols()); }
  int out_dim() const { return static_cast<int>(w.rows()); }
};

struct LstmGradients {
  Matrix w_i, w_f, w_g, w_o;
  Matrix u_i, u_f, u_g, u_o;
  Vector b_i, b_f, b_g, b_o;

  static LstmGradients zeros_like(const LstmParams& p);
};

struct HeadGradients {
  Matrix w;
  Vector b;

  static HeadGradients zeros_like(const AffineHead& h);
};

/// Gradient buffers mirroring one LSTM cell plus one affine head.
struct GradientBundle {
  LstmGradients lstm;
  HeadGradients head;
};

/// One forward step of the gated cell. Pure; arguments are not modified.
///   i = sigmoid(w_i x + u_i h + b_i)      f = sigmoid(w_f x + u_f h + b_f)
///   g = tanh   (w_g x + u_g h + b_g)      o = sigmoid(w_o x + u_o h + b_o)
///   c' = f.c + i.g                        h' = o.tanh(c')
RecurrentState lstm_step(const LstmParams& params, const RecurrentState& state, const Vector& x);

/// Per-step activations retained for backprop-through-time.
struct LstmStepCache {
  Vector x, h_prev, c_prev;
  Vector i, f, g, o;
  Vector c, tanh_c, h;
};

RecurrentState lstm_step_cached(const LstmParams& params, const RecurrentState& state,
                                const Vector& x, LstmStepCache& cache);

Vector affine_apply(const AffineHead& head, const Vector& h);
Vector softmax(const Vector& logits);

/// softmax(w h + b); components positive, sums to 1.
Vector affine_softmax(const AffineHead& head, const Vector& h);

/// Head backward: accumulates dW, db and returns the contribution to dh.
Vector affine_backward(const AffineHead& head, const Vector& h, const Vector& d_out,
                       HeadGradients& acc);

/// Backprop-through-time over a cached forward pass. `d_h_ext[t]` is the loss
/// gradient w.r.t. h_t coming from the heads; gradients are accumulated into
/// `acc`. Inputs are treated as data (no dx is produced).
void lstm_sequence_backward(const LstmParams& params, const std::vector<LstmStepCache>& caches,
                            const std::vector<Vector>& d_h_ext, LstmGradients& acc);

/// Exact analytic gradients of sum_t loss_t for a cell + single head, where
/// `d_outputs[t]` is the loss gradient w.r.t. the head output y_t = w h_t + b.
/// The sequence starts from the zero state.
GradientBundle sequence_grads(const LstmParams& params, const AffineHead& head,
                              const std::vector<Vector>& inputs,
                              const std::vector<Vector>& d_outputs);

/// Flat named views over parameters (also used for gradients, which share the
/// member layout). Slot order is fixed and is the checkpoint tensor order.
template <typename T>
std::vector<ParamSlot> lstm_slots(T& p, const std::string& prefix = "lstm");

template <typename T>
std::vector<ParamSlot> head_slots(T& h, const std::string& prefix = "head");

std::vector<ParamSlot> bundle_slots(GradientBundle& g);

}  // namespace startnet
