#include "startnet/lstm.hpp"

#include <cmath>

namespace startnet {

namespace {

Vector sigmoid(const Vector& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void check_positive_dims(int input_dim, int hidden_dim) {
  if (input_dim < 0 || hidden_dim <= 0) {
    throw ValidationError("LstmParams: dimensions must be positive (input_dim=" +
                          std::to_string(input_dim) + ", hidden_dim=" + std::to_string(hidden_dim) +
                          ")");
  }
}

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden_dim) {
  check_positive_dims(input_dim, hidden_dim);
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  for (Matrix* m : {&p.w_i, &p.w_f, &p.w_g, &p.w_o}) *m = Matrix::Zero(hidden_dim, input_dim);
  for (Matrix* m : {&p.u_i, &p.u_f, &p.u_g, &p.u_o}) *m = Matrix::Zero(hidden_dim, hidden_dim);
  for (Vector* v : {&p.b_i, &p.b_f, &p.b_g, &p.b_o}) *v = Vector::Zero(hidden_dim);
  return p;
}

LstmParams LstmParams::random_init(int input_dim, int hidden_dim, Rng& rng) {
  LstmParams p = zeros(input_dim, hidden_dim);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (Matrix* m : {&p.w_i, &p.w_f, &p.w_g, &p.w_o, &p.u_i, &p.u_f, &p.u_g, &p.u_o}) {
    for (Eigen::Index c = 0; c < m->cols(); ++c)
      for (Eigen::Index r = 0; r < m->rows(); ++r) (*m)(r, c) = rng.uniform(-k, k);
  }
  for (Vector* v : {&p.b_i, &p.b_f, &p.b_g, &p.b_o}) {
    for (Eigen::Index r = 0; r < v->size(); ++r) (*v)(r) = rng.uniform(-k, k);
  }
  p.b_f.setConstant(1.0);
  return p;
}

void LstmParams::validate() const {
  check_positive_dims(input_dim, hidden_dim);
  auto bad = [&](const char* name) {
    throw ValidationError(std::string("LstmParams: tensor ") + name + " has inconsistent shape");
  };
  for (auto [m, name] : {std::pair{&w_i, "w_i"}, {&w_f, "w_f"}, {&w_g, "w_g"}, {&w_o, "w_o"}}) {
    if (m->rows() != hidden_dim || m->cols() != input_dim) bad(name);
  }
  for (auto [m, name] : {std::pair{&u_i, "u_i"}, {&u_f, "u_f"}, {&u_g, "u_g"}, {&u_o, "u_o"}}) {
    if (m->rows() != hidden_dim || m->cols() != hidden_dim) bad(name);
  }
  for (auto [v, name] : {std::pair{&b_i, "b_i"}, {&b_f, "b_f"}, {&b_g, "b_g"}, {&b_o, "b_o"}}) {
    if (v->size() != hidden_dim) bad(name);
  }
}

RecurrentState RecurrentState::zeros(int hidden_dim) {
  return RecurrentState{Vector::Zero(hidden_dim), Vector::Zero(hidden_dim)};
}

AffineHead AffineHead::zeros(int hidden_dim, int out_dim) {
  if (hidden_dim <= 0 || out_dim < 1) {
    throw ValidationError("AffineHead: hidden_dim must be positive, out_dim >= 1");
  }
  return AffineHead{Matrix::Zero(out_dim, hidden_dim), Vector::Zero(out_dim)};
}

AffineHead AffineHead::random_init(int hidden_dim, int out_dim, Rng& rng) {
  AffineHead h = zeros(hidden_dim, out_dim);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (Eigen::Index c = 0; c < h.w.cols(); ++c)
    for (Eigen::Index r = 0; r < h.w.rows(); ++r) h.w(r, c) = rng.uniform(-k, k);
  for (Eigen::Index r = 0; r < h.b.size(); ++r) h.b(r) = rng.uniform(-k, k);
  return h;
}

namespace {

void check_step_shapes(const LstmParams& params, const RecurrentState& state, const Vector& x) {
  if (x.size() != params.input_dim) {
    throw ValidationError("lstm_step: input has length " + std::to_string(x.size()) +
                          ", expected input_dim=" + std::to_string(params.input_dim));
  }
  if (state.h.size() != params.hidden_dim || state.c.size() != params.hidden_dim) {
    throw ValidationError("lstm_step: state dimension (h=" + std::to_string(state.h.size()) +
                          ", c=" + std::to_string(state.c.size()) +
                          ") does not match hidden_dim=" + std::to_string(params.hidden_dim));
  }
}

}  // namespace

RecurrentState lstm_step(const LstmParams& params, const RecurrentState& state, const Vector& x) {
  check_step_shapes(params, state, x);
  const Vector i = sigmoid(params.w_i * x + params.u_i * state.h + params.b_i);
  const Vector f = sigmoid(params.w_f * x + params.u_f * state.h + params.b_f);
  const Vector g = (params.w_g * x + params.u_g * state.h + params.b_g).array().tanh();
  const Vector o = sigmoid(params.w_o * x + params.u_o * state.h + params.b_o);
  RecurrentState next;
  next.c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
  next.h = o.cwiseProduct(next.c.array().tanh().matrix());
  return next;
}

RecurrentState lstm_step_cached(const LstmParams& params, const RecurrentState& state,
                                const Vector& x, LstmStepCache& cache) {
  check_step_shapes(params, state, x);
  cache.x = x;
  cache.h_prev = state.h;
  cache.c_prev = state.c;
  cache.i = sigmoid(params.w_i * x + params.u_i * state.h + params.b_i);
  cache.f = sigmoid(params.w_f * x + params.u_f * state.h + params.b_f);
  cache.g = (params.w_g * x + params.u_g * state.h + params.b_g).array().tanh();
  cache.o = sigmoid(params.w_o * x + params.u_o * state.h + params.b_o);
  cache.c = cache.f.cwiseProduct(state.c) + cache.i.cwiseProduct(cache.g);
  cache.tanh_c = cache.c.array().tanh();
  cache.h = cache.o.cwiseProduct(cache.tanh_c);
  return RecurrentState{cache.h, cache.c};
}

Vector affine_apply(const AffineHead& head, const Vector& h) {
  if (h.size() != head.w.cols()) {
    throw ValidationError("affine_apply: input has length " + std::to_string(h.size()) +
                          ", expected " + std::to_string(head.w.cols()));
  }
  return head.w * h + head.b;
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

Vector affine_softmax(const AffineHead& head, const Vector& h) {
  return softmax(affine_apply(head, h));
}

Vector affine_backward(const AffineHead& head, const Vector& h, const Vector& d_out,
                       HeadGradients& acc) {
  acc.w.noalias() += d_out * h.transpose();
  acc.b += d_out;
  return head.w.transpose() * d_out;
}

LstmGradients LstmGradients::zeros_like(const LstmParams& p) {
  LstmGradients g;
  for (Matrix* m : {&g.w_i, &g.w_f, &g.w_g, &g.w_o}) *m = Matrix::Zero(p.hidden_dim, p.input_dim);
  for (Matrix* m : {&g.u_i, &g.u_f, &g.u_g, &g.u_o}) *m = Matrix::Zero(p.hidden_dim, p.hidden_dim);
  for (Vector* v : {&g.b_i, &g.b_f, &g.b_g, &g.b_o}) *v = Vector::Zero(p.hidden_dim);
  return g;
}

HeadGradients HeadGradients::zeros_like(const AffineHead& h) {
  return HeadGradients{Matrix::Zero(h.w.rows(), h.w.cols()), Vector::Zero(h.b.size())};
}

void lstm_sequence_backward(const LstmParams& params, const std::vector<LstmStepCache>& caches,
                            const std::vector<Vector>& d_h_ext, LstmGradients& acc) {
  if (caches.size() != d_h_ext.size()) {
    throw ValidationError("lstm_sequence_backward: cache length " + std::to_string(caches.size()) +
                          " does not match gradient sequence length " +
                          std::to_string(d_h_ext.size()));
  }
  const int hidden = params.hidden_dim;
  Vector dh_next = Vector::Zero(hidden);
  Vector dc_next = Vector::Zero(hidden);
  for (std::ptrdiff_t t = static_cast<std::ptrdiff_t>(caches.size()) - 1; t >= 0; --t) {
    const LstmStepCache& s = caches[static_cast<std::size_t>(t)];
    const Vector dh = d_h_ext[static_cast<std::size_t>(t)] + dh_next;
    const Vector d_o = dh.cwiseProduct(s.tanh_c);
    const Vector dc =
        dc_next + dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
    const Vector d_f = dc.cwiseProduct(s.c_prev);
    const Vector d_i = dc.cwiseProduct(s.g);
    const Vector d_g = dc.cwiseProduct(s.i);
    // pre-activation gradients
    const Vector a_i = d_i.cwiseProduct(s.i).cwiseProduct((1.0 - s.i.array()).matrix());
    const Vector a_f = d_f.cwiseProduct(s.f).cwiseProduct((1.0 - s.f.array()).matrix());
    const Vector a_g = d_g.cwiseProduct((1.0 - s.g.array().square()).matrix());
    const Vector a_o = d_o.cwiseProduct(s.o).cwiseProduct((1.0 - s.o.array()).matrix());

    acc.w_i.noalias() += a_i * s.x.transpose();
    acc.w_f.noalias() += a_f * s.x.transpose();
    acc.w_g.noalias() += a_g * s.x.transpose();
    acc.w_o.noalias() += a_o * s.x.transpose();
    acc.u_i.noalias() += a_i * s.h_prev.transpose();
    acc.u_f.noalias() += a_f * s.h_prev.transpose();
    acc.u_g.noalias() += a_g * s.h_prev.transpose();
    acc.u_o.noalias() += a_o * s.h_prev.transpose();
    acc.b_i += a_i;
    acc.b_f += a_f;
    acc.b_g += a_g;
    acc.b_o += a_o;

    dh_next = params.u_i.transpose() * a_i + params.u_f.transpose() * a_f +
              params.u_g.transpose() * a_g + params.u_o.transpose() * a_o;
    dc_next = dc.cwiseProduct(s.f);
  }
}

GradientBundle sequence_grads(const LstmParams& params, const AffineHead& head,
                              const std::vector<Vector>& inputs,
                              const std::vector<Vector>& d_outputs) {
  if (inputs.size() != d_outputs.size()) {
    throw ValidationError("sequence_grads: input sequence length " + std::to_string(inputs.size()) +
                          " does not match loss-gradient sequence length " +
                          std::to_string(d_outputs.size()));
  }
  GradientBundle grads{LstmGradients::zeros_like(params), HeadGradients::zeros_like(head)};
  RecurrentState state = RecurrentState::zeros(params.hidden_dim);
  std::vector<LstmStepCache> caches(inputs.size());
  std::vector<Vector> d_h(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    state = lstm_step_cached(params, state, inputs[t], caches[t]);
    d_h[t] = affine_backward(head, caches[t].h, d_outputs[t], grads.head);
  }
  lstm_sequence_backward(params, caches, d_h, grads.lstm);
  return grads;
}

template <typename T>
std::vector<ParamSlot> lstm_slots(T& p, const std::string& prefix) {
  auto m = [&](const char* name, auto& t) {
    return ParamSlot{prefix + "." + name, t.data(), t.size()};
  };
  return {m("w_i", p.w_i), m("u_i", p.u_i), m("b_i", p.b_i), m("w_f", p.w_f),
          m("u_f", p.u_f), m("b_f", p.b_f), m("w_g", p.w_g), m("u_g", p.u_g),
          m("b_g", p.b_g), m("w_o", p.w_o), m("u_o", p.u_o), m("b_o", p.b_o)};
}

template <typename T>
std::vector<ParamSlot> head_slots(T& h, const std::string& prefix) {
  return {ParamSlot{prefix + ".w", h.w.data(), h.w.size()},
          ParamSlot{prefix + ".b", h.b.data(), h.b.size()}};
}

template std::vector<ParamSlot> lstm_slots<LstmParams>(LstmParams&, const std::string&);
template std::vector<ParamSlot> lstm_slots<LstmGradients>(LstmGradients&, const std::string&);
template std::vector<ParamSlot> head_slots<AffineHead>(AffineHead&, const std::string&);
template std::vector<ParamSlot> head_slots<HeadGradients>(HeadGradients&, const std::string&);

std::vector<ParamSlot> bundle_slots(GradientBundle& g) {
  std::vector<ParamSlot> slots = lstm_slots(g.lstm);
  for (ParamSlot& s : head_slots(g.head)) slots.push_back(s);
  return slots;
}

}  // namespace startnet
