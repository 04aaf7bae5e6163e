#include <cmath>
#include <cstring>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "startnet/adam.hpp"
#include "startnet/gradcheck.hpp"
#include "startnet/lstm.hpp"

using namespace startnet;

namespace {

Vector random_vector(int n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (int j = 0; j < n; ++j) v(j) = scale * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("lstm_step: zero everything stays zero") {
  const LstmParams p = LstmParams::zeros(3, 4);
  const RecurrentState s = RecurrentState::zeros(4);
  const RecurrentState next = lstm_step(p, s, Vector::Zero(3));
  CHECK(next.h.isZero(0.0));
  CHECK(next.c.isZero(0.0));
}

TEST_CASE("lstm_step: saturated forget gate passes the cell through") {
  LstmParams p = LstmParams::zeros(1, 1);
  p.b_f(0) = 100.0;  // forget ~ 1
  RecurrentState s = RecurrentState::zeros(1);
  s.c(0) = 1.0;
  Vector x(1);
  x << 0.7;
  const RecurrentState next = lstm_step(p, s, x);
  // forget ~ 1 passes c = 1.0; input gate 0.5 times candidate 0 adds nothing
  CHECK(next.c(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(next.h(0) == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(1e-12));
}

TEST_CASE("lstm_step: matches the scalar gate-equation oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = derive_rng(1234, 77, seed);
    const int input = 1 + static_cast<int>(rng.uniform_int(1, 6));
    const int hidden = 1 + static_cast<int>(rng.uniform_int(1, 6));
    const LstmParams p = LstmParams::random_init(input, hidden, rng);
    RecurrentState s;
    s.h = random_vector(hidden, rng);
    s.c = random_vector(hidden, rng);
    const Vector x = random_vector(input, rng);

    const RecurrentState next = lstm_step(p, s, x);
    const auto [h_ref, c_ref] = test::scalar_lstm_step(
        p, std::vector<double>(s.h.data(), s.h.data() + hidden),
        std::vector<double>(s.c.data(), s.c.data() + hidden),
        std::vector<double>(x.data(), x.data() + input));
    for (int j = 0; j < hidden; ++j) {
      CHECK(next.h(j) == doctest::Approx(h_ref[static_cast<std::size_t>(j)]).epsilon(1e-12));
      CHECK(next.c(j) == doctest::Approx(c_ref[static_cast<std::size_t>(j)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("lstm_step: pure, does not mutate arguments, propagates finiteness") {
  Rng rng(99);
  const LstmParams p = LstmParams::random_init(4, 5, rng);
  RecurrentState s;
  s.h = random_vector(5, rng);
  s.c = random_vector(5, rng);
  const Vector x = random_vector(4, rng);
  const Vector h_copy = s.h, c_copy = s.c, x_copy = x;

  const RecurrentState a = lstm_step(p, s, x);
  const RecurrentState b = lstm_step(p, s, x);
  CHECK(a.h == b.h);
  CHECK(a.c == b.c);
  CHECK(s.h == h_copy);
  CHECK(s.c == c_copy);
  CHECK(x == x_copy);
  CHECK(a.h.allFinite());
  CHECK(a.c.allFinite());
}

TEST_CASE("lstm_step: shape mismatches raise shape errors") {
  const LstmParams p = LstmParams::zeros(3, 4);
  CHECK_THROWS_AS(lstm_step(p, RecurrentState::zeros(4), Vector::Zero(2)), ValidationError);
  CHECK_THROWS_AS(lstm_step(p, RecurrentState::zeros(3), Vector::Zero(3)), ValidationError);
}

TEST_CASE("affine_softmax: zero head is uniform") {
  const AffineHead head = AffineHead::zeros(5, 4);
  const Vector p = affine_softmax(head, Vector::Zero(5));
  REQUIRE(p.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(p(k) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("affine_softmax: closed-form bias-only case") {
  AffineHead head = AffineHead::zeros(3, 2);
  head.b << 0.0, std::log(3.0);
  const Vector p = affine_softmax(head, Vector::Zero(3));
  CHECK(p(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax: simplex output and shift invariance") {
  Rng rng(4321);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 6));
    const Vector z = random_vector(n, rng, 3.0);
    const Vector p = softmax(z);
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    const double shift = rng.uniform(-50.0, 50.0);
    const Vector q = softmax((z.array() + shift).matrix());
    for (int k = 0; k < n; ++k) CHECK(q(k) == doctest::Approx(p(k)).epsilon(1e-12));
  }
}

TEST_CASE("sequence_grads: zero loss gradients give a zero bundle") {
  Rng rng(5);
  const LstmParams p = LstmParams::random_init(3, 4, rng);
  const AffineHead head = AffineHead::random_init(4, 2, rng);
  std::vector<Vector> inputs, d_out;
  for (int t = 0; t < 6; ++t) {
    inputs.push_back(random_vector(3, rng));
    d_out.push_back(Vector::Zero(2));
  }
  GradientBundle g = sequence_grads(p, head, inputs, d_out);
  for (const ParamSlot& slot : bundle_slots(g)) {
    for (std::ptrdiff_t j = 0; j < slot.size; ++j) CHECK(slot.data[j] == 0.0);
  }
}

TEST_CASE("sequence_grads: length-1 single-unit cell matches hand chain rule") {
  Rng rng(17);
  LstmParams p = LstmParams::random_init(1, 1, rng);
  AffineHead head = AffineHead::random_init(1, 1, rng);
  const double x = 0.83;
  const double dy = 1.3;

  std::vector<Vector> inputs{Vector::Constant(1, x)};
  std::vector<Vector> d_out{Vector::Constant(1, dy)};
  GradientBundle g = sequence_grads(p, head, inputs, d_out);

  // forward by hand (h0 = c0 = 0)
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double i = sig(p.w_i(0, 0) * x + p.b_i(0));
  const double f = sig(p.w_f(0, 0) * x + p.b_f(0));
  const double gg = std::tanh(p.w_g(0, 0) * x + p.b_g(0));
  const double o = sig(p.w_o(0, 0) * x + p.b_o(0));
  const double c1 = i * gg;
  const double h1 = o * std::tanh(c1);

  const double dh = dy * head.w(0, 0);
  const double d_o = dh * std::tanh(c1);
  const double dc = dh * o * (1.0 - std::tanh(c1) * std::tanh(c1));
  const double d_i = dc * gg;
  const double d_g = dc * i;
  const double a_i = d_i * i * (1.0 - i);
  const double a_g = d_g * (1.0 - gg * gg);
  const double a_o = d_o * o * (1.0 - o);

  CHECK(g.head.w(0, 0) == doctest::Approx(dy * h1).epsilon(1e-14));
  CHECK(g.head.b(0) == doctest::Approx(dy).epsilon(1e-14));
  CHECK(g.lstm.w_i(0, 0) == doctest::Approx(a_i * x).epsilon(1e-13));
  CHECK(g.lstm.b_i(0) == doctest::Approx(a_i).epsilon(1e-13));
  CHECK(g.lstm.w_g(0, 0) == doctest::Approx(a_g * x).epsilon(1e-13));
  CHECK(g.lstm.b_g(0) == doctest::Approx(a_g).epsilon(1e-13));
  CHECK(g.lstm.w_o(0, 0) == doctest::Approx(a_o * x).epsilon(1e-13));
  CHECK(g.lstm.b_o(0) == doctest::Approx(a_o).epsilon(1e-13));
  // c0 = 0 kills the forget path; h0 = 0 kills all recurrent weights
  CHECK(g.lstm.w_f(0, 0) == 0.0);
  CHECK(g.lstm.b_f(0) == 0.0);
  CHECK(g.lstm.u_i(0, 0) == 0.0);
  CHECK(g.lstm.u_f(0, 0) == 0.0);
  CHECK(g.lstm.u_g(0, 0) == 0.0);
  CHECK(g.lstm.u_o(0, 0) == 0.0);
}

namespace {

/// Linear readout loss sum_t r_t . y_t over a fixed input sequence, as a
/// function of (cell, head) parameters.
struct LinearSequenceLoss {
  LstmParams* params;
  AffineHead* head;
  std::vector<Vector> inputs;
  std::vector<Vector> readout;

  double operator()() const {
    RecurrentState state = RecurrentState::zeros(params->hidden_dim);
    double loss = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      state = lstm_step(*params, state, inputs[t]);
      loss += readout[t].dot(affine_apply(*head, state.h));
    }
    return loss;
  }
};

}  // namespace

TEST_CASE("sequence_grads: random network matches central finite differences") {
  Rng rng(2024);
  LstmParams p = LstmParams::random_init(3, 4, rng);
  AffineHead head = AffineHead::random_init(4, 2, rng);
  LinearSequenceLoss loss{&p, &head, {}, {}};
  for (int t = 0; t < 5; ++t) {
    loss.inputs.push_back(random_vector(3, rng));
    loss.readout.push_back(random_vector(2, rng));
  }
  GradientBundle analytic = sequence_grads(p, head, loss.inputs, loss.readout);

  std::vector<ParamSlot> params = lstm_slots(p);
  for (ParamSlot& s : head_slots(head)) params.push_back(s);
  const double err = finite_diff_max_rel_error([&loss]() { return loss(); }, params,
                                               bundle_slots(analytic), 1e-6);
  CHECK(err < 1e-5);
}

TEST_CASE("sequence_grads: gradient check across random seeds") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Rng rng = derive_rng(31337, 11, seed);
    const int input = 1 + static_cast<int>(rng.uniform_int(1, 4));
    const int hidden = 1 + static_cast<int>(rng.uniform_int(1, 4));
    const int out = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const int len = 1 + static_cast<int>(rng.uniform_int(1, 5));
    LstmParams p = LstmParams::random_init(input, hidden, rng);
    AffineHead head = AffineHead::random_init(hidden, out, rng);
    LinearSequenceLoss loss{&p, &head, {}, {}};
    for (int t = 0; t < len; ++t) {
      loss.inputs.push_back(random_vector(input, rng));
      loss.readout.push_back(random_vector(out, rng));
    }
    GradientBundle analytic = sequence_grads(p, head, loss.inputs, loss.readout);
    std::vector<ParamSlot> params = lstm_slots(p);
    for (ParamSlot& s : head_slots(head)) params.push_back(s);
    const double err = finite_diff_max_rel_error([&loss]() { return loss(); }, params,
                                                 bundle_slots(analytic), 1e-6);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("sequence_grads: misaligned sequences are rejected") {
  Rng rng(8);
  const LstmParams p = LstmParams::random_init(2, 2, rng);
  const AffineHead head = AffineHead::random_init(2, 1, rng);
  std::vector<Vector> inputs{Vector::Zero(2), Vector::Zero(2)};
  std::vector<Vector> d_out{Vector::Zero(1)};
  CHECK_THROWS_AS(sequence_grads(p, head, inputs, d_out), ValidationError);
}

TEST_CASE("finite_diff_check: exact on quadratics and linear losses") {
  double w = 3.0;
  std::vector<ParamSlot> params{{"w", &w, 1}};

  double analytic_quadratic = 3.0;  // d/dw 0.5 w^2 at w=3
  std::vector<ParamSlot> grad_q{{"w", &analytic_quadratic, 1}};
  const double err_q =
      finite_diff_max_rel_error([&w]() { return 0.5 * w * w; }, params, grad_q, 1e-5);
  CHECK(err_q < 1e-8);

  const double c = -1.7;
  double analytic_linear = c;
  std::vector<ParamSlot> grad_l{{"w", &analytic_linear, 1}};
  const double err_l = finite_diff_max_rel_error([&w, c]() { return c * w; }, params, grad_l, 1e-5);
  CHECK(err_l < 1e-10);
}

TEST_CASE("finite_diff_check: rejects non-finite losses and bad eps") {
  double w = 1.0;
  std::vector<ParamSlot> params{{"w", &w, 1}};
  double g = 0.0;
  std::vector<ParamSlot> grads{{"w", &g, 1}};
  CHECK_THROWS_AS(
      finite_diff_max_rel_error([]() { return std::numeric_limits<double>::quiet_NaN(); }, params,
                                grads, 1e-6),
      NumericError);
  CHECK_THROWS_AS(finite_diff_max_rel_error([]() { return 0.0; }, params, grads, 0.0),
                  ValidationError);
}

TEST_CASE("adam: zero gradients with zero weight decay change nothing") {
  double w[3] = {1.0, -2.0, 0.5};
  double g[3] = {0.0, 0.0, 0.0};
  std::vector<ParamSlot> params{{"w", w, 3}};
  std::vector<ParamSlot> grads{{"w", g, 3}};
  AdamState adam(params);
  AdamConfig config;
  config.lr = 0.1;
  config.weight_decay = 0.0;
  adam.update(params, grads, config);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == -2.0);
  CHECK(w[2] == 0.5);
}

TEST_CASE("adam: first step moves by about -lr") {
  double w = 0.0;
  double g = 1.0;
  std::vector<ParamSlot> params{{"w", &w, 1}};
  std::vector<ParamSlot> grads{{"w", &g, 1}};
  AdamState adam(params);
  AdamConfig config;
  config.lr = 0.1;
  config.weight_decay = 0.0;
  adam.update(params, grads, config);
  // bias-corrected m/sqrt(v) = 1 on the first step
  CHECK(w == doctest::Approx(-0.1).epsilon(1e-7));
}

TEST_CASE("adam: deterministic over 100 steps") {
  auto run = [](std::vector<double>& w) {
    std::vector<ParamSlot> params{{"w", w.data(), static_cast<std::ptrdiff_t>(w.size())}};
    AdamState adam(params);
    AdamConfig config;
    Rng rng(55);
    for (int step = 0; step < 100; ++step) {
      std::vector<double> g(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) g[j] = rng.normal();
      std::vector<ParamSlot> grads{{"w", g.data(), static_cast<std::ptrdiff_t>(g.size())}};
      adam.update(params, grads, config);
    }
  };
  std::vector<double> a{0.3, -0.4, 1.1, 0.0};
  std::vector<double> b = a;
  run(a);
  run(b);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("adam: non-finite gradients name the offending parameter") {
  double w = 0.0;
  double g = std::numeric_limits<double>::infinity();
  std::vector<ParamSlot> params{{"spiky", &w, 1}};
  std::vector<ParamSlot> grads{{"spiky", &g, 1}};
  AdamState adam(params);
  try {
    adam.update(params, grads, AdamConfig{});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("spiky") != std::string::npos);
  }
}

TEST_CASE("clip_global_norm: caps long gradients, leaves short ones alone") {
  double g[2] = {3.0, 4.0};  // norm 5
  std::vector<ParamSlot> grads{{"g", g, 2}};
  clip_global_norm(grads, 10.0);
  CHECK(g[0] == 3.0);
  CHECK(g[1] == 4.0);
  clip_global_norm(grads, 2.5);
  CHECK(global_norm(grads) == doctest::Approx(2.5).epsilon(1e-12));
}
