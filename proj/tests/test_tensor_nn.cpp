#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <limits>
#include <numeric>

#include "gradcheck.hpp"
#include "loss.hpp"
#include "net.hpp"
#include "ops.hpp"
#include "optim.hpp"
#include "tensor.hpp"

using namespace kin;
using namespace kin::nn;

TEST_SUITE_BEGIN("tensor-nn");

namespace {

// Reference convolution: direct nested loops over the contract layout,
// written independently of the layer implementation.
Tensord conv3d_reference(const Tensord& input, const Tensord& kernels,
                         const Tensord& bias, std::array<int, 3> stride,
                         std::array<int, 3> padding) {
  const int B = input.shape[0], D = input.shape[1], H = input.shape[2],
            W = input.shape[3], Ci = input.shape[4];
  const int Co = kernels.shape[0], kd = kernels.shape[1], kh = kernels.shape[2],
            kw = kernels.shape[3];
  const int OD = (D + 2 * padding[0] - kd) / stride[0] + 1;
  const int OH = (H + 2 * padding[1] - kh) / stride[1] + 1;
  const int OW = (W + 2 * padding[2] - kw) / stride[2] + 1;
  Tensord out({B, OD, OH, OW, Co});
  auto in_at = [&](int b, int d, int h, int w, int c) -> double {
    if (d < 0 || d >= D || h < 0 || h >= H || w < 0 || w >= W) return 0.0;
    return input.values[((((static_cast<std::size_t>(b) * D + d) * H + h) * W + w) * Ci) + c];
  };
  for (int b = 0; b < B; ++b)
    for (int od = 0; od < OD; ++od)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow)
          for (int co = 0; co < Co; ++co) {
            double acc = bias.values.empty() ? 0.0 : bias.values[static_cast<std::size_t>(co)];
            for (int d = 0; d < kd; ++d)
              for (int h = 0; h < kh; ++h)
                for (int w = 0; w < kw; ++w)
                  for (int ci = 0; ci < Ci; ++ci) {
                    acc += in_at(b, od * stride[0] - padding[0] + d,
                                 oh * stride[1] - padding[1] + h,
                                 ow * stride[2] - padding[2] + w, ci) *
                           kernels.values[((((static_cast<std::size_t>(co) * kd + d) * kh + h) * kw + w) * Ci) + ci];
                  }
            out.values[((((static_cast<std::size_t>(b) * OD + od) * OH + oh) * OW + ow) * Co) + co] = acc;
          }
  return out;
}

void randomize(Tensord& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (auto& v : t.values) v = rng.uniform(lo, hi);
}

std::unique_ptr<SequentialNet<double>> single_layer_net(
    std::unique_ptr<Layer<double>> layer) {
  std::vector<std::unique_ptr<Layer<double>>> layers;
  layers.push_back(std::move(layer));
  return std::make_unique<SequentialNet<double>>(std::move(layers));
}

double layer_grad_check(std::unique_ptr<Layer<double>> layer, std::uint64_t seed,
                        LossKind loss = LossKind::sse) {
  auto net = single_layer_net(std::move(layer));
  Rng rng(mix_seed(seed));
  net->init_params(rng);

  std::vector<double> input(net->input_count());
  for (auto& v : input) {
    v = rng.uniform(-1.0, 1.0);
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;  // stay off relu kinks
  }
  std::vector<double> target(static_cast<std::size_t>(net->output_count()));
  if (loss == LossKind::cross_entropy) {
    target[rng.uniform_index(target.size())] = 1.0;
  } else {
    for (auto& v : target) v = rng.uniform(-1.0, 1.0);
  }
  const auto result = grad_check(*net, input.data(), loss, target.data(), 1e-4,
                                 240, seed + 1);
  return result.max_rel_err;
}

} // namespace

TEST_CASE("tensor invariants: flat size and optional grad") {
  Tensorf t({2, 3, 4});
  CHECK(t.numel() == 24);
  CHECK(t.values.size() == 24);
  CHECK(t.consistent());
  t.alloc_grad();
  CHECK(t.grad.size() == t.values.size());
  CHECK(t.consistent());
}

TEST_CASE("conv3d identity kernel reproduces the input") {
  Tensord input({1, 2, 3, 4, 1});
  Rng rng(1);
  randomize(input, rng);
  Tensord kernel({1, 1, 1, 1, 1});
  kernel.values[0] = 1.0;
  const auto out = conv3d_forward<double>(input, kernel, {}, {1, 1, 1}, {0, 0, 0});
  CHECK(out.shape == input.shape);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    CHECK(out.values[i] == doctest::Approx(input.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv3d all-ones kernel counts its window") {
  Tensord input({1, 4, 4, 4, 1});
  for (auto& v : input.values) v = 1.0;
  Tensord kernel({1, 2, 2, 2, 1});
  for (auto& v : kernel.values) v = 1.0;
  const auto out = conv3d_forward<double>(input, kernel, {}, {1, 1, 1}, {0, 0, 0});
  CHECK(out.shape == std::vector<int>{1, 3, 3, 3, 1});
  for (const double v : out.values) {
    CHECK(v == doctest::Approx(8.0).epsilon(1e-12));
  }
}

TEST_CASE("conv3d matches the brute-force reference on random cases") {
  Rng rng(404);
  for (int trial = 0; trial < 8; ++trial) {
    Tensord input({1, 3, 4, 4, 2});
    Tensord kernel({3, 1, 2, 3, 2});
    Tensord bias({3});
    randomize(input, rng);
    randomize(kernel, rng);
    randomize(bias, rng);
    const std::array<int, 3> stride{1, 1, 1};
    const std::array<int, 3> padding{0, trial % 2, 1};
    const auto fast = conv3d_forward<double>(input, kernel, bias, stride, padding);
    const auto slow = conv3d_reference(input, kernel, bias, stride, padding);
    REQUIRE(fast.shape == slow.shape);
    for (std::size_t i = 0; i < fast.values.size(); ++i) {
      CHECK(fast.values[i] == doctest::Approx(slow.values[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("conv3d with stride matches the reference") {
  Rng rng(405);
  Tensord input({2, 5, 6, 7, 1});
  Tensord kernel({2, 2, 3, 3, 1});
  Tensord bias({2});
  randomize(input, rng);
  randomize(kernel, rng);
  randomize(bias, rng);
  const auto fast = conv3d_forward<double>(input, kernel, bias, {2, 2, 2}, {0, 1, 1});
  const auto slow = conv3d_reference(input, kernel, bias, {2, 2, 2}, {0, 1, 1});
  REQUIRE(fast.shape == slow.shape);
  for (std::size_t i = 0; i < fast.values.size(); ++i) {
    CHECK(fast.values[i] == doctest::Approx(slow.values[i]).epsilon(1e-6));
  }
}

TEST_CASE("conv3d rejects mismatched shapes") {
  Tensord input({1, 2, 3, 4, 2});
  Tensord kernel({1, 1, 1, 1, 3});
  CHECK_THROWS_AS(conv3d_forward<double>(input, kernel, {}, {1, 1, 1}, {0, 0, 0}),
                  std::invalid_argument);
}

TEST_CASE("dense with identity weights passes the input through") {
  Dense<double> dense(4, 4);
  std::vector<double> params(dense.param_count(), 0.0);
  for (int i = 0; i < 4; ++i) params[static_cast<std::size_t>(i) * 4 + i] = 1.0;
  const double x[4] = {0.5, -1.0, 2.0, 0.0};
  double y[4];
  dense.forward(x, y, params.data());
  for (int i = 0; i < 4; ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("relu clamps negatives") {
  Relu<double> relu(std::vector<int>{3});
  const double x[3] = {-1.0, 0.0, 2.0};
  double y[3];
  relu.forward(x, y, nullptr);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);
}

TEST_CASE("softmax of a constant vector is uniform") {
  Softmax<double> softmax(6);
  const double x[6] = {0, 0, 0, 0, 0, 0};
  double y[6];
  softmax.forward(x, y, nullptr);
  for (int i = 0; i < 6; ++i) {
    CHECK(y[i] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax outputs are a probability row for random logits") {
  Softmax<double> softmax(6);
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    double x[6], y[6];
    for (auto& v : x) v = rng.uniform(-8.0, 8.0);
    softmax.forward(x, y, nullptr);
    double sum = 0.0;
    for (const double v : y) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("parameterized layers pass a finite-difference check") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    CHECK(layer_grad_check(std::make_unique<Conv3d<double>>(
                               std::vector<int>{2, 4, 5, 2}, 3, 2, 3, 3, 1, 1, 1, 1, 1, 1),
                           seed) <= 1e-6);
    CHECK(layer_grad_check(std::make_unique<Dense<double>>(10, 7), seed) <= 1e-7);
  }
}

TEST_CASE("pool, relu, and flatten route gradients correctly") {
  // These layers own no parameters, so their backward passes are exercised
  // by checking the gradients of a conv layer feeding them.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    std::vector<std::unique_ptr<Layer<double>>> layers;
    layers.push_back(std::make_unique<Conv3d<double>>(std::vector<int>{2, 4, 6, 1},
                                                      3, 1, 3, 3, 1, 1, 1, 0, 1, 1));
    layers.push_back(std::make_unique<Relu<double>>(layers.back()->out_shape()));
    layers.push_back(std::make_unique<MaxPool3d<double>>(layers.back()->out_shape(),
                                                         2, 2, 2));
    layers.push_back(std::make_unique<Flatten<double>>(layers.back()->out_shape()));
    layers.push_back(std::make_unique<Dense<double>>(layers.back()->out_shape()[0], 4));
    SequentialNet<double> net(std::move(layers));
    Rng rng(mix_seed(seed * 31 + 5));
    net.init_params(rng);

    std::vector<double> input(net.input_count());
    for (auto& v : input) {
      v = rng.uniform(-1.0, 1.0);
      if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;
    }
    std::vector<double> target(4);
    for (auto& v : target) v = rng.uniform(-1.0, 1.0);
    const auto result =
        grad_check(net, input.data(), LossKind::sse, target.data(), 1e-5, 200, seed);
    CHECK(result.max_rel_err <= 1e-5);
  }
}

TEST_CASE("softmax + cross-entropy gradient passes finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    std::vector<std::unique_ptr<Layer<double>>> layers;
    layers.push_back(std::make_unique<Dense<double>>(5, 6));
    layers.push_back(std::make_unique<Softmax<double>>(6));
    SequentialNet<double> net(std::move(layers));
    Rng rng(mix_seed(seed));
    net.init_params(rng);
    std::vector<double> input(5);
    for (auto& v : input) v = rng.uniform(-1.0, 1.0);
    std::vector<double> onehot(6, 0.0);
    onehot[rng.uniform_index(6)] = 1.0;
    const auto result = grad_check(net, input.data(), LossKind::cross_entropy,
                                   onehot.data(), 1e-5, 240, seed + 9);
    CHECK(result.max_rel_err <= 1e-6);
  }
}

TEST_CASE("lstm cell: zero input, state, and params stay at zero") {
  LstmCell<double> cell(3, 4);
  std::vector<double> params(cell.param_count(), 0.0);
  std::vector<double> x(3, 0.0), h(4, 0.0), c(4, 0.0);
  std::vector<double> h_out(4), c_out(4);
  lstm_step(cell, x.data(), h.data(), c.data(), params.data(), h_out.data(),
            c_out.data());
  for (int i = 0; i < 4; ++i) {
    CHECK(h_out[static_cast<std::size_t>(i)] == 0.0);
    CHECK(c_out[static_cast<std::size_t>(i)] == 0.0);
  }
}

TEST_CASE("lstm cell: a saturated forget gate preserves the cell state") {
  const int H = 4;
  LstmCell<double> cell(2, H);
  std::vector<double> params(cell.param_count(), 0.0);
  // Zero weights; forget bias 50 (gate ~ 1), other biases 0.
  const std::size_t bias_off = params.size() - 4 * H;
  for (int i = 0; i < H; ++i) params[bias_off + H + i] = 50.0;

  std::vector<double> x{0.4, -0.2};
  std::vector<double> h(static_cast<std::size_t>(H), 0.0);
  std::vector<double> c{0.7, -0.3, 1.2, 0.05};
  std::vector<double> h_out(static_cast<std::size_t>(H)), c_out(static_cast<std::size_t>(H));
  lstm_step(cell, x.data(), h.data(), c.data(), params.data(), h_out.data(),
            c_out.data());
  for (int i = 0; i < H; ++i) {
    CHECK(c_out[static_cast<std::size_t>(i)] ==
          doctest::Approx(c[static_cast<std::size_t>(i)]).epsilon(1e-6));
  }
}

TEST_CASE("lstm cell matches a scalar reference implementation") {
  const int I = 3, H = 2, G = 4 * H;
  LstmCell<double> cell(I, H);
  Rng rng(606);
  std::vector<double> params(cell.param_count());
  for (auto& v : params) v = rng.uniform(-0.8, 0.8);
  std::vector<double> x(I), h(H), c(H);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto& v : h) v = rng.uniform(-1, 1);
  for (auto& v : c) v = rng.uniform(-1, 1);

  std::vector<double> h_out(H), c_out(H);
  lstm_step(cell, x.data(), h.data(), c.data(), params.data(), h_out.data(),
            c_out.data());

  // Scalar re-derivation from the gate equations.
  const double* wx = params.data();
  const double* wh = params.data() + I * G;
  const double* b = params.data() + (I + H) * G;
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (int u = 0; u < H; ++u) {
    double pre[4];
    for (int gate = 0; gate < 4; ++gate) {
      const int k = gate * H + u;
      double acc = b[k];
      for (int i = 0; i < I; ++i) acc += x[static_cast<std::size_t>(i)] * wx[i * G + k];
      for (int j = 0; j < H; ++j) acc += h[static_cast<std::size_t>(j)] * wh[j * G + k];
      pre[gate] = acc;
    }
    const double gi = sigmoid(pre[0]);
    const double gf = sigmoid(pre[1]);
    const double gg = std::tanh(pre[2]);
    const double go = sigmoid(pre[3]);
    const double c_ref = gf * c[static_cast<std::size_t>(u)] + gi * gg;
    const double h_ref = go * std::tanh(c_ref);
    CHECK(c_out[static_cast<std::size_t>(u)] == doctest::Approx(c_ref).epsilon(1e-6));
    CHECK(h_out[static_cast<std::size_t>(u)] == doctest::Approx(h_ref).epsilon(1e-6));
  }
}

TEST_CASE("cnn-lstm network gradient passes finite differences") {
  // Tiny encoder so the whole recurrent chain is exercised.
  std::vector<std::unique_ptr<Layer<double>>> enc;
  enc.push_back(std::make_unique<Conv3d<double>>(std::vector<int>{1, 6, 8, 1}, 2,
                                                 1, 3, 3, 1, 1, 1, 0, 1, 1));
  enc.push_back(std::make_unique<Relu<double>>(enc.back()->out_shape()));
  enc.push_back(std::make_unique<MaxPool3d<double>>(enc.back()->out_shape(), 1, 2, 2));
  enc.push_back(std::make_unique<Flatten<double>>(enc.back()->out_shape()));
  enc.push_back(std::make_unique<Dense<double>>(enc.back()->out_shape()[0], 5));
  auto encoder = std::make_unique<SequentialNet<double>>(std::move(enc));

  std::vector<std::unique_ptr<Layer<double>>> head;
  head.push_back(std::make_unique<Dense<double>>(3, 6));
  head.push_back(std::make_unique<Softmax<double>>(6));
  auto head_net = std::make_unique<SequentialNet<double>>(std::move(head));

  CnnLstmNet<double> net(4, std::move(encoder), 3, std::move(head_net));
  Rng rng(909);
  net.init_params(rng);
  std::vector<double> input(net.input_count());
  for (auto& v : input) v = rng.uniform(-1.0, 1.0);
  std::vector<double> onehot(6, 0.0);
  onehot[2] = 1.0;
  const auto result = grad_check(net, input.data(), LossKind::cross_entropy,
                                 onehot.data(), 1e-4, 300, 13);
  CHECK(result.max_rel_err <= 1e-5);
}

TEST_CASE("cross entropy: perfect and uniform predictions") {
  Tensord probs({1, 6});
  Tensord onehot({1, 6});
  onehot.values[2] = 1.0;
  probs.values = {0.0, 0.0, 1.0, 0.0, 0.0, 0.0};
  const auto [perfect, g1] = cross_entropy_loss(probs, onehot);
  CHECK(perfect <= 1e-8);

  for (auto& v : probs.values) v = 1.0 / 6.0;
  const auto [uniform, g2] = cross_entropy_loss(probs, onehot);
  CHECK(uniform == doctest::Approx(std::log(6.0)).epsilon(1e-9));
}

TEST_CASE("cross entropy validates probability rows") {
  Tensord probs({1, 6});
  Tensord onehot({1, 6});
  onehot.values[0] = 1.0;
  probs.values = {0.5, 0.5, 0.5, 0, 0, 0};
  CHECK_THROWS_AS(cross_entropy_loss(probs, onehot), std::invalid_argument);
}

TEST_CASE("cross entropy gradient matches finite differences") {
  Rng rng(55);
  Tensord probs({4, 6});
  Tensord onehot({4, 6});
  for (int b = 0; b < 4; ++b) {
    double row[6];
    double sum = 0.0;
    for (auto& v : row) {
      v = rng.uniform(0.05, 1.0);
      sum += v;
    }
    for (int i = 0; i < 6; ++i) probs.values[static_cast<std::size_t>(b) * 6 + i] = row[i] / sum;
    onehot.values[static_cast<std::size_t>(b) * 6 + rng.uniform_index(6)] = 1.0;
  }
  const auto [loss, grad] = cross_entropy_loss(probs, onehot);
  (void)loss;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < probs.values.size(); ++i) {
    Tensord up = probs;
    Tensord down = probs;
    up.values[i] += eps;
    down.values[i] -= eps;
    // Bypass row-sum validation via the sample-level form.
    double dplus = 0.0, dminus = 0.0;
    std::vector<double> scratch(6);
    for (int b = 0; b < 4; ++b) {
      dplus += cross_entropy_sample<double>(
          {up.values.data() + b * 6, 6}, {onehot.values.data() + b * 6, 6},
          {scratch.data(), 6}, 1.0);
      dminus += cross_entropy_sample<double>(
          {down.values.data() + b * 6, 6}, {onehot.values.data() + b * 6, 6},
          {scratch.data(), 6}, 1.0);
    }
    const double numeric = (dplus - dminus) / (2.0 * eps * 4.0);
    const double denom = std::max({std::abs(numeric), std::abs(grad.values[i]), 1e-8});
    CHECK(std::abs(numeric - grad.values[i]) / denom <= 1e-4);
  }
}

TEST_CASE("sse loss: zero at equality and correct on the worked example") {
  Tensord pred({1, 2});
  Tensord target({1, 2});
  pred.values = {0.8, 0.9};
  target.values = {1.0, 0.5};
  const auto [loss, grad] = sse_loss(pred, target);
  CHECK(loss == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(grad.values[0] == doctest::Approx(2.0 * (0.8 - 1.0)).epsilon(1e-12));

  const auto [zero, g2] = sse_loss(target, target);
  CHECK(zero == 0.0);
}

TEST_CASE("sse gradient matches finite differences") {
  Rng rng(66);
  Tensord pred({3, 5});
  Tensord target({3, 5});
  for (auto& v : pred.values) v = rng.uniform(-1, 1);
  for (auto& v : target.values) v = rng.uniform(-1, 1);
  const auto [loss, grad] = sse_loss(pred, target);
  (void)loss;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    Tensord up = pred, down = pred;
    up.values[i] += eps;
    down.values[i] -= eps;
    const double numeric =
        (sse_loss(up, target).first - sse_loss(down, target).first) / (2 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(grad.values[i]), 1e-8});
    CHECK(std::abs(numeric - grad.values[i]) / denom <= 1e-4);
  }
}

TEST_CASE("sgd: basic step, zero gradient, and momentum accumulation") {
  SgdMomentum<double> sgd(0.1, 0.0);
  std::vector<double> params{0.0};
  std::vector<double> grads{1.0};
  sgd.step(params, grads);
  CHECK(params[0] == doctest::Approx(-0.1).epsilon(1e-12));

  grads[0] = 0.0;
  const double before = params[0];
  sgd.step(params, grads);
  CHECK(params[0] == before);
}

TEST_CASE("adam: first-step magnitude is about the learning rate") {
  Adam<double> adam(1e-3);
  std::vector<double> params{0.5, -0.25};
  std::vector<double> grads{1.0, 1.0};
  adam.step(params, grads);
  CHECK(params[0] == doctest::Approx(0.5 - 1e-3).epsilon(1e-6));
  CHECK(params[1] == doctest::Approx(-0.25 - 1e-3).epsilon(1e-6));
}

TEST_CASE("optimizers abort on non-finite gradients") {
  Adam<double> adam(1e-3);
  std::vector<double> params{0.0};
  std::vector<double> grads{std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(adam.step(params, grads), NonFiniteError);
  SgdMomentum<double> sgd(0.1, 0.9);
  grads[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(sgd.step(params, grads), NonFiniteError);
}

TEST_SUITE_END();
