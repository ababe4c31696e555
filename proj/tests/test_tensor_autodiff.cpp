// Copyright 2026 The dmpcs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>

#include "dmpcs/autodiff.hpp"
#include "dmpcs/errors.hpp"
#include "dmpcs/optim.hpp"
#include "dmpcs/rng.hpp"
#include "gradcheck.hpp"

using namespace dmpcs;
using dmpcs::testing::check_gradients;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

// Keeps relu inputs away from the kink so finite differences stay valid.
Tensor away_from_zero(Tensor t) {
  for (double& v : t.data())
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 - v : 0.05 + v;
  return t;
}

}  // namespace

TEST(Tensor, ShapeAndData) {
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0}), ValidationError);
  EXPECT_EQ(Tensor::scalar(3.5).item(), 3.5);
  EXPECT_EQ(t.reshaped({3, 2}).shape(), (Shape{3, 2}));
  EXPECT_THROW(t.reshaped({4, 2}), ValidationError);
}

TEST(Conv2d, IdentityKernelOnOnePixel) {
  ad::Graph g;
  Tensor w({1, 1, 3, 3});
  w[4] = 1.0;
  auto out = ad::conv2d(g.constant(Tensor({1, 1, 1}, {5.0})), g.constant(w),
                        g.constant(Tensor({1})));
  EXPECT_EQ(out.value().item(), 5.0);
}

TEST(Conv2d, OnesKernelZeroPadding) {
  ad::Graph g;
  auto out = ad::conv2d(g.constant(Tensor::full({1, 3, 3}, 1.0)),
                        g.constant(Tensor::full({1, 1, 3, 3}, 1.0)), g.constant(Tensor({1})));
  EXPECT_EQ(out.value()[4], 9.0);
  EXPECT_EQ(out.value()[0], 4.0);
  EXPECT_EQ(out.value()[1], 6.0);
}

TEST(Conv2d, OutputShape) {
  ad::Graph g;
  auto out = ad::conv2d(g.constant(Tensor({2, 4, 4})), g.constant(Tensor({3, 2, 3, 3})),
                        g.constant(Tensor({3})));
  EXPECT_EQ(out.shape(), (Shape{3, 4, 4}));
}

TEST(Conv2d, ChannelMismatchThrows) {
  ad::Graph g;
  EXPECT_THROW(ad::conv2d(g.constant(Tensor({2, 4, 4})), g.constant(Tensor({3, 1, 3, 3})),
                          g.constant(Tensor({3}))),
               ValidationError);
}

TEST(Conv2d, Linearity) {
  const Tensor x = random_tensor({2, 5, 6}, 1), y = random_tensor({2, 5, 6}, 2);
  const Tensor w = random_tensor({3, 2, 3, 3}, 3);
  const double a = 0.7, b = -1.3;
  Tensor mix({2, 5, 6});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
  Tensor zero({3}), cx, cy, cm;
  ad::kernels::conv2d_forward(x, w, zero, cx);
  ad::kernels::conv2d_forward(y, w, zero, cy);
  ad::kernels::conv2d_forward(mix, w, zero, cm);
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const double expect = a * cx[i] + b * cy[i];
    EXPECT_NEAR(cm[i], expect, 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Relu, ValuesAndGradient) {
  ad::Graph g;
  auto x = g.parameter("x", Tensor({3}, {-1.0, 0.0, 2.0}));
  auto r = ad::relu(x);
  EXPECT_EQ(r.value().values(), (std::vector<double>{0.0, 0.0, 2.0}));
  auto grads = g.backward(ad::mse(r, g.constant(Tensor({3}))));
  // d/dx mean(relu(x)^2) = 2 relu(x) relu'(x) / 3
  EXPECT_DOUBLE_EQ(grads["x"][2], 4.0 / 3.0);
  EXPECT_EQ(grads["x"][0], 0.0);

  ad::Graph g2;
  auto neg = ad::relu(g2.constant(Tensor::full({4}, -2.0)));
  for (double v : neg.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(Mse, Examples) {
  ad::Graph g;
  auto a = g.constant(Tensor({2}, {0.0, 2.0}));
  auto b = g.constant(Tensor({2}, {1.0, 0.0}));
  EXPECT_DOUBLE_EQ(ad::mse(a, b).value().item(), 2.5);
  EXPECT_DOUBLE_EQ(ad::mse(b, a).value().item(), 2.5);
  EXPECT_EQ(ad::mse(a, a).value().item(), 0.0);
  EXPECT_DOUBLE_EQ(ad::mse(g.constant(Tensor({2})), g.constant(Tensor::full({2}, 1.0))).value().item(),
                   1.0);
  EXPECT_THROW(ad::mse(a, g.constant(Tensor({3}))), ValidationError);
}

TEST(Backward, SquareGradient) {
  ad::Graph g;
  auto w = g.parameter("w", Tensor({1}, {3.0}));
  auto grads = g.backward(ad::mse(w, g.constant(Tensor({1}))));
  EXPECT_DOUBLE_EQ(grads["w"][0], 6.0);
}

TEST(Backward, ConstantLossHasZeroGradient) {
  ad::Graph g;
  auto w = g.parameter("w", Tensor({2}, {1.0, 2.0}));
  auto c = g.constant(Tensor({2}, {3.0, 4.0}));
  auto loss = ad::add(ad::mse(c, c), ad::scale(ad::mse(w, w), 1.0));
  auto grads = g.backward(loss);
  for (double v : grads["w"].values()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, RejectsNonScalarLoss) {
  ad::Graph g;
  auto w = g.parameter("w", Tensor({2}));
  EXPECT_THROW(g.backward(w), ValidationError);
}

TEST(Backward, FrozenLeafGetsNoGradient) {
  ad::Graph g;
  auto w = g.parameter("w", Tensor({1}, {1.0}), false);
  auto v = g.parameter("v", Tensor({1}, {2.0}));
  auto grads = g.backward(ad::mse(ad::mul(w, v), g.constant(Tensor({1}))));
  EXPECT_EQ(grads.count("w"), 0u);
  EXPECT_EQ(grads.count("v"), 1u);
}

TEST(GradCheck, ConvReluMseComposite) {
  const Tensor target = random_tensor({2, 5, 5}, 9);
  auto build = [&](ad::Graph& g, const auto& p) {
    auto h = ad::relu(ad::conv2d(p.at("x"), p.at("w"), p.at("b")));
    return ad::mse(h, g.constant(target));
  };
  const auto r = check_gradients(build, {{"x", random_tensor({3, 5, 5}, 4)},
                                         {"w", random_tensor({2, 3, 3, 3}, 5, 0.3)},
                                         {"b", random_tensor({2}, 6, 0.1)}});
  EXPECT_LT(r.max_rel_error, 1e-6) << r.worst;
}

// Every op on three shapes.
class OpGradients : public ::testing::TestWithParam<Shape> {};

TEST_P(OpGradients, ElementwiseOps) {
  const Shape s = GetParam();
  const Tensor target = random_tensor(s, 20);
  auto build = [&](ad::Graph& g, const auto& p) {
    auto a = p.at("a"), b = p.at("b");
    auto e = ad::add(ad::mul(a, b), ad::sub(ad::exp(ad::scale(a, 0.3)), ad::relu(b)));
    return ad::mse(ad::mul_scalar(e, p.at("s")), g.constant(target));
  };
  const auto r = check_gradients(build, {{"a", random_tensor(s, 21)},
                                         {"b", away_from_zero(random_tensor(s, 22))},
                                         {"s", Tensor({1}, {0.8})}});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST_P(OpGradients, ConvConcatSlice) {
  const Shape s = GetParam();
  const std::size_t h = s[1], w = s[2];
  const Tensor target = random_tensor({2, h, w}, 30);
  auto build = [&](ad::Graph& g, const auto& p) {
    auto joined = ad::concat_channels({p.at("x"), p.at("z")});
    auto c = ad::conv2d(joined, p.at("w"), p.at("b"));
    auto part = ad::slice_channels(c, 1, 2);
    return ad::mse(part, g.constant(target));
  };
  const auto r = check_gradients(build, {{"x", random_tensor({1, h, w}, 31)},
                                         {"z", random_tensor({2, h, w}, 32)},
                                         {"w", random_tensor({3, 3, 3, 3}, 33, 0.3)},
                                         {"b", random_tensor({3}, 34)}});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

INSTANTIATE_TEST_SUITE_P(Shapes, OpGradients,
                         ::testing::Values(Shape{1, 1, 1}, Shape{1, 4, 3}, Shape{2, 5, 6}));

TEST(GradCheck, MatvecAndBlockSensing) {
  const std::size_t b = 4, m = 5;
  const Tensor target_img = random_tensor({1, 8, 4}, 40);
  const Tensor target_vec = random_tensor({3}, 41);
  auto build = [&](ad::Graph& g, const auto& p) {
    auto y = ad::block_sense(p.at("img"), p.at("phi"), b);
    auto back = ad::block_adjoint(y, p.at("phi"), b, 8, 4);
    auto v = ad::matvec(p.at("W"), p.at("v"));
    return ad::add(ad::mse(back, g.constant(target_img)), ad::mse(v, g.constant(target_vec)));
  };
  const auto r = check_gradients(build, {{"img", random_tensor({1, 8, 4}, 42)},
                                         {"phi", random_tensor({m, b * b}, 43, 0.4)},
                                         {"W", random_tensor({3, 4}, 44)},
                                         {"v", random_tensor({4}, 45)}});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Graph, Determinism) {
  auto run = [] {
    ad::Graph g;
    auto x = g.parameter("x", random_tensor({2, 6, 6}, 50));
    auto w = g.parameter("w", random_tensor({2, 2, 3, 3}, 51));
    auto loss = ad::mse(ad::relu(ad::conv2d(x, w, g.constant(Tensor({2})))),
                        g.constant(Tensor({2, 6, 6})));
    return g.backward(loss);
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, FirstStepIsSignedLearningRate) {
  std::map<std::string, Tensor> params{{"w", Tensor({3}, {1.0, 1.0, 1.0})}};
  const std::map<std::string, Tensor> grads{{"w", Tensor({3}, {0.5, -2.0, 1e-3})}};
  optim::AdamState st;
  st.learning_rate = 0.01;
  optim::adam_update(params, grads, st);
  EXPECT_NEAR(params["w"][0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(params["w"][1], 1.0 + 0.01, 1e-9);
  EXPECT_NEAR(params["w"][2], 1.0 - 0.01, 1e-7);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::map<std::string, Tensor> params{{"w", Tensor({2}, {1.0, -3.0})}};
  const auto before = params;
  optim::AdamState st;
  optim::adam_update(params, {{"w", Tensor({2})}}, st);
  EXPECT_EQ(params, before);
}

TEST(Adam, Deterministic) {
  auto run = [] {
    std::map<std::string, Tensor> params{{"w", random_tensor({5}, 60)}};
    optim::AdamState st;
    for (int i = 0; i < 3; ++i) optim::adam_update(params, {{"w", random_tensor({5}, 61 + i)}}, st);
    return params;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, NonFiniteGradientRejectsStep) {
  std::map<std::string, Tensor> params{{"a", Tensor({1}, {1.0})}, {"b", Tensor({1}, {2.0})}};
  const auto before = params;
  optim::AdamState st;
  EXPECT_THROW(optim::adam_update(params,
                                  {{"a", Tensor({1}, {1.0})}, {"b", Tensor({1}, {NAN})}}, st),
               NumericalError);
  EXPECT_EQ(params, before);
  EXPECT_EQ(st.step, 0u);
}

TEST(CosineLr, Endpoints) {
  EXPECT_DOUBLE_EQ(optim::cosine_lr(0, 10, 1e-3, 1e-5), 1e-3);
  EXPECT_DOUBLE_EQ(optim::cosine_lr(10, 10, 1e-3, 1e-5), 1e-5);
  EXPECT_NEAR(optim::cosine_lr(5, 10, 1e-3, 1e-5), (1e-3 + 1e-5) / 2, 1e-15);
  EXPECT_THROW(optim::cosine_lr(0, 10, 1e-5, 1e-3), ValidationError);
  EXPECT_THROW(optim::cosine_lr(11, 10, 1e-3, 1e-5), ValidationError);
}
