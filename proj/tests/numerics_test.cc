// Copyright 2026 The xvgeo Authors. All rights reserved.
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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xvgeo/grad_check.h"
#include "xvgeo/ops.h"

namespace xvgeo {
namespace {

using testing::MakeParam;
using testing::Probe;
using testing::RandomTensor;

// Direct nested-loop convolution used as the oracle for Conv2d.
Tensor NaiveConv(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                 int pad) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int o = w.dim(0), k = w.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wd + 2 * pad - k) / stride + 1;
  Tensor out(Shape{n, o, oh, ow});
  for (int i = 0; i < n; ++i)
    for (int oc = 0; oc < o; ++oc)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double s = b[oc];
          for (int ic = 0; ic < c; ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = y * stride - pad + ky;
                const int ix = xx * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                s += w[((oc * c + ic) * k + ky) * k + kx] *
                     x[((i * c + ic) * h + iy) * wd + ix];
              }
          out[((i * o + oc) * oh + y) * ow + xx] = s;
        }
  return out;
}

TEST(Conv2dTest, IdentityKernelReproducesInput) {
  std::mt19937_64 rng(1);
  Tape tape;
  const Tensor x = RandomTensor({2, 1, 5, 4}, rng);
  Var out = Conv2d(tape.Constant(x), tape.Constant(Tensor({1, 1, 1, 1}, 1.0)),
                   tape.Constant(Tensor({1})), 1, 0);
  EXPECT_EQ(out.value(), x);
}

TEST(Conv2dTest, AllOnesKernelOnConstantInputSumsNineAtInterior) {
  Tape tape;
  Var out = Conv2d(tape.Constant(Tensor({1, 1, 5, 5}, 1.0)),
                   tape.Constant(Tensor({1, 1, 3, 3}, 1.0)),
                   tape.Constant(Tensor({1})), 1, 1);
  const Tensor& v = out.value();
  EXPECT_DOUBLE_EQ(v[2 * 5 + 2], 9.0);
  EXPECT_DOUBLE_EQ(v[0], 4.0);  // corner sees a 2x2 window
  EXPECT_DOUBLE_EQ(v[2], 6.0);  // edge sees a 2x3 window
}

TEST(Conv2dTest, StrideTwoOutputShape) {
  Tape tape;
  Var out = Conv2d(tape.Constant(Tensor({1, 3, 8, 8})),
                   tape.Constant(Tensor({4, 3, 3, 3})),
                   tape.Constant(Tensor({4})), 2, 1);
  EXPECT_EQ(out.shape(), (Shape{1, 4, 4, 4}));
}

TEST(Conv2dTest, MatchesNaiveLoop) {
  std::mt19937_64 rng(2);
  for (int stride : {1, 2}) {
    for (int pad : {0, 1, 3}) {
      for (int k : {1, 3}) {
        Tape tape;
        const Tensor x = RandomTensor({2, 3, 7, 6}, rng);
        const Tensor w = RandomTensor({4, 3, k, k}, rng);
        const Tensor b = RandomTensor({4}, rng);
        Var out = Conv2d(tape.Constant(x), tape.Constant(w), tape.Constant(b),
                         stride, pad);
        const Tensor expected = NaiveConv(x, w, b, stride, pad);
        ASSERT_EQ(out.shape(), expected.shape());
        for (size_t i = 0; i < expected.size(); ++i) {
          EXPECT_NEAR(out.value()[i], expected[i], 1e-12);
        }
      }
    }
  }
}

TEST(Conv2dTest, RejectsChannelMismatch) {
  Tape tape;
  EXPECT_THROW(Conv2d(tape.Constant(Tensor({1, 2, 4, 4})),
                      tape.Constant(Tensor({1, 3, 3, 3})),
                      tape.Constant(Tensor({1})), 1, 1),
               ShapeError);
  EXPECT_THROW(Conv2d(tape.Constant(Tensor({1, 3, 2, 2})),
                      tape.Constant(Tensor({1, 3, 5, 5})),
                      tape.Constant(Tensor({1})), 1, 0),
               ShapeError);
}

TEST(PoolTest, ConstantInputIsPreservedByEveryKind) {
  Tape tape;
  Var x = tape.Constant(Tensor({2, 3, 4, 4}, 5.0));
  for (PoolKind kind : {PoolKind::kSpatialAvg, PoolKind::kChannelAvg,
                        PoolKind::kChannelMax, PoolKind::kChannelAvgMax}) {
    for (double v : Pool(x, kind).value().data()) EXPECT_DOUBLE_EQ(v, 5.0);
  }
}

TEST(PoolTest, ChannelAverageAndMaxAtOnePixel) {
  Tape tape;
  Var x = tape.Constant(Tensor({1, 3, 1, 1}, {1.0, 2.0, 3.0}));
  EXPECT_DOUBLE_EQ(Pool(x, PoolKind::kChannelAvg).value().item(), 2.0);
  EXPECT_DOUBLE_EQ(Pool(x, PoolKind::kChannelMax).value().item(), 3.0);
  EXPECT_EQ(Pool(x, PoolKind::kSpatialAvg).shape(), (Shape{1, 3, 1, 1}));
  EXPECT_EQ(Pool(x, PoolKind::kChannelAvgMax).shape(), (Shape{1, 2, 1, 1}));
}

TEST(PoolTest, SpatialAverageMatchesExplicitMean) {
  std::mt19937_64 rng(3);
  Tape tape;
  const Tensor x = RandomTensor({2, 4, 3, 3}, rng);
  const Tensor out = Pool(tape.Constant(x), PoolKind::kSpatialAvg).value();
  for (int i = 0; i < 8; ++i) {
    double s = 0.0;
    for (int p = 0; p < 9; ++p) s += x[i * 9 + p];
    EXPECT_NEAR(out[i], s / 9.0, 1e-12);
  }
}

TEST(PoolTest, AvgMaxEqualsStackedAvgAndMax) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    Var x = tape.Constant(RandomTensor({2, 5, 3, 4}, rng));
    const Tensor both = Pool(x, PoolKind::kChannelAvgMax).value();
    const Tensor stacked = ChannelConcat(Pool(x, PoolKind::kChannelAvg),
                                         Pool(x, PoolKind::kChannelMax))
                               .value();
    EXPECT_EQ(both, stacked);
  }
}

TEST(PoolTest, MaxGradientRoutesToFirstTiedChannel) {
  Parameter x = MakeParam("x", Tensor({1, 3, 1, 1}, {2.0, 2.0, 1.0}));
  Tape tape;
  tape.Backward(Sum(Pool(tape.Param(x), PoolKind::kChannelMax)));
  EXPECT_EQ(x.grad, Tensor({1, 3, 1, 1}, {1.0, 0.0, 0.0}));
}

TEST(ElementwiseTest, Basics) {
  Tape tape;
  EXPECT_DOUBLE_EQ(Sigmoid(tape.Constant(Tensor::Scalar(0.0))).value().item(),
                   0.5);
  std::mt19937_64 rng(5);
  Var x = tape.Constant(RandomTensor({2, 3}, rng));
  for (double v : Sub(x, x).value().data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(Add(x, tape.Constant(Tensor({3, 2}))), ShapeError);
  const Tensor r = Relu(tape.Constant(Tensor({3}, {-1.0, 0.0, 2.0}))).value();
  EXPECT_EQ(r, Tensor({3}, {0.0, 0.0, 2.0}));
}

TEST(ElementwiseTest, BroadcastAddChannelAndSpatialTerms) {
  Tape tape;
  Var a = tape.Constant(Tensor({1, 2, 1, 1}, {10.0, 20.0}));
  Var c = tape.Constant(Tensor({1, 1, 2, 2}, 0.5));
  const Tensor out = BroadcastAdd(a, c).value();
  ASSERT_EQ(out.shape(), (Shape{1, 2, 2, 2}));
  for (int p = 0; p < 4; ++p) {
    EXPECT_DOUBLE_EQ(out[p], 10.5);
    EXPECT_DOUBLE_EQ(out[4 + p], 20.5);
  }
  EXPECT_THROW(BroadcastAdd(a, tape.Constant(Tensor({1, 3, 2, 2}))),
               ShapeError);
}

TEST(LinearTest, IdentityAndRowSelection) {
  std::mt19937_64 rng(6);
  Tape tape;
  const Tensor x = RandomTensor({2, 3, 2}, rng);
  Var id = Linear(tape.Constant(x), tape.Constant(Tensor({2, 2}, {1, 0, 0, 1})),
                  tape.Constant(Tensor({2})));
  EXPECT_EQ(id.value(), x);
  Var sel = Linear(tape.Constant(Tensor({1, 2}, {1, 0})),
                   tape.Constant(Tensor({2, 2}, {1, 2, 3, 4})),
                   tape.Constant(Tensor({2})));
  EXPECT_EQ(sel.value(), Tensor({1, 2}, {1, 2}));
  EXPECT_THROW(Linear(tape.Constant(Tensor({1, 3})),
                      tape.Constant(Tensor({2, 2})), tape.Constant(Tensor({2}))),
               ShapeError);
}

TEST(LinearTest, MatchesExplicitDotProducts) {
  std::mt19937_64 rng(7);
  Tape tape;
  const Tensor x = RandomTensor({4, 5}, rng);
  const Tensor w = RandomTensor({5, 3}, rng);
  const Tensor b = RandomTensor({3}, rng);
  const Tensor out =
      Linear(tape.Constant(x), tape.Constant(w), tape.Constant(b)).value();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = b[j];
      for (int k = 0; k < 5; ++k) s += x[i * 5 + k] * w[k * 3 + j];
      EXPECT_NEAR(out[i * 3 + j], s, 1e-12);
    }
  }
}

TEST(ConcatSplitTest, ShapesAndChannelOrder) {
  Tape tape;
  Var a = tape.Constant(Tensor({1, 8, 4, 4}, 1.0));
  Var b = tape.Constant(Tensor({1, 8, 4, 4}, 2.0));
  EXPECT_EQ(ChannelConcat(a, b).shape(), (Shape{1, 16, 4, 4}));

  Tensor x({1, 6, 2, 2});
  for (size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const std::vector<Var> parts = ChannelSplit(tape.Constant(x), 3);
  ASSERT_EQ(parts.size(), 3u);
  for (int p = 0; p < 3; ++p) {
    EXPECT_EQ(parts[p].shape(), (Shape{1, 2, 2, 2}));
    EXPECT_DOUBLE_EQ(parts[p].value()[0], 8.0 * p);
  }
  EXPECT_THROW(ChannelSplit(tape.Constant(x), 4), ShapeError);
}

TEST(ConcatSplitTest, RoundTripIsBitwiseExact) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<int> extent(1, 4);
    const int n = extent(rng), c = extent(rng), h = extent(rng), w = extent(rng);
    Tape tape;
    const Tensor a = RandomTensor({n, c, h, w}, rng, -1e6, 1e6);
    const Tensor b = RandomTensor({n, c, h, w}, rng, -1e-6, 1e-6);
    const auto parts =
        ChannelSplit(ChannelConcat(tape.Constant(a), tape.Constant(b)), 2);
    EXPECT_EQ(parts[0].value(), a);
    EXPECT_EQ(parts[1].value(), b);
  }
}

TEST(L2NormalizeTest, ContractCases) {
  Tape tape;
  const Tensor u = L2Normalize(tape.Constant(Tensor({2}, {3.0, 4.0}))).value();
  EXPECT_NEAR(u[0], 0.6, 1e-15);
  EXPECT_NEAR(u[1], 0.8, 1e-15);
  const Tensor again = L2Normalize(tape.Constant(u)).value();
  EXPECT_NEAR(again[0], u[0], 1e-12);
  EXPECT_NEAR(again[1], u[1], 1e-12);
  EXPECT_THROW(L2Normalize(tape.Constant(Tensor({2}))), std::domain_error);
  // Rows are normalized independently.
  const Tensor rows =
      L2Normalize(tape.Constant(Tensor({2, 2}, {3, 4, 0, 2}))).value();
  EXPECT_EQ(rows, Tensor({2, 2}, {0.6, 0.8, 0.0, 1.0}));
}

TEST(SoftmaxCrossEntropyTest, ReferenceValues) {
  Tape tape;
  EXPECT_NEAR(SoftmaxCrossEntropy(tape.Constant(Tensor({2, 4}, 0.7)),
                                  std::vector<int>{0, 3})
                  .value()
                  .item(),
              std::log(4.0), 1e-15);
  // -log(e^3 / (e^1 + e^2 + e^3)) evaluated directly.
  const double expected =
      -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
  const double loss = SoftmaxCrossEntropy(tape.Constant(Tensor({1, 3}, {1, 2, 3})),
                                          std::vector<int>{2})
                          .value()
                          .item();
  EXPECT_NEAR(loss, expected, 1e-15);
  EXPECT_NEAR(loss, 0.40760596, 1e-8);
  EXPECT_THROW(SoftmaxCrossEntropy(tape.Constant(Tensor({1, 3})),
                                   std::vector<int>{3}),
               std::out_of_range);
}

TEST(SoftmaxCrossEntropyTest, DecreasesTowardZeroAsTrueLogitGrows) {
  double previous = std::numeric_limits<double>::infinity();
  for (double logit = 0.0; logit <= 40.0; logit += 2.0) {
    Tape tape;
    const double loss = SoftmaxCrossEntropy(
                            tape.Constant(Tensor({1, 3}, {0.0, logit, 0.5})),
                            std::vector<int>{1})
                            .value()
                            .item();
    EXPECT_LT(loss, previous);
    previous = loss;
  }
  EXPECT_LT(previous, 1e-15);
}

TEST(SoftmaxCrossEntropyTest, InvariantToRowShift) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    Tape tape;
    Tensor logits = RandomTensor({3, 5}, rng, -3.0, 3.0);
    Tensor shifted = logits;
    for (int i = 0; i < 3; ++i) {
      const double s = shift(rng);
      for (int j = 0; j < 5; ++j) shifted[i * 5 + j] += s;
    }
    const std::vector<int> labels{0, 2, 4};
    EXPECT_NEAR(SoftmaxCrossEntropy(tape.Constant(logits), labels).value().item(),
                SoftmaxCrossEntropy(tape.Constant(shifted), labels).value().item(),
                1e-12);
  }
}

TEST(BackwardTest, LinearFormGradientIsTheConstant) {
  std::mt19937_64 rng(10);
  const Tensor x = RandomTensor({2, 3}, rng);
  Parameter w = MakeParam("w", RandomTensor({2, 3}, rng));
  Tape tape;
  tape.Backward(Sum(Mul(tape.Param(w), tape.Constant(x))));
  EXPECT_EQ(w.grad, x);
}

TEST(BackwardTest, GradientsAccumulateAcrossUses) {
  Parameter w = MakeParam("w", Tensor({2}, {1.5, -2.0}));
  Tape tape;
  Var a = tape.Param(w);
  Var b = tape.Param(w);  // same node
  EXPECT_EQ(a.id(), b.id());
  // d/dw [sum(3w) + sum(w*w)] = 3 + 2w
  tape.Backward(Add(Sum(Scale(a, 3.0)), Sum(Mul(b, b))));
  EXPECT_EQ(w.grad, Tensor({2}, {6.0, -1.0}));
}

TEST(BackwardTest, RejectsNonScalarLoss) {
  Parameter w = MakeParam("w", Tensor({2}, 1.0));
  Tape tape;
  EXPECT_THROW(tape.Backward(tape.Param(w)), ShapeError);
}

TEST(GradCheckTest, QuadraticIsExact) {
  Parameter w = MakeParam("w", Tensor({1}, 3.0));
  std::vector<Parameter*> params{&w};
  const double err = MaxGradError(
      [&](Tape& t) {
        Var v = t.Param(w);
        return Sum(Mul(v, v));
      },
      params, 1e-5);
  EXPECT_LE(err, 1e-8);
  EXPECT_DOUBLE_EQ(w.grad[0], 6.0);
}

TEST(GradCheckTest, UnusedParameterHasZeroGradient) {
  Parameter used = MakeParam("used", Tensor({2}, {0.3, -0.2}));
  Parameter unused = MakeParam("unused", Tensor({3}, 1.0));
  std::vector<Parameter*> params{&used, &unused};
  const GradCheckReport report = GradCheck(
      [&](Tape& t) { return Sum(Sigmoid(t.Param(used))); }, params);
  EXPECT_EQ(unused.grad, Tensor({3}));
  EXPECT_EQ(report.per_parameter[1].max_rel_error, 0.0);
}

TEST(GradCheckTest, RejectsOutOfRangeEps) {
  Parameter w = MakeParam("w", Tensor({1}, 1.0));
  std::vector<Parameter*> params{&w};
  auto f = [&](Tape& t) { return Sum(t.Param(w)); };
  EXPECT_THROW(MaxGradError(f, params, 1e-2), std::invalid_argument);
  EXPECT_THROW(MaxGradError(f, params, 1e-9), std::invalid_argument);
}

TEST(GradCheckTest, TwoLayerConvSigmoidNetwork) {
  std::mt19937_64 rng(11);
  const Tensor x = RandomTensor({2, 3, 6, 6}, rng);
  Parameter w1 = MakeParam("w1", RandomTensor({4, 3, 3, 3}, rng, -0.5, 0.5));
  Parameter b1 = MakeParam("b1", RandomTensor({4}, rng));
  Parameter w2 = MakeParam("w2", RandomTensor({2, 4, 3, 3}, rng, -0.5, 0.5));
  Parameter b2 = MakeParam("b2", RandomTensor({2}, rng));
  std::vector<Parameter*> params{&w1, &b1, &w2, &b2};
  const double err = MaxGradError(
      [&](Tape& t) {
        Var h = Sigmoid(
            Conv2d(t.Constant(x), t.Param(w1), t.Param(b1), 1, 1));
        Var y = Sigmoid(Conv2d(h, t.Param(w2), t.Param(b2), 2, 1));
        return Probe(y, 99);
      },
      params, 1e-5);
  EXPECT_LE(err, 1e-5);
}

// Per-op gradient checks: every input is a parameter and the op output is
// reduced with a random probe.
class OpGradTest : public ::testing::Test {
 protected:
  double Check(std::vector<Parameter*> params,
               const std::function<Var(Tape&)>& f) {
    return MaxGradError(f, params, 1e-5);
  }
  std::mt19937_64 rng_{12};
};

TEST_F(OpGradTest, Conv2d) {
  Parameter x = MakeParam("x", RandomTensor({2, 4, 6, 6}, rng_));
  Parameter w = MakeParam("w", RandomTensor({3, 4, 3, 3}, rng_));
  Parameter b = MakeParam("b", RandomTensor({3}, rng_));
  for (int stride : {1, 2}) {
    EXPECT_LE(Check({&x, &w, &b},
                    [&](Tape& t) {
                      return Probe(Conv2d(t.Param(x), t.Param(w), t.Param(b),
                                          stride, 1),
                                   1);
                    }),
              1e-5);
  }
}

TEST_F(OpGradTest, Pools) {
  Parameter x = MakeParam("x", RandomTensor({2, 4, 6, 6}, rng_));
  for (PoolKind kind : {PoolKind::kSpatialAvg, PoolKind::kChannelAvg,
                        PoolKind::kChannelMax, PoolKind::kChannelAvgMax}) {
    EXPECT_LE(Check({&x},
                    [&](Tape& t) { return Probe(Pool(t.Param(x), kind), 2); }),
              1e-5);
  }
}

TEST_F(OpGradTest, Elementwise) {
  Parameter a = MakeParam("a", RandomTensor({2, 4, 6, 6}, rng_));
  Parameter b = MakeParam("b", RandomTensor({2, 4, 6, 6}, rng_));
  Parameter s = MakeParam("s", RandomTensor({2, 4, 1, 1}, rng_));
  Parameter p = MakeParam("p", RandomTensor({2, 1, 6, 6}, rng_));
  EXPECT_LE(Check({&a, &b},
                  [&](Tape& t) {
                    Var x = t.Param(a), y = t.Param(b);
                    return Probe(Add(Mul(Sub(x, y), Sigmoid(x)), Relu(y)), 3);
                  }),
            1e-5);
  EXPECT_LE(Check({&s, &p, &a},
                  [&](Tape& t) {
                    return Probe(BroadcastMul(BroadcastAdd(t.Param(s), t.Param(p)),
                                              t.Param(a)),
                                 4);
                  }),
            1e-5);
}

TEST_F(OpGradTest, LinearReshapeConcatSplit) {
  Parameter x = MakeParam("x", RandomTensor({2, 4, 6}, rng_));
  Parameter w = MakeParam("w", RandomTensor({6, 5}, rng_));
  Parameter b = MakeParam("b", RandomTensor({5}, rng_));
  Parameter y = MakeParam("y", RandomTensor({2, 2, 5}, rng_));
  EXPECT_LE(Check({&x, &w, &b, &y},
                  [&](Tape& t) {
                    Var l = Linear(t.Param(x), t.Param(w), t.Param(b));
                    Var cat = ChannelConcat(l, t.Param(y));
                    auto parts = ChannelSplit(Reshape(cat, Shape{2, 6, 5}), 3);
                    return Add(Probe(parts[0], 5), Probe(parts[2], 6));
                  }),
            1e-5);
}

TEST_F(OpGradTest, L2NormalizeAndCrossEntropy) {
  Parameter v = MakeParam("v", RandomTensor({3, 7}, rng_));
  EXPECT_LE(Check({&v}, [&](Tape& t) { return Probe(L2Normalize(t.Param(v)), 7); }),
            1e-5);
  Parameter flat = MakeParam("flat", RandomTensor({7}, rng_));
  EXPECT_LE(
      Check({&flat}, [&](Tape& t) { return Probe(L2Normalize(t.Param(flat)), 8); }),
      1e-5);
  Parameter logits = MakeParam("logits", RandomTensor({4, 5}, rng_, -2, 2));
  const std::vector<int> labels{1, 0, 4, 2};
  EXPECT_LE(Check({&logits},
                  [&](Tape& t) {
                    return SoftmaxCrossEntropy(t.Param(logits), labels);
                  }),
            1e-5);
}

}  // namespace
}  // namespace xvgeo
