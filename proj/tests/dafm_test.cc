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

#include <gtest/gtest.h>

#include "test_util.h"
#include "xvgeo/dafm.h"
#include "xvgeo/grad_check.h"

namespace xvgeo {
namespace {

using testing::MakeParam;
using testing::Probe;
using testing::RandomTensor;

double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double DeltaDirect(double x) {
  const double s = Logistic(x);
  return 1.0 - 4.0 * s * (1.0 - s);
}

struct Fixture {
  ParameterStore store;
  Initializer init{7};
  DafmParams rgb;
  DafmParams normal;

  Fixture(int c, int h, int w, uint64_t seed = 1) {
    rgb = AddDafmParams(store, "r", c, h, w, init);
    normal = AddDafmParams(store, "n", c, h, w, init);
    std::mt19937_64 rng(seed);
    for (DafmParams* p : {&rgb, &normal}) {
      p->spatial_scale->value = RandomTensor({c}, rng, 0.5, 1.5);
      p->channel_scale->value = RandomTensor({h * w}, rng, 0.5, 1.5);
    }
  }
};

TEST(DeltaActivationTest, ClosedFormValues) {
  EXPECT_EQ(DeltaActivation(0.0), 0.0);
  EXPECT_NEAR(DeltaActivation(std::log(3.0)), 0.25, 1e-15);
  EXPECT_NEAR(DeltaActivation(2.0), 0.580026, 1e-6);
  for (double x : {-7.5, -1.0, 0.3, 2.0, 4.0, 11.0}) {
    EXPECT_NEAR(DeltaActivation(x), DeltaDirect(x), 1e-12) << x;
  }
}

TEST(DeltaActivationTest, EvenAndBounded) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-60.0, 60.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    EXPECT_EQ(DeltaActivation(x), DeltaActivation(-x));
    EXPECT_GE(DeltaActivation(x), 0.0);
    EXPECT_LT(DeltaActivation(x), 1.0);
  }
  EXPECT_LT(DeltaActivation(1e300), 1.0);
}

TEST(DeltaActivationTest, GradientMatchesFiniteDifference) {
  std::mt19937_64 rng(3);
  Parameter x = MakeParam("x", RandomTensor({3, 5}, rng, -4.0, 4.0));
  std::vector<Parameter*> params{&x};
  EXPECT_LE(MaxGradError(
                [&](Tape& t) { return Probe(DeltaActivation(t.Param(x)), 4); },
                params, 1e-6),
            1e-5);
}

TEST(DafmWeightsTest, ZeroDifferenceGivesZeroWeights) {
  Fixture f(3, 4, 5);
  Tape tape;
  const Var w = DafmWeights(tape.Constant(Tensor({2, 3, 4, 5})), f.rgb);
  for (double v : w.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(DafmWeightsTest, ScalarCaseMatchesDirectFormula) {
  ParameterStore store;
  Initializer init(0);
  const DafmParams p = AddDafmParams(store, "s", 1, 1, 1, init);
  Tape tape;
  const Var w = DafmWeights(tape.Constant(Tensor({1, 1, 1, 1}, 2.0)), p);
  // SP = CP = 2, argument 4.
  EXPECT_NEAR(w.value()[0], DeltaDirect(4.0), 1e-12);
  EXPECT_NEAR(w.value()[0], 0.929349, 1e-6);
}

TEST(DafmWeightsTest, MatchesExplicitLoops) {
  const int n = 2, c = 3, h = 4, wd = 5;
  Fixture f(c, h, wd);
  std::mt19937_64 rng(5);
  const Tensor d = RandomTensor({n, c, h, wd}, rng, -2.0, 2.0);
  Tape tape;
  const Tensor w = DafmWeights(tape.Constant(d), f.rgb).value();
  const Tensor& ps = f.rgb.spatial_scale->value;
  const Tensor& pc = f.rgb.channel_scale->value;
  auto at = [&](int i, int ch, int y, int x) {
    return d[((i * c + ch) * h + y) * wd + x];
  };
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      double sp = 0.0;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wd; ++x) sp += at(i, ch, y, x);
      }
      sp /= h * wd;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < wd; ++x) {
          double cp = 0.0;
          for (int k = 0; k < c; ++k) cp += at(i, k, y, x);
          cp /= c;
          const double want = DeltaDirect(ps[ch] * sp + pc[y * wd + x] * cp);
          EXPECT_NEAR(w[((i * c + ch) * h + y) * wd + x], want, 1e-12);
        }
      }
    }
  }
}

TEST(DafmWeightsTest, RangeAndEvenness) {
  Fixture f(4, 3, 3);
  std::mt19937_64 rng(6);
  const Tensor d = RandomTensor({3, 4, 3, 3}, rng, -30.0, 30.0);
  Tensor neg = d;
  for (double& v : neg.data()) v = -v;
  Tape tape;
  const Tensor w = DafmWeights(tape.Constant(d), f.rgb).value();
  const Tensor w_neg = DafmWeights(tape.Constant(neg), f.rgb).value();
  EXPECT_EQ(w, w_neg);
  for (double v : w.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(DafmWeightsTest, ShapeMismatch) {
  Fixture f(3, 4, 5);
  Tape tape;
  EXPECT_THROW(DafmWeights(tape.Constant(Tensor({1, 2, 4, 5})), f.rgb),
               ShapeError);
  EXPECT_THROW(DafmWeights(tape.Constant(Tensor({1, 3, 5, 4, 1})), f.rgb),
               ShapeError);
  EXPECT_THROW(DafmWeights(tape.Constant(Tensor({1, 3, 4, 4})), f.rgb),
               ShapeError);
}

TEST(DafmFuseTest, EqualBranchesAmplifyNothing) {
  Fixture f(3, 4, 4);
  std::mt19937_64 rng(8);
  const Tensor x = RandomTensor({2, 3, 4, 4}, rng);
  Tape tape;
  const DafmOutput out =
      DafmFuse(tape.Constant(x), tape.Constant(x), f.rgb, f.normal);
  for (double v : out.amplified_rgb.value().data()) EXPECT_EQ(v, 0.0);
  for (double v : out.amplified_normal.value().data()) EXPECT_EQ(v, 0.0);
  const Tensor expected =
      ChannelConcat(tape.Constant(x), tape.Constant(Tensor({2, 3, 4, 4})))
          .value();
  EXPECT_EQ(out.joint_rgb.value(), expected);
  EXPECT_EQ(out.joint_normal.value(), expected);
}

TEST(DafmFuseTest, ScalarCaseSelectsAmplifiedChannel) {
  ParameterStore store;
  Initializer init(0);
  const DafmParams pr = AddDafmParams(store, "r", 1, 1, 1, init);
  const DafmParams pn = AddDafmParams(store, "n", 1, 1, 1, init);
  // Projection [0, 1]: pass the amplified channel straight through.
  pr.reproject.weight->value = Tensor({1, 2, 1, 1}, {0.0, 1.0});
  pr.reproject.bias->value = Tensor({1});
  Tape tape;
  const DafmOutput out =
      DafmFuse(tape.Constant(Tensor({1, 1, 1, 1}, 2.0)),
               tape.Constant(Tensor({1, 1, 1, 1}, 1.0)), pr, pn);
  EXPECT_NEAR(out.amplified_rgb.value()[0], DeltaDirect(2.0), 1e-12);
  EXPECT_NEAR(out.fused_rgb.value()[0], 0.580026, 1e-6);
  EXPECT_NEAR(out.amplified_normal.value()[0], -DeltaDirect(2.0), 1e-12);
}

TEST(DafmFuseTest, SharedParamsGiveMirroredAmplification) {
  Fixture f(3, 4, 4);
  std::mt19937_64 rng(9);
  Tape tape;
  const Var r = tape.Constant(RandomTensor({2, 3, 4, 4}, rng));
  const Var n = tape.Constant(RandomTensor({2, 3, 4, 4}, rng));
  const DafmOutput a = DafmFuse(r, n, f.rgb, f.rgb);
  const DafmOutput b = DafmFuse(n, r, f.rgb, f.rgb);
  Tensor negated = a.amplified_rgb.value();
  for (double& v : negated.data()) v = -v;
  EXPECT_EQ(a.amplified_normal.value(), negated);
  EXPECT_EQ(b.amplified_rgb.value(), a.amplified_normal.value());
  EXPECT_EQ(b.amplified_normal.value(), a.amplified_rgb.value());
}

TEST(DafmFuseTest, ProjectionMatchesExplicitLoops) {
  const int c = 3, hw = 4;
  Fixture f(c, 2, 2);
  std::mt19937_64 rng(10);
  Tape tape;
  const Var r = tape.Constant(RandomTensor({1, c, 2, 2}, rng));
  const Var n = tape.Constant(RandomTensor({1, c, 2, 2}, rng));
  const DafmOutput out = DafmFuse(r, n, f.rgb, f.normal);
  const Tensor& wt = f.rgb.reproject.weight->value;
  const Tensor& bias = f.rgb.reproject.bias->value;
  const Tensor& amp = out.amplified_rgb.value();
  for (int o = 0; o < c; ++o) {
    for (int p = 0; p < hw; ++p) {
      double want = bias[o];
      for (int k = 0; k < c; ++k) {
        want += wt[o * 2 * c + k] * r.value()[k * hw + p];
        want += wt[o * 2 * c + c + k] * amp[k * hw + p];
      }
      EXPECT_NEAR(out.fused_rgb.value()[o * hw + p], want, 1e-12);
    }
  }
}

TEST(DafmFuseTest, ShapeMismatch) {
  Fixture f(3, 4, 4);
  Tape tape;
  EXPECT_THROW(DafmFuse(tape.Constant(Tensor({1, 3, 4, 4})),
                        tape.Constant(Tensor({2, 3, 4, 4})), f.rgb, f.normal),
               ShapeError);
}

TEST(DafmFuseTest, GradientCheck) {
  Fixture f(4, 6, 6);
  std::mt19937_64 rng(11);
  Parameter r = MakeParam("f_r", RandomTensor({2, 4, 6, 6}, rng));
  Parameter n = MakeParam("f_n", RandomTensor({2, 4, 6, 6}, rng));
  std::vector<Parameter*> params{&r, &n};
  for (Parameter* p : f.store.All()) params.push_back(p);
  const GradCheckReport report = GradCheck(
      [&](Tape& t) {
        const DafmOutput out = DafmFuse(t.Param(r), t.Param(n), f.rgb, f.normal);
        return Add(Probe(out.fused_rgb, 1), Probe(out.fused_normal, 2));
      },
      params);
  EXPECT_LE(report.max_rel_error, 1e-5);
  for (const auto& p : report.per_parameter) {
    EXPECT_GT(p.entries_checked, 0u) << p.name;
  }
}

}  // namespace
}  // namespace xvgeo
