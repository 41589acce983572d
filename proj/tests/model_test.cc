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
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xvgeo/grad_check.h"
#include "xvgeo/losses.h"
#include "xvgeo/model.h"

namespace xvgeo {
namespace {

using testing::Probe;
using testing::RandomTensor;

ModelConfig SmallConfig(int size = 16) {
  ModelConfig c;
  c.input_height = c.input_width = size;
  c.num_classes = 4;
  c.vector_dim = 32;
  return c;
}

TEST(ModelConfigTest, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.num_classes = 1;
  EXPECT_THROW(DualBranchModel{c}, std::invalid_argument);
  c = ModelConfig();
  c.stage_channels = {8, 16, 32};
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c.stage_channels = {8, 16, 33, 64};
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ModelConfig();
  c.input_width = 40;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = ModelConfig();
  c.aggregation_dim = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(ModelTest, DefaultParameterCount) {
  // Backbones: 3x3 convs 3->8->16->32->64 with biases, two branches.
  const size_t backbone =
      2 * ((8 * 3 * 9 + 8) + (16 * 8 * 9 + 16) + (32 * 16 * 9 + 32) +
           (64 * 32 * 9 + 64));
  // Fusion at 32x32x8, 16x16x16, 8x8x32: p_s, p_c, 1x1 conv 2C->C; two
  // branches.
  const size_t fusion = 2 * ((8 + 1024 + 16 * 8 + 8) + (16 + 256 + 32 * 16 + 16) +
                             (32 + 64 + 64 * 32 + 32));
  // Head at 4x4x64, d = 3.
  const size_t head = 2 * (64 * 64 + 64) + (2 * 2 * 49 + 2) +
                      2 * (32 * 64 + 64) + 2 * (16 * 3 + 3);
  // Classifiers 192 -> 512 -> 20 per branch.
  const size_t classifier = 2 * (192 * 512 + 512 + 512 * 20 + 20);
  EXPECT_EQ(backbone + fusion + head + classifier, 288340u);
  const ModelConfig config;
  EXPECT_EQ(CountParameters(config), 288340u);
  EXPECT_EQ(DualBranchModel(config).parameters().NumScalars(), 288340u);

  ModelConfig rgb_only = config;
  rgb_only.use_normals = false;
  EXPECT_EQ(DualBranchModel(rgb_only).parameters().NumScalars(),
            CountParameters(rgb_only));
}

TEST(ModelTest, SameSeedSameParameters) {
  const DualBranchModel a(SmallConfig());
  const DualBranchModel b(SmallConfig());
  ModelConfig other = SmallConfig();
  other.seed = 1;
  const DualBranchModel c(other);
  const auto pa = a.parameters().All();
  const auto pb = b.parameters().All();
  const auto pc = c.parameters().All();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->value, pb[i]->value) << pa[i]->name;
    any_diff |= !(pa[i]->value == pc[i]->value);
  }
  EXPECT_TRUE(any_diff);
}

TEST(ModelTest, InitializationScheme) {
  const DualBranchModel m(ModelConfig{});
  for (const Parameter* p : m.parameters().All()) {
    const std::string& n = p->name;
    if (n.ends_with(".p_s") || n.ends_with(".p_c")) {
      for (double v : p->value.data()) EXPECT_EQ(v, 1.0) << n;
    } else if (n.ends_with(".bias")) {
      for (double v : p->value.data()) EXPECT_EQ(v, 0.0) << n;
    }
  }
  // Stage 1 conv: fan-in 27, relu gain -> bound sqrt(6/27).
  const Parameter& w = m.parameters().Get("rgb.stage1.weight");
  double max_abs = 0.0;
  for (double v : w.value.data()) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_LE(max_abs, std::sqrt(6.0 / 27.0));
  EXPECT_GT(max_abs, 0.5 * std::sqrt(6.0 / 27.0));
}

TEST(ModelTest, FeatureAndOutputShapes) {
  ModelConfig config;
  config.vector_dim = 512;
  const DualBranchModel m(config);
  std::mt19937_64 rng(1);
  const Tensor x = RandomTensor({2, 3, 64, 64}, rng, 0, 1);
  const Tensor y = RandomTensor({2, 3, 64, 64}, rng, 0, 1);
  Tape tape;
  const BranchFeatures f = m.ExtractFeatures(tape, x, y);
  EXPECT_EQ(f.rgb.shape(), (Shape{2, 64, 4, 4}));
  EXPECT_EQ(f.normal.shape(), (Shape{2, 64, 4, 4}));
  ASSERT_EQ(f.fusion.size(), 3u);
  EXPECT_EQ(f.fusion[0].joint_rgb.shape(), (Shape{2, 16, 32, 32}));

  const ModelOutput out = m.Forward(tape, x, y);
  EXPECT_EQ(out.vector_rgb.shape(), (Shape{2, 512}));
  EXPECT_EQ(out.vector_normal.shape(), (Shape{2, 512}));
  EXPECT_EQ(out.logits_rgb.shape(), (Shape{2, 20}));
  EXPECT_EQ(out.logits_normal.shape(), (Shape{2, 20}));
  EXPECT_EQ(out.descriptor.joint.shape(), (Shape{2, 384}));
  for (const Var& g : {out.descriptor.rgb, out.descriptor.normal}) {
    for (int i = 0; i < 2; ++i) {
      double s = 0.0;
      for (int j = 0; j < 192; ++j) s += g.value()[i * 192 + j] * g.value()[i * 192 + j];
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
  EXPECT_THROW(m.Forward(tape, RandomTensor({2, 3, 32, 32}, rng), y),
               ShapeError);
  EXPECT_THROW(m.Forward(tape, x, RandomTensor({1, 3, 64, 64}, rng)),
               ShapeError);
}

TEST(ModelTest, EqualBranchesStayEqual) {
  DualBranchModel m(SmallConfig(32));
  ParameterStore& store = m.parameters();
  // Copy every RGB-side parameter onto its normal-side twin.
  for (Parameter* p : store.All()) {
    std::string twin = p->name;
    for (auto [from, to] : {std::pair{"rgb.", "normal."},
                            {".r.", ".n."},
                            {"premap_r", "premap_n"},
                            {"project_r", "project_n"},
                            {"aggregate_r", "aggregate_n"},
                            {"head_r", "head_n"}}) {
      const auto pos = twin.find(from);
      if (pos != std::string::npos) {
        twin.replace(pos, std::string(from).size(), to);
        break;
      }
    }
    if (twin != p->name && store.Contains(twin)) store.Get(twin).value = p->value;
  }
  std::mt19937_64 rng(2);
  const Tensor x = RandomTensor({2, 3, 32, 32}, rng, 0, 1);
  Tape tape;
  const BranchFeatures f = m.ExtractFeatures(tape, x, x);
  for (const DafmOutput& d : f.fusion) {
    for (double v : d.amplified_rgb.value().data()) EXPECT_EQ(v, 0.0);
    for (double v : d.amplified_normal.value().data()) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(f.rgb.value(), f.normal.value());
}

TEST(ModelTest, ForwardIsPure) {
  const DualBranchModel m(SmallConfig());
  std::mt19937_64 rng(3);
  const Tensor x = RandomTensor({3, 3, 16, 16}, rng, 0, 1);
  const Tensor y = RandomTensor({3, 3, 16, 16}, rng, 0, 1);
  Tape t1, t2;
  const ModelOutput a = m.Forward(t1, x, y);
  const ModelOutput b = m.Forward(t2, x, y);
  EXPECT_EQ(a.descriptor.joint.value(), b.descriptor.joint.value());
  EXPECT_EQ(a.logits_rgb.value(), b.logits_rgb.value());
  EXPECT_EQ(a.vector_normal.value(), b.vector_normal.value());
  EXPECT_EQ(m.Embed(x, y), m.Embed(x, y));
}

TEST(ModelTest, ViewsShareOneParameterSet) {
  const DualBranchModel m(SmallConfig());
  std::mt19937_64 rng(4);
  auto bound = [&](uint64_t seed) {
    std::mt19937_64 r(seed);
    Tape tape;
    m.Forward(tape, RandomTensor({2, 3, 16, 16}, r, 0, 1),
              RandomTensor({2, 3, 16, 16}, r, 0, 1));
    const auto ps = tape.BoundParameters();
    return std::set<const Parameter*>(ps.begin(), ps.end());
  };
  const auto drone = bound(5);
  const auto satellite = bound(6);
  EXPECT_EQ(drone, satellite);
  const auto all = m.parameters().All();
  EXPECT_EQ(drone, std::set<const Parameter*>(all.begin(), all.end()));
}

TEST(ModelTest, EmbedIsUnitScaledJoint) {
  const DualBranchModel m(SmallConfig());
  std::mt19937_64 rng(7);
  const Tensor x = RandomTensor({2, 3, 16, 16}, rng, 0, 1);
  const Tensor y = RandomTensor({2, 3, 16, 16}, rng, 0, 1);
  const Tensor e = m.Embed(x, y);
  Tape tape;
  const Tensor joint = m.Forward(tape, x, y).descriptor.joint.value();
  ASSERT_EQ(e.shape(), joint.shape());
  for (size_t i = 0; i < e.size(); ++i) {
    EXPECT_NEAR(e[i], joint[i] / std::sqrt(2.0), 1e-12);
  }
}

TEST(ModelTest, RgbOnlyVariant) {
  ModelConfig config = SmallConfig();
  config.use_normals = false;
  const DualBranchModel m(config);
  EXPECT_EQ(config.descriptor_dim(), 192);
  for (const Parameter* p : m.parameters().All()) {
    EXPECT_EQ(p->name.find("normal"), std::string::npos) << p->name;
    EXPECT_EQ(p->name.find("dafm"), std::string::npos) << p->name;
  }
  std::mt19937_64 rng(8);
  const Tensor x = RandomTensor({2, 3, 16, 16}, rng, 0, 1);
  const Tensor e = m.Embed(x, Tensor());
  EXPECT_EQ(e.shape(), (Shape{2, 192}));
  // The normal input is ignored.
  EXPECT_EQ(e, m.Embed(x, RandomTensor({2, 3, 16, 16}, rng)));
}

TEST(ModelTest, CheckpointRoundTrip) {
  const DualBranchModel a(SmallConfig());
  ModelConfig other = SmallConfig();
  other.seed = 9;
  DualBranchModel b(other);
  const auto dir = testing::ScratchDir("checkpoint");
  const std::string path = (dir / "m.bin").string();
  SaveCheckpoint(path, a.parameters());
  LoadCheckpoint(path, b.parameters());
  std::mt19937_64 rng(10);
  const Tensor x = RandomTensor({2, 3, 16, 16}, rng, 0, 1);
  const Tensor y = RandomTensor({2, 3, 16, 16}, rng, 0, 1);
  EXPECT_EQ(a.Embed(x, y), b.Embed(x, y));

  std::ifstream raw(path, std::ios::binary);
  char magic[4];
  raw.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "JRNM");

  ModelConfig wider = SmallConfig();
  wider.vector_dim = 64;
  DualBranchModel c(wider);
  EXPECT_THROW(LoadCheckpoint(path, c.parameters()), std::runtime_error);
  std::ofstream(dir / "junk.bin") << "not a checkpoint";
  EXPECT_THROW(LoadCheckpoint((dir / "junk.bin").string(), b.parameters()),
               std::runtime_error);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  EXPECT_THROW(LoadCheckpoint(path, b.parameters()), std::runtime_error);
}

TEST(ModelTest, FeatureGradientCheck) {
  DualBranchModel m(SmallConfig());
  std::mt19937_64 rng(11);
  const Tensor x = RandomTensor({1, 3, 16, 16}, rng, 0, 1);
  const Tensor y = RandomTensor({1, 3, 16, 16}, rng, 0, 1);
  // Convolutions sit next to relu kinks and want a small step; many fusion
  // gradients are ~1e-7 and need a wide one to stay above roundoff.
  std::vector<Parameter*> convs;
  std::vector<Parameter*> fusion;
  for (Parameter* p : m.parameters().All()) {
    if (p->name.starts_with("rgb.") || p->name.starts_with("normal.")) {
      convs.push_back(p);
    } else if (p->name.starts_with("dafm")) {
      fusion.push_back(p);
    }
  }
  const LossClosure loss = [&](Tape& t) {
    const BranchFeatures f = m.ExtractFeatures(t, x, y);
    return Add(Probe(f.rgb, 1), Probe(f.normal, 2));
  };
  GradCheckOptions options;
  options.max_entries_per_parameter = 24;
  for (auto [group, eps] : {std::pair{&convs, 1e-5}, {&fusion, 1e-3}}) {
    options.eps = eps;
    const GradCheckReport report = GradCheck(loss, *group, options);
    for (const auto& p : report.per_parameter) {
      EXPECT_LE(p.max_rel_error, 1e-5) << p.name;
    }
  }
}

TEST(ModelTest, TotalLossGradientCheck) {
  DualBranchModel m(SmallConfig());
  std::mt19937_64 rng(12);
  // Two classes, each seen from both views.
  const Tensor x = RandomTensor({4, 3, 16, 16}, rng, 0, 1);
  const Tensor y = RandomTensor({4, 3, 16, 16}, rng, 0, 1);
  BatchLabels labels;
  labels.class_id = {0, 0, 1, 1};
  labels.view = {View::kDrone, View::kSatellite, View::kDrone, View::kSatellite};
  GradCheckOptions options;
  options.max_entries_per_parameter = 12;
  const GradCheckReport report = GradCheck(
      [&](Tape& t) { return ModelLoss(m.Forward(t, x, y), labels).total; },
      m.parameters().All(), options);
  for (const auto& p : report.per_parameter) {
    EXPECT_LE(p.max_rel_error, 1e-4) << p.name;
  }
}

}  // namespace
}  // namespace xvgeo
