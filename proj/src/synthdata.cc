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

#include "xvgeo/synthdata.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Geometry>

#include "xvgeo/geometry.h"

namespace xvgeo {
namespace {

enum Stream : uint64_t { kSceneStream = 1, kTrainStream = 2, kQueryStream = 3 };

std::mt19937_64 MakeRng(uint64_t seed, uint64_t a, uint64_t b = 0,
                        uint64_t c = 0) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(a), static_cast<uint32_t>(b),
                    static_cast<uint32_t>(c)};
  return std::mt19937_64(seq);
}

uint8_t Quantize(double v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

}  // namespace

void SceneSpec::Validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw std::invalid_argument(std::string("invalid scene spec field ") + field);
  };
  require(num_classes >= 2, "num_classes (>= 2)");
  require(image_size >= 8, "image_size (>= 8)");
  require(train_drone_views >= 1, "train_drone_views (>= 1)");
  require(query_drone_views >= 0, "query_drone_views (>= 0)");
  require(bumps >= 0, "bumps (>= 0)");
  require(std::isfinite(bump_height) && bump_height >= 0, "bump_height (>= 0)");
  require(texture_waves >= 0, "texture_waves (>= 0)");
  require(std::isfinite(warp) && warp >= 0 && warp <= 0.25, "warp ([0, 0.25])");
  require(std::isfinite(rotation) && std::abs(rotation) <= std::numbers::pi / 2,
          "rotation ([0, pi/2])");
  require(std::isfinite(zoom) && zoom >= 0 && zoom < 1, "zoom ([0, 1))");
  require(std::isfinite(jitter) && jitter >= 0 && jitter <= 1, "jitter ([0, 1])");
}

Scene::Scene(const SceneSpec& spec, int class_id) {
  std::mt19937_64 rng = MakeRng(spec.seed, kSceneStream, class_id);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < spec.bumps; ++i) {
    Gaussian g;
    g.center = {unit(rng), unit(rng)};
    g.amplitude = spec.bump_height * (2.0 * unit(rng) - 1.0);
    g.sigma = 0.06 + 0.1 * unit(rng);
    bumps_.push_back(g);
  }
  base_ = {0.25 + 0.5 * unit(rng), 0.25 + 0.5 * unit(rng),
           0.25 + 0.5 * unit(rng)};
  for (auto& channel : waves_) {
    for (int i = 0; i < spec.texture_waves; ++i) {
      Wave w;
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      const double freq = 1.0 + 2.0 * unit(rng);
      w.frequency = freq * Eigen::Vector2d(std::cos(angle), std::sin(angle));
      w.phase = 2.0 * std::numbers::pi * unit(rng);
      w.amplitude = 0.25 * unit(rng);
      channel.push_back(w);
    }
  }
  const double azimuth = 2.0 * std::numbers::pi * unit(rng);
  light_ = Eigen::Vector3d(0.6 * std::cos(azimuth), 0.6 * std::sin(azimuth), 0.8);
}

double Scene::Height(const Eigen::Vector2d& p) const {
  double h = 0.0;
  for (const Gaussian& g : bumps_) {
    h += g.amplitude *
         std::exp(-(p - g.center).squaredNorm() / (2.0 * g.sigma * g.sigma));
  }
  return h;
}

Eigen::Vector2d Scene::Gradient(const Eigen::Vector2d& p) const {
  Eigen::Vector2d grad = Eigen::Vector2d::Zero();
  for (const Gaussian& g : bumps_) {
    const double s2 = g.sigma * g.sigma;
    const Eigen::Vector2d d = p - g.center;
    grad -= g.amplitude * std::exp(-d.squaredNorm() / (2.0 * s2)) / s2 * d;
  }
  return grad;
}

Eigen::Vector3d Scene::Normal(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d g = Gradient(p);
  return Eigen::Vector3d(-g.x(), -g.y(), 1.0).normalized();
}

Eigen::Vector3d Scene::Color(const Eigen::Vector2d& p) const {
  const double shade = 0.35 + 0.65 * std::max(0.0, Normal(p).dot(light_));
  Eigen::Vector3d c;
  for (int ch = 0; ch < 3; ++ch) {
    double v = base_[ch];
    for (const Wave& w : waves_[ch]) {
      v += w.amplitude *
           std::sin(2.0 * std::numbers::pi * w.frequency.dot(p) + w.phase);
    }
    c[ch] = std::clamp(v, 0.0, 1.0) * shade;
  }
  return c;
}

std::array<uint8_t, 3> EncodeNormal(const Eigen::Vector3d& n) {
  return {Quantize(0.5 * (n.x() + 1.0)), Quantize(0.5 * (n.y() + 1.0)),
          Quantize(0.5 * (n.z() + 1.0))};
}

Eigen::Vector3d DecodeNormal(const std::array<uint8_t, 3>& rgb) {
  return {rgb[0] / 127.5 - 1.0, rgb[1] / 127.5 - 1.0, rgb[2] / 127.5 - 1.0};
}

RenderedView RenderView(const Scene& scene,
                        const Eigen::Matrix3d& image_to_scene, int size) {
  RenderedView out{Image(size, size), Image(size, size)};
  for (int v = 0; v < size; ++v) {
    for (int u = 0; u < size; ++u) {
      const Eigen::Vector3d h =
          image_to_scene * Eigen::Vector3d((u + 0.5) / size, (v + 0.5) / size, 1.0);
      const Eigen::Vector2d p = h.hnormalized();
      const Eigen::Vector3d color = scene.Color(p);
      const auto normal = EncodeNormal(scene.Normal(p));
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(u, v, c) = Quantize(color[c]);
        out.normal.at(u, v, c) = normal[c];
      }
    }
  }
  return out;
}

Eigen::Matrix3d RandomDroneWarp(const SceneSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const double angle = spec.rotation * sym(rng);
  const double scale = 1.0 - spec.zoom * 0.5 * (sym(rng) + 1.0);
  const Eigen::Rotation2Dd rot(angle);
  const Quad unit = ImageCorners(1, 1);
  Quad warped;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d centered = unit[i] - Eigen::Vector2d(0.5, 0.5);
    warped[i] = Eigen::Vector2d(0.5, 0.5) + scale * (rot * centered) +
                spec.warp * Eigen::Vector2d(sym(rng), sym(rng));
  }
  return HomographyFromQuad(unit, warped);
}

std::string ClassDirName(int class_id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", class_id);
  return buf;
}

void GenerateDataset(const SceneSpec& spec, const std::filesystem::path& out) {
  spec.Validate();
  std::filesystem::create_directories(out);
  {
    std::ofstream cfg(out / "synth.toml");
    if (!cfg) throw std::runtime_error("cannot write to " + out.string());
    cfg.precision(17);
    cfg << "num_classes = " << spec.num_classes << "\n"
        << "image_size = " << spec.image_size << "\n"
        << "train_drone_views = " << spec.train_drone_views << "\n"
        << "query_drone_views = " << spec.query_drone_views << "\n"
        << "bumps = " << spec.bumps << "\n"
        << "bump_height = " << spec.bump_height << "\n"
        << "texture_waves = " << spec.texture_waves << "\n"
        << "warp = " << spec.warp << "\n"
        << "rotation = " << spec.rotation << "\n"
        << "zoom = " << spec.zoom << "\n"
        << "jitter = " << spec.jitter << "\n"
        << "seed = " << spec.seed << "\n";
  }
  auto write = [&](const RenderedView& view, const std::filesystem::path& dir,
                   int index) {
    std::filesystem::create_directories(dir);
    WriteImage((dir / (std::to_string(index) + ".png")).string(), view.rgb);
    WriteImage((dir / (std::to_string(index) + "_normal.png")).string(),
               view.normal);
  };
  for (int cls = 0; cls < spec.num_classes; ++cls) {
    const Scene scene(spec, cls);
    const std::string name = ClassDirName(cls);
    const RenderedView satellite =
        RenderView(scene, Eigen::Matrix3d::Identity(), spec.image_size);
    write(satellite, out / "train" / "satellite" / name, 0);
    write(satellite, out / "gallery" / "satellite" / name, 0);

    for (auto [split, stream, count] :
         {std::tuple{"train", kTrainStream, spec.train_drone_views},
          {"query", kQueryStream, spec.query_drone_views}}) {
      for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng = MakeRng(spec.seed, stream, cls, i);
        RenderedView view =
            RenderView(scene, RandomDroneWarp(spec, rng()), spec.image_size);
        // Per-channel gain and a shared offset, RGB only.
        std::uniform_real_distribution<double> sym(-1.0, 1.0);
        const double offset = 0.25 * spec.jitter * sym(rng);
        double gain[3];
        for (double& g : gain) g = 1.0 + 0.5 * spec.jitter * sym(rng);
        for (int y = 0; y < view.rgb.height(); ++y) {
          for (int x = 0; x < view.rgb.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
              view.rgb.at(x, y, c) =
                  Quantize(view.rgb.at(x, y, c) / 255.0 * gain[c] + offset);
            }
          }
        }
        write(view, out / split / "drone" / name, i);
      }
    }
  }
}

}  // namespace xvgeo
