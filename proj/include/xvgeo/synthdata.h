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

// Procedural cross-view dataset: one heightfield scene per class, rendered
// top-down as the satellite view and through random projective warps as
// drone views, each with an analytic normal map.

#ifndef XVGEO_SYNTHDATA_H_
#define XVGEO_SYNTHDATA_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xvgeo/image.h"

namespace xvgeo {

struct SceneSpec {
  int num_classes = 20;
  int image_size = 64;
  int train_drone_views = 8;
  int query_drone_views = 4;
  int bumps = 6;               // Gaussians in each heightfield
  double bump_height = 0.12;   // max |amplitude|, scene units (scene is 1x1)
  int texture_waves = 4;       // sinusoids per color channel
  double warp = 0.12;          // max corner displacement, scene units
  double rotation = 0.35;      // max in-plane rotation of drone views, rad
  double zoom = 0.25;          // drone views cover a (1 - zoom..1) fraction
  double jitter = 0.2;         // photometric jitter magnitude, RGB only
  uint64_t seed = 0;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;
};

struct Gaussian {
  Eigen::Vector2d center;
  double amplitude = 0.0;
  double sigma = 1.0;
};

struct Wave {
  Eigen::Vector2d frequency;
  double phase = 0.0;
  double amplitude = 0.0;
};

// Analytic scene over the plane; [0,1]^2 is the satellite footprint.
class Scene {
 public:
  Scene(const SceneSpec& spec, int class_id);

  double Height(const Eigen::Vector2d& p) const;
  Eigen::Vector2d Gradient(const Eigen::Vector2d& p) const;
  // Unit normal of z = h(x, y).
  Eigen::Vector3d Normal(const Eigen::Vector2d& p) const;
  // Texture shaded by the surface orientation, channels in [0, 1].
  Eigen::Vector3d Color(const Eigen::Vector2d& p) const;

 private:
  std::vector<Gaussian> bumps_;
  Eigen::Vector3d base_;
  std::array<std::vector<Wave>, 3> waves_;
  Eigen::Vector3d light_;
};

// Normal vector n encoded as round((n + 1) / 2 * 255) per channel.
std::array<uint8_t, 3> EncodeNormal(const Eigen::Vector3d& n);
Eigen::Vector3d DecodeNormal(const std::array<uint8_t, 3>& rgb);

struct RenderedView {
  Image rgb;
  Image normal;
};

// Renders pixel (u, v) of a size x size image at scene point
// H * [(u + 0.5) / size, (v + 0.5) / size, 1].
RenderedView RenderView(const Scene& scene, const Eigen::Matrix3d& image_to_scene,
                        int size);

// Random drone-view map from unit image coordinates to the scene: a
// rotated, corner-jittered copy of the unit square.
Eigen::Matrix3d RandomDroneWarp(const SceneSpec& spec, uint64_t seed);

// Writes <out>/{train,query,gallery}/{drone,satellite}/<class>/<index>.png
// and <index>_normal.png. Class directories are zero-padded to 4 digits.
// A copy of the spec is written to <out>/synth.toml.
void GenerateDataset(const SceneSpec& spec, const std::filesystem::path& out);

std::string ClassDirName(int class_id);

}  // namespace xvgeo

#endif  // XVGEO_SYNTHDATA_H_
