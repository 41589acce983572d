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

// New cross-view instances cut from a posed drone sequence and its
// satellite tile.
//
// Pipeline per center c on the ground plane: shift the aligned cloud so the
// local mean height is zero, map the drone footprints and the satellite
// footprint to pixels by homography, and crop a square of half-size d_cut
// around the projected center in every image where the crop fits.

#ifndef XVGEO_AUGMENT_H_
#define XVGEO_AUGMENT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xvgeo/geometry.h"
#include "xvgeo/reconstruction.h"
#include "xvgeo/view.h"

namespace xvgeo {

struct SatAnnotation {
  std::string image_path;
  int width = 0;
  int height = 0;
  Quad plane_quad;  // TL, TR, BR, BL in the aligned ground frame

  // Throws GeometryError unless the quad is convex and the size positive.
  void Validate() const;
};

// Line 1: image path (relative paths resolve against the file's directory),
// line 2: "W H", lines 3-6: "x y". Blank lines and '#' comments are skipped.
SatAnnotation ReadSatAnnotation(const std::filesystem::path& path);
void WriteSatAnnotation(const std::filesystem::path& path,
                        const SatAnnotation& annotation);

struct CropRect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

struct InstanceCrop {
  int instance_id = 0;
  int candidate = 0;  // index into the 3x3 grid, row major
  View view = View::kDrone;
  std::string source;  // image file name, or the satellite image path
  Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // c in the ground frame
  Eigen::Vector2d projected = Eigen::Vector2d::Zero();
  double half_size = 0.0;
  CropRect rect;
};

struct AugmentOptions {
  int k = 4;
  // Neighborhood half-size for the height offset; <= 0 selects 5% of the
  // satellite footprint diagonal.
  double radius = 0.0;
  double d_min = 96.0;
  double d_max = 256.0;
  uint64_t seed = 0;
  int first_instance_id = 0;
  std::optional<RigidTransform> ground_override;
  PlaneFitOptions plane;
};

struct AugmentResult {
  RigidTransform ground;
  double radius = 0.0;
  std::vector<Eigen::Vector2d> candidates;  // 9 plane points
  std::vector<int> selected;                // retained candidate indices
  std::vector<InstanceCrop> crops;
  std::vector<std::string> warnings;
};

// Nine candidate centers: the {1/4, 1/2, 3/4}^2 grid of satellite pixels
// mapped back to the plane.
std::vector<Eigen::Vector2d> CandidateCenters(const SatAnnotation& annotation);

AugmentResult GenerateInstances(const Reconstruction& recon,
                                const SatAnnotation& annotation,
                                const AugmentOptions& options);

// Writes `<instance>/<view>/<stem>_c<candidate>.png` under out_dir. Drone
// sources are looked up in image_dir.
void WriteCrops(const AugmentResult& result,
                const std::filesystem::path& image_dir,
                const SatAnnotation& annotation,
                const std::filesystem::path& out_dir);

// One line per crop: instance view candidate source h00..h22 cx cy cz
// px py d_cut x0 y0 x1 y1.
void WriteCropMetadata(const std::filesystem::path& path,
                       const AugmentResult& result);

}  // namespace xvgeo

#endif  // XVGEO_AUGMENT_H_
