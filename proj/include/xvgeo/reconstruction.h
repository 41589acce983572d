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

// Sparse reconstruction model and a reader for the plain-text export
// (cameras.txt, images.txt, points3D.txt).
//
// Poses map world to camera coordinates: x_cam = R(q) x_world + t, so the
// projection center is C = -R(q)^T t.

#ifndef XVGEO_RECONSTRUCTION_H_
#define XVGEO_RECONSTRUCTION_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace xvgeo {

enum class CameraModel { kSimplePinhole, kPinhole };

struct Camera {
  int id = 0;
  CameraModel model = CameraModel::kPinhole;
  int width = 0;
  int height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Matrix3d K() const;
};

struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Matrix3d R() const { return rotation.toRotationMatrix(); }
  Eigen::Vector3d Center() const { return -(R().transpose() * translation); }
};

struct PosedImage {
  int id = 0;
  Pose pose;
  int camera_id = 0;
  std::string name;
};

struct Point3D {
  int64_t id = 0;
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  std::array<uint8_t, 3> rgb{};
  double error = 0.0;
};

struct Reconstruction {
  std::map<int, Camera> cameras;
  std::map<int, PosedImage> images;
  std::vector<Point3D> points;

  const Camera& CameraOf(const PosedImage& image) const;
};

class ReconstructionError : public std::runtime_error {
 public:
  enum class Kind { kIo, kParse, kUnsupportedModel, kIntegrity };

  ReconstructionError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Reads cameras.txt, images.txt and points3D.txt from `dir`. Supports the
// SIMPLE_PINHOLE (f, cx, cy) and PINHOLE (fx, fy, cx, cy) models. Parse
// errors carry "<file>:<line>:" prefixes. Quaternions are normalized.
Reconstruction ParseReconstruction(const std::filesystem::path& dir);

// Writes the three text files in the same layout (observations are written
// as empty lines).
void WriteReconstruction(const Reconstruction& recon,
                         const std::filesystem::path& dir);

}  // namespace xvgeo

#endif  // XVGEO_RECONSTRUCTION_H_
