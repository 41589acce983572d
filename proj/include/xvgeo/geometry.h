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

// Ground-plane geometry: plane alignment, frustum footprints, plane-to-image
// homographies and the crop size rule.

#ifndef XVGEO_GEOMETRY_H_
#define XVGEO_GEOMETRY_H_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "xvgeo/reconstruction.h"

namespace xvgeo {

class GeometryError : public std::runtime_error {
 public:
  enum class Kind {
    kDegenerate,         // collinear points, singular homography
    kHorizon,            // a frustum ray does not hit the ground plane
    kPose,               // camera at or below the ground plane
    kProjection,         // point maps to infinity
    kEmptyNeighborhood,  // no points around a center
    kInvalidArgument,
  };

  GeometryError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// x' = rotation * x + translation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d Apply(const Eigen::Vector3d& x) const {
    return rotation * x + translation;
  }
  // Throws GeometryError if rotation is not orthonormal with det +1.
  void Validate() const;
};

using Quad = std::array<Eigen::Vector2d, 4>;

struct PlaneFitOptions {
  int iterations = 500;
  uint64_t seed = 0;
};

// Transform that takes the dominant plane of the point cloud to z = 0 with
// its normal along +Z, oriented so most camera centers end up at z > 0.
// The hypothesis with the smallest median point-to-plane distance wins;
// points within 3x that median are refit by least squares.
RigidTransform FitGroundFrame(const Reconstruction& recon,
                              const PlaneFitOptions& options = {});

// Moves points and camera poses by `transform`.
Reconstruction TransformReconstruction(const Reconstruction& recon,
                                       const RigidTransform& transform);

// Mean z of the points with |x - cx| <= r and |y - cy| <= r.
double HeightOffset(const Reconstruction& recon, const Eigen::Vector2d& center,
                    double r);

// Ground-plane intersection of the rays through pixel corners (0,0), (W,0),
// (W,H), (0,H).
Quad FrustumFootprint(const Camera& camera, const Pose& pose);

// Homography taking plane_quad[i] to pixel_quad[i], scaled so H(2,2) = 1.
Eigen::Matrix3d HomographyFromQuad(const Quad& plane_quad,
                                   const Quad& pixel_quad);

Eigen::Vector2d ProjectPoint(const Eigen::Matrix3d& H,
                             const Eigen::Vector2d& point);

// Smallest distance from `pixel` to the four image edges; negative outside.
double EdgeDistance(const Eigen::Vector2d& pixel, int width, int height);

// Half-size of the crop for edge distance d, or nullopt when d < d_min.
std::optional<double> CropSize(double d, double d_min, double d_max);

// Pixel corners in footprint order for a width x height image.
Quad ImageCorners(int width, int height);

// True if the four points form a strictly convex polygon.
bool IsConvex(const Quad& quad);

}  // namespace xvgeo

#endif  // XVGEO_GEOMETRY_H_
