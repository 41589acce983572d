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

#include "xvgeo/geometry.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>

namespace xvgeo {
namespace {

using Kind = GeometryError::Kind;

struct PlaneStats {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();  // ascending
  Eigen::Matrix3d eigenvectors = Eigen::Matrix3d::Identity();
};

PlaneStats Moments(const std::vector<Eigen::Vector3d>& pts) {
  PlaneStats s;
  for (const auto& p : pts) s.centroid += p;
  s.centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector3d d = p - s.centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  s.eigenvalues = eig.eigenvalues();
  s.eigenvectors = eig.eigenvectors();
  return s;
}

bool Collinear(const PlaneStats& s) {
  return !(s.eigenvalues(1) > 1e-12 * s.eigenvalues(2));
}

double Cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

bool HasCollinearTriple(const Quad& q) {
  double scale = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      scale = std::max(scale, (q[i] - q[j]).squaredNorm());
    }
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) return true;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (std::abs(Cross2(q[j] - q[i], q[k] - q[i])) <= 1e-12 * scale) {
          return true;
        }
      }
    }
  }
  return false;
}

// Similarity that moves the centroid to the origin and the mean distance to
// sqrt(2).
Eigen::Matrix3d Conditioner(const Quad& q) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : q) mean += p;
  mean /= 4.0;
  double dist = 0.0;
  for (const auto& p : q) dist += (p - mean).norm();
  dist /= 4.0;
  const double s = std::sqrt(2.0) / dist;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * mean.x(), 0.0, s, -s * mean.y(), 0.0, 0.0, 1.0;
  return t;
}

Eigen::Vector2d Apply2(const Eigen::Matrix3d& t, const Eigen::Vector2d& p) {
  const Eigen::Vector3d h = t * p.homogeneous();
  return h.hnormalized();
}

}  // namespace

void RigidTransform::Validate() const {
  const double ortho = (rotation * rotation.transpose() -
                        Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9) || !(std::abs(rotation.determinant() - 1.0) <= 1e-9)) {
    throw GeometryError(Kind::kInvalidArgument,
                        "ground rotation must be orthonormal with det +1");
  }
  if (!translation.allFinite()) {
    throw GeometryError(Kind::kInvalidArgument,
                        "ground translation is not finite");
  }
}

RigidTransform FitGroundFrame(const Reconstruction& recon,
                              const PlaneFitOptions& options) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(recon.points.size());
  for (const auto& p : recon.points) pts.push_back(p.xyz);
  if (pts.size() < 3) {
    throw GeometryError(Kind::kDegenerate,
                        "plane fit needs at least 3 points, got " +
                            std::to_string(pts.size()));
  }
  const PlaneStats all = Moments(pts);
  if (Collinear(all)) {
    throw GeometryError(Kind::kDegenerate, "point cloud is collinear");
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<size_t> pick(0, pts.size() - 1);
  std::vector<double> residuals(pts.size());
  double best_median = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_normal = all.eigenvectors.col(0);
  double best_offset = -best_normal.dot(all.centroid);
  for (int it = 0; it < options.iterations; ++it) {
    const size_t i = pick(rng);
    const size_t j = pick(rng);
    const size_t k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const Eigen::Vector3d u = pts[j] - pts[i];
    const Eigen::Vector3d v = pts[k] - pts[i];
    Eigen::Vector3d n = u.cross(v);
    const double len = n.norm();
    if (!(len > 1e-12 * u.norm() * v.norm())) continue;
    n /= len;
    const double offset = -n.dot(pts[i]);
    for (size_t p = 0; p < pts.size(); ++p) {
      residuals[p] = std::abs(n.dot(pts[p]) + offset);
    }
    auto mid = residuals.begin() + residuals.size() / 2;
    std::nth_element(residuals.begin(), mid, residuals.end());
    if (*mid < best_median) {
      best_median = *mid;
      best_normal = n;
      best_offset = offset;
    }
  }

  // Least-squares refit on the inliers of the best hypothesis. If sampling
  // never produced a usable triple the all-points fit stands in.
  const double scale = std::sqrt(all.eigenvalues(2));
  const double threshold =
      std::isfinite(best_median)
          ? std::max(3.0 * best_median, 1e-12 * scale)
          : std::numeric_limits<double>::infinity();
  std::vector<Eigen::Vector3d> inliers;
  for (const auto& p : pts) {
    if (std::abs(best_normal.dot(p) + best_offset) <= threshold) {
      inliers.push_back(p);
    }
  }
  Eigen::Vector3d normal = best_normal;
  Eigen::Vector3d centroid = all.centroid;
  if (!inliers.empty()) {
    const PlaneStats fit = Moments(inliers);
    centroid = fit.centroid;
    if (inliers.size() >= 3 && !Collinear(fit)) normal = fit.eigenvectors.col(0);
  }
  normal.normalize();

  int above = 0;
  int below = 0;
  for (const auto& [id, image] : recon.images) {
    const double side = normal.dot(image.pose.Center() - centroid);
    if (side > 0.0) ++above;
    if (side < 0.0) ++below;
  }
  if (below > above || (above == below && normal.z() < 0.0)) normal = -normal;

  RigidTransform frame;
  frame.rotation = Eigen::Quaterniond::FromTwoVectors(
                       normal, Eigen::Vector3d::UnitZ())
                       .toRotationMatrix();
  frame.translation = {0.0, 0.0, -(frame.rotation * centroid).z()};
  return frame;
}

Reconstruction TransformReconstruction(const Reconstruction& recon,
                                       const RigidTransform& transform) {
  transform.Validate();
  Reconstruction out = recon;
  for (auto& p : out.points) p.xyz = transform.Apply(p.xyz);
  const Eigen::Quaterniond inverse_rotation =
      Eigen::Quaterniond(transform.rotation).conjugate();
  for (auto& [id, image] : out.images) {
    Pose& pose = image.pose;
    pose.rotation = (pose.rotation * inverse_rotation).normalized();
    pose.translation -= pose.R() * transform.translation;
  }
  return out;
}

double HeightOffset(const Reconstruction& recon, const Eigen::Vector2d& center,
                    double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw GeometryError(Kind::kInvalidArgument,
                        "neighborhood radius must be finite and >= 0");
  }
  double sum = 0.0;
  int64_t count = 0;
  for (const auto& p : recon.points) {
    if (std::abs(p.xyz.x() - center.x()) <= r &&
        std::abs(p.xyz.y() - center.y()) <= r) {
      sum += p.xyz.z();
      ++count;
    }
  }
  if (count == 0) {
    throw GeometryError(Kind::kEmptyNeighborhood,
                        "no points within " + std::to_string(r) + " of (" +
                            std::to_string(center.x()) + ", " +
                            std::to_string(center.y()) + ")");
  }
  return sum / static_cast<double>(count);
}

Quad ImageCorners(int width, int height) {
  const double w = width;
  const double h = height;
  return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(w, 0.0),
          Eigen::Vector2d(w, h), Eigen::Vector2d(0.0, h)};
}

Quad FrustumFootprint(const Camera& camera, const Pose& pose) {
  const Eigen::Vector3d center = pose.Center();
  if (!(center.z() > 0.0)) {
    throw GeometryError(Kind::kPose, "camera center is not above the plane");
  }
  const Eigen::Matrix3d back = pose.R().transpose() * camera.K().inverse();
  Quad footprint;
  const Quad corners = ImageCorners(camera.width, camera.height);
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d dir = back * corners[i].homogeneous();
    if (!(dir.z() < 0.0)) {
      throw GeometryError(Kind::kHorizon,
                          "corner ray " + std::to_string(i) +
                              " does not reach the ground plane");
    }
    const double lambda = -center.z() / dir.z();
    footprint[i] = (center + lambda * dir).head<2>();
  }
  return footprint;
}

Eigen::Matrix3d HomographyFromQuad(const Quad& plane_quad,
                                   const Quad& pixel_quad) {
  if (HasCollinearTriple(plane_quad) || HasCollinearTriple(pixel_quad)) {
    throw GeometryError(Kind::kDegenerate,
                        "quadrilateral has three collinear vertices");
  }
  const Eigen::Matrix3d t_src = Conditioner(plane_quad);
  const Eigen::Matrix3d t_dst = Conditioner(pixel_quad);
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d p = Apply2(t_src, plane_quad[i]);
    const Eigen::Vector2d q = Apply2(t_dst, pixel_quad[i]);
    a.row(2 * i) << p.x(), p.y(), 1.0, 0.0, 0.0, 0.0, -q.x() * p.x(),
        -q.x() * p.y();
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, p.x(), p.y(), 1.0, -q.y() * p.x(),
        -q.y() * p.y();
    b(2 * i) = q.x();
    b(2 * i + 1) = q.y();
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) {
    throw GeometryError(Kind::kDegenerate, "homography system is singular");
  }
  const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  Eigen::Matrix3d result = t_dst.inverse() * hn * t_src;
  if (!(std::abs(result(2, 2)) > 1e-12 * result.norm())) {
    throw GeometryError(Kind::kDegenerate,
                        "homography cannot be normalized to h33 = 1");
  }
  result /= result(2, 2);
  return result;
}

Eigen::Vector2d ProjectPoint(const Eigen::Matrix3d& H,
                             const Eigen::Vector2d& point) {
  const Eigen::Vector3d h = H * point.homogeneous();
  const double scale = H.row(2).cwiseAbs().dot(
      Eigen::Vector3d(std::abs(point.x()), std::abs(point.y()), 1.0));
  if (!(std::abs(h.z()) > 1e-12 * scale)) {
    throw GeometryError(Kind::kProjection, "point maps to infinity");
  }
  return h.hnormalized();
}

double EdgeDistance(const Eigen::Vector2d& pixel, int width, int height) {
  return std::min({pixel.x(), pixel.y(), width - pixel.x(),
                   height - pixel.y()});
}

std::optional<double> CropSize(double d, double d_min, double d_max) {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max)) {
    throw GeometryError(Kind::kInvalidArgument,
                        "crop thresholds must satisfy 0 < d_min < d_max");
  }
  if (d >= d_max) return d_max;
  if (d >= d_min) return d;
  return std::nullopt;
}

bool IsConvex(const Quad& quad) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d e0 = quad[(i + 1) % 4] - quad[i];
    const Eigen::Vector2d e1 = quad[(i + 2) % 4] - quad[(i + 1) % 4];
    const double c = Cross2(e0, e1);
    if (c == 0.0) return false;
    const int s = c > 0.0 ? 1 : -1;
    if (sign != 0 && s != sign) return false;
    sign = s;
  }
  return true;
}

}  // namespace xvgeo
