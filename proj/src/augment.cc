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

#include "xvgeo/augment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "xvgeo/image.h"

namespace xvgeo {
namespace {

using Kind = GeometryError::Kind;

bool NextContentLine(std::istream& in, std::string* line) {
  while (std::getline(in, *line)) {
    const auto begin = line->find_first_not_of(" \t\r");
    if (begin == std::string::npos || (*line)[begin] == '#') continue;
    const auto end = line->find_last_not_of(" \t\r");
    *line = line->substr(begin, end - begin + 1);
    return true;
  }
  return false;
}

double FootprintDiagonal(const Quad& q) {
  return 0.5 * ((q[0] - q[2]).norm() + (q[1] - q[3]).norm());
}

CropRect RectAround(const Eigen::Vector2d& center, double half) {
  return {center.x() - half, center.y() - half, center.x() + half,
          center.y() + half};
}

std::string Describe(const Eigen::Vector2d& c) {
  std::ostringstream s;
  s << "(" << c.x() << ", " << c.y() << ")";
  return s.str();
}

}  // namespace

void SatAnnotation::Validate() const {
  if (width <= 0 || height <= 0) {
    throw GeometryError(Kind::kInvalidArgument,
                        "satellite image size must be positive");
  }
  if (!IsConvex(plane_quad)) {
    throw GeometryError(Kind::kDegenerate,
                        "satellite footprint is not a convex quadrilateral");
  }
}

SatAnnotation ReadSatAnnotation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open satellite annotation " +
                             path.string());
  }
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
  };
  SatAnnotation a;
  std::string line;
  if (!NextContentLine(in, &line)) fail("missing image path");
  std::filesystem::path image(line);
  if (image.is_relative()) image = path.parent_path() / image;
  a.image_path = image.string();
  if (!NextContentLine(in, &line)) fail("missing image size");
  {
    std::istringstream s(line);
    std::string extra;
    if (!(s >> a.width >> a.height) || (s >> extra)) fail("expected \"W H\"");
  }
  for (int i = 0; i < 4; ++i) {
    if (!NextContentLine(in, &line)) fail("expected 4 footprint vertices");
    std::istringstream s(line);
    double x = 0.0;
    double y = 0.0;
    std::string extra;
    if (!(s >> x >> y) || (s >> extra)) fail("expected \"x y\" vertex");
    a.plane_quad[i] = {x, y};
  }
  a.Validate();
  return a;
}

void WriteSatAnnotation(const std::filesystem::path& path,
                        const SatAnnotation& annotation) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << annotation.image_path << '\n'
      << annotation.width << ' ' << annotation.height << '\n';
  for (const auto& v : annotation.plane_quad) {
    out << v.x() << ' ' << v.y() << '\n';
  }
}

std::vector<Eigen::Vector2d> CandidateCenters(const SatAnnotation& annotation) {
  const Eigen::Matrix3d h = HomographyFromQuad(
      annotation.plane_quad, ImageCorners(annotation.width, annotation.height));
  const Eigen::Matrix3d inverse = h.inverse();
  constexpr double kProportions[3] = {0.25, 0.5, 0.75};
  std::vector<Eigen::Vector2d> centers;
  for (double py : kProportions) {
    for (double px : kProportions) {
      centers.push_back(ProjectPoint(
          inverse, {px * annotation.width, py * annotation.height}));
    }
  }
  return centers;
}

AugmentResult GenerateInstances(const Reconstruction& recon,
                                const SatAnnotation& annotation,
                                const AugmentOptions& options) {
  if (options.k < 1 || options.k > 9) {
    throw GeometryError(Kind::kInvalidArgument, "k must be in [1, 9]");
  }
  CropSize(0.0, options.d_min, options.d_max);  // validates thresholds
  annotation.Validate();

  AugmentResult result;
  if (options.ground_override) {
    options.ground_override->Validate();
    result.ground = *options.ground_override;
  } else {
    result.ground = FitGroundFrame(recon, options.plane);
  }
  const Reconstruction aligned = TransformReconstruction(recon, result.ground);
  result.radius = options.radius > 0.0
                      ? options.radius
                      : 0.05 * FootprintDiagonal(annotation.plane_quad);

  const Eigen::Matrix3d h_sat = HomographyFromQuad(
      annotation.plane_quad, ImageCorners(annotation.width, annotation.height));
  result.candidates = CandidateCenters(annotation);

  struct SatCrop {
    int candidate;
    Eigen::Vector2d projected;
    double half;
  };
  std::vector<SatCrop> survivors;
  for (int i = 0; i < static_cast<int>(result.candidates.size()); ++i) {
    const Eigen::Vector2d p = ProjectPoint(h_sat, result.candidates[i]);
    const auto half = CropSize(EdgeDistance(p, annotation.width,
                                            annotation.height),
                               options.d_min, options.d_max);
    if (half) survivors.push_back({i, p, *half});
  }
  std::mt19937_64 rng(options.seed);
  std::shuffle(survivors.begin(), survivors.end(), rng);

  for (const SatCrop& sat : survivors) {
    if (static_cast<int>(result.selected.size()) == options.k) break;
    const Eigen::Vector2d& c = result.candidates[sat.candidate];
    double z_bar = 0.0;
    try {
      z_bar = HeightOffset(aligned, c, result.radius);
    } catch (const GeometryError& e) {
      if (e.kind() != Kind::kEmptyNeighborhood) throw;
      result.warnings.push_back("center " + std::to_string(sat.candidate) +
                                " skipped: " + e.what());
      continue;
    }
    RigidTransform lower;
    lower.translation = {0.0, 0.0, -z_bar};
    const Reconstruction shifted = TransformReconstruction(aligned, lower);
    const int instance =
        options.first_instance_id + static_cast<int>(result.selected.size());
    const Eigen::Vector3d center(c.x(), c.y(), z_bar);

    std::vector<InstanceCrop> drone;
    for (const auto& [id, image] : shifted.images) {
      const Camera& camera = shifted.CameraOf(image);
      InstanceCrop crop;
      try {
        const Quad footprint = FrustumFootprint(camera, image.pose);
        crop.homography = HomographyFromQuad(
            footprint, ImageCorners(camera.width, camera.height));
        crop.projected = ProjectPoint(crop.homography, c);
      } catch (const GeometryError& e) {
        result.warnings.push_back("center " + std::to_string(sat.candidate) +
                                  ", image " + image.name + ": " + e.what());
        continue;
      }
      const auto half =
          CropSize(EdgeDistance(crop.projected, camera.width, camera.height),
                   options.d_min, options.d_max);
      if (!half) continue;
      crop.instance_id = instance;
      crop.candidate = sat.candidate;
      crop.view = View::kDrone;
      crop.source = image.name;
      crop.center = center;
      crop.half_size = *half;
      crop.rect = RectAround(crop.projected, *half);
      drone.push_back(crop);
    }
    if (drone.empty()) {
      result.warnings.push_back("center " + std::to_string(sat.candidate) +
                                " at " + Describe(c) +
                                " dropped: no drone image admits a crop");
      continue;
    }
    InstanceCrop sat_crop;
    sat_crop.instance_id = instance;
    sat_crop.candidate = sat.candidate;
    sat_crop.view = View::kSatellite;
    sat_crop.source = annotation.image_path;
    sat_crop.homography = h_sat;
    sat_crop.center = center;
    sat_crop.projected = sat.projected;
    sat_crop.half_size = sat.half;
    sat_crop.rect = RectAround(sat.projected, sat.half);
    result.crops.push_back(sat_crop);
    result.crops.insert(result.crops.end(), drone.begin(), drone.end());
    result.selected.push_back(sat.candidate);
  }
  if (static_cast<int>(result.selected.size()) < options.k) {
    result.warnings.push_back(
        "only " + std::to_string(result.selected.size()) + " of " +
        std::to_string(options.k) + " requested centers survived");
  }
  return result;
}

void WriteCrops(const AugmentResult& result,
                const std::filesystem::path& image_dir,
                const SatAnnotation& annotation,
                const std::filesystem::path& out_dir) {
  std::map<std::string, Image> cache;
  auto source_image = [&](const InstanceCrop& crop) -> const Image& {
    auto it = cache.find(crop.source);
    if (it != cache.end()) return it->second;
    const std::string path = crop.view == View::kSatellite
                                 ? annotation.image_path
                                 : (image_dir / crop.source).string();
    return cache.emplace(crop.source, ReadImage(path)).first->second;
  };
  for (const InstanceCrop& crop : result.crops) {
    const Image& source = source_image(crop);
    const double side = 2.0 * crop.half_size;
    const int size = std::max(1, static_cast<int>(std::lround(side)));
    const Image patch =
        ResampleSquare(source, crop.rect.x0, crop.rect.y0, side, size);
    const std::filesystem::path dir =
        out_dir / std::to_string(crop.instance_id) / ViewName(crop.view);
    std::filesystem::create_directories(dir);
    const std::string stem = std::filesystem::path(crop.source).stem().string();
    WriteImage((dir / (stem + "_c" + std::to_string(crop.candidate) + ".png"))
                   .string(),
               patch);
  }
}

void WriteCropMetadata(const std::filesystem::path& path,
                       const AugmentResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# instance view candidate source h00 h01 h02 h10 h11 h12 h20 h21 "
         "h22 cx cy cz px py d_cut x0 y0 x1 y1\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    out << buf;
  };
  for (const InstanceCrop& c : result.crops) {
    out << c.instance_id << ' ' << ViewName(c.view) << ' ' << c.candidate
        << ' ' << c.source;
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) num(c.homography(r, col));
    }
    num(c.center.x());
    num(c.center.y());
    num(c.center.z());
    num(c.projected.x());
    num(c.projected.y());
    num(c.half_size);
    num(c.rect.x0);
    num(c.rect.y0);
    num(c.rect.x1);
    num(c.rect.y1);
    out << '\n';
  }
}

}  // namespace xvgeo
