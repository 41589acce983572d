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

#include "xvgeo/reconstruction.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace xvgeo {
namespace {

using Kind = ReconstructionError::Kind;

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> Tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

// Line-oriented reader that tracks 1-based line numbers for diagnostics.
class TextFile {
 public:
  explicit TextFile(const std::filesystem::path& path)
      : name_(path.filename().string()), in_(path) {
    if (!in_) {
      throw ReconstructionError(Kind::kIo, "cannot open " + path.string());
    }
  }

  // Next line that is neither blank nor a comment.
  bool NextRecord(std::string* line) {
    while (NextRaw(line)) {
      const std::string t = Trim(*line);
      if (t.empty() || t[0] == '#') continue;
      *line = t;
      return true;
    }
    return false;
  }

  // Next physical line, whatever its content.
  bool NextRaw(std::string* line) {
    if (!std::getline(in_, *line)) return false;
    ++line_no_;
    return true;
  }

  [[noreturn]] void Fail(const std::string& message) const {
    throw ReconstructionError(
        Kind::kParse, name_ + ":" + std::to_string(line_no_) + ": " + message);
  }

  int line_no() const { return line_no_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::ifstream in_;
  int line_no_ = 0;
};

template <typename T>
T ParseNumber(const TextFile& file, const std::string& token,
              const char* field) {
  T value{};
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    file.Fail(std::string("invalid ") + field + " '" + token + "'");
  }
  return value;
}

void ReadCameras(const std::filesystem::path& path, Reconstruction* recon) {
  TextFile file(path);
  std::string line;
  while (file.NextRecord(&line)) {
    const auto tok = Tokenize(line);
    if (tok.size() < 4) file.Fail("expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]");
    Camera cam;
    cam.id = ParseNumber<int>(file, tok[0], "camera id");
    const std::string& model = tok[1];
    cam.width = ParseNumber<int>(file, tok[2], "width");
    cam.height = ParseNumber<int>(file, tok[3], "height");
    if (cam.width <= 0 || cam.height <= 0) file.Fail("non-positive image size");
    std::vector<double> params;
    for (size_t i = 4; i < tok.size(); ++i) {
      params.push_back(ParseNumber<double>(file, tok[i], "camera parameter"));
    }
    if (model == "SIMPLE_PINHOLE") {
      if (params.size() != 3) file.Fail("SIMPLE_PINHOLE expects 3 parameters");
      cam.model = CameraModel::kSimplePinhole;
      cam.fx = cam.fy = params[0];
      cam.cx = params[1];
      cam.cy = params[2];
    } else if (model == "PINHOLE") {
      if (params.size() != 4) file.Fail("PINHOLE expects 4 parameters");
      cam.model = CameraModel::kPinhole;
      cam.fx = params[0];
      cam.fy = params[1];
      cam.cx = params[2];
      cam.cy = params[3];
    } else {
      throw ReconstructionError(
          Kind::kUnsupportedModel,
          file.name() + ":" + std::to_string(file.line_no()) +
              ": unsupported camera model '" + model + "'");
    }
    if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) file.Fail("focal length must be > 0");
    if (!recon->cameras.emplace(cam.id, cam).second) {
      file.Fail("duplicate camera id " + std::to_string(cam.id));
    }
  }
}

void ReadImages(const std::filesystem::path& path, Reconstruction* recon) {
  TextFile file(path);
  std::string line;
  while (file.NextRecord(&line)) {
    const auto tok = Tokenize(line);
    if (tok.size() != 10) {
      file.Fail("expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME, got " +
                std::to_string(tok.size()) + " fields");
    }
    PosedImage image;
    image.id = ParseNumber<int>(file, tok[0], "image id");
    const double qw = ParseNumber<double>(file, tok[1], "QW");
    const double qx = ParseNumber<double>(file, tok[2], "QX");
    const double qy = ParseNumber<double>(file, tok[3], "QY");
    const double qz = ParseNumber<double>(file, tok[4], "QZ");
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (!(q.norm() > 1e-12)) file.Fail("zero quaternion");
    image.pose.rotation = q.normalized();
    image.pose.translation = {ParseNumber<double>(file, tok[5], "TX"),
                              ParseNumber<double>(file, tok[6], "TY"),
                              ParseNumber<double>(file, tok[7], "TZ")};
    image.camera_id = ParseNumber<int>(file, tok[8], "camera id");
    image.name = tok[9];
    const int record_line = file.line_no();
    // The observation line follows unconditionally and may be empty.
    std::string observations;
    file.NextRaw(&observations);
    if (recon->cameras.count(image.camera_id) == 0) {
      throw ReconstructionError(
          Kind::kIntegrity, file.name() + ":" + std::to_string(record_line) +
                                ": image " + std::to_string(image.id) +
                                " references missing camera " +
                                std::to_string(image.camera_id));
    }
    if (!recon->images.emplace(image.id, image).second) {
      file.Fail("duplicate image id " + std::to_string(image.id));
    }
  }
}

void ReadPoints(const std::filesystem::path& path, Reconstruction* recon) {
  TextFile file(path);
  std::string line;
  while (file.NextRecord(&line)) {
    const auto tok = Tokenize(line);
    if (tok.size() < 8) {
      file.Fail("expected POINT3D_ID X Y Z R G B ERROR TRACK[]");
    }
    if ((tok.size() - 8) % 2 != 0) file.Fail("odd number of track entries");
    Point3D p;
    p.id = ParseNumber<int64_t>(file, tok[0], "point id");
    p.xyz = {ParseNumber<double>(file, tok[1], "X"),
             ParseNumber<double>(file, tok[2], "Y"),
             ParseNumber<double>(file, tok[3], "Z")};
    for (int c = 0; c < 3; ++c) {
      const int v = ParseNumber<int>(file, tok[4 + c], "color");
      if (v < 0 || v > 255) file.Fail("color component out of range");
      p.rgb[c] = static_cast<uint8_t>(v);
    }
    p.error = ParseNumber<double>(file, tok[7], "error");
    recon->points.push_back(p);
  }
}

}  // namespace

Eigen::Matrix3d Camera::K() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

const Camera& Reconstruction::CameraOf(const PosedImage& image) const {
  auto it = cameras.find(image.camera_id);
  if (it == cameras.end()) {
    throw ReconstructionError(Kind::kIntegrity,
                              "image " + std::to_string(image.id) +
                                  " references missing camera " +
                                  std::to_string(image.camera_id));
  }
  return it->second;
}

Reconstruction ParseReconstruction(const std::filesystem::path& dir) {
  Reconstruction recon;
  ReadCameras(dir / "cameras.txt", &recon);
  ReadImages(dir / "images.txt", &recon);
  ReadPoints(dir / "points3D.txt", &recon);
  return recon;
}

void WriteReconstruction(const Reconstruction& recon,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) {
      throw ReconstructionError(Kind::kIo,
                                "cannot write " + (dir / name).string());
    }
    out << std::setprecision(17);
    return out;
  };
  {
    std::ofstream out = open("cameras.txt");
    out << "# Camera list with one line of data per camera:\n"
        << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
    for (const auto& [id, cam] : recon.cameras) {
      out << id << ' ';
      if (cam.model == CameraModel::kSimplePinhole) {
        out << "SIMPLE_PINHOLE " << cam.width << ' ' << cam.height << ' '
            << cam.fx << ' ' << cam.cx << ' ' << cam.cy << '\n';
      } else {
        out << "PINHOLE " << cam.width << ' ' << cam.height << ' ' << cam.fx
            << ' ' << cam.fy << ' ' << cam.cx << ' ' << cam.cy << '\n';
      }
    }
  }
  {
    std::ofstream out = open("images.txt");
    out << "# Image list with two lines of data per image:\n"
        << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n"
        << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
    for (const auto& [id, img] : recon.images) {
      const auto& q = img.pose.rotation;
      const auto& t = img.pose.translation;
      out << id << ' ' << q.w() << ' ' << q.x() << ' ' << q.y() << ' ' << q.z()
          << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' '
          << img.camera_id << ' ' << img.name << "\n\n";
    }
  }
  {
    std::ofstream out = open("points3D.txt");
    out << "# 3D point list with one line of data per point:\n"
        << "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[]\n";
    for (const Point3D& p : recon.points) {
      out << p.id << ' ' << p.xyz.x() << ' ' << p.xyz.y() << ' ' << p.xyz.z()
          << ' ' << int(p.rgb[0]) << ' ' << int(p.rgb[1]) << ' '
          << int(p.rgb[2]) << ' ' << p.error << '\n';
    }
  }
}

}  // namespace xvgeo
