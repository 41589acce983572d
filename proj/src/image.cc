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

#include "xvgeo/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace xvgeo {
namespace {

bool HasExtension(const std::string& path, const std::string& ext) {
  if (path.size() < ext.size()) return false;
  std::string tail = path.substr(path.size() - ext.size());
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return tail == ext;
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

Image ReadPng(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw std::runtime_error("cannot read PNG " + path + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.pixels().data(), 0,
                             nullptr)) {
    png_image_free(&png);
    throw std::runtime_error("cannot decode PNG " + path + ": " + png.message);
  }
  return image;
}

void WritePng(const std::string& path, const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels().data(), 0,
                               nullptr)) {
    throw std::runtime_error("cannot write PNG " + path + ": " + png.message);
  }
}

// Next whitespace-delimited header token of a PPM, skipping '#' comments.
std::string PpmToken(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

Image ReadPpm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  if (PpmToken(in) != "P6") throw std::runtime_error("not a P6 PPM: " + path);
  const int width = std::stoi(PpmToken(in));
  const int height = std::stoi(PpmToken(in));
  const int maxval = std::stoi(PpmToken(in));
  if (maxval != 255) throw std::runtime_error("PPM maxval must be 255: " + path);
  Image image(width, height);
  if (!in.read(reinterpret_cast<char*>(image.pixels().data()),
               static_cast<std::streamsize>(image.pixels().size()))) {
    throw std::runtime_error("truncated PPM " + path);
  }
  return image;
}

void WritePpm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels().data()),
            static_cast<std::streamsize>(image.pixels().size()));
}

}  // namespace

Image::Image(int width, int height)
    : width_(width),
      height_(height),
      pixels_(static_cast<size_t>(width) * height * 3, 0) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("image extents must be positive");
  }
}

std::array<double, 3> Image::Sample(double x, double y) const {
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(width_ - 1));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double top = (1 - ax) * at(x0, y0, c) + ax * at(x1, y0, c);
    const double bottom = (1 - ax) * at(x0, y1, c) + ax * at(x1, y1, c);
    out[c] = (1 - ay) * top + ay * bottom;
  }
  return out;
}

Image ReadImage(const std::string& path) {
  if (HasExtension(path, ".png")) return ReadPng(path);
  if (HasExtension(path, ".ppm")) return ReadPpm(path);
  throw std::runtime_error("unsupported image format: " + path);
}

void WriteImage(const std::string& path, const Image& image) {
  if (HasExtension(path, ".png")) return WritePng(path, image);
  if (HasExtension(path, ".ppm")) return WritePpm(path, image);
  throw std::runtime_error("unsupported image format: " + path);
}

Image ResampleSquare(const Image& source, double x0, double y0, double side,
                     int size) {
  Image out(size, size);
  const double step = side / size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const auto px = source.Sample(x0 + (x + 0.5) * step, y0 + (y + 0.5) * step);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) =
            static_cast<uint8_t>(std::clamp(std::lround(px[c]), 0L, 255L));
      }
    }
  }
  return out;
}

Image Resize(const Image& source, int width, int height) {
  if (width == source.width() && height == source.height()) return source;
  Image out(width, height);
  const double sx = static_cast<double>(source.width()) / width;
  const double sy = static_cast<double>(source.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto px = source.Sample((x + 0.5) * sx, (y + 0.5) * sy);
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) =
            static_cast<uint8_t>(std::clamp(std::lround(px[c]), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace xvgeo
