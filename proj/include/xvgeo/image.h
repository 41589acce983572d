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

#ifndef XVGEO_IMAGE_H_
#define XVGEO_IMAGE_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace xvgeo {

// 8-bit interleaved RGB image.
class Image {
 public:
  Image() = default;
  Image(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  uint8_t& at(int x, int y, int c) {
    return pixels_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
  }
  uint8_t at(int x, int y, int c) const {
    return pixels_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
  }
  const std::vector<uint8_t>& pixels() const { return pixels_; }
  std::vector<uint8_t>& pixels() { return pixels_; }

  // Bilinear sample at continuous pixel coordinates, pixel centers at
  // integer + 0.5. Coordinates are clamped to the image.
  std::array<double, 3> Sample(double x, double y) const;

  bool operator==(const Image& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> pixels_;
};

// Format is chosen by extension: .png or .ppm (binary P6).
Image ReadImage(const std::string& path);
void WriteImage(const std::string& path, const Image& image);

// Square patch of `size` x `size` pixels resampled from the axis-aligned
// rectangle [x0, x0 + side] x [y0, y0 + side].
Image ResampleSquare(const Image& source, double x0, double y0, double side,
                     int size);

// Bilinear resize to width x height.
Image Resize(const Image& source, int width, int height);

}  // namespace xvgeo

#endif  // XVGEO_IMAGE_H_
