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

#ifndef XVGEO_VIEW_H_
#define XVGEO_VIEW_H_

#include <cstdint>

namespace xvgeo {

enum class View : uint8_t { kDrone = 0, kSatellite = 1 };

inline const char* ViewName(View view) {
  return view == View::kDrone ? "drone" : "satellite";
}

}  // namespace xvgeo

#endif  // XVGEO_VIEW_H_
