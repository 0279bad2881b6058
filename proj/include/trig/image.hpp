// Copyright 2026 The TRIG Authors.
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

#pragma once

#include <string>

#include "trig/tensor.hpp"

namespace trig {

/// Images are {3, H, W} tensors with values in [0, 1].

/// Writes a binary PPM (P6, 8-bit). Values are clamped and rounded; a tensor
/// produced by load_ppm round-trips bit-exactly.
void save_ppm(const std::string& path, const Tensor& img);

/// Reads a binary PPM (P6, maxval 255) into a {3,H,W} tensor in [0,1].
/// Throws DataError on malformed input.
Tensor load_ppm(const std::string& path);

}  // namespace trig
