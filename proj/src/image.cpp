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

#include "trig/image.hpp"

#include <cmath>
#include <fstream>

#include "trig/error.hpp"

namespace trig {

void save_ppm(const std::string& path, const Tensor& img) {
  if (img.shape.size() != 3 || img.shape[0] != 3)
    throw DataError("save_ppm: expected a {3,H,W} tensor");
  long h = img.shape[1], w = img.shape[2];
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_ppm: cannot open " + path);
  f << "P6\n" << w << " " << h << "\n255\n";
  std::string buf;
  buf.reserve(static_cast<size_t>(h) * w * 3);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (long c = 0; c < 3; ++c) {
        double v = img.at3(c, y, x);
        v = std::min(std::max(v, 0.0), 1.0);
        buf += static_cast<char>(static_cast<int>(std::lround(v * 255.0)));
      }
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw DataError("save_ppm: write failed for " + path);
}

Tensor load_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_ppm: cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != "P6") throw DataError("load_ppm: not a P6 file: " + path);
  auto next_int = [&]() {
    // skip whitespace and '#' comments
    int c = f.get();
    while (c == '#' || std::isspace(c)) {
      if (c == '#')
        while (c != '\n' && c != EOF) c = f.get();
      c = f.get();
    }
    long v = 0;
    bool any = false;
    while (c >= '0' && c <= '9') {
      v = v * 10 + (c - '0');
      any = true;
      c = f.get();
    }
    if (!any) throw DataError("load_ppm: malformed header in " + path);
    return v;
  };
  long w = next_int();
  long h = next_int();
  long maxv = next_int();
  if (maxv != 255) throw DataError("load_ppm: only maxval 255 supported: " + path);
  // next_int consumed the single whitespace after maxval
  std::vector<char> buf(static_cast<size_t>(h) * w * 3);
  f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (f.gcount() != static_cast<std::streamsize>(buf.size()))
    throw DataError("load_ppm: truncated pixel data in " + path);
  Tensor img({3, h, w});
  size_t i = 0;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (long c = 0; c < 3; ++c)
        img.at3(c, y, x) = static_cast<uint8_t>(buf[i++]) / 255.0;
  return img;
}

}  // namespace trig
