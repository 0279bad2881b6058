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

#include <cstdint>
#include <string>
#include <vector>

#include "trig/tensor.hpp"

namespace trig {

/// Procedural 5x7 glyph bitmaps, one per printable charset symbol, derived
/// deterministically from (symbol index, seed). Distinct symbols get distinct
/// bitmaps; on a collision the derivation retries with the next attempt
/// counter, still purely seed-driven.
class GlyphAtlas {
 public:
  static constexpr int kGlyphW = 5;
  static constexpr int kGlyphH = 7;

  explicit GlyphAtlas(uint64_t seed);

  /// 35 bools, row-major.
  const std::vector<uint8_t>& bitmap(char c) const;

 private:
  std::vector<std::vector<uint8_t>> bitmaps_;  // indexed by charset symbol id
};

struct GenSpec {
  long count = 0;
  uint64_t seed = 0;
  std::string alphabet;  // sub-alphabet labels are drawn from
  long min_len = 1;
  long max_len = 5;
  double curve_amplitude = 0.0;  // px, [0,12]
  double jitter = 0.0;           // px, [-jitter,jitter] per glyph
  double scale_min = 1.0;        // per-sample glyph scale, [0.8,1.2]
  double scale_max = 1.0;
  long canvas_h = 64;
  long canvas_w = 256;

  std::string to_json() const;
  static GenSpec from_json(const std::string& text);
  static GenSpec from_json_file(const std::string& path);
};

struct SynthSample {
  Tensor image;  // {3, canvas_h, canvas_w}, values quantized to k/255
  std::string label;
  uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Layout contract. A glyph i of text length n is drawn centered at
//   x_i = kMarginX + advance * i + glyph_w / 2
//   y_i = canvas_h / 2 + amplitude * sin(2*pi * x_i / canvas_w + phase)
//         + jitter_i
// where s = kBaseScale * scale, glyph_w = 5*s, glyph_h = 7*s and
// advance = 6*s. scale, phase and jitter_i come from LayoutParams.
// ---------------------------------------------------------------------------
inline constexpr double kBaseScale = 4.0;
inline constexpr double kMarginX = 8.0;

struct LayoutParams {
  double scale = 1.0;           // in [scale_min, scale_max]
  double phase = 0.0;           // [0, 2*pi)
  std::vector<double> jitter;   // per glyph, [-jitter, jitter]
  double bg = 0.8;              // background gray
  double fg = 0.12;             // glyph gray
};

/// The per-sample random draws, exposed so tests can recompute glyph centers
/// independently of the renderer.
LayoutParams sample_layout_params(uint64_t seed, const GenSpec& spec, long n_glyphs);

struct DistortionConfig {
  double curve_amplitude = 0.0;
  double jitter = 0.0;
  double scale_min = 1.0;
  double scale_max = 1.0;
};

/// Deterministic render; same (text, seed, config) gives bit-identical
/// pixels. Throws DataError when the text cannot fit at minimum scale.
SynthSample render_sample(const std::string& text, uint64_t seed, const GenSpec& spec);

struct DatasetManifest {
  std::string root;
  std::vector<std::pair<std::string, std::string>> entries;  // (relative path, label)
  std::string genspec_json;  // config snapshot, empty when hand-built
};

/// Writes count PPM images plus manifest.tsv and genspec.json under out_dir.
/// Sample i is rendered with seed spec.seed + i.
DatasetManifest generate_dataset(const GenSpec& spec, const std::string& out_dir);

/// Parses manifest.tsv in `dir`. Throws DataError naming the offending line.
DatasetManifest load_manifest(const std::string& dir);

/// Loads one entry's image; label comes from the manifest.
SynthSample load_sample(const DatasetManifest& m, long index);

}  // namespace trig
