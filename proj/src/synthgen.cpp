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

#include "trig/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trig/charset.hpp"
#include "trig/error.hpp"
#include "trig/image.hpp"
#include "trig/rng.hpp"

namespace fs = std::filesystem;

namespace trig {

GlyphAtlas::GlyphAtlas(uint64_t seed) {
  const std::string& syms = charset().symbols();
  bitmaps_.resize(syms.size());
  std::set<std::vector<uint8_t>> used;
  for (size_t i = 0; i < syms.size(); ++i) {
    for (uint64_t attempt = 0;; ++attempt) {
      uint64_t s = seed;
      s = splitmix64(s) ^ (i * 0x9e3779b97f4a7c15ULL) ^ attempt;
      Rng rng(s);
      std::vector<uint8_t> bm(kGlyphW * kGlyphH);
      int on = 0;
      for (auto& px : bm) {
        px = rng.uniform() < 0.45;
        on += px;
      }
      // reject near-empty / near-full patterns and collisions
      if (on < 8 || on > 28 || used.count(bm)) continue;
      used.insert(bm);
      bitmaps_[i] = std::move(bm);
      break;
    }
  }
}

const std::vector<uint8_t>& GlyphAtlas::bitmap(char c) const {
  int id = charset().char_id(c);
  if (id == charset().unk_id()) throw DataError(std::string("no glyph for character '") + c + "'");
  return bitmaps_[id];
}

std::string GenSpec::to_json() const {
  nlohmann::json j;
  j["count"] = count;
  j["seed"] = seed;
  j["alphabet"] = alphabet;
  j["min_len"] = min_len;
  j["max_len"] = max_len;
  j["curve_amplitude"] = curve_amplitude;
  j["jitter"] = jitter;
  j["scale_range"] = {scale_min, scale_max};
  j["canvas_h"] = canvas_h;
  j["canvas_w"] = canvas_w;
  return j.dump(2);
}

GenSpec GenSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("GenSpec: invalid JSON: ") + e.what());
  }
  GenSpec s;
  try {
    s.count = j.at("count").get<long>();
    s.seed = j.at("seed").get<uint64_t>();
    s.alphabet = j.at("alphabet").get<std::string>();
    s.min_len = j.at("min_len").get<long>();
    s.max_len = j.at("max_len").get<long>();
    s.curve_amplitude = j.value("curve_amplitude", 0.0);
    s.jitter = j.value("jitter", 0.0);
    if (j.contains("scale_range")) {
      s.scale_min = j["scale_range"].at(0).get<double>();
      s.scale_max = j["scale_range"].at(1).get<double>();
    }
    s.canvas_h = j.value("canvas_h", 64L);
    s.canvas_w = j.value("canvas_w", 256L);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("GenSpec: missing or malformed field: ") + e.what());
  }
  return s;
}

GenSpec GenSpec::from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("GenSpec: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

LayoutParams sample_layout_params(uint64_t seed, const GenSpec& spec, long n_glyphs) {
  Rng rng(splitmix64(seed) ^ 0x5174a11edULL);
  LayoutParams p;
  p.scale = rng.uniform(spec.scale_min, spec.scale_max);
  p.phase = rng.uniform(0.0, 2.0 * M_PI);
  p.jitter.resize(n_glyphs);
  for (auto& jv : p.jitter) jv = rng.uniform(-spec.jitter, spec.jitter);
  p.bg = rng.uniform(0.68, 0.92);
  p.fg = rng.uniform(0.04, 0.2);
  return p;
}

static void validate_distortion(const GenSpec& s) {
  if (s.curve_amplitude < 0 || s.curve_amplitude > 12)
    throw DataError("curve_amplitude outside [0,12]");
  if (s.jitter < 0 || s.jitter > 2) throw DataError("jitter outside [0,2]");
  if (s.scale_min < 0.8 || s.scale_max > 1.2 || s.scale_min > s.scale_max)
    throw DataError("scale_range outside [0.8,1.2]");
}

SynthSample render_sample(const std::string& text, uint64_t seed, const GenSpec& spec) {
  if (text.empty()) throw DataError("render_sample: empty text");
  validate_distortion(spec);
  long n = static_cast<long>(text.size());
  // fit check at minimum glyph scale
  double min_advance = 6.0 * kBaseScale * spec.scale_min;
  if (2 * kMarginX + n * min_advance > spec.canvas_w)
    throw DataError("render_sample: text too long to fit at minimum scale");

  static const GlyphAtlas atlas(0x61746c6173ULL);  // one shared atlas, fixed derivation seed
  LayoutParams p = sample_layout_params(seed, spec, n);
  double s = kBaseScale * p.scale;
  if (2 * kMarginX + n * 6.0 * s > spec.canvas_w) {
    // sampled scale may not fit even when the minimum does; shrink to fit
    s = (spec.canvas_w - 2 * kMarginX) / (n * 6.0);
  }
  double gw = 5.0 * s, gh = 7.0 * s;

  Tensor img({3, spec.canvas_h, spec.canvas_w});
  std::fill(img.data.begin(), img.data.end(), p.bg);

  // light deterministic pixel noise for texture
  uint64_t noise_seed = seed;  // splitmix64 advances its argument
  Rng noise(splitmix64(noise_seed) ^ 0x6e6f697365ULL);
  for (long y = 0; y < spec.canvas_h; ++y)
    for (long x = 0; x < spec.canvas_w; ++x) {
      double d = noise.uniform(-0.02, 0.02);
      for (long c = 0; c < 3; ++c) img.at3(c, y, x) += d;
    }

  for (long i = 0; i < n; ++i) {
    const auto& bm = atlas.bitmap(text[i]);
    double cx = kMarginX + 6.0 * s * i + gw / 2.0;
    double cy = spec.canvas_h / 2.0 +
                spec.curve_amplitude * std::sin(2.0 * M_PI * cx / spec.canvas_w + p.phase) +
                p.jitter[i];
    for (int r = 0; r < GlyphAtlas::kGlyphH; ++r)
      for (int c = 0; c < GlyphAtlas::kGlyphW; ++c) {
        if (!bm[r * GlyphAtlas::kGlyphW + c]) continue;
        long x0 = static_cast<long>(std::floor(cx - gw / 2.0 + c * s));
        long x1 = static_cast<long>(std::floor(cx - gw / 2.0 + (c + 1) * s));
        long y0 = static_cast<long>(std::floor(cy - gh / 2.0 + r * s));
        long y1 = static_cast<long>(std::floor(cy - gh / 2.0 + (r + 1) * s));
        for (long y = std::max(y0, 0L); y < std::min(y1, spec.canvas_h); ++y)
          for (long x = std::max(x0, 0L); x < std::min(x1, spec.canvas_w); ++x)
            for (long ch = 0; ch < 3; ++ch) img.at3(ch, y, x) = p.fg;
      }
  }

  // quantize to the PPM grid so save/load round-trips exactly
  for (double& v : img.data) {
    v = std::min(std::max(v, 0.0), 1.0);
    v = std::lround(v * 255.0) / 255.0;
  }
  return SynthSample{std::move(img), text, seed};
}

DatasetManifest generate_dataset(const GenSpec& spec, const std::string& out_dir) {
  if (spec.count <= 0) throw DataError("generate_dataset: count must be positive");
  if (spec.alphabet.empty()) throw DataError("generate_dataset: empty alphabet");
  for (char c : spec.alphabet)
    if (!charset().contains(c))
      throw DataError(std::string("generate_dataset: alphabet character '") + c +
                      "' outside charset");
  if (spec.min_len < 1 || spec.min_len > spec.max_len)
    throw DataError("generate_dataset: bad length range");
  validate_distortion(spec);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw DataError("generate_dataset: cannot create " + out_dir);

  DatasetManifest m;
  m.root = out_dir;
  m.genspec_json = spec.to_json();
  std::ostringstream manifest;
  for (long i = 0; i < spec.count; ++i) {
    uint64_t sample_seed = spec.seed + static_cast<uint64_t>(i);
    uint64_t label_seed = sample_seed;  // splitmix64 advances its argument
    Rng rng(splitmix64(label_seed) ^ 0x6c6162656cULL);  // label stream
    long len = spec.min_len + rng.uniform_int(spec.max_len - spec.min_len + 1);
    std::string label;
    for (long k = 0; k < len; ++k)
      label += spec.alphabet[rng.uniform_int(static_cast<long>(spec.alphabet.size()))];
    SynthSample sample = render_sample(label, sample_seed, spec);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%06ld.ppm", i);
    save_ppm(out_dir + "/" + name, sample.image);
    manifest << name << '\t' << label << '\n';
    m.entries.emplace_back(name, label);
  }
  {
    std::ofstream f(out_dir + "/manifest.tsv", std::ios::binary);
    if (!f) throw DataError("generate_dataset: cannot write manifest");
    f << manifest.str();
  }
  {
    std::ofstream f(out_dir + "/genspec.json", std::ios::binary);
    f << m.genspec_json << "\n";
  }
  return m;
}

DatasetManifest load_manifest(const std::string& dir) {
  std::ifstream f(dir + "/manifest.tsv");
  if (!f) throw DataError("load_manifest: cannot open " + dir + "/manifest.tsv");
  DatasetManifest m;
  m.root = dir;
  std::string line;
  long lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("load_manifest: missing tab at line " + std::to_string(lineno));
    std::string path = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    if (path.empty())
      throw DataError("load_manifest: empty path at line " + std::to_string(lineno));
    for (char c : label)
      if (!charset().contains(c))
        throw DataError("load_manifest: label with out-of-charset character at line " +
                        std::to_string(lineno));
    m.entries.emplace_back(std::move(path), std::move(label));
  }
  if (m.entries.empty()) throw DataError("load_manifest: empty manifest in " + dir);
  std::ifstream g(dir + "/genspec.json");
  if (g) {
    std::stringstream ss;
    ss << g.rdbuf();
    m.genspec_json = ss.str();
  }
  return m;
}

SynthSample load_sample(const DatasetManifest& m, long index) {
  const auto& [path, label] = m.entries.at(index);
  SynthSample s;
  s.image = load_ppm(m.root + "/" + path);
  s.label = label;
  s.seed = 0;
  return s;
}

}  // namespace trig
