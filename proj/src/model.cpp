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

#include "trig/model.hpp"

#include <cmath>

#include <json.hpp>

#include "trig/charset.hpp"
#include "trig/error.hpp"
#include "trig/rng.hpp"
#include "trig/tps.hpp"

namespace trig {

void ModelConfig::validate() const {
  if (rect_h % patch_h || rect_w % patch_w)
    throw DataError("config: patch size must divide the rectified image size");
  if (dim % heads) throw DataError("config: head count must divide embedding dim");
  if (use_tps) {
    if (canvas_h % 16 || canvas_w % 16)
      throw DataError("config: localization net needs canvas dims divisible by 16");
    if (num_ctrl < 4 || num_ctrl % 2) throw DataError("config: num_ctrl must be even and >= 4");
  }
  if (mask_radius < 0) throw DataError("config: mask_radius must be >= 0");
  if (max_len < 1) throw DataError("config: max_len must be >= 1");
  if (depth < 0 || dim < 1 || heads < 1 || mlp_ratio < 1) throw DataError("config: bad TFE dims");
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["canvas_h"] = canvas_h;
  j["canvas_w"] = canvas_w;
  j["use_tps"] = use_tps;
  j["rect_h"] = rect_h;
  j["rect_w"] = rect_w;
  j["num_ctrl"] = num_ctrl;
  j["loc_channels"] = loc_channels;
  j["loc_fc_hidden"] = loc_fc_hidden;
  j["patch_h"] = patch_h;
  j["patch_w"] = patch_w;
  j["depth"] = depth;
  j["heads"] = heads;
  j["dim"] = dim;
  j["mlp_ratio"] = mlp_ratio;
  j["skip_attention"] = skip_attention;
  j["window_mask"] = window_mask;
  j["mask_radius"] = mask_radius;
  j["mask_sees_init"] = mask_sees_init;
  j["init_guidance"] = init_guidance;
  j["attn_dim"] = attn_dim;
  j["max_len"] = max_len;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ModelConfig: invalid JSON: ") + e.what());
  }
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
  };
  get("canvas_h", c.canvas_h);
  get("canvas_w", c.canvas_w);
  get("use_tps", c.use_tps);
  get("rect_h", c.rect_h);
  get("rect_w", c.rect_w);
  get("num_ctrl", c.num_ctrl);
  if (j.contains("loc_channels")) {
    auto v = j["loc_channels"].get<std::vector<long>>();
    if (v.size() != 4) throw DataError("ModelConfig: loc_channels must have 4 entries");
    for (int i = 0; i < 4; ++i) c.loc_channels[i] = v[i];
  }
  get("loc_fc_hidden", c.loc_fc_hidden);
  get("patch_h", c.patch_h);
  get("patch_w", c.patch_w);
  get("depth", c.depth);
  get("heads", c.heads);
  get("dim", c.dim);
  get("mlp_ratio", c.mlp_ratio);
  get("skip_attention", c.skip_attention);
  get("window_mask", c.window_mask);
  get("mask_radius", c.mask_radius);
  get("mask_sees_init", c.mask_sees_init);
  get("init_guidance", c.init_guidance);
  get("attn_dim", c.attn_dim);
  get("max_len", c.max_len);
  c.validate();
  return c;
}

ModelConfig preset_config(const std::string& name) {
  ModelConfig c;
  if (name == "paper-1d") {
    // Table-matching configuration: 12 blocks, 16 heads, dim 512, 32x4
    // patches, rectification on. The MLP inner width of 8*dim is what the
    // published MACs and parameter figures correspond to.
    c.mlp_ratio = 8;
  } else if (name == "paper-2d") {
    c.mlp_ratio = 8;
    c.patch_h = 4;
    c.patch_w = 4;
    c.use_tps = false;
  } else if (name == "toy") {
    c.canvas_h = 32;
    c.canvas_w = 128;
    c.loc_channels = {4, 8, 16, 32};
    c.loc_fc_hidden = 64;
    c.depth = 2;
    c.heads = 4;
    c.dim = 64;
    c.mlp_ratio = 4;
    c.max_len = 8;
  } else if (name == "tiny") {
    // verification-sized model for gradient checks and oracles
    c.canvas_h = 16;
    c.canvas_w = 16;
    c.loc_channels = {2, 3, 4, 5};
    c.loc_fc_hidden = 6;
    c.num_ctrl = 4;
    c.rect_h = 8;
    c.rect_w = 8;
    c.patch_h = 8;
    c.patch_w = 2;
    c.depth = 2;
    c.heads = 2;
    c.dim = 6;
    c.mlp_ratio = 2;
    c.max_len = 5;
  } else {
    throw UsageError("unknown preset '" + name + "' (expected paper-1d, paper-2d, toy, tiny)");
  }
  c.validate();
  return c;
}

std::vector<ParamDef> param_defs(const ModelConfig& cfg) {
  std::vector<ParamDef> defs;
  auto add = [&](std::string name, std::vector<long> shape) {
    defs.push_back({std::move(name), std::move(shape)});
  };
  if (cfg.use_tps) {
    long cin = 3;
    for (int i = 0; i < 4; ++i) {
      long cout = cfg.loc_channels[i];
      add("tra.conv" + std::to_string(i) + ".w", {cout, cin * 9});
      add("tra.conv" + std::to_string(i) + ".b", {cout});
      add("tra.norm" + std::to_string(i) + ".gain", {cout});
      add("tra.norm" + std::to_string(i) + ".bias", {cout});
      cin = cout;
    }
    add("tra.fc1.w", {cfg.loc_channels[3], cfg.loc_fc_hidden});
    add("tra.fc1.b", {cfg.loc_fc_hidden});
    add("tra.fc2.w", {cfg.loc_fc_hidden, 2 * cfg.num_ctrl});
    add("tra.fc2.b", {2 * cfg.num_ctrl});
  }
  add("tfe.patch_embed.w", {cfg.patch_dim(), cfg.dim});
  add("tfe.pos", {cfg.num_tokens(), cfg.dim});
  add("tfe.init", {1, cfg.dim});
  for (long l = 0; l < cfg.depth; ++l) {
    std::string b = "tfe.block" + std::to_string(l) + ".";
    add(b + "ln1.gain", {cfg.dim});
    add(b + "ln1.bias", {cfg.dim});
    for (const char* w : {"wq", "wk", "wv", "wo"}) add(b + "attn." + w, {cfg.dim, cfg.dim});
    for (const char* bb : {"bq", "bk", "bv", "bo"}) add(b + "attn." + bb, {cfg.dim});
    add(b + "ln2.gain", {cfg.dim});
    add(b + "ln2.bias", {cfg.dim});
    add(b + "mlp.w1", {cfg.dim, cfg.mlp_ratio * cfg.dim});
    add(b + "mlp.b1", {cfg.mlp_ratio * cfg.dim});
    add(b + "mlp.w2", {cfg.mlp_ratio * cfg.dim, cfg.dim});
    add(b + "mlp.b2", {cfg.dim});
  }
  long da = cfg.attention_dim();
  long nc = Charset::kNumClasses;
  add("dec.attn.wd", {cfg.dim, da});
  add("dec.attn.vd", {cfg.dim, da});
  add("dec.attn.b", {da});
  add("dec.attn.w", {da, 1});
  add("dec.gru.w", {cfg.dim + nc, 3 * cfg.dim});
  add("dec.gru.u", {cfg.dim, 3 * cfg.dim});
  add("dec.gru.b_ih", {3 * cfg.dim});
  add("dec.gru.b_hh", {3 * cfg.dim});
  add("dec.out.w", {cfg.dim, nc});
  add("dec.out.b", {nc});
  return defs;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("unknown parameter " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("unknown parameter " + name);
  return it->second;
}

long ParamStore::total_size() const {
  long n = 0;
  for (const auto& name : names) n += tensors.at(name).size();
  return n;
}

ParamStore init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  ParamStore store;
  auto ends_with = [](const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  for (const ParamDef& def : param_defs(cfg)) {
    Tensor t(def.shape);
    bool is_bias = ends_with(def.name, ".b") || ends_with(def.name, ".bias") ||
                   ends_with(def.name, ".bq") || ends_with(def.name, ".bk") ||
                   ends_with(def.name, ".bv") || ends_with(def.name, ".bo") ||
                   ends_with(def.name, ".b1") || ends_with(def.name, ".b2") ||
                   ends_with(def.name, ".b_ih") || ends_with(def.name, ".b_hh");
    if (ends_with(def.name, ".gain")) {
      std::fill(t.data.begin(), t.data.end(), 1.0);
    } else if (def.name == "tra.fc2.w") {
      // zero: the rectifier starts as the identity transform
    } else if (def.name == "tra.fc2.b") {
      Tensor canon = canonical_points(cfg.num_ctrl);
      for (long k = 0; k < cfg.num_ctrl; ++k) {
        t.data[2 * k] = std::atanh(canon(k, 0));
        t.data[2 * k + 1] = std::atanh(canon(k, 1));
      }
    } else if (is_bias) {
      // zero
    } else {
      Rng rng(seed ^ hash_name(def.name));
      for (double& v : t.data) v = rng.normal(0.0, 0.02);
    }
    store.names.push_back(def.name);
    store.tensors.emplace(def.name, std::move(t));
  }
  return store;
}

int Vars::p(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  int id = tape_.leaf(params_.at(name));
  ids_.emplace(name, id);
  return id;
}

void Vars::accumulate_grads(ParamStore& sink) const {
  for (const auto& [name, id] : ids_) {
    if (!tape_.has_grad(id)) continue;
    const Tensor& g = tape_.grad(id);
    Tensor& dst = sink.at(name);
    for (long i = 0; i < dst.size(); ++i) dst.data[i] += g.data[i];
  }
}

}  // namespace trig
