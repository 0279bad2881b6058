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

#include "trig/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "trig/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as raw little-endian doubles");

namespace trig {

namespace {

nlohmann::json directory_json(const ParamStore& store, const std::string& prefix,
                              uint64_t& offset) {
  nlohmann::json dir = nlohmann::json::array();
  for (const auto& name : store.names) {
    const Tensor& t = store.tensors.at(name);
    nlohmann::json e;
    e["name"] = prefix + name;
    e["dtype"] = "f64";
    e["shape"] = t.shape;
    e["offset"] = offset;
    offset += static_cast<uint64_t>(t.size()) * sizeof(double);
    dir.push_back(std::move(e));
  }
  return dir;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["config"] = nlohmann::json::parse(ckpt.cfg.to_json());
  header["epoch"] = ckpt.epoch;
  header["step"] = ckpt.step;
  header["rng_state"] = ckpt.rng_state;
  uint64_t offset = 0;
  nlohmann::json dir = directory_json(ckpt.params, "", offset);
  nlohmann::json optdir = directory_json(ckpt.opt_state, "opt.", offset);
  for (auto& e : optdir) dir.push_back(std::move(e));
  header["tensors"] = std::move(dir);
  std::string json = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_checkpoint: cannot open " + path);
  f.write("TRIG", 4);
  uint32_t version = ckpt.version;
  uint64_t json_size = json.size();
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&json_size), 8);
  f.write(json.data(), static_cast<std::streamsize>(json.size()));
  auto write_store = [&](const ParamStore& s) {
    for (const auto& name : s.names) {
      const Tensor& t = s.tensors.at(name);
      f.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
  };
  write_store(ckpt.params);
  write_store(ckpt.opt_state);
  if (!f) throw DataError("save_checkpoint: write failed for " + path);
}

namespace {

struct RawFile {
  nlohmann::json header;
  std::vector<char> payload;
};

RawFile read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_checkpoint: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (f.gcount() != 4 || std::memcmp(magic, "TRIG", 4) != 0)
    throw DataError("load_checkpoint: bad magic in " + path);
  uint32_t version = 0;
  uint64_t json_size = 0;
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&json_size), 8);
  if (version != 1) throw DataError("load_checkpoint: unsupported version");
  std::string json(json_size, '\0');
  f.read(json.data(), static_cast<std::streamsize>(json_size));
  if (f.gcount() != static_cast<std::streamsize>(json_size))
    throw DataError("load_checkpoint: truncated header in " + path);
  RawFile out;
  try {
    out.header = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("load_checkpoint: bad header JSON: ") + e.what());
  }
  out.payload.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  return out;
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  RawFile raw = read_file(path);
  Checkpoint ckpt;
  ckpt.cfg = ModelConfig::from_json(raw.header.at("config").dump());
  ckpt.epoch = raw.header.at("epoch").get<long>();
  ckpt.step = raw.header.at("step").get<long>();
  auto rs = raw.header.at("rng_state").get<std::vector<uint64_t>>();
  for (int i = 0; i < 4; ++i) ckpt.rng_state[i] = rs.at(i);
  for (const auto& e : raw.header.at("tensors")) {
    std::string name = e.at("name").get<std::string>();
    if (e.at("dtype").get<std::string>() != "f64")
      throw DataError("load_checkpoint: unsupported dtype for " + name);
    Tensor t(e.at("shape").get<std::vector<long>>());
    uint64_t offset = e.at("offset").get<uint64_t>();
    if (offset + t.size() * sizeof(double) > raw.payload.size())
      throw DataError("load_checkpoint: tensor " + name + " out of payload bounds");
    std::memcpy(t.data.data(), raw.payload.data() + offset, t.size() * sizeof(double));
    ParamStore& dst = name.rfind("opt.", 0) == 0 ? ckpt.opt_state : ckpt.params;
    std::string key = name.rfind("opt.", 0) == 0 ? name.substr(4) : name;
    dst.names.push_back(key);
    dst.tensors.emplace(std::move(key), std::move(t));
  }
  return ckpt;
}

long checkpoint_param_total(const std::string& path) {
  RawFile raw = read_file(path);
  long total = 0;
  for (const auto& e : raw.header.at("tensors")) {
    std::string name = e.at("name").get<std::string>();
    if (name.rfind("opt.", 0) == 0) continue;
    total += Tensor::numel(e.at("shape").get<std::vector<long>>());
  }
  return total;
}

}  // namespace trig
