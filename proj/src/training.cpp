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

#include "trig/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "trig/charset.hpp"
#include "trig/error.hpp"
#include "trig/rng.hpp"

namespace trig {

std::vector<long> TrainConfig::resolved_decay_epochs() const {
  std::vector<long> out = decay_epochs;
  if (out.empty() && epochs > 1) {
    out.push_back(std::max<long>(1, (epochs * 4) / 5));
    out.push_back(std::max<long>(1, (epochs * 24) / 25));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double TrainConfig::lr_at(long epoch) const {
  double r = lr;
  for (long d : resolved_decay_epochs())
    if (epoch >= d) r *= decay_factor;
  return r;
}

std::string TrainConfig::to_json() const {
  nlohmann::json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr"] = lr;
  j["decay_epochs"] = decay_epochs;
  j["decay_factor"] = decay_factor;
  j["optimizer"] = optimizer;
  j["rho"] = rho;
  j["eps"] = eps;
  j["seed"] = seed;
  j["deterministic"] = deterministic;
  j["train_data"] = train_data;
  j["val_data"] = val_data;
  j["model"] = nlohmann::json::parse(model.to_json());
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: bad JSON: ") + e.what());
  }
  TrainConfig c;
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("lr", c.lr);
  get("decay_epochs", c.decay_epochs);
  get("decay_factor", c.decay_factor);
  get("optimizer", c.optimizer);
  get("rho", c.rho);
  get("eps", c.eps);
  get("seed", c.seed);
  get("deterministic", c.deterministic);
  get("train_data", c.train_data);
  get("val_data", c.val_data);
  if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model").dump());
  if (c.epochs < 0) throw DataError("train config: epochs must be >= 0");
  if (c.batch_size < 1) throw DataError("train config: batch_size must be >= 1");
  if (c.optimizer != "adadelta")
    throw DataError("train config: unknown optimizer '" + c.optimizer + "'");
  return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("train config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_json(text);
}

double ce_loss(const std::vector<Tensor>& prob_rows, const std::vector<int>& target) {
  double total = 0.0;
  for (size_t t = 0; t < prob_rows.size(); ++t) {
    double p = prob_rows[t].data[static_cast<size_t>(target[t])];
    total += -std::log(std::max(p, 1e-12));
  }
  return total;
}

AdaDelta::AdaDelta(const ParamStore& params, double rho, double eps) : rho_(rho), eps_(eps) {
  for (const auto& name : params.names) {
    const Tensor& t = params.at(name);
    for (const char* prefix : {"accum_g.", "accum_dx."}) {
      std::string key = prefix + name;
      state_.names.push_back(key);
      state_.tensors.emplace(std::move(key), Tensor::zeros(t.shape));
    }
  }
}

AdaDelta::AdaDelta(const ParamStore& params, double rho, double eps, ParamStore state)
    : AdaDelta(params, rho, eps) {
  if (!state.names.empty()) {
    if (state.names.size() != state_.names.size())
      throw DataError("adadelta: optimizer state does not match parameter set");
    state_ = std::move(state);
  }
}

void AdaDelta::step(ParamStore& params, const ParamStore& grads, double lr) {
  for (const auto& name : params.names) {
    Tensor& p = params.at(name);
    const Tensor& g = grads.at(name);
    Tensor& eg = state_.at("accum_g." + name);
    Tensor& edx = state_.at("accum_dx." + name);
    for (size_t i = 0; i < p.data.size(); ++i) {
      double gi = g.data[i];
      eg.data[i] = rho_ * eg.data[i] + (1.0 - rho_) * gi * gi;
      double dx = -std::sqrt(edx.data[i] + eps_) / std::sqrt(eg.data[i] + eps_) * gi;
      edx.data[i] = rho_ * edx.data[i] + (1.0 - rho_) * dx * dx;
      p.data[i] += lr * dx;
    }
  }
}

long edit_distance(const std::string& a, const std::string& b) {
  std::vector<long> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<long>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    long diag = row[0];
    row[0] = static_cast<long>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      long sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
    }
  }
  return row[b.size()];
}

EvalReport evaluate(const ParamStore& params, const PipelineContext& ctx,
                    const DatasetManifest& data, long beam_width) {
  EvalReport rep;
  for (long i = 0; i < static_cast<long>(data.entries.size()); ++i) {
    SynthSample s = load_sample(data, i);
    EncoderOut enc = run_encoder(params, ctx, s.image);
    DecodeResult dec =
        beam_width > 0
            ? beam_decode(params, ctx.cfg, enc.f_init, enc.features, ctx.cfg.max_len, beam_width)
            : greedy_decode(params, ctx.cfg, enc.f_init, enc.features, ctx.cfg.max_len);
    bool hit = dec.text == s.label;
    rep.count++;
    rep.exact += hit ? 1 : 0;
    rep.mean_edit_distance += static_cast<double>(edit_distance(dec.text, s.label));
    auto& pl = rep.per_length[static_cast<long>(s.label.size())];
    pl.first += hit ? 1 : 0;
    pl.second += 1;
  }
  if (rep.count > 0) {
    rep.accuracy = static_cast<double>(rep.exact) / static_cast<double>(rep.count);
    rep.mean_edit_distance /= static_cast<double>(rep.count);
  }
  return rep;
}

namespace {

struct LoadedSample {
  Tensor image;
  std::vector<int> target;
};

std::vector<LoadedSample> preload(const DatasetManifest& m, long max_len) {
  std::vector<LoadedSample> out;
  out.reserve(m.entries.size());
  for (long i = 0; i < static_cast<long>(m.entries.size()); ++i) {
    SynthSample s = load_sample(m, i);
    out.push_back({std::move(s.image), charset().encode(s.label, max_len)});
  }
  return out;
}

void write_ckpt(const std::string& path, const TrainConfig& cfg, const ParamStore& params,
                const ParamStore& opt, const std::array<uint64_t, 4>& rng_state, long epoch,
                long step) {
  Checkpoint ck;
  ck.cfg = cfg.model;
  ck.params = params;
  ck.opt_state = opt;
  ck.rng_state = rng_state;
  ck.epoch = epoch;
  ck.step = step;
  save_checkpoint(path, ck);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  const std::optional<std::string>& resume) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  PipelineContext ctx = PipelineContext::build(cfg.model);

  DatasetManifest train_m = load_manifest(cfg.train_data);
  if (train_m.entries.empty()) throw DataError("train: empty training set in " + cfg.train_data);
  DatasetManifest val_m = cfg.val_data.empty() ? train_m : load_manifest(cfg.val_data);
  std::vector<LoadedSample> data = preload(train_m, cfg.model.max_len);

  ParamStore params;
  ParamStore opt_state;
  Rng rng = substream(cfg.seed, "train-shuffle");
  long start_epoch = 0;
  long step = 0;
  if (resume) {
    Checkpoint ck = load_checkpoint(*resume);
    if (ck.cfg.to_json() != cfg.model.to_json())
      throw DataError("train: checkpoint model config does not match " + *resume);
    params = std::move(ck.params);
    opt_state = std::move(ck.opt_state);
    rng.set_state(ck.rng_state);
    start_epoch = ck.epoch;
    step = ck.step;
  } else {
    params = init_params(cfg.model, cfg.seed);
  }
  AdaDelta opt(params, cfg.rho, cfg.eps, std::move(opt_state));

  TrainResult res;
  res.best_path = (fs::path(out_dir) / "best.ckpt").string();
  res.last_path = (fs::path(out_dir) / "last.ckpt").string();
  res.metrics_path = (fs::path(out_dir) / "metrics.jsonl").string();
  std::ofstream metrics(res.metrics_path, resume ? std::ios::app : std::ios::trunc);
  if (!metrics) throw DataError("train: cannot open " + res.metrics_path);

  res.best_val_acc = -1.0;
  if (cfg.epochs == 0 || start_epoch >= cfg.epochs) {
    write_ckpt(res.last_path, cfg, params, opt.state(), rng.state(), start_epoch, step);
    if (!fs::exists(res.best_path))
      write_ckpt(res.best_path, cfg, params, opt.state(), rng.state(), start_epoch, step);
    return res;
  }

  const long n = static_cast<long>(data.size());
  std::vector<long> order(n);
  for (long i = 0; i < n; ++i) order[i] = i;

  for (long epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    double lr = cfg.lr_at(epoch);
    // Fisher-Yates from the identity each epoch, so a resumed run (which
    // restores only the RNG state, not last epoch's permutation) matches.
    for (long i = 0; i < n; ++i) order[i] = i;
    for (long i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

    double epoch_loss = 0.0;
    for (long b0 = 0; b0 < n; b0 += cfg.batch_size) {
      long b1 = std::min(n, b0 + cfg.batch_size);
      ParamStore grads;
      for (const auto& name : params.names) {
        grads.names.push_back(name);
        grads.tensors.emplace(name, Tensor::zeros(params.at(name).shape));
      }
      double batch_loss = 0.0;
      for (long i = b0; i < b1; ++i) {
        const LoadedSample& s = data[order[i]];
        Tape tape(/*track_grad=*/true);
        Vars vars(tape, params);
        int loss = sample_loss(tape, vars, ctx, s.image, s.target);
        batch_loss += tape.val(loss).data[0];
        tape.backward(loss);
        vars.accumulate_grads(grads);
      }
      double inv = 1.0 / static_cast<double>(b1 - b0);
      for (auto& [name, g] : grads.tensors)
        for (double& v : g.data) v *= inv;
      batch_loss *= inv;
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      opt.step(params, grads, lr);
      epoch_loss += batch_loss * static_cast<double>(b1 - b0);
      step++;
    }
    epoch_loss /= static_cast<double>(n);
    res.final_loss = epoch_loss;

    EvalReport rep = evaluate(params, ctx, val_m, /*beam_width=*/0);
    nlohmann::json line;
    line["epoch"] = epoch;
    line["step"] = step;
    line["lr"] = lr;
    line["loss"] = epoch_loss;
    line["val_acc"] = rep.accuracy;
    line["val_edit"] = rep.mean_edit_distance;
    metrics << line.dump() << "\n";
    metrics.flush();

    write_ckpt(res.last_path, cfg, params, opt.state(), rng.state(), epoch, step);
    if (rep.accuracy > res.best_val_acc) {
      res.best_val_acc = rep.accuracy;
      write_ckpt(res.best_path, cfg, params, opt.state(), rng.state(), epoch, step);
    }
  }
  return res;
}

GradCheckReport grad_check(const ModelConfig& cfg, uint64_t seed) {
  PipelineContext ctx = PipelineContext::build(cfg);
  ParamStore params = init_params(cfg, seed);
  // Nudge every parameter off its (partly symmetric / zero) init so the
  // check exercises generic points; keeps the localization output small so
  // the TPS grid stays inside the image.
  Rng noise = substream(seed, "gradcheck-noise");
  for (const auto& name : params.names) {
    double sigma = name.rfind("tra.fc2", 0) == 0 ? 0.01 : 0.05;
    for (double& v : params.at(name).data) v += noise.normal(0.0, sigma);
  }

  Rng dat = substream(seed, "gradcheck-data");
  Tensor image({3, cfg.canvas_h, cfg.canvas_w});
  for (double& v : image.data) v = dat.uniform(0.05, 0.95);
  long text_len = std::min<long>(3, cfg.max_len - 1);
  std::string text;
  for (long i = 0; i < text_len; ++i)
    text += charset().symbols()[static_cast<size_t>(dat.uniform_int(94))];
  std::vector<int> target = charset().encode(text, cfg.max_len);

  auto eval_loss = [&]() {
    Tape tape(/*track_grad=*/false);
    Vars vars(tape, params);
    int loss = sample_loss(tape, vars, ctx, image, target);
    return tape.val(loss).data[0];
  };

  ParamStore grads;
  for (const auto& name : params.names) {
    grads.names.push_back(name);
    grads.tensors.emplace(name, Tensor::zeros(params.at(name).shape));
  }
  {
    Tape tape(/*track_grad=*/true);
    Vars vars(tape, params);
    int loss = sample_loss(tape, vars, ctx, image, target);
    tape.backward(loss);
    vars.accumulate_grads(grads);
  }

  // h balances truncation (h^2) against f64 roundoff (~eps*|loss|/h); 1e-4
  // keeps the noise floor near 1e-12 so near-zero gradients stay checkable
  const double h = 1e-4;
  GradCheckReport rep;
  for (const auto& name : params.names) {
    Tensor& p = params.at(name);
    const Tensor& g = grads.at(name);
    GradCheckEntry entry{name, 0.0};
    for (size_t i = 0; i < p.data.size(); ++i) {
      double saved = p.data[i];
      p.data[i] = saved + h;
      double up = eval_loss();
      p.data[i] = saved - h;
      double down = eval_loss();
      p.data[i] = saved;
      double num = (up - down) / (2.0 * h);
      double ana = g.data[i];
      double rel = std::fabs(ana - num) / std::max({std::fabs(ana), std::fabs(num), 1e-6});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    if (entry.max_rel_err > rep.worst) {
      rep.worst = entry.max_rel_err;
      rep.worst_param = name;
    }
    rep.per_param.push_back(std::move(entry));
  }
  return rep;
}

}  // namespace trig
