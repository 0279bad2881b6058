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

#include "trig/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "trig/charset.hpp"
#include "trig/error.hpp"
#include "trig/image.hpp"

namespace trig {

std::string MacsReport::to_json() const {
  nlohmann::json j;
  j["tokens"] = tokens;
  j["decode_steps"] = decode_steps;
  j["params"] = params;
  j["tra"] = {{"conv", tra_conv}, {"fc", tra_fc}, {"tps", tra_tps}, {"total", tra_total()}};
  j["tfe"] = {{"embed", tfe_embed},
              {"projection", tfe_projection},
              {"attention", tfe_attention},
              {"mlp", tfe_mlp},
              {"total", tfe_total()}};
  j["ad"] = {{"attention", ad_attention},
             {"gru", ad_gru},
             {"output", ad_output},
             {"total", ad_total()}};
  j["total"] = total();
  return j.dump(2);
}

long count_params(const ModelConfig& cfg) {
  long n = 0;
  for (const ParamDef& def : param_defs(cfg)) n += Tensor::numel(def.shape);
  return n;
}

MacsReport analytical_macs(const ModelConfig& cfg, long steps) {
  cfg.validate();
  MacsReport r;
  r.tokens = cfg.num_tokens();
  r.decode_steps = steps > 0 ? steps : cfg.max_len;
  r.params = count_params(cfg);

  if (cfg.use_tps) {
    long cin = 3;
    for (int i = 0; i < 4; ++i) {
      long h = cfg.canvas_h >> i, w = cfg.canvas_w >> i;  // pooling halves after each block
      r.tra_conv += static_cast<long long>(cfg.loc_channels[i]) * h * w * cin * 9;
      cin = cfg.loc_channels[i];
    }
    r.tra_fc = static_cast<long long>(cfg.loc_channels[3]) * cfg.loc_fc_hidden +
               static_cast<long long>(cfg.loc_fc_hidden) * 2 * cfg.num_ctrl;
    long kp3 = cfg.num_ctrl + 3;
    r.tra_tps = static_cast<long long>(kp3) * kp3 * 2 +
                static_cast<long long>(cfg.rect_h) * cfg.rect_w * kp3 * 2;
  }

  long long N = cfg.num_patches(), T = cfg.num_tokens(), D = cfg.dim;
  r.tfe_embed = N * cfg.patch_dim() * D;
  r.tfe_projection = cfg.depth * 4 * T * D * D;
  r.tfe_attention = cfg.depth * 2 * T * T * D;
  r.tfe_mlp = cfg.depth * 2 * T * D * (cfg.mlp_ratio * D);

  long long Da = cfg.attention_dim(), nc = Charset::kNumClasses, S = r.decode_steps;
  r.ad_attention = S * (D * Da + N * D * Da + N * Da + N * D);
  r.ad_gru = S * ((D + nc) * 3 * D + D * 3 * D);
  r.ad_output = S * D * nc;
  return r;
}

long long instrumented_macs(const ParamStore& params, const PipelineContext& ctx,
                            const Tensor& image, long steps) {
  const ModelConfig& cfg = ctx.cfg;
  long S = steps > 0 ? steps : cfg.max_len;
  MacCounter::reset();
  MacCounter::enabled = true;
  {
    Tape tape(/*track_grad=*/false);
    Vars vars(tape, params);
    int img = tape.constant(image);
    int rect = rectify(tape, vars, cfg, ctx.rect, img);
    EncodeResult enc = encode(tape, vars, cfg, rect);
    int s = initial_state(tape, cfg, enc.f_init);
    int y_prev = charset().pad_id();
    // fixed-length run (no eos exit) so the count matches the closed form
    for (long t = 0; t < S; ++t) {
      StepNodes sn = decode_step(tape, vars, cfg, s, enc.features, y_prev);
      s = sn.state;
      const Tensor& p = tape.val(sn.probs);
      y_prev = static_cast<int>(
          std::max_element(p.data.begin(), p.data.end()) - p.data.begin());
    }
  }
  MacCounter::enabled = false;
  return MacCounter::count;
}

Tensor attention_rollout(const AttentionRecord& record) {
  if (record.weights.empty() || record.weights[0].empty())
    throw DataError("attention_rollout: empty record");
  long T = record.weights[0][0].rows();
  Tensor R = Tensor::identity(T);
  for (const auto& heads : record.weights) {
    Tensor a({T, T});
    for (const Tensor& w : heads)
      for (long i = 0; i < T * T; ++i) a.data[i] += w.data[i] / static_cast<double>(heads.size());
    for (long i = 0; i < T; ++i) a(i, i) += 1.0;  // residual branch
    for (long i = 0; i < T; ++i) {
      double s = 0.0;
      for (long j = 0; j < T; ++j) s += a(i, j);
      for (long j = 0; j < T; ++j) a(i, j) /= s;
    }
    Tensor next({T, T});  // next = a * R
    for (long i = 0; i < T; ++i)
      for (long k = 0; k < T; ++k) {
        double v = a(i, k);
        if (v == 0.0) continue;
        for (long j = 0; j < T; ++j) next(i, j) += v * R(k, j);
      }
    R = std::move(next);
  }
  return R;
}

Tensor rollout_patch_relevance(const Tensor& rollout) {
  long T = rollout.rows();
  Tensor out({T, T - 1});
  for (long i = 0; i < T; ++i) {
    double s = 0.0;
    for (long j = 1; j < T; ++j) s += rollout(i, j);
    for (long j = 1; j < T; ++j) out(i, j - 1) = s > 0.0 ? rollout(i, j) / s : 0.0;
  }
  return out;
}

RolloutMaps export_maps(const ParamStore& params, const PipelineContext& ctx, const Tensor& image,
                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const ModelConfig& cfg = ctx.cfg;
  EncoderOut enc = run_encoder(params, ctx, image);
  Tensor rel = rollout_patch_relevance(attention_rollout(enc.record));
  long T = rel.rows(), N = rel.cols();
  long gw = cfg.rect_w / cfg.patch_w, gh = cfg.rect_h / cfg.patch_h;

  RolloutMaps out;
  out.csv_path = (fs::path(out_dir) / "rollout.csv").string();
  std::ofstream csv(out.csv_path);
  if (!csv) throw DataError("export_maps: cannot open " + out.csv_path);
  char buf[64];
  for (long i = 0; i < T; ++i) {
    for (long j = 0; j < N; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", rel(i, j));
      csv << (j ? "," : "") << buf;
    }
    csv << "\n";
  }

  Tensor gray({cfg.rect_h, cfg.rect_w});
  for (long y = 0; y < cfg.rect_h; ++y)
    for (long x = 0; x < cfg.rect_w; ++x)
      gray(y, x) =
          (enc.rectified.at3(0, y, x) + enc.rectified.at3(1, y, x) + enc.rectified.at3(2, y, x)) /
          3.0;

  for (long i = 0; i < T; ++i) {
    double peak = 0.0, mass = 0.0, cx = 0.0;
    for (long j = 0; j < N; ++j) {
      peak = std::max(peak, rel(i, j));
      mass += rel(i, j);
      // patch grid is row-major: column index j % gw
      cx += rel(i, j) * ((static_cast<double>(j % gw) + 0.5) / static_cast<double>(gw));
    }
    out.mass_center_x.push_back(mass > 0.0 ? cx / mass : 0.5);

    Tensor map({3, cfg.rect_h, cfg.rect_w});
    for (long y = 0; y < cfg.rect_h; ++y)
      for (long x = 0; x < cfg.rect_w; ++x) {
        long j = (y / cfg.patch_h) * gw + x / cfg.patch_w;
        double heat = peak > 0.0 ? rel(i, j) / peak : 0.0;
        double base = 0.4 * gray(y, x);
        map.at3(0, y, x) = std::min(1.0, base + 0.6 * heat);
        map.at3(1, y, x) = base;
        map.at3(2, y, x) = base;
      }
    std::snprintf(buf, sizeof buf, "map_%03ld.ppm", i);
    std::string path = (fs::path(out_dir) / buf).string();
    save_ppm(path, map);
    out.map_paths.push_back(std::move(path));
  }
  (void)gh;
  return out;
}

}  // namespace trig
