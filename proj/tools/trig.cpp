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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "trig/analysis.hpp"
#include "trig/checkpoint.hpp"
#include "trig/error.hpp"
#include "trig/image.hpp"
#include "trig/synthgen.hpp"
#include "trig/training.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct LoadedCkpt {
  trig::Checkpoint ckpt;
  trig::PipelineContext ctx;
};

LoadedCkpt open_ckpt(const std::string& path) {
  trig::Checkpoint ck = trig::load_checkpoint(path);
  trig::PipelineContext ctx = trig::PipelineContext::build(ck.cfg);
  return {std::move(ck), std::move(ctx)};
}

void print_resolved(const std::string& what, const std::string& json) {
  std::cout << "resolved " << what << ":\n" << json << "\n";
}

int cmd_gen_data(const std::string& spec_path, const std::string& out) {
  trig::GenSpec spec = trig::GenSpec::from_json_file(spec_path);
  print_resolved("genspec", spec.to_json());
  trig::DatasetManifest m = trig::generate_dataset(spec, out);
  std::cout << "wrote " << m.entries.size() << " samples to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out,
              const std::optional<std::string>& resume, const std::optional<uint64_t>& seed) {
  trig::TrainConfig cfg = trig::TrainConfig::from_json_file(config_path);
  if (seed) cfg.seed = *seed;
  print_resolved("train config", cfg.to_json());
  trig::TrainResult res = trig::train(cfg, out, resume);
  nlohmann::json j;
  j["best"] = res.best_path;
  j["last"] = res.last_path;
  j["metrics"] = res.metrics_path;
  j["best_val_acc"] = res.best_val_acc;
  j["final_loss"] = res.final_loss;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, long beam, bool greedy) {
  LoadedCkpt lc = open_ckpt(ckpt_path);
  print_resolved("model config", lc.ckpt.cfg.to_json());
  trig::DatasetManifest data = trig::load_manifest(data_dir);
  trig::EvalReport rep =
      trig::evaluate(lc.ckpt.params, lc.ctx, data, greedy ? 0 : beam);
  nlohmann::json j;
  j["count"] = rep.count;
  j["exact"] = rep.exact;
  j["accuracy"] = rep.accuracy;
  j["mean_edit_distance"] = rep.mean_edit_distance;
  nlohmann::json pl = nlohmann::json::object();
  for (const auto& [len, p] : rep.per_length)
    pl[std::to_string(len)] = {{"exact", p.first}, {"count", p.second}};
  j["per_length"] = pl;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_infer(const std::string& ckpt_path, const std::string& image_path, long beam,
              const std::string& dump_attention) {
  LoadedCkpt lc = open_ckpt(ckpt_path);
  print_resolved("model config", lc.ckpt.cfg.to_json());
  trig::Tensor img = trig::load_ppm(image_path);
  trig::EncoderOut enc = trig::run_encoder(lc.ckpt.params, lc.ctx, img);
  trig::DecodeResult greedy = trig::greedy_decode(lc.ckpt.params, lc.ckpt.cfg, enc.f_init,
                                                  enc.features, lc.ckpt.cfg.max_len);
  trig::DecodeResult best =
      beam > 1 ? trig::beam_decode(lc.ckpt.params, lc.ckpt.cfg, enc.f_init, enc.features,
                                   lc.ckpt.cfg.max_len, beam)
               : greedy;
  nlohmann::json j;
  j["text"] = best.text;
  j["log_prob"] = best.log_prob;
  j["beam"] = beam;
  std::cout << j.dump(2) << "\n";
  if (!dump_attention.empty()) {
    // per-step decoder attention of the greedy pass, one CSV row per step
    std::ofstream f(dump_attention);
    if (!f) throw trig::DataError("infer: cannot open " + dump_attention);
    char buf[64];
    for (const trig::Tensor& a : greedy.alphas) {
      for (long i = 0; i < a.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", a.data[i]);
        f << (i ? "," : "") << buf;
      }
      f << "\n";
    }
    std::cout << "attention written to " << dump_attention << "\n";
  }
  return 0;
}

int cmd_analyze(const std::string& preset, const std::string& config_path, long decode_steps) {
  trig::ModelConfig cfg;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw trig::DataError("analyze: cannot open " + config_path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    cfg = trig::ModelConfig::from_json(text);
  } else {
    cfg = trig::preset_config(preset.empty() ? "paper-1d" : preset);
  }
  print_resolved("model config", cfg.to_json());
  trig::MacsReport r = trig::analytical_macs(cfg, decode_steps);
  auto g = [](long long v) { return static_cast<double>(v) * 1e-9; };
  std::printf("tokens           %ld\n", r.tokens);
  std::printf("decode steps     %ld\n", r.decode_steps);
  std::printf("parameters       %ld\n", r.params);
  std::printf("MACs (G):\n");
  std::printf("  rectification  %.6f\n", g(r.tra_total()));
  std::printf("  encoder        %.6f\n", g(r.tfe_total()));
  std::printf("    embed        %.6f\n", g(r.tfe_embed));
  std::printf("    projections  %.6f\n", g(r.tfe_projection));
  std::printf("    attention    %.6f\n", g(r.tfe_attention));
  std::printf("    mlp          %.6f\n", g(r.tfe_mlp));
  std::printf("  decoder        %.6f\n", g(r.ad_total()));
  std::printf("  total          %.6f\n", g(r.total()));
  std::cout << r.to_json() << "\n";
  return 0;
}

int cmd_rollout(const std::string& ckpt_path, const std::string& image_path,
                const std::string& out) {
  LoadedCkpt lc = open_ckpt(ckpt_path);
  print_resolved("model config", lc.ckpt.cfg.to_json());
  trig::Tensor img = trig::load_ppm(image_path);
  trig::RolloutMaps maps = trig::export_maps(lc.ckpt.params, lc.ctx, img, out);
  std::cout << "wrote " << maps.map_paths.size() << " maps and " << maps.csv_path << "\n";
  return 0;
}

int cmd_grad_check(uint64_t seed) {
  trig::ModelConfig cfg = trig::preset_config("tiny");
  print_resolved("model config", cfg.to_json());
  trig::GradCheckReport rep = trig::grad_check(cfg, seed);
  for (const auto& e : rep.per_param)
    std::printf("%-24s max rel err %.3e\n", e.name.c_str(), e.max_rel_err);
  std::printf("worst: %.3e (%s)\n", rep.worst, rep.worst_param.c_str());
  if (!(rep.worst < 1e-4)) {
    std::cerr << "error: gradient check failed (worst " << rep.worst << ")\n";
    return kExitNumeric;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TRIG scene-text recognizer toolkit"};
  app.require_subcommand(1);

  uint64_t global_seed = 0;
  bool have_seed = false;
  bool deterministic = true;
  app.add_flag("--deterministic,!--no-deterministic", deterministic,
               "single-threaded reproducible mode (always on; flag kept for scripts)");
  app.add_option("--seed", global_seed, "master seed override")->each([&](const std::string&) {
    have_seed = true;
  });

  std::string spec_path, out_dir, config_path, resume_path, ckpt_path, data_dir, image_path;
  std::string preset, dump_attention;
  long beam = 0, decode_steps = 0;
  bool greedy = false;
  uint64_t gc_seed = 0;

  CLI::App* gen = app.add_subcommand("gen-data", "render a synthetic dataset");
  gen->add_option("--spec", spec_path, "generation spec JSON")->required();
  gen->add_option("--out", out_dir, "output directory")->required();

  CLI::App* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path, "training config JSON")->required();
  tr->add_option("--resume", resume_path, "checkpoint to resume from");
  tr->add_option("--out", out_dir, "output directory")->required();

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--beam", beam, "beam width (0 = greedy)");
  ev->add_flag("--greedy", greedy, "force greedy decoding");

  CLI::App* in = app.add_subcommand("infer", "recognize one image");
  in->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  in->add_option("--image", image_path, "input PPM")->required();
  in->add_option("--beam", beam, "beam width (0/1 = greedy)");
  in->add_option("--dump-attention", dump_attention, "CSV path for per-step attention");

  CLI::App* an = app.add_subcommand("analyze", "parameter / MACs report");
  an->add_option("--preset", preset, "model preset (paper-1d, paper-2d, toy, tiny)");
  an->add_option("--config", config_path, "model config JSON")->excludes("--preset");
  an->add_option("--decode-steps", decode_steps, "decoder steps for the MACs model");

  CLI::App* ro = app.add_subcommand("rollout", "export attention rollout maps");
  ro->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  ro->add_option("--image", image_path, "input PPM")->required();
  ro->add_option("--out", out_dir, "output directory")->required();

  CLI::App* gc = app.add_subcommand("grad-check", "finite-difference gradient verification");
  gc->add_option("--seed", gc_seed, "gradient check seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(spec_path, out_dir);
    if (tr->parsed())
      return cmd_train(config_path, out_dir,
                       resume_path.empty() ? std::nullopt : std::optional(resume_path),
                       have_seed ? std::optional(global_seed) : std::nullopt);
    if (ev->parsed()) return cmd_eval(ckpt_path, data_dir, beam, greedy);
    if (in->parsed()) return cmd_infer(ckpt_path, image_path, beam, dump_attention);
    if (an->parsed()) return cmd_analyze(preset, config_path, decode_steps);
    if (ro->parsed()) return cmd_rollout(ckpt_path, image_path, out_dir);
    if (gc->parsed()) return cmd_grad_check(have_seed && gc_seed == 0 ? global_seed : gc_seed);
  } catch (const trig::UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const trig::NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const trig::DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
