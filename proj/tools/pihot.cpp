/* Copyright 2026 The PIHOT Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// pihot: dataset generation, training, evaluation, inference and depth
// visualization for the contact detection pipeline.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pihot/config.hpp"
#include "pihot/depth_ops.hpp"
#include "pihot/pipeline.hpp"
#include "pihot/png_io.hpp"
#include "pihot/synthdata.hpp"

namespace fs = std::filesystem;
using namespace pihot;

namespace {

// Flags shared by commands that take a run configuration.
struct ConfigFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::string> ablate;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override one config key (key=value), repeatable");
    cmd->add_option("--ablate", ablate, "turn a module off: oi, ipi, spo or idsi (repeatable)");
  }

  // The config file overrides `cfg`; --set and --ablate override the file.
  void apply(RunConfig& cfg) const {
    if (!config_file.empty()) cfg.merge_file(config_file);
    for (const auto& s : sets) cfg.set_assignment(s);
    for (const auto& m : ablate) cfg.ablate(m);
  }
};

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("PIHOT_SEED");
  if (!s || !*s) return std::nullopt;
  return static_cast<std::uint64_t>(parse_int(s, "PIHOT_SEED"));
}

RunConfig base_config() {
  RunConfig cfg;
  if (auto seed = env_seed()) cfg.set("train.seed", std::to_string(*seed));
  return cfg;
}

int gen_data(std::uint64_t seed, int count, const fs::path& out, int size, int num_classes) {
  GeneratorParams params;
  params.height = params.width = size;
  params.num_classes = num_classes;
  params.num_object_classes = std::min(params.num_object_classes, num_classes - 1);
  const auto samples = generate(out, seed, count, params);
  std::uint64_t contact = 0, human = 0;
  for (const auto& s : samples) {
    human += s.human_mask.count();
    for (int v : s.labels.data) contact += v > 0;
  }
  std::cout << "wrote " << samples.size() << " samples to " << out.string() << " (seed " << seed
            << ", " << human << " human pixels, " << contact << " contact pixels)\n";
  return 0;
}

int eval_cmd(const fs::path& checkpoint, const fs::path& data, const fs::path& json_out, const ConfigFlags& flags) {
  LoadedModel model = load_model(checkpoint);
  RunConfig cfg = model.config;
  flags.apply(cfg);
  const DatasetMeta meta = read_meta(data);
  if (meta.num_classes != model.net->config().num_classes) {
    throw ConfigError("class-count mismatch: checkpoint has " + std::to_string(model.net->config().num_classes) +
                      " classes, dataset has " + std::to_string(meta.num_classes));
  }
  const auto prepared = prepare_dataset(load_dataset(data), cfg);
  const Evaluation ev = evaluate_model(*model.net, prepared, cfg.ablation(), cfg.aggregation());
  std::cout << "images: " << prepared.size() << "\n";
  std::cout << "aggregation: " << to_string(cfg.aggregation()) << "\n";
  std::cout << format_report(ev.summary, meta.class_names);
  if (!json_out.empty()) {
    nlohmann::json j = report_to_json(ev.summary);
    j["images"] = prepared.size();
    j["aggregation"] = to_string(cfg.aggregation());
    j["checkpoint_step"] = model.step;
    io::write_file_atomic(json_out, j.dump(2) + "\n");
  }
  return 0;
}

struct InferArgs {
  fs::path checkpoint, image, mask, depth, depth_hidden, out, probs, overlay, meta;
  std::optional<double> depth_scale;
};

int infer_cmd(const InferArgs& a, const ConfigFlags& flags) {
  LoadedModel model = load_model(a.checkpoint);
  RunConfig cfg = model.config;
  flags.apply(cfg);
  const PluginConfig plugins = cfg.plugins();

  ImageTensor image = io::read_rgb(a.image);
  BinaryMask mask;
  if (!a.mask.empty()) {
    mask = io::read_mask(a.mask);
  } else if (!plugins.mask_command.empty()) {
    mask = external_human_mask(plugins.mask_command, image);
  } else {
    throw InvalidArgument("no human mask: pass --mask or set plugins.mask_command");
  }
  if (!a.depth.empty() || !a.depth_hidden.empty()) {
    if (a.depth.empty() || a.depth_hidden.empty()) {
      throw InvalidArgument("--depth and --depth-hidden must be given together");
    }
    const double scale = a.depth_scale.value_or(plugins.depth_scale);
    image.sidecar = std::make_shared<DepthSidecar>(
        DepthSidecar{io::read_depth16(a.depth, scale), io::read_depth16(a.depth_hidden, scale)});
  }

  const auto inpainter = make_inpainter(plugins);
  const auto depth = make_depth_backend(plugins);
  PreparedSample s = prepare_sample(image, mask, *inpainter, *depth, prepare_options(cfg));
  const PredictionMap probs = predict(*model.net, {s}, cfg.ablation()).front();
  const ContactLabelMap labels = predict_labels(probs);
  io::write_labels(a.out, labels);

  if (!a.probs.empty()) {
    nlohmann::json j;
    j["shape"] = probs.shape();
    j["data"] = probs.storage();
    io::write_file_atomic(a.probs, j.dump() + "\n");
  }
  if (!a.overlay.empty()) {
    std::vector<io::Rgb8> palette;
    if (!a.meta.empty()) {
      std::ifstream in(a.meta);
      if (!in) throw IoError("cannot read " + a.meta.string());
      palette = DatasetMeta::from_json(nlohmann::json::parse(in)).palette;
    }
    std::vector<io::Rgb8> pixels(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      const int k = labels.data[i];
      Color tint{};
      if (k > 0) {
        if (k < static_cast<int>(palette.size())) {
          for (int c = 0; c < 3; ++c) tint[c] = palette[k][c] / 255.0;
        } else {
          tint = class_color(k);
        }
      }
      for (int c = 0; c < 3; ++c) {
        const double v = image.data[i * 3 + c];
        const double mixed = k > 0 ? 0.4 * v + 0.6 * tint[c] : v;
        pixels[i][c] = static_cast<std::uint8_t>(std::lround(std::clamp(mixed, 0.0, 1.0) * 255.0));
      }
    }
    io::write_rgb8(a.overlay, labels.height, labels.width, pixels);
  }
  std::uint64_t contact = 0;
  for (int v : labels.data) contact += v > 0;
  std::cout << "wrote " << a.out.string() << " (" << dims_str(labels.height, labels.width) << ", " << contact
            << " contact pixels)\n";
  return 0;
}

int visualize_depth(const fs::path& data, const std::string& id, const fs::path& out, const ConfigFlags& flags) {
  RunConfig cfg = base_config();
  flags.apply(cfg);
  const DatasetMeta meta = read_meta(data);
  const SceneSample sample = load_sample(data, id, meta);
  const PluginConfig plugins = cfg.plugins();
  const auto inpainter = make_inpainter(plugins);
  const auto depth = make_depth_backend(plugins);
  PrepareOptions opts = prepare_options(cfg);
  opts.flags.spo = true;
  const PreparedSample s = prepare_sample(sample.image_with_sidecar(), sample.human_mask, *inpainter, *depth, opts);

  double top = 0.0;
  for (double v : s.d_i.data) top = std::max(top, v);
  for (double v : s.d_o.data) top = std::max(top, v);
  auto scaled = [&](const DepthMap& d) {
    Grid<double> g = d;
    if (top > 0) {
      for (auto& v : g.data) v /= top;
    }
    return g;
  };
  fs::create_directories(out);
  io::write_gray(out / "d_i.png", scaled(s.d_i));
  io::write_gray(out / "d_o.png", scaled(s.d_o));
  io::write_gray(out / "d_s.png", s.d_s);
  std::cout << "wrote d_i.png, d_o.png, d_s.png to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-object contact detection: data, training, evaluation and inference"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::optional<std::uint64_t> gen_seed;
  int gen_count = 0, gen_size = 64, gen_classes = 18;
  fs::path gen_out;
  gen->add_option("--seed", gen_seed, "generator seed (default: PIHOT_SEED or 0)");
  gen->add_option("--count", gen_count, "number of scenes")->required()->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--size", gen_size, "canvas side in pixels")->check(CLI::Range(32, 4096));
  gen->add_option("--num-classes", gen_classes, "classes including background")->check(CLI::Range(2, 256));

  // train
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  ConfigFlags train_flags;
  fs::path train_data, train_out, train_log, train_resume;
  std::optional<std::string> steps, lr, batch, seed;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--out", train_out, "checkpoint to write")->required();
  train->add_option("--log", train_log, "loss log (default: <out>.loss.csv)");
  train->add_option("--resume", train_resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  train->add_option("--steps", steps, "total optimizer steps (train.steps)");
  train->add_option("--lr", lr, "learning rate (train.lr)");
  train->add_option("--batch-size", batch, "batch size (train.batch_size)");
  train->add_option("--seed", seed, "seed (train.seed)");
  train_flags.add(train);

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ConfigFlags eval_flags;
  fs::path eval_ckpt, eval_data, eval_out;
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", eval_data, "dataset directory")->required();
  ev->add_option("--out", eval_out, "write the report as JSON");
  eval_flags.add(ev);

  // infer
  auto* inf = app.add_subcommand("infer", "predict contact labels for one image");
  ConfigFlags infer_flags;
  InferArgs ia;
  inf->add_option("--checkpoint", ia.checkpoint, "checkpoint")->required()->check(CLI::ExistingFile);
  inf->add_option("--image", ia.image, "RGB PNG")->required()->check(CLI::ExistingFile);
  inf->add_option("--mask", ia.mask, "0/255 human mask PNG (else plugins.mask_command)");
  inf->add_option("--depth", ia.depth, "16-bit depth PNG of the image (oracle depth stub)");
  inf->add_option("--depth-hidden", ia.depth_hidden, "16-bit depth PNG of the scene without the human");
  inf->add_option("--depth-scale", ia.depth_scale, "units per depth value in the depth PNGs");
  inf->add_option("--out", ia.out, "label PNG to write")->required();
  inf->add_option("--probs", ia.probs, "write the probability map as JSON");
  inf->add_option("--overlay", ia.overlay, "write an RGB overlay PNG");
  inf->add_option("--meta", ia.meta, "dataset meta file for the overlay palette");
  infer_flags.add(inf);

  // visualize-depth
  auto* vis = app.add_subcommand("visualize-depth", "dump d_i, d_o and d_s of one sample as PNGs");
  ConfigFlags vis_flags;
  fs::path vis_data, vis_out;
  std::string vis_id;
  vis->add_option("--data", vis_data, "dataset directory")->required();
  vis->add_option("--id", vis_id, "sample id")->required();
  vis->add_option("--out", vis_out, "output directory")->required();
  vis_flags.add(vis);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      const std::uint64_t s = gen_seed ? *gen_seed : env_seed().value_or(0);
      return gen_data(s, gen_count, gen_out, gen_size, gen_classes);
    }
    if (*train) {
      RunConfig cfg = base_config();
      if (!train_resume.empty()) {
        cfg = RunConfig();
        cfg.merge_text(read_checkpoint(train_resume).config_text, "checkpoint config");
      }
      train_flags.apply(cfg);
      if (steps) cfg.set("train.steps", *steps);
      if (lr) cfg.set("train.lr", *lr);
      if (batch) cfg.set("train.batch_size", *batch);
      if (seed) cfg.set("train.seed", *seed);
      TrainRun run{train_data, train_out, train_log, train_resume};
      if (run.log.empty()) run.log = fs::path(train_out.string() + ".loss.csv");
      double last = 0.0;
      run_training(cfg, run, [&](std::uint64_t, double loss) { last = loss; });
      std::cout << "trained to step " << cfg.train().steps << ", final loss " << last << ", checkpoint "
                << train_out.string() << "\n";
      return 0;
    }
    if (*ev) return eval_cmd(eval_ckpt, eval_data, eval_out, eval_flags);
    if (*inf) return infer_cmd(ia, infer_flags);
    if (*vis) return visualize_depth(vis_data, vis_id, vis_out, vis_flags);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "pihot: error: " << msg << "\n";
    return 1;
  }
  return 1;
}
