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
#include "pihot/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pihot/depth_ops.hpp"
#include "pihot/mask_ops.hpp"
#include "pihot/png_io.hpp"

namespace pihot {

PrepareOptions prepare_options(const RunConfig& cfg) {
  PrepareOptions o;
  o.dilation_kernel = cfg.dilation_kernel();
  o.dilation_iterations = cfg.dilation_iterations();
  o.flags = cfg.ablation();
  return o;
}

PreparedSample prepare_sample(const ImageTensor& image, const BinaryMask& human_mask,
                              const InpainterBackend& inpainter, const DepthBackend& depth,
                              const PrepareOptions& opts) {
  image.validate();
  human_mask.validate();
  if (!human_mask.same_dims(image.height, image.width)) {
    throw ShapeError("mask " + dims_str(human_mask.height, human_mask.width) + " does not match image " +
                     dims_str(image.height, image.width));
  }
  PreparedSample s;
  s.image = image;
  s.mask = dilate_mask(human_mask, DilationKernel(opts.dilation_kernel), opts.dilation_iterations);
  s.inpainted = opts.flags.oi ? inpaint(inpainter, image, s.mask) : image;
  if (opts.flags.spo) {
    s.d_i = estimate_depth(depth, s.image);
    s.d_o = estimate_depth(depth, s.inpainted);
    s.d_s = relative_position(s.d_i, s.d_o);
  } else {
    s.d_s = RelativePositionMap(image.height, image.width, 1.0);
  }
  return s;
}

std::vector<PreparedSample> prepare_dataset(const std::vector<SceneSample>& samples, const RunConfig& cfg) {
  const PluginConfig plugins = cfg.plugins();
  const auto inpainter = make_inpainter(plugins);
  const auto depth = make_depth_backend(plugins);
  const PrepareOptions opts = prepare_options(cfg);
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    PreparedSample p = prepare_sample(s.image_with_sidecar(), s.human_mask, *inpainter, *depth, opts);
    p.id = s.id;
    p.labels = s.labels;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

template <typename G>
G flip_grid(const G& g) {
  G out = g;
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) out.at(y, x) = g.at(y, g.width - 1 - x);
  }
  return out;
}

ImageTensor flip_image(const ImageTensor& img) {
  ImageTensor out = img;
  out.sidecar.reset();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    }
  }
  return out;
}

template <typename G>
G crop_grid(const G& g, int top, int left, int h, int w) {
  if (g.size() == 0) return g;
  G out = g;
  out.height = h;
  out.width = w;
  out.data.assign(static_cast<size_t>(h) * w, {});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(y, x) = g.at(top + y, left + x);
  }
  return out;
}

ImageTensor crop_image(const ImageTensor& img, int top, int left, int h, int w) {
  ImageTensor out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(top + y, left + x, c);
    }
  }
  return out;
}

}  // namespace

PreparedSample flip_sample(const PreparedSample& s) {
  PreparedSample o;
  o.id = s.id;
  o.image = flip_image(s.image);
  o.inpainted = flip_image(s.inpainted);
  o.mask = flip_horizontal(s.mask);
  o.d_i = s.d_i.size() ? flip_grid(s.d_i) : s.d_i;
  o.d_o = s.d_o.size() ? flip_grid(s.d_o) : s.d_o;
  o.d_s = flip_grid(s.d_s);
  o.labels = s.labels.size() ? flip_grid(s.labels) : s.labels;
  return o;
}

PreparedSample crop_sample(const PreparedSample& s, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > s.image.height ||
      left + width > s.image.width) {
    throw InvalidArgument("crop window outside the " + dims_str(s.image.height, s.image.width) + " image");
  }
  PreparedSample o;
  o.id = s.id;
  o.image = crop_image(s.image, top, left, height, width);
  o.inpainted = crop_image(s.inpainted, top, left, height, width);
  o.mask = crop_grid(s.mask, top, left, height, width);
  o.d_i = crop_grid(s.d_i, top, left, height, width);
  o.d_o = crop_grid(s.d_o, top, left, height, width);
  o.d_s = crop_grid(s.d_s, top, left, height, width);
  o.labels = crop_grid(s.labels, top, left, height, width);
  return o;
}

template <typename T>
NetInputs<T> make_inputs(const std::vector<const PreparedSample*>& batch, int downsample) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const int N = static_cast<int>(batch.size());
  const int H = batch[0]->image.height, W = batch[0]->image.width;
  if (H % downsample || W % downsample) {
    throw ShapeError("image " + dims_str(H, W) + " is not divisible by the downsample factor " +
                     std::to_string(downsample));
  }
  NetInputs<T> in;
  in.image = Tensor<T>({N, 3, H, W});
  in.inpainted = Tensor<T>({N, 3, H, W});
  in.relative_position = Tensor<T>({N, 1, H / downsample, W / downsample});
  for (int n = 0; n < N; ++n) {
    const PreparedSample& s = *batch[n];
    if (s.image.height != H || s.image.width != W) throw ShapeError("batch images differ in size");
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
          in.image.at(n, c, y, x) = static_cast<T>(s.image.at(y, x, c));
          in.inpainted.at(n, c, y, x) = static_cast<T>(s.inpainted.at(y, x, c));
        }
      }
    }
    const Grid<double> ds = area_downsample(s.d_s, downsample);
    for (int y = 0; y < ds.height; ++y) {
      for (int x = 0; x < ds.width; ++x) in.relative_position.at(n, 0, y, x) = static_cast<T>(ds.at(y, x));
    }
  }
  return in;
}

template NetInputs<float> make_inputs<float>(const std::vector<const PreparedSample*>&, int);
template NetInputs<double> make_inputs<double>(const std::vector<const PreparedSample*>&, int);

std::vector<int> batch_labels(const std::vector<const PreparedSample*>& batch) {
  std::vector<int> out;
  for (const auto* s : batch) {
    if (!s->labels.same_dims(s->image.height, s->image.width)) {
      throw InvalidArgument("sample " + s->id + " has no label map matching its image");
    }
    out.insert(out.end(), s->labels.data.begin(), s->labels.data.end());
  }
  return out;
}

Checkpoint make_checkpoint(PihotNet<float>& net, const Adam<float>* opt, std::uint64_t step,
                           const std::string& config_text) {
  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.config_text = config_text;
  auto set = net.params();
  for (const auto& p : set.params) ckpt.arrays.emplace_back("param/" + p.name, p.var->value);
  for (const auto& b : set.buffers) ckpt.arrays.emplace_back("buffer/" + b.name, *b.tensor);
  if (opt) {
    // The optimizer keeps its moments in parameter order.
    for (size_t i = 0; i < set.params.size(); ++i) {
      ckpt.arrays.emplace_back("adam.m/" + set.params[i].name, opt->first_moments()[i]);
      ckpt.arrays.emplace_back("adam.v/" + set.params[i].name, opt->second_moments()[i]);
    }
  }
  return ckpt;
}

namespace {

void copy_array(const Checkpoint& ckpt, const std::string& name, Tensor<float>& dst) {
  const Tensor<float>* src = ckpt.find(name);
  if (!src) throw CheckpointError("checkpoint is missing array " + name);
  if (src->shape() != dst.shape()) {
    throw CheckpointError("checkpoint array " + name + " has shape " + shape_str(src->shape()) +
                          ", model expects " + shape_str(dst.shape()));
  }
  dst = *src;
}

}  // namespace

void load_parameters(PihotNet<float>& net, const Checkpoint& ckpt) {
  auto set = net.params();
  for (auto& p : set.params) copy_array(ckpt, "param/" + p.name, p.var->value);
  for (auto& b : set.buffers) copy_array(ckpt, "buffer/" + b.name, *b.tensor);
}

void load_optimizer(Adam<float>& opt, PihotNet<float>& net, const Checkpoint& ckpt) {
  auto set = net.params();
  for (size_t i = 0; i < set.params.size(); ++i) {
    copy_array(ckpt, "adam.m/" + set.params[i].name, opt.first_moments()[i]);
    copy_array(ckpt, "adam.v/" + set.params[i].name, opt.second_moments()[i]);
  }
  opt.set_steps(ckpt.step);
}

Trainer::Trainer(const RunConfig& cfg, std::vector<PreparedSample> data)
    : cfg_(cfg),
      settings_(cfg.train()),
      flags_(cfg.ablation()),
      loss_(cfg.loss()),
      data_(std::move(data)) {
  if (data_.empty()) throw InvalidArgument("training set is empty");
  for (const auto& s : data_) {
    if (s.image.height != data_[0].image.height || s.image.width != data_[0].image.width) {
      throw ShapeError("training images must share one size");
    }
  }
  net_ = std::make_unique<PihotNet<float>>(cfg.model());
  AdamOptions opts;
  opts.lr = settings_.lr;
  opt_ = std::make_unique<Adam<float>>(net_->params(), opts);
}

std::vector<int> Trainer::batch_indices(std::uint64_t step) const {
  const int n = static_cast<int>(data_.size());
  Rng rng(mix_seed(settings_.seed ^ 0x6261746368ULL, step));
  std::vector<int> out;
  while (static_cast<int>(out.size()) < settings_.batch_size) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    for (int i = 0; i < n && static_cast<int>(out.size()) < settings_.batch_size; ++i) out.push_back(perm[i]);
  }
  return out;
}

double Trainer::step() {
  const auto indices = batch_indices(step_);
  const int f = net_->downsample_factor();
  std::vector<PreparedSample> augmented;
  std::vector<const PreparedSample*> batch;
  if (settings_.augment_flip || settings_.augment_crop) {
    Rng rng(mix_seed(settings_.seed ^ 0x61756775ULL, step_));
    const int H = data_[0].image.height, W = data_[0].image.width;
    const bool crop = settings_.augment_crop && H > f && W > f;
    const int top = crop ? rng.uniform_int(0, f) : 0;
    const int left = crop ? rng.uniform_int(0, f) : 0;
    for (int i : indices) {
      PreparedSample s = data_[i];
      if (settings_.augment_flip && rng.bernoulli(0.5)) s = flip_sample(s);
      if (crop) s = crop_sample(s, top, left, H - f, W - f);
      augmented.push_back(std::move(s));
    }
    for (const auto& s : augmented) batch.push_back(&s);
  } else {
    for (int i : indices) batch.push_back(&data_[i]);
  }

  const NetInputs<float> in = make_inputs<float>(batch, f);
  auto params = net_->params();
  params.zero_grad();
  const NetOutputs<float> out = net_->forward(in, flags_, true);
  const auto loss = nn::sigmoid_bce(out.logits, batch_labels(batch), loss_.weights(net_->config().num_classes),
                                    loss_.reduction, kProbabilityEps);
  nn::backward(loss);
  opt_->step(params);
  ++step_;
  return static_cast<double>(loss->value[0]);
}

void Trainer::restore(const Checkpoint& ckpt) {
  load_parameters(*net_, ckpt);
  load_optimizer(*opt_, *net_, ckpt);
  step_ = ckpt.step;
}

Checkpoint Trainer::checkpoint() const {
  return make_checkpoint(*net_, opt_.get(), step_, cfg_.to_text());
}

std::vector<PredictionMap> predict(PihotNet<float>& net, const std::vector<PreparedSample>& data,
                                   const AblationFlags& flags) {
  std::vector<PredictionMap> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    const NetInputs<float> in = make_inputs<float>({&s}, net.downsample_factor());
    const NetOutputs<float> o = net.forward(in, flags, false);
    out.push_back(probabilities(o.logits->value, 0));
  }
  return out;
}

Evaluation evaluate_model(PihotNet<float>& net, const std::vector<PreparedSample>& data,
                          const AblationFlags& flags, Aggregation mode) {
  if (data.empty()) throw InvalidArgument("evaluation set is empty");
  const int C = net.config().num_classes;
  Evaluation ev;
  const auto probs = predict(net, data, flags);
  for (size_t i = 0; i < data.size(); ++i) {
    ev.per_image.push_back(evaluate(predict_labels(probs[i]), data[i].labels, C));
  }
  ev.summary = aggregate(ev.per_image, mode);
  return ev;
}

LoadedModel load_model(const std::filesystem::path& checkpoint_path) {
  const Checkpoint ckpt = read_checkpoint(checkpoint_path);
  LoadedModel m;
  try {
    m.config.merge_text(ckpt.config_text, "checkpoint config");
  } catch (const ConfigError& e) {
    throw CheckpointError("corrupt checkpoint " + checkpoint_path.string() + ": " + e.what());
  }
  m.net = std::make_unique<PihotNet<float>>(m.config.model());
  load_parameters(*m.net, ckpt);
  m.step = ckpt.step;
  return m;
}

namespace {

// Rows of an existing loss log up to and including `last_step`.
std::string log_prefix(const std::filesystem::path& path, std::uint64_t last_step) {
  std::string out = "step,loss\n";
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    if (std::stoull(line.substr(0, comma)) > last_step) break;
    out += line + "\n";
  }
  return out;
}

}  // namespace

void run_training(const RunConfig& cfg, const TrainRun& run,
                  const std::function<void(std::uint64_t, double)>& progress) {
  const auto samples = load_dataset(run.data);
  const DatasetMeta meta = read_meta(run.data);
  if (meta.num_classes != cfg.model().num_classes) {
    throw ConfigError("dataset has " + std::to_string(meta.num_classes) + " classes but model.num_classes is " +
                      std::to_string(cfg.model().num_classes));
  }
  Trainer trainer(cfg, prepare_dataset(samples, cfg));
  std::string log = "step,loss\n";
  if (!run.resume.empty()) {
    trainer.restore(read_checkpoint(run.resume));
    log = log_prefix(run.log, trainer.current_step());
  }
  const auto total = static_cast<std::uint64_t>(cfg.train().steps);
  char row[64];
  while (trainer.current_step() < total) {
    const double loss = trainer.step();
    if (!std::isfinite(loss)) {
      throw Error("training diverged at step " + std::to_string(trainer.current_step()));
    }
    std::snprintf(row, sizeof(row), "%llu,%.9g\n", static_cast<unsigned long long>(trainer.current_step()), loss);
    log += row;
    if (progress) progress(trainer.current_step(), loss);
  }
  if (!run.log.empty()) io::write_file_atomic(run.log, log);
  write_checkpoint(run.out, trainer.checkpoint());
}

}  // namespace pihot
