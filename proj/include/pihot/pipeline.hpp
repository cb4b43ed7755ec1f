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
#pragma once

// End-to-end plumbing: per-image preprocessing (dilate, inpaint, depth pair,
// relative position), batching, the training loop, checkpoints and
// evaluation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pihot/checkpoint.hpp"
#include "pihot/config.hpp"
#include "pihot/metrics.hpp"
#include "pihot/network.hpp"
#include "pihot/optim.hpp"
#include "pihot/plugins.hpp"
#include "pihot/synthdata.hpp"

namespace pihot {

struct PrepareOptions {
  int dilation_kernel = 3;
  int dilation_iterations = 1;
  AblationFlags flags;
};

PrepareOptions prepare_options(const RunConfig& cfg);

// Everything the network consumes for one image, at image resolution.
struct PreparedSample {
  std::string id;
  ImageTensor image;          // I
  ImageTensor inpainted;      // I_o (I itself with OI off)
  BinaryMask mask;            // dilated human mask
  DepthMap d_i, d_o;          // empty with SPO off
  RelativePositionMap d_s;    // all ones with SPO off
  ContactLabelMap labels;     // empty when unknown
};

// OI off: I_o := I. SPO off: no depth is estimated and d_s := 1.
PreparedSample prepare_sample(const ImageTensor& image, const BinaryMask& human_mask,
                              const InpainterBackend& inpainter, const DepthBackend& depth,
                              const PrepareOptions& opts);

std::vector<PreparedSample> prepare_dataset(const std::vector<SceneSample>& samples, const RunConfig& cfg);

// Horizontal flip and/or a crop window of every image-resolution field.
PreparedSample flip_sample(const PreparedSample& s);
PreparedSample crop_sample(const PreparedSample& s, int top, int left, int height, int width);

// Stacks samples into network inputs; d_s is area-averaged to feature size.
template <typename T>
NetInputs<T> make_inputs(const std::vector<const PreparedSample*>& batch, int downsample);

// Labels of the batch in N·H·W order. Throws when a sample has none.
std::vector<int> batch_labels(const std::vector<const PreparedSample*>& batch);

// Checkpoint array names: param/<name>, buffer/<name>, adam.m/<name>, adam.v/<name>.
Checkpoint make_checkpoint(PihotNet<float>& net, const Adam<float>* opt, std::uint64_t step,
                           const std::string& config_text);
void load_parameters(PihotNet<float>& net, const Checkpoint& ckpt);
void load_optimizer(Adam<float>& opt, PihotNet<float>& net, const Checkpoint& ckpt);

class Trainer {
 public:
  Trainer(const RunConfig& cfg, std::vector<PreparedSample> data);

  // One optimizer step on the batch drawn for the current step; returns the loss.
  double step();
  // Restores parameters, buffers, optimizer moments and the step counter.
  void restore(const Checkpoint& ckpt);
  Checkpoint checkpoint() const;

  std::uint64_t current_step() const { return step_; }
  PihotNet<float>& net() { return *net_; }
  const RunConfig& config() const { return cfg_; }

  // Sample indices used at `step`. Depends only on (seed, step, dataset size).
  std::vector<int> batch_indices(std::uint64_t step) const;

 private:
  RunConfig cfg_;
  TrainSettings settings_;
  AblationFlags flags_;
  LossConfig loss_;
  std::vector<PreparedSample> data_;
  std::unique_ptr<PihotNet<float>> net_;
  std::unique_ptr<Adam<float>> opt_;
  std::uint64_t step_ = 0;
};

// Probability map of every sample, one image at a time in inference mode.
std::vector<PredictionMap> predict(PihotNet<float>& net, const std::vector<PreparedSample>& data,
                                   const AblationFlags& flags);

struct Evaluation {
  std::vector<MetricReport> per_image;
  MetricReport summary;
};

Evaluation evaluate_model(PihotNet<float>& net, const std::vector<PreparedSample>& data,
                          const AblationFlags& flags, Aggregation mode);

// Rebuilds the config and network stored in a checkpoint.
struct LoadedModel {
  RunConfig config;
  std::unique_ptr<PihotNet<float>> net;
  std::uint64_t step = 0;
};
LoadedModel load_model(const std::filesystem::path& checkpoint_path);

struct TrainRun {
  std::filesystem::path data;
  std::filesystem::path out;     // checkpoint path
  std::filesystem::path log;     // loss log, `step,loss` rows
  std::filesystem::path resume;  // optional checkpoint to continue from
};

// Trains up to train.steps total steps, appending to the loss log when
// resuming. `progress` is called after each step.
void run_training(const RunConfig& cfg, const TrainRun& run,
                  const std::function<void(std::uint64_t, double)>& progress = {});

}  // namespace pihot
