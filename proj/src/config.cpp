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
#include "pihot/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pihot {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

enum class Kind { kInt, kPositiveInt, kNonNegInt, kDouble, kPositiveDouble, kSwitch, kChoice, kText, kWeights };

struct KeySpec {
  ConfigKey key;
  Kind kind;
  std::vector<std::string> choices;
};

const std::vector<KeySpec>& specs() {
  static const std::vector<KeySpec> kSpecs = {
      {{"model.backbone", "tiny", "tiny | resnet50_shape"}, Kind::kChoice, {"tiny", "resnet50_shape"}},
      {{"model.channels", "32", "tiny backbone output channels"}, Kind::kPositiveInt, {}},
      {{"model.downsample", "8", "tiny backbone downsample factor (power of two)"}, Kind::kPositiveInt, {}},
      {{"model.resnet_width", "64", "resnet50_shape base width"}, Kind::kPositiveInt, {}},
      {{"model.attn_dim", "0", "attention token dimension, 0 = feature channels"}, Kind::kNonNegInt, {}},
      {{"model.num_classes", "18", "classes including background"}, Kind::kPositiveInt, {}},
      {{"model.alpha", "0.1", "fusion weight on o_a"}, Kind::kDouble, {}},
      {{"model.beta", "0.1", "fusion weight on d_a"}, Kind::kDouble, {}},
      {{"loss.background_weight", "0.2", "loss weight of class 0"}, Kind::kPositiveDouble, {}},
      {{"loss.reduction", "mean", "mean | sum over pixels"}, Kind::kChoice, {"mean", "sum"}},
      {{"loss.class_weights", "", "comma-separated per-class weights, empty = all 1"}, Kind::kWeights, {}},
      {{"plugins.inpainter", "diffusion_stub", "diffusion_stub | external"}, Kind::kChoice, {"diffusion_stub", "external"}},
      {{"plugins.depth", "oracle_stub", "oracle_stub | constant_stub | external"},
       Kind::kChoice, {"oracle_stub", "constant_stub", "external"}},
      {{"plugins.inpaint_command", "", "external inpainter command ({image} {mask} {output})"}, Kind::kText, {}},
      {{"plugins.depth_command", "", "external depth command ({image} {output})"}, Kind::kText, {}},
      {{"plugins.mask_command", "", "external human mask command ({image} {output})"}, Kind::kText, {}},
      {{"plugins.depth_scale", "1000", "16-bit depth PNG units per depth unit"}, Kind::kPositiveDouble, {}},
      {{"metrics.aggregation", "micro", "micro | macro"}, Kind::kChoice, {"micro", "macro"}},
      {{"mask.dilation_kernel", "3", "odd dilation kernel size"}, Kind::kPositiveInt, {}},
      {{"mask.dilation_iterations", "1", "dilation passes"}, Kind::kNonNegInt, {}},
      {{"train.seed", "0", "seed for initialization, batches and augmentation"}, Kind::kNonNegInt, {}},
      {{"train.steps", "100", "optimizer steps"}, Kind::kNonNegInt, {}},
      {{"train.batch_size", "8", "samples per step"}, Kind::kPositiveInt, {}},
      {{"train.lr", "1e-5", "Adam learning rate"}, Kind::kPositiveDouble, {}},
      {{"train.oi", "on", "object inpainting module"}, Kind::kSwitch, {}},
      {{"train.ipi", "on", "instance perspective interaction"}, Kind::kSwitch, {}},
      {{"train.spo", "on", "depth-difference spatial map"}, Kind::kSwitch, {}},
      {{"train.idsi", "on", "depth space interaction"}, Kind::kSwitch, {}},
      {{"train.augment_flip", "off", "random horizontal flips"}, Kind::kSwitch, {}},
      {{"train.augment_crop", "off", "random shifted crops"}, Kind::kSwitch, {}},
  };
  return kSpecs;
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : specs()) {
    if (s.key.name == key) return &s;
  }
  return nullptr;
}

void check_value(const KeySpec& spec, const std::string& value) {
  const std::string& name = spec.key.name;
  switch (spec.kind) {
    case Kind::kInt: parse_int(value, name); break;
    case Kind::kPositiveInt:
      if (parse_int(value, name) < 1) throw ConfigError(name + " must be >= 1, got " + value);
      break;
    case Kind::kNonNegInt:
      if (parse_int(value, name) < 0) throw ConfigError(name + " must be >= 0, got " + value);
      break;
    case Kind::kDouble: parse_double(value, name); break;
    case Kind::kPositiveDouble:
      if (!(parse_double(value, name) > 0)) throw ConfigError(name + " must be > 0, got " + value);
      break;
    case Kind::kSwitch: parse_switch(value, name); break;
    case Kind::kChoice:
      if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
        std::string allowed;
        for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        throw ConfigError(name + " must be one of {" + allowed + "}, got '" + value + "'");
      }
      break;
    case Kind::kText: break;
    case Kind::kWeights:
      if (!value.empty()) {
        for (const auto& w : split(value, ',')) {
          if (!(parse_double(w, name) > 0)) throw ConfigError(name + " entries must be > 0");
        }
      }
      break;
  }
}

}  // namespace

long long parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

bool parse_switch(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "on" || t == "true" || t == "1") return true;
  if (t == "off" || t == "false" || t == "0") return false;
  throw ConfigError(what + ": expected on or off, got '" + text + "'");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> kKeys = [] {
    std::vector<ConfigKey> keys;
    for (const auto& s : specs()) keys.push_back(s.key);
    return keys;
  }();
  return kKeys;
}

RunConfig::RunConfig() {
  for (const auto& s : specs()) values_[s.key.name] = s.key.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ConfigError("unknown config key '" + key + "'");
  const std::string v = trim(value);
  check_value(*spec, v);
  values_[key] = v;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.string());
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.backbone = parse_backbone_variant(get("model.backbone"));
  m.channels = static_cast<int>(parse_int(get("model.channels"), "model.channels"));
  m.downsample = static_cast<int>(parse_int(get("model.downsample"), "model.downsample"));
  m.resnet_width = static_cast<int>(parse_int(get("model.resnet_width"), "model.resnet_width"));
  m.attn_dim = static_cast<int>(parse_int(get("model.attn_dim"), "model.attn_dim"));
  m.num_classes = static_cast<int>(parse_int(get("model.num_classes"), "model.num_classes"));
  m.alpha = parse_double(get("model.alpha"), "model.alpha");
  m.beta = parse_double(get("model.beta"), "model.beta");
  m.seed = static_cast<std::uint64_t>(parse_int(get("train.seed"), "train.seed"));
  return m;
}

LossConfig RunConfig::loss() const {
  LossConfig l;
  l.background_weight = parse_double(get("loss.background_weight"), "loss.background_weight");
  l.reduction = get("loss.reduction") == "sum" ? nn::Reduction::kSum : nn::Reduction::kMean;
  const std::string& w = get("loss.class_weights");
  if (!w.empty()) {
    for (const auto& item : split(w, ',')) l.class_weights.push_back(parse_double(item, "loss.class_weights"));
  }
  return l;
}

PluginConfig RunConfig::plugins() const {
  PluginConfig p;
  p.inpainter = get("plugins.inpainter");
  p.depth = get("plugins.depth");
  p.inpaint_command = get("plugins.inpaint_command");
  p.depth_command = get("plugins.depth_command");
  p.mask_command = get("plugins.mask_command");
  p.depth_scale = parse_double(get("plugins.depth_scale"), "plugins.depth_scale");
  return p;
}

AblationFlags RunConfig::ablation() const {
  return {parse_switch(get("train.oi"), "train.oi"), parse_switch(get("train.ipi"), "train.ipi"),
          parse_switch(get("train.spo"), "train.spo"), parse_switch(get("train.idsi"), "train.idsi")};
}

Aggregation RunConfig::aggregation() const { return parse_aggregation(get("metrics.aggregation")); }

int RunConfig::dilation_kernel() const {
  return static_cast<int>(parse_int(get("mask.dilation_kernel"), "mask.dilation_kernel"));
}

int RunConfig::dilation_iterations() const {
  return static_cast<int>(parse_int(get("mask.dilation_iterations"), "mask.dilation_iterations"));
}

TrainSettings RunConfig::train() const {
  TrainSettings t;
  t.seed = static_cast<std::uint64_t>(parse_int(get("train.seed"), "train.seed"));
  t.steps = static_cast<int>(parse_int(get("train.steps"), "train.steps"));
  t.batch_size = static_cast<int>(parse_int(get("train.batch_size"), "train.batch_size"));
  t.lr = parse_double(get("train.lr"), "train.lr");
  t.augment_flip = parse_switch(get("train.augment_flip"), "train.augment_flip");
  t.augment_crop = parse_switch(get("train.augment_crop"), "train.augment_crop");
  return t;
}

void RunConfig::ablate(const std::string& module) {
  if (module != "oi" && module != "ipi" && module != "spo" && module != "idsi") {
    throw ConfigError("unknown module '" + module + "' (expected oi, ipi, spo or idsi)");
  }
  set("train." + module, "off");
}

}  // namespace pihot
