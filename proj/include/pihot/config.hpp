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

// Flat run configuration. One `key = value` per line, `#` starts a comment.
// Every key has a default; unknown keys and malformed values raise
// ConfigError. Later set() calls win, so callers apply defaults, then the
// config file, then command-line overrides.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pihot/metrics.hpp"
#include "pihot/network.hpp"
#include "pihot/plugins.hpp"

namespace pihot {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

// All known keys with their defaults, in documentation order.
const std::vector<ConfigKey>& config_keys();

struct TrainSettings {
  std::uint64_t seed = 0;
  int steps = 100;
  int batch_size = 8;
  double lr = 1e-5;
  bool augment_flip = false;
  bool augment_crop = false;
};

class RunConfig {
 public:
  RunConfig();

  // Validates the key and the value's type before storing it.
  void set(const std::string& key, const std::string& value);
  // `key=value` as given on a command line.
  void set_assignment(const std::string& assignment);
  const std::string& get(const std::string& key) const;

  // Parses `key = value` lines. `origin` names the source in diagnostics.
  void merge_text(const std::string& text, const std::string& origin = "config");
  void merge_file(const std::filesystem::path& path);
  // Every key, sorted, as `key = value` lines. merge_text(to_text()) is exact.
  std::string to_text() const;

  ModelConfig model() const;
  LossConfig loss() const;
  PluginConfig plugins() const;
  AblationFlags ablation() const;
  Aggregation aggregation() const;
  int dilation_kernel() const;
  int dilation_iterations() const;
  TrainSettings train() const;

  // Turns one of oi, ipi, spo, idsi off.
  void ablate(const std::string& module);

  bool operator==(const RunConfig&) const = default;

 private:
  std::map<std::string, std::string> values_;
};

// Numeric helpers shared with the CLI. Throw ConfigError naming `what`.
long long parse_int(const std::string& text, const std::string& what);
double parse_double(const std::string& text, const std::string& what);
bool parse_switch(const std::string& text, const std::string& what);

}  // namespace pihot
