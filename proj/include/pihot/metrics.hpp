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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pihot/image.hpp"

namespace pihot {

// Pixel confusion counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes = 0);

  void add(int gt, int pred, std::uint64_t n = 1);
  void merge(const ConfusionMatrix& other);

  int num_classes() const { return num_classes_; }
  std::uint64_t at(int gt, int pred) const { return counts_[static_cast<size_t>(gt) * num_classes_ + pred]; }
  std::uint64_t gt_total(int k) const;
  std::uint64_t pred_total(int k) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int num_classes_;
  std::vector<std::uint64_t> counts_;
};

// HOT metrics. Contact accuracies are taken over ground-truth contact pixels
// (gt > 0); IoUs skip the background class and classes absent from both gt
// and prediction. Undefined values are empty rather than 0.
struct MetricReport {
  std::optional<double> sc_acc;  // % of gt contact pixels with the right class
  std::optional<double> c_acc;   // % of gt contact pixels predicted as any contact
  std::optional<double> miou;    // mean IoU over present contact classes
  std::optional<double> wiou;    // gt-frequency weighted IoU
  std::vector<std::optional<double>> per_class_iou;  // index = class id; [0] empty
  ConfusionMatrix confusion;

  std::uint64_t contact_pixels() const;
};

// Throws ShapeError on differing sizes and InvalidArgument on labels outside
// [0, num_classes).
MetricReport evaluate(const ContactLabelMap& pred, const ContactLabelMap& gt, int num_classes);
// num_classes inferred as 1 + the largest label in either map.
MetricReport evaluate(const ContactLabelMap& pred, const ContactLabelMap& gt);

MetricReport report_from_confusion(const ConfusionMatrix& confusion);

enum class Aggregation { kMicro, kMacro };
Aggregation parse_aggregation(const std::string& s);
std::string to_string(Aggregation a);

// kMicro pools confusion counts across images; kMacro averages each metric
// over the images where it is defined. Throws InvalidArgument when empty.
MetricReport aggregate(std::span<const MetricReport> reports, Aggregation mode = Aggregation::kMicro);

// `key: value` lines plus a per-class table.
std::string format_report(const MetricReport& report, const std::vector<std::string>& class_names = {});
nlohmann::json report_to_json(const MetricReport& report);

}  // namespace pihot
