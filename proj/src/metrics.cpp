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
#include "pihot/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace pihot {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes), counts_(static_cast<size_t>(num_classes) * num_classes, 0) {
  if (num_classes < 0) throw InvalidArgument("negative class count");
}

void ConfusionMatrix::add(int gt, int pred, std::uint64_t n) {
  if (gt < 0 || gt >= num_classes_ || pred < 0 || pred >= num_classes_) {
    throw InvalidArgument("label out of range for " + std::to_string(num_classes_) + " classes");
  }
  counts_[static_cast<size_t>(gt) * num_classes_ + pred] += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) {
    throw InvalidArgument("cannot merge confusion matrices with different class counts");
  }
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::gt_total(int k) const {
  std::uint64_t s = 0;
  for (int j = 0; j < num_classes_; ++j) s += at(k, j);
  return s;
}

std::uint64_t ConfusionMatrix::pred_total(int k) const {
  std::uint64_t s = 0;
  for (int i = 0; i < num_classes_; ++i) s += at(i, k);
  return s;
}

std::uint64_t MetricReport::contact_pixels() const {
  std::uint64_t s = 0;
  for (int k = 1; k < confusion.num_classes(); ++k) s += confusion.gt_total(k);
  return s;
}

MetricReport report_from_confusion(const ConfusionMatrix& m) {
  MetricReport r;
  r.confusion = m;
  const int C = m.num_classes();
  r.per_class_iou.assign(std::max(C, 0), std::nullopt);

  std::uint64_t contact = 0, class_correct = 0, contact_correct = 0;
  for (int k = 1; k < C; ++k) {
    contact += m.gt_total(k);
    class_correct += m.at(k, k);
    contact_correct += m.gt_total(k) - m.at(k, 0);
  }
  if (contact > 0) {
    r.sc_acc = 100.0 * static_cast<double>(class_correct) / static_cast<double>(contact);
    r.c_acc = 100.0 * static_cast<double>(contact_correct) / static_cast<double>(contact);
  }

  double iou_sum = 0.0, weighted = 0.0;
  std::uint64_t freq_sum = 0;
  int present = 0;
  for (int k = 1; k < C; ++k) {
    const std::uint64_t tp = m.at(k, k);
    const std::uint64_t uni = m.gt_total(k) + m.pred_total(k) - tp;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    r.per_class_iou[k] = iou;
    iou_sum += iou;
    ++present;
    weighted += static_cast<double>(m.gt_total(k)) * iou;
    freq_sum += m.gt_total(k);
  }
  if (present > 0) r.miou = iou_sum / present;
  if (freq_sum > 0) r.wiou = weighted / static_cast<double>(freq_sum);
  return r;
}

MetricReport evaluate(const ContactLabelMap& pred, const ContactLabelMap& gt, int num_classes) {
  if (!pred.same_dims(gt)) {
    throw ShapeError("evaluate: prediction " + dims_str(pred.height, pred.width) +
                     " vs ground truth " + dims_str(gt.height, gt.width));
  }
  ConfusionMatrix m(num_classes);
  for (size_t i = 0; i < gt.size(); ++i) m.add(gt.data[i], pred.data[i]);
  return report_from_confusion(m);
}

MetricReport evaluate(const ContactLabelMap& pred, const ContactLabelMap& gt) {
  int top = 0;
  for (int v : pred.data) top = std::max(top, v);
  for (int v : gt.data) top = std::max(top, v);
  return evaluate(pred, gt, top + 1);
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "micro") return Aggregation::kMicro;
  if (s == "macro") return Aggregation::kMacro;
  throw InvalidArgument("unknown aggregation: " + s);
}

std::string to_string(Aggregation a) { return a == Aggregation::kMicro ? "micro" : "macro"; }

namespace {

struct Mean {
  double sum = 0.0;
  int n = 0;
  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  std::optional<double> get() const { return n ? std::optional<double>(sum / n) : std::nullopt; }
};

}  // namespace

MetricReport aggregate(std::span<const MetricReport> reports, Aggregation mode) {
  if (reports.empty()) throw InvalidArgument("aggregate: no reports");
  ConfusionMatrix pooled(reports.front().confusion.num_classes());
  for (const auto& r : reports) pooled.merge(r.confusion);
  if (mode == Aggregation::kMicro) return report_from_confusion(pooled);

  MetricReport out;
  out.confusion = pooled;
  Mean sc, c, mi, wi;
  std::vector<Mean> per_class(pooled.num_classes());
  for (const auto& r : reports) {
    sc.add(r.sc_acc);
    c.add(r.c_acc);
    mi.add(r.miou);
    wi.add(r.wiou);
    for (size_t k = 0; k < r.per_class_iou.size() && k < per_class.size(); ++k) {
      per_class[k].add(r.per_class_iou[k]);
    }
  }
  out.sc_acc = sc.get();
  out.c_acc = c.get();
  out.miou = mi.get();
  out.wiou = wi.get();
  for (const auto& m : per_class) out.per_class_iou.push_back(m.get());
  return out;
}

namespace {

std::string fmt(const std::optional<double>& v, int precision) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, *v);
  return buf;
}

}  // namespace

std::string format_report(const MetricReport& r, const std::vector<std::string>& class_names) {
  std::ostringstream os;
  os << "sc_acc: " << fmt(r.sc_acc, 2) << "\n";
  os << "c_acc: " << fmt(r.c_acc, 2) << "\n";
  os << "miou: " << fmt(r.miou, 4) << "\n";
  os << "wiou: " << fmt(r.wiou, 4) << "\n";
  os << "contact_pixels: " << r.contact_pixels() << "\n";
  if (r.contact_pixels() == 0) os << "notice: no contact pixels in ground truth\n";
  os << "class  name                 gt_pixels  pred_pixels  iou\n";
  for (int k = 1; k < r.confusion.num_classes(); ++k) {
    const auto iou = k < static_cast<int>(r.per_class_iou.size()) ? r.per_class_iou[k] : std::nullopt;
    if (!iou) continue;
    const std::string name =
        k < static_cast<int>(class_names.size()) ? class_names[k] : "class_" + std::to_string(k);
    char line[160];
    std::snprintf(line, sizeof(line), "%5d  %-20s %10llu  %11llu  %s\n", k, name.c_str(),
                  static_cast<unsigned long long>(r.confusion.gt_total(k)),
                  static_cast<unsigned long long>(r.confusion.pred_total(k)), fmt(iou, 4).c_str());
    os << line;
  }
  return os.str();
}

nlohmann::json report_to_json(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["sc_acc"] = opt(r.sc_acc);
  j["c_acc"] = opt(r.c_acc);
  j["miou"] = opt(r.miou);
  j["wiou"] = opt(r.wiou);
  j["contact_pixels"] = r.contact_pixels();
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& v : r.per_class_iou) per_class.push_back(opt(v));
  j["per_class_iou"] = per_class;
  nlohmann::json conf = nlohmann::json::array();
  for (int i = 0; i < r.confusion.num_classes(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < r.confusion.num_classes(); ++k) row.push_back(r.confusion.at(i, k));
    conf.push_back(row);
  }
  j["confusion"] = conf;
  return j;
}

}  // namespace pihot
