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
#include "pihot/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "pihot/mask_ops.hpp"
#include "pihot/png_io.hpp"

namespace pihot {
namespace fs = std::filesystem;

namespace {

double quantize(double v, double scale) { return std::round(v * scale) / scale; }

double quantize_pixel(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

Color jitter(const Color& c, double amount, Rng& rng) {
  Color out;
  for (int i = 0; i < 3; ++i) out[i] = std::clamp(c[i] + rng.uniform(-amount, amount), 0.0, 1.0);
  return out;
}

ShapePrimitive rect(double x0, double y0, double x1, double y1) {
  return {ShapePrimitive::Kind::kRect, x0, y0, x1, y1};
}

ShapePrimitive ellipse(double x0, double y0, double x1, double y1) {
  return {ShapePrimitive::Kind::kEllipse, x0, y0, x1, y1};
}

// Draw order: far to near; the human goes last among equal depths.
struct DrawItem {
  const PlacedShape* shape;
  bool human;
};

std::vector<DrawItem> draw_order(const SceneSpec& spec, bool with_human) {
  std::vector<DrawItem> items;
  for (const auto& o : spec.objects) items.push_back({&o, false});
  if (with_human) items.push_back({&spec.human, true});
  std::stable_sort(items.begin(), items.end(), [](const DrawItem& a, const DrawItem& b) {
    if (a.shape->depth != b.shape->depth) return a.shape->depth > b.shape->depth;
    return !a.human && b.human;
  });
  return items;
}

struct Rendering {
  ImageTensor image;
  DepthMap depth;
  BinaryMask human;
};

Rendering render(const SceneSpec& spec, bool with_human, const std::vector<double>& noise) {
  const int H = spec.height, W = spec.width;
  std::vector<Color> color(static_cast<size_t>(H) * W, spec.background_color);
  Rendering r{ImageTensor(H, W), DepthMap(H, W, spec.background_depth), BinaryMask(H, W)};
  for (const auto& item : draw_order(spec, with_human)) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const ShapePart* hit = nullptr;
        for (const auto& part : item.shape->parts) {
          if (part.geometry.contains(x, y)) hit = &part;
        }
        if (!hit) continue;
        const size_t i = static_cast<size_t>(y) * W + x;
        color[i] = hit->color;
        r.depth.data[i] = item.shape->depth;
        r.human.data[i] = item.human ? 1 : 0;
      }
    }
  }
  for (size_t i = 0; i < color.size(); ++i) {
    for (int c = 0; c < 3; ++c) r.image.data[i * 3 + c] = quantize_pixel(color[i][c] + noise[i * 3 + c]);
  }
  return r;
}

std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

const char* kind_name(DatasetError::Kind k) {
  switch (k) {
    case DatasetError::Kind::kEmpty: return "empty dataset";
    case DatasetError::Kind::kMissingFile: return "missing file";
    case DatasetError::Kind::kParse: return "parse error";
    case DatasetError::Kind::kDimensionMismatch: return "dimension mismatch";
    case DatasetError::Kind::kLabelOutOfRange: return "label out of range";
    case DatasetError::Kind::kInvariant: return "invariant violated";
  }
  return "dataset error";
}

[[noreturn]] void dataset_fail(DatasetError::Kind kind, const std::string& detail) {
  throw DatasetError(kind, std::string(kind_name(kind)) + ": " + detail);
}

}  // namespace

bool ShapePrimitive::contains(int x, int y) const {
  const double px = x + 0.5;
  const double py = y + 0.5;
  if (kind == Kind::kRect) return px >= x0 && px < x1 && py >= y0 && py < y1;
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
  const double rx = 0.5 * (x1 - x0), ry = 0.5 * (y1 - y0);
  if (rx <= 0 || ry <= 0) return false;
  const double dx = (px - cx) / rx, dy = (py - cy) / ry;
  return dx * dx + dy * dy <= 1.0;
}

bool PlacedShape::contains(int x, int y) const {
  return std::any_of(parts.begin(), parts.end(),
                     [&](const ShapePart& p) { return p.geometry.contains(x, y); });
}

void SceneSpec::validate() const {
  if (height < 1 || width < 1) throw InvalidArgument("scene canvas must be at least 1x1");
  if (!(background_depth > 0) || !(human.depth > 0)) throw InvalidArgument("depths must be > 0");
  if (rule.radius < 0 || !(rule.tolerance >= 0)) throw InvalidArgument("bad contact rule");
  for (const auto& o : objects) {
    if (!(o.depth > 0)) throw InvalidArgument("object depths must be > 0");
    if (o.class_id < 1 || o.class_id >= num_classes) {
      throw InvalidArgument("object class id " + std::to_string(o.class_id) + " outside [1, " +
                            std::to_string(num_classes) + ")");
    }
  }
}

ImageTensor SceneSample::image_with_sidecar() const {
  ImageTensor img = image;
  img.sidecar = std::make_shared<DepthSidecar>(DepthSidecar{depth_with_human, depth_no_human});
  return img;
}

Color class_color(int class_id) {
  static const Color kPalette[] = {
      {0.0, 0.0, 0.0},   {0.85, 0.15, 0.15}, {0.15, 0.70, 0.20}, {0.15, 0.30, 0.85},
      {0.90, 0.80, 0.10}, {0.80, 0.20, 0.80}, {0.10, 0.80, 0.80}, {0.95, 0.50, 0.10},
      {0.50, 0.20, 0.70}};
  constexpr int kFixed = sizeof(kPalette) / sizeof(kPalette[0]);
  if (class_id >= 0 && class_id < kFixed) return kPalette[class_id];
  Rng rng(mix_seed(0xC0105, static_cast<std::uint64_t>(class_id)));
  return {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
}

ContactLabelMap contact_labels(const SceneSpec& spec, const BinaryMask& human_mask) {
  const int H = spec.height, W = spec.width;
  if (!human_mask.same_dims(H, W)) throw ShapeError("contact_labels: mask does not match scene");
  ContactLabelMap labels(H, W);
  const DilationKernel kernel(2 * spec.rule.radius + 1);
  for (const auto& item : draw_order(spec, false)) {
    const PlacedShape& obj = *item.shape;
    // Tiny slack so depths quantized to the storage grid compare as written.
    if (std::abs(obj.depth - spec.human.depth) > spec.rule.tolerance + 1e-9) continue;
    BinaryMask footprint(H, W);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) footprint.at(y, x) = obj.contains(x, y) ? 1 : 0;
    }
    const BinaryMask near = dilate_mask(footprint, kernel);
    for (size_t i = 0; i < labels.size(); ++i) {
      if (human_mask.data[i] && near.data[i]) labels.data[i] = obj.class_id;
    }
  }
  return labels;
}

SceneSample render_scene(const SceneSpec& spec, const std::string& id) {
  spec.validate();
  const size_t n = static_cast<size_t>(spec.height) * spec.width * 3;
  std::vector<double> noise(n);
  Rng rng(spec.noise_seed);
  for (auto& v : noise) v = spec.noise_amplitude * (2.0 * rng.uniform() - 1.0);

  Rendering with = render(spec, true, noise);
  Rendering without = render(spec, false, noise);
  SceneSample s;
  s.id = id;
  s.image = std::move(with.image);
  s.image_no_human = std::move(without.image);
  s.human_mask = std::move(with.human);
  s.depth_with_human = std::move(with.depth);
  s.depth_no_human = std::move(without.depth);
  s.labels = contact_labels(spec, s.human_mask);
  return s;
}

void GeneratorParams::validate() const {
  if (height < 32 || width < 32) {
    throw InvalidArgument("canvas " + dims_str(height, width) +
                          " too small for the scene shapes (need at least 32x32)");
  }
  if (num_classes < 2 || num_classes > 256) throw InvalidArgument("num_classes must be in [2, 256]");
  if (num_object_classes < 1 || num_object_classes >= num_classes) {
    throw InvalidArgument("num_object_classes must be in [1, num_classes)");
  }
  if (rule.radius < 0 || !(rule.tolerance >= 0)) throw InvalidArgument("bad contact rule");
  if (!(wall_depth > 1.5 + 0.5 + 0.3)) throw InvalidArgument("wall_depth must exceed 2.3");
  if (!(depth_scale > 0) || wall_depth * depth_scale > 65535) {
    throw InvalidArgument("depth_scale must be positive and keep depths within 16 bits");
  }
  if (!(noise_amplitude >= 0)) throw InvalidArgument("noise_amplitude must be >= 0");
}

nlohmann::json GeneratorParams::to_json() const {
  return {{"height", height},
          {"width", width},
          {"num_classes", num_classes},
          {"num_object_classes", num_object_classes},
          {"contact_radius", rule.radius},
          {"depth_tolerance", rule.tolerance},
          {"noise_amplitude", noise_amplitude},
          {"wall_depth", wall_depth},
          {"distractor_probability", distractor_probability},
          {"second_contact_probability", second_contact_probability},
          {"depth_scale", depth_scale}};
}

GeneratorParams GeneratorParams::from_json(const nlohmann::json& j) {
  GeneratorParams p;
  p.height = j.at("height").get<int>();
  p.width = j.at("width").get<int>();
  p.num_classes = j.at("num_classes").get<int>();
  p.num_object_classes = j.at("num_object_classes").get<int>();
  p.rule.radius = j.at("contact_radius").get<int>();
  p.rule.tolerance = j.at("depth_tolerance").get<double>();
  p.noise_amplitude = j.at("noise_amplitude").get<double>();
  p.wall_depth = j.at("wall_depth").get<double>();
  p.distractor_probability = j.at("distractor_probability").get<double>();
  p.second_contact_probability = j.at("second_contact_probability").get<double>();
  p.depth_scale = j.at("depth_scale").get<double>();
  return p;
}

SceneSpec random_scene(const GeneratorParams& params, Rng& rng) {
  params.validate();
  SceneSpec spec;
  spec.height = params.height;
  spec.width = params.width;
  spec.num_classes = params.num_classes;
  spec.rule = params.rule;
  spec.noise_amplitude = params.noise_amplitude;
  spec.noise_seed = rng.next();
  spec.background_depth = quantize(params.wall_depth, params.depth_scale);
  const double g = rng.uniform(0.35, 0.6);
  spec.background_color = {g, g, g + 0.04};

  // Layout is authored on a 64×64 grid and scaled to the canvas.
  const double sx = params.width / 64.0;
  const double sy = params.height / 64.0;
  auto R = [&](double x0, double y0, double x1, double y1) { return rect(x0 * sx, y0 * sy, x1 * sx, y1 * sy); };
  auto E = [&](double x0, double y0, double x1, double y1) { return ellipse(x0 * sx, y0 * sy, x1 * sx, y1 * sy); };

  const double hx = rng.uniform(22, 42);
  const double top = rng.uniform(3, 8);
  const double tw = rng.uniform(14, 18);
  const double th = rng.uniform(16, 20);
  const double lw = rng.uniform(5, 7);
  const double lh = rng.uniform(14, 18);
  const double gap = rng.uniform(0.5, 2);
  const double torso_top = top + 9;
  const double torso_bottom = torso_top + th;
  const double leg_bottom = std::min(torso_bottom + lh, 62.0);
  const Color skin = jitter({0.87, 0.68, 0.55}, 0.04, rng);
  const Color shirt{rng.uniform(0.3, 0.5), rng.uniform(0.25, 0.4), rng.uniform(0.2, 0.35)};
  const Color pants{rng.uniform(0.15, 0.3), rng.uniform(0.15, 0.3), rng.uniform(0.2, 0.35)};

  PlacedShape& human = spec.human;
  human.class_id = 0;
  human.depth = quantize(rng.uniform(1.0, 1.5), params.depth_scale);
  human.parts = {
      {E(hx - 5, top, hx + 5, top + 10), skin},
      {R(hx - tw / 2 - 4, torso_top + 1, hx - tw / 2, torso_top + 15), skin},
      {R(hx + tw / 2, torso_top + 1, hx + tw / 2 + 4, torso_top + 15), skin},
      {R(hx - tw / 2, torso_top, hx + tw / 2, torso_bottom), shirt},
      {R(hx - gap / 2 - lw, torso_bottom, hx - gap / 2, leg_bottom), pants},
      {R(hx + gap / 2, torso_bottom, hx + gap / 2 + lw, leg_bottom), pants},
  };

  // Anchors are regions that overlap the body in 2D by several pixels, so
  // contact regions are blobs rather than slivers.
  enum Anchor { kSeat, kFloor, kLeftSide, kRightSide, kBack };
  auto place = [&](Anchor a, int class_id, double depth) {
    PlacedShape o;
    o.class_id = class_id;
    o.depth = quantize(depth, params.depth_scale);
    const Color c = jitter(class_color(class_id), 0.03, rng);
    const bool round = class_id % 3 == 0;
    ShapePrimitive geom;
    switch (a) {
      case kSeat:
        geom = R(hx - rng.uniform(10, 16), torso_bottom - rng.uniform(6, 10), hx + rng.uniform(10, 16),
                 torso_bottom + rng.uniform(8, 12));
        break;
      case kFloor:
        geom = R(hx - rng.uniform(10, 18), leg_bottom - rng.uniform(8, 12), hx + rng.uniform(10, 18),
                 std::min(leg_bottom + rng.uniform(2, 5), 64.0));
        break;
      case kLeftSide: {
        const double x = hx - tw / 2 - 4;
        geom = R(x - rng.uniform(8, 14), torso_top + rng.uniform(1, 4), x + rng.uniform(8, 11),
                 torso_top + rng.uniform(14, 20));
        break;
      }
      case kRightSide: {
        const double x = hx + tw / 2 + 4;
        geom = R(x - rng.uniform(8, 11), torso_top + rng.uniform(1, 4), x + rng.uniform(8, 14),
                 torso_top + rng.uniform(14, 20));
        break;
      }
      case kBack:
        geom = R(hx - rng.uniform(8, 14), torso_top - rng.uniform(0, 4), hx + rng.uniform(8, 14),
                 torso_top + rng.uniform(10, 16));
        break;
    }
    if (round) geom.kind = ShapePrimitive::Kind::kEllipse;
    o.parts = {{geom, c}};
    spec.objects.push_back(std::move(o));
  };

  std::vector<Anchor> anchors{kSeat, kFloor, kLeftSide, kRightSide, kBack};
  for (size_t i = anchors.size(); i > 1; --i) std::swap(anchors[i - 1], anchors[rng.uniform_int(0, static_cast<int>(i) - 1)]);
  size_t next = 0;
  const double tol = params.rule.tolerance;
  // Touching objects sit level with or just behind the body, never in front of it.
  auto contact_depth = [&] { return human.depth + rng.uniform(0.0, 0.5 * tol); };

  place(anchors[next++], rng.uniform_int(1, params.num_object_classes), contact_depth());
  if (rng.bernoulli(params.second_contact_probability)) {
    place(anchors[next++], rng.uniform_int(1, params.num_object_classes), contact_depth());
  }
  if (rng.bernoulli(params.distractor_probability)) {
    const double far = rng.uniform(human.depth + 0.5, params.wall_depth - 0.3);
    place(anchors[next++], rng.uniform_int(1, params.num_object_classes), far);
  }
  return spec;
}

std::vector<SceneSample> generate_samples(std::uint64_t seed, int count, const GeneratorParams& params) {
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  params.validate();
  std::vector<SceneSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(render_scene(random_scene(params, rng), sample_id(i)));
  }
  return out;
}

nlohmann::json DatasetMeta::to_json() const {
  nlohmann::json pal = nlohmann::json::array();
  for (const auto& c : palette) pal.push_back({c[0], c[1], c[2]});
  return {{"format", "pihot-synthetic"}, {"version", 1},      {"seed", seed},
          {"count", count},              {"num_classes", num_classes},
          {"depth_scale", depth_scale},  {"class_names", class_names},
          {"palette", pal},              {"generator", params.to_json()}};
}

DatasetMeta DatasetMeta::from_json(const nlohmann::json& j) {
  DatasetMeta m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.count = j.at("count").get<int>();
  m.num_classes = j.at("num_classes").get<int>();
  m.depth_scale = j.at("depth_scale").get<double>();
  m.class_names = j.at("class_names").get<std::vector<std::string>>();
  for (const auto& c : j.at("palette")) {
    m.palette.push_back({c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()});
  }
  m.params = GeneratorParams::from_json(j.at("generator"));
  return m;
}

DatasetMeta make_meta(std::uint64_t seed, int count, const GeneratorParams& params) {
  DatasetMeta m;
  m.seed = seed;
  m.count = count;
  m.num_classes = params.num_classes;
  m.depth_scale = params.depth_scale;
  m.params = params;
  for (int k = 0; k < params.num_classes; ++k) {
    m.class_names.push_back(k == 0 ? "background" : "class_" + std::to_string(k));
    const Color c = class_color(k);
    m.palette.push_back({static_cast<std::uint8_t>(std::lround(c[0] * 255)),
                         static_cast<std::uint8_t>(std::lround(c[1] * 255)),
                         static_cast<std::uint8_t>(std::lround(c[2] * 255))});
  }
  return m;
}

void write_dataset(const fs::path& root, const std::vector<SceneSample>& samples, const DatasetMeta& meta) {
  for (const char* sub : {"images", "images_nohuman", "masks", "depth", "depth_nohuman", "labels"}) {
    fs::create_directories(root / sub);
  }
  for (const auto& s : samples) {
    const std::string file = s.id + ".png";
    io::write_rgb(root / "images" / file, s.image);
    io::write_rgb(root / "images_nohuman" / file, s.image_no_human);
    io::write_mask(root / "masks" / file, s.human_mask);
    io::write_depth16(root / "depth" / file, s.depth_with_human, meta.depth_scale);
    io::write_depth16(root / "depth_nohuman" / file, s.depth_no_human, meta.depth_scale);
    io::write_labels(root / "labels" / file, s.labels);
  }
  io::write_file_atomic(root / "meta", meta.to_json().dump(2) + "\n");
}

std::vector<SceneSample> generate(const fs::path& root, std::uint64_t seed, int count,
                                  const GeneratorParams& params) {
  auto samples = generate_samples(seed, count, params);
  write_dataset(root, samples, make_meta(seed, count, params));
  return samples;
}

DatasetMeta read_meta(const fs::path& root) {
  const fs::path path = root / "meta";
  if (!fs::exists(path)) dataset_fail(DatasetError::Kind::kMissingFile, path.string());
  std::ifstream in(path);
  try {
    return DatasetMeta::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    dataset_fail(DatasetError::Kind::kParse, path.string() + " (" + e.what() + ")");
  }
}

std::vector<std::string> list_ids(const fs::path& root) {
  std::vector<std::string> ids;
  const fs::path dir = root / "images";
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png") {
        ids.push_back(entry.path().stem().string());
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

SceneSample load_sample(const fs::path& root, const std::string& id, const DatasetMeta& meta) {
  const std::string file = id + ".png";
  auto path_of = [&](const char* sub) {
    fs::path p = root / sub / file;
    if (!fs::exists(p)) dataset_fail(DatasetError::Kind::kMissingFile, p.string());
    return p;
  };
  auto parse = [&](const char* sub, auto reader) {
    const fs::path p = path_of(sub);
    try {
      return reader(p);
    } catch (const IoError& e) {
      dataset_fail(DatasetError::Kind::kParse, p.string() + " (" + e.what() + ")");
    }
  };

  SceneSample s;
  s.id = id;
  s.image = parse("images", [](const fs::path& p) { return io::read_rgb(p); });
  s.image_no_human = parse("images_nohuman", [](const fs::path& p) { return io::read_rgb(p); });
  s.human_mask = parse("masks", [](const fs::path& p) { return io::read_mask(p); });
  s.depth_with_human = parse("depth", [&](const fs::path& p) { return io::read_depth16(p, meta.depth_scale); });
  s.depth_no_human = parse("depth_nohuman", [&](const fs::path& p) { return io::read_depth16(p, meta.depth_scale); });
  s.labels = parse("labels", [](const fs::path& p) { return io::read_labels(p); });

  const int H = s.image.height, W = s.image.width;
  auto check = [&](bool ok, const char* sub) {
    if (!ok) dataset_fail(DatasetError::Kind::kDimensionMismatch, (root / sub / file).string() + " is not " + dims_str(H, W));
  };
  check(s.image_no_human.height == H && s.image_no_human.width == W, "images_nohuman");
  check(s.human_mask.same_dims(H, W), "masks");
  check(s.depth_with_human.same_dims(H, W), "depth");
  check(s.depth_no_human.same_dims(H, W), "depth_nohuman");
  check(s.labels.same_dims(H, W), "labels");

  for (int v : s.labels.data) {
    if (v >= meta.num_classes) {
      dataset_fail(DatasetError::Kind::kLabelOutOfRange,
                   (root / "labels" / file).string() + " holds class " + std::to_string(v) + " >= " +
                       std::to_string(meta.num_classes));
    }
  }
  for (size_t i = 0; i < s.human_mask.size(); ++i) {
    if (s.human_mask.data[i]) continue;
    const bool same_rgb = s.image.data[i * 3] == s.image_no_human.data[i * 3] &&
                          s.image.data[i * 3 + 1] == s.image_no_human.data[i * 3 + 1] &&
                          s.image.data[i * 3 + 2] == s.image_no_human.data[i * 3 + 2];
    if (!same_rgb || s.depth_with_human.data[i] != s.depth_no_human.data[i] || s.labels.data[i] != 0) {
      dataset_fail(DatasetError::Kind::kInvariant,
                   "sample " + id + " differs from its human-free rendering outside the human mask");
    }
  }
  return s;
}

std::vector<SceneSample> load_dataset(const fs::path& root) {
  const auto ids = list_ids(root);
  if (ids.empty()) dataset_fail(DatasetError::Kind::kEmpty, "no images under " + (root / "images").string());
  const DatasetMeta meta = read_meta(root);
  std::vector<SceneSample> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(load_sample(root, id, meta));
  return out;
}

}  // namespace pihot
