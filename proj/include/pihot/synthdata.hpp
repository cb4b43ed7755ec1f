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

// Procedural scenes: a flat wall, a few flat-coloured objects and a human
// drawn front-most. Every scene is rendered twice (with and without the
// human) together with both depth maps, so inpainting and depth backends
// have exact references.
//
// Contact rule: a human pixel p gets the class of object k when
//   |depth(human) − depth(k)| <= tolerance   and
//   Chebyshev distance from p to k's full footprint <= radius.
// The footprint includes the parts of k hidden behind the human, so a
// same-depth object the human sits or stands on yields a solid contact
// region, while a far wall behind the human yields none.
//
// On-disk layout under <root>:
//   images/<id>.png          RGB scene
//   images_nohuman/<id>.png  RGB scene without the human
//   masks/<id>.png           0/255 human mask
//   depth/<id>.png           16-bit depth, value = round(depth · depth_scale)
//   depth_nohuman/<id>.png   same, without the human
//   labels/<id>.png          8-bit class ids
//   meta                     JSON: class names, palette, depth scale, params, seed

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pihot/image.hpp"
#include "pihot/rng.hpp"

namespace pihot {

using Color = std::array<double, 3>;

struct ShapePrimitive {
  enum class Kind { kRect, kEllipse };
  Kind kind = Kind::kRect;
  // Bounding box in pixel coordinates; an ellipse is inscribed in it. A pixel
  // (x, y) is inside when its centre (x + 0.5, y + 0.5) is.
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(int x, int y) const;
};

struct ShapePart {
  ShapePrimitive geometry;
  Color color{};
};

struct PlacedShape {
  std::vector<ShapePart> parts;
  double depth = 1.0;
  int class_id = 0;  // 0 for the human

  bool contains(int x, int y) const;
};

struct ContactRule {
  int radius = 2;
  double tolerance = 0.1;
};

struct SceneSpec {
  int height = 64;
  int width = 64;
  Color background_color{0.5, 0.5, 0.5};
  double background_depth = 3.0;
  PlacedShape human;
  std::vector<PlacedShape> objects;
  ContactRule rule;
  double noise_amplitude = 0.02;
  std::uint64_t noise_seed = 0;
  int num_classes = 18;

  // Throws InvalidArgument: depths must be > 0, class ids in [1, num_classes).
  void validate() const;
};

struct SceneSample {
  std::string id;
  ImageTensor image;
  ImageTensor image_no_human;
  BinaryMask human_mask;
  DepthMap depth_with_human;
  DepthMap depth_no_human;
  ContactLabelMap labels;

  // The image with its ground-truth depth sidecar attached, as consumed by
  // the oracle depth stub.
  ImageTensor image_with_sidecar() const;
};

struct GeneratorParams {
  int height = 64;
  int width = 64;
  int num_classes = 18;        // C_y including background
  int num_object_classes = 4;  // object class ids drawn from [1, num_object_classes]
  ContactRule rule;
  double noise_amplitude = 0.02;
  double wall_depth = 3.0;
  double distractor_probability = 0.5;
  double second_contact_probability = 0.3;
  double depth_scale = 1000.0;

  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorParams from_json(const nlohmann::json& j);
};

// Fixed per-class colours; index 0 is background.
Color class_color(int class_id);

// Renders both versions of the scene and derives the labels.
SceneSample render_scene(const SceneSpec& spec, const std::string& id = "");

// The contact rule applied to a scene and its (visible) human mask.
ContactLabelMap contact_labels(const SceneSpec& spec, const BinaryMask& human_mask);

// Random layout for one scene. Throws InvalidArgument when the canvas is too
// small for the body and object shapes.
SceneSpec random_scene(const GeneratorParams& params, Rng& rng);

// Deterministic in (seed, index): sample i uses its own derived stream.
std::vector<SceneSample> generate_samples(std::uint64_t seed, int count, const GeneratorParams& params);

struct DatasetMeta {
  std::uint64_t seed = 0;
  int count = 0;
  int num_classes = 18;
  double depth_scale = 1000.0;
  std::vector<std::string> class_names;
  std::vector<std::array<std::uint8_t, 3>> palette;
  GeneratorParams params;

  nlohmann::json to_json() const;
  static DatasetMeta from_json(const nlohmann::json& j);
};

DatasetMeta make_meta(std::uint64_t seed, int count, const GeneratorParams& params);

// Generates `count` samples and writes the layout above. Returns the samples.
std::vector<SceneSample> generate(const std::filesystem::path& root, std::uint64_t seed, int count,
                                  const GeneratorParams& params);

void write_dataset(const std::filesystem::path& root, const std::vector<SceneSample>& samples,
                   const DatasetMeta& meta);

class DatasetError : public Error {
 public:
  enum class Kind { kEmpty, kMissingFile, kParse, kDimensionMismatch, kLabelOutOfRange, kInvariant };
  DatasetError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

DatasetMeta read_meta(const std::filesystem::path& root);

// Ids (file stems under images/) in lexicographic order.
std::vector<std::string> list_ids(const std::filesystem::path& root);

// Loads and validates every sample, ordered by id.
std::vector<SceneSample> load_dataset(const std::filesystem::path& root);

SceneSample load_sample(const std::filesystem::path& root, const std::string& id,
                        const DatasetMeta& meta);

}  // namespace pihot
