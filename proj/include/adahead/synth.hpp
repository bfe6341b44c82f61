/* Copyright 2026 The AdaHead Authors. All Rights Reserved.

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

#ifndef ADAHEAD_SYNTH_HPP_
#define ADAHEAD_SYNTH_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adahead/anchors.hpp"
#include "adahead/config.hpp"
#include "adahead/tensor.hpp"

namespace adahead {

// Images are Tensor<float> [H, W, 3] with values in [0, 1].
using Image = Tensor<float>;

struct RadiusRange {
  double lo = 0, hi = 0;  // pixels
};

struct SceneConfig {
  Index height = 160, width = 160;
  std::vector<double> ratios{0.70, 0.15, 0.15};
  int min_objects = 2, max_objects = 6;
  // Large / medium / small, one range per category.
  std::vector<RadiusRange> radii{{11, 16}, {8, 11}, {3, 6}};
  // Centers may approach each other down to (1 - overlap) * (r_a + r_b).
  double overlap = 0.3;
  double noise = 0.02;
  std::uint64_t seed = 42;

  int num_categories() const { return static_cast<int>(ratios.size()); }
  void validate() const;
};

// A rendered filled ellipse, pixel units.
struct Ellipse {
  double cx, cy, rx, ry, angle;
  int category;
};

struct LabeledImage {
  Image pixels;
  std::vector<GroundTruth> labels;
  std::vector<Ellipse> objects;  // same order as labels
};

// Pixel (x, y) belongs to the ellipse when its center (x + .5, y + .5) does.
std::vector<std::uint8_t> rasterize(const Ellipse& e, Index height, Index width);

// Pure function of (config, index).
LabeledImage generate_scene(const SceneConfig& cfg, std::uint64_t index);

// --- labels ------------------------------------------------------------------

void write_labels(std::ostream& os, const std::vector<GroundTruth>& labels);
void write_labels(const std::string& path, const std::vector<GroundTruth>& labels);
// Out-of-range category or box raises ValidationError, malformed lines
// ParseError.
std::vector<GroundTruth> read_labels(std::istream& is, int num_categories);
std::vector<GroundTruth> read_labels(const std::string& path, int num_categories);

// --- images ------------------------------------------------------------------

// Binary P6, maxval 255.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

// Half-pixel centers, edge clamped.
Image resize_image(const Image& image, Index out_h, Index out_w);

// Separable kernel truncated at 3 sigma and renormalized.
std::vector<double> gaussian_kernel(double sigma);
Image gaussian_blur(const Image& image, double sigma);
// Window k (odd) per channel, edge replicated.
Image median_filter(const Image& image, int k);
// 0.5 + factor * (x - 0.5), clamped to [0, 1].
Image adjust_contrast(const Image& image, double factor);

// Horizontal flip; cx -> 1 - cx.
LabeledImage mirror(const LabeledImage& in);
// Quarter turn clockwise; (cx, cy, w, h) -> (1 - cy, cx, h, w).
LabeledImage rotate90(const LabeledImage& in);

// --- dataset layout ----------------------------------------------------------

struct DatasetConfig {
  SceneConfig scene;
  Index train = 300;
  Index val = 60;

  static DatasetConfig from_keys(const KeyValues& kv);
  KeyValues to_keys() const;
};

// root/images/{split}/NNNNNN.ppm, root/labels/{split}/NNNNNN.txt and
// root/dataset.cfg. Validation scenes continue the index sequence after the
// training ones.
void write_dataset(const std::string& root, const DatasetConfig& cfg);

struct Sample {
  std::string image_path;
  std::string label_path;
  std::string stem;
};

// Samples of one split sorted by file stem.
std::vector<Sample> list_split(const std::string& root, const std::string& split);
DatasetConfig read_dataset_config(const std::string& root);

}  // namespace adahead

#endif  // ADAHEAD_SYNTH_HPP_
