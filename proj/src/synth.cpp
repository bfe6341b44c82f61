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

#include "adahead/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "adahead/errors.hpp"
#include "adahead/ops.hpp"
#include "adahead/rng.hpp"

namespace adahead {

namespace fs = std::filesystem;

void SceneConfig::validate() const {
  if (height < 1 || width < 1) throw ConfigError("scene size must be positive");
  if (ratios.empty()) throw ConfigError("scene needs at least one category ratio");
  double sum = 0;
  for (double r : ratios) {
    if (!(r >= 0)) throw ConfigError("category ratios must be nonnegative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("category ratios must sum to 1");
  if (radii.size() != ratios.size()) throw ConfigError("need one radius range per category");
  for (const RadiusRange& r : radii) {
    if (!(r.lo > 0) || r.hi < r.lo) throw ConfigError("radius ranges must satisfy 0 < lo <= hi");
  }
  if (min_objects < 1 || max_objects < min_objects) throw ConfigError("objects range must satisfy 1 <= min <= max");
  if (!(overlap >= 0 && overlap < 1)) throw ConfigError("overlap must lie in [0, 1)");
  if (!(noise >= 0)) throw ConfigError("noise must be nonnegative");
}

std::vector<std::uint8_t> rasterize(const Ellipse& e, Index height, Index width) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(height * width), 0);
  const double r = std::max(e.rx, e.ry);
  const Index y_lo = std::max<Index>(0, static_cast<Index>(std::floor(e.cy - r - 1)));
  const Index y_hi = std::min<Index>(height - 1, static_cast<Index>(std::ceil(e.cy + r + 1)));
  const Index x_lo = std::max<Index>(0, static_cast<Index>(std::floor(e.cx - r - 1)));
  const Index x_hi = std::min<Index>(width - 1, static_cast<Index>(std::ceil(e.cx + r + 1)));
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  for (Index y = y_lo; y <= y_hi; ++y) {
    for (Index x = x_lo; x <= x_hi; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - e.cx;
      const double dy = static_cast<double>(y) + 0.5 - e.cy;
      const double u = (dx * c + dy * s) / e.rx;
      const double v = (-dx * s + dy * c) / e.ry;
      if (u * u + v * v <= 1.0) mask[static_cast<std::size_t>(y * width + x)] = 1;
    }
  }
  return mask;
}

namespace {

using Rgb = std::array<double, 3>;

// Base color, inner color and inner radius^2 (as a fraction) per category.
struct Palette {
  Rgb outer, inner;
  double inner_r2;
};

Palette palette_for(int category) {
  switch (category % 3) {
    case 0:  // large, red with a pale center
      return {{0.84, 0.28, 0.30}, {0.92, 0.52, 0.52}, 0.25};
    case 1:  // medium, pale violet cytoplasm with a dark nucleus
      return {{0.62, 0.48, 0.82}, {0.30, 0.12, 0.52}, 0.45};
    default:  // small, dark violet
      return {{0.42, 0.22, 0.58}, {0.42, 0.22, 0.58}, 0.0};
  }
}

BoxN box_of_mask(const std::vector<std::uint8_t>& mask, Index height, Index width, bool* empty) {
  Index x0 = width, y0 = height, x1 = -1, y1 = -1;
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      if (!mask[static_cast<std::size_t>(y * width + x)]) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  *empty = x1 < 0;
  if (*empty) return {};
  const double W = static_cast<double>(width), H = static_cast<double>(height);
  return BoxN::from_corners(static_cast<double>(x0) / W, static_cast<double>(y0) / H,
                            static_cast<double>(x1 + 1) / W, static_cast<double>(y1 + 1) / H);
}

int draw_category(Rng& rng, const std::vector<double>& ratios) {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t c = 0; c < ratios.size(); ++c) {
    acc += ratios[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(ratios.size()) - 1;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

LabeledImage generate_scene(const SceneConfig& cfg, std::uint64_t index) {
  cfg.validate();
  Rng rng(Rng::mix(cfg.seed, index));
  const Index H = cfg.height, W = cfg.width;
  LabeledImage out;
  out.pixels = Image({H, W, 3}, 0.0f);

  // Background with a gentle illumination gradient.
  const Rgb bg{0.95, 0.88, 0.80};
  const double gx = rng.uniform(-0.04, 0.04), gy = rng.uniform(-0.04, 0.04);
  std::vector<double> canvas(static_cast<std::size_t>(H * W * 3));
  for (Index y = 0; y < H; ++y) {
    for (Index x = 0; x < W; ++x) {
      const double shade = gx * (static_cast<double>(x) / static_cast<double>(W) - 0.5) +
                           gy * (static_cast<double>(y) / static_cast<double>(H) - 0.5);
      for (int ch = 0; ch < 3; ++ch) canvas[static_cast<std::size_t>((y * W + x) * 3 + ch)] = bg[ch] + shade;
    }
  }

  const int count = rng.uniform_int(cfg.min_objects, cfg.max_objects);
  for (int i = 0; i < count; ++i) {
    Ellipse e{};
    e.category = draw_category(rng, cfg.ratios);
    const RadiusRange& rr = cfg.radii[static_cast<std::size_t>(e.category)];
    e.rx = rng.uniform(rr.lo, rr.hi);
    e.ry = e.rx * rng.uniform(0.8, 1.0);
    e.angle = rng.uniform(0.0, std::numbers::pi);
    // Centers may sit near the border so objects get truncated.
    const double margin = 0.3 * e.rx;
    for (int attempt = 0; attempt < 50; ++attempt) {
      e.cx = rng.uniform(margin, static_cast<double>(W) - margin);
      e.cy = rng.uniform(margin, static_cast<double>(H) - margin);
      bool clear = true;
      for (const Ellipse& o : out.objects) {
        const double d = std::hypot(e.cx - o.cx, e.cy - o.cy);
        if (d < (1.0 - cfg.overlap) * (e.rx + o.rx)) {
          clear = false;
          break;
        }
      }
      if (clear) break;
    }

    const std::vector<std::uint8_t> mask = rasterize(e, H, W);
    bool empty = false;
    const BoxN box = box_of_mask(mask, H, W, &empty);
    if (empty) continue;

    const Palette pal = palette_for(e.category);
    Rgb outer = pal.outer, inner = pal.inner;
    const double jitter = rng.uniform(-0.05, 0.05);
    for (int ch = 0; ch < 3; ++ch) {
      outer[static_cast<std::size_t>(ch)] += jitter;
      inner[static_cast<std::size_t>(ch)] += jitter;
    }
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    for (Index y = 0; y < H; ++y) {
      for (Index x = 0; x < W; ++x) {
        if (!mask[static_cast<std::size_t>(y * W + x)]) continue;
        const double dx = static_cast<double>(x) + 0.5 - e.cx;
        const double dy = static_cast<double>(y) + 0.5 - e.cy;
        const double u = (dx * c + dy * s) / e.rx;
        const double v = (-dx * s + dy * c) / e.ry;
        const Rgb& col = (u * u + v * v < pal.inner_r2) ? inner : outer;
        for (int ch = 0; ch < 3; ++ch)
          canvas[static_cast<std::size_t>((y * W + x) * 3 + ch)] = col[static_cast<std::size_t>(ch)];
      }
    }
    out.objects.push_back(e);
    out.labels.push_back({e.category, box});
  }

  for (std::size_t i = 0; i < canvas.size(); ++i) {
    out.pixels[static_cast<Index>(i)] = clamp01(canvas[i] + cfg.noise * rng.normal());
  }
  return out;
}

// --- labels ------------------------------------------------------------------

void write_labels(std::ostream& os, const std::vector<GroundTruth>& labels) {
  char buf[128];
  for (const GroundTruth& g : labels) {
    std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f\n", g.category, g.box.cx, g.box.cy, g.box.w,
                  g.box.h);
    os << buf;
  }
}

void write_labels(const std::string& path, const std::vector<GroundTruth>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write labels: " + path);
  write_labels(out, labels);
}

std::vector<GroundTruth> read_labels(std::istream& is, int num_categories) {
  constexpr double kSlack = 1e-6;
  std::vector<GroundTruth> out;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    GroundTruth g;
    if (!(ls >> g.category >> g.box.cx >> g.box.cy >> g.box.w >> g.box.h)) {
      throw ParseError("malformed label line", n);
    }
    std::string extra;
    if (ls >> extra) throw ParseError("trailing fields in label line", n);
    const std::string where = " (line " + std::to_string(n) + ")";
    if (g.category < 0 || g.category >= num_categories) {
      throw ValidationError("category " + std::to_string(g.category) + " outside [0, " +
                            std::to_string(num_categories) + ")" + where);
    }
    const BoxN& b = g.box;
    if (!(b.w > 0 && b.h > 0 && b.w <= 1 + kSlack && b.h <= 1 + kSlack) || b.x0() < -kSlack ||
        b.y0() < -kSlack || b.x1() > 1 + kSlack || b.y1() > 1 + kSlack) {
      throw ValidationError("box outside the unit square" + where);
    }
    out.push_back(g);
  }
  return out;
}

std::vector<GroundTruth> read_labels(const std::string& path, int num_categories) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read labels: " + path);
  return read_labels(in, num_categories);
}

// --- images ------------------------------------------------------------------

void write_ppm(const std::string& path, const Image& image) {
  if (image.rank() != 3 || image.dim(2) != 3) throw DimensionError("write_ppm: image must be [H,W,3]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path);
  out << "P6\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  std::vector<unsigned char> bytes(static_cast<std::size_t>(image.size()));
  for (Index i = 0; i < image.size(); ++i) {
    bytes[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write: " + path);
}

namespace {

long read_header_int(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) throw IoError("malformed PPM header: " + path);
  long v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    if (v > 1'000'000) throw IoError("PPM dimension too large: " + path);
    ch = in.get();
  }
  // Exactly one whitespace byte follows the last header field.
  if (ch == EOF || !std::isspace(ch)) throw IoError("malformed PPM header: " + path);
  return v;
}

}  // namespace

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read image: " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') throw IoError("not a binary PPM (P6): " + path);
  const long w = read_header_int(in, path);
  const long h = read_header_int(in, path);
  const long maxval = read_header_int(in, path);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) throw IoError("unsupported PPM header: " + path);
  Image img({h, w, 3});
  std::vector<unsigned char> bytes(static_cast<std::size_t>(img.size()));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError("truncated PPM data: " + path);
  for (Index i = 0; i < img.size(); ++i) {
    img[i] = static_cast<float>(bytes[static_cast<std::size_t>(i)]) / static_cast<float>(maxval);
  }
  return img;
}

Image resize_image(const Image& image, Index out_h, Index out_w) {
  if (out_h < 1 || out_w < 1) throw ConfigError("resize target must be at least 1x1");
  return resize_bilinear(image, out_h, out_w);
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0)) throw ConfigError("gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& image, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const Index radius = static_cast<Index>(k.size() / 2);
  const Index H = image.dim(0), W = image.dim(1), C = image.dim(2);
  auto pass = [&](const Image& src, bool horizontal) {
    Image dst(src.shape());
    for (Index y = 0; y < H; ++y) {
      for (Index x = 0; x < W; ++x) {
        for (Index c = 0; c < C; ++c) {
          double acc = 0;
          for (Index t = -radius; t <= radius; ++t) {
            const Index yy = horizontal ? y : std::clamp<Index>(y + t, 0, H - 1);
            const Index xx = horizontal ? std::clamp<Index>(x + t, 0, W - 1) : x;
            acc += k[static_cast<std::size_t>(t + radius)] * src[(yy * W + xx) * C + c];
          }
          dst[(y * W + x) * C + c] = clamp01(acc);
        }
      }
    }
    return dst;
  };
  return pass(pass(image, true), false);
}

Image median_filter(const Image& image, int k) {
  if (k < 1 || k % 2 == 0) throw ConfigError("median window must be odd, got " + std::to_string(k));
  const Index r = k / 2;
  const Index H = image.dim(0), W = image.dim(1), C = image.dim(2);
  Image out(image.shape());
  std::vector<float> window(static_cast<std::size_t>(k * k));
  for (Index y = 0; y < H; ++y) {
    for (Index x = 0; x < W; ++x) {
      for (Index c = 0; c < C; ++c) {
        std::size_t n = 0;
        for (Index dy = -r; dy <= r; ++dy)
          for (Index dx = -r; dx <= r; ++dx)
            window[n++] = image[(std::clamp<Index>(y + dy, 0, H - 1) * W + std::clamp<Index>(x + dx, 0, W - 1)) * C + c];
        std::nth_element(window.begin(), window.begin() + static_cast<long>(n / 2), window.end());
        out[(y * W + x) * C + c] = window[n / 2];
      }
    }
  }
  return out;
}

Image adjust_contrast(const Image& image, double factor) {
  Image out(image.shape());
  for (Index i = 0; i < image.size(); ++i) out[i] = clamp01(0.5 + factor * (static_cast<double>(image[i]) - 0.5));
  return out;
}

LabeledImage mirror(const LabeledImage& in) {
  const Index H = in.pixels.dim(0), W = in.pixels.dim(1), C = in.pixels.dim(2);
  LabeledImage out;
  out.pixels = Image(in.pixels.shape());
  for (Index y = 0; y < H; ++y)
    for (Index x = 0; x < W; ++x)
      for (Index c = 0; c < C; ++c) out.pixels[(y * W + x) * C + c] = in.pixels[(y * W + (W - 1 - x)) * C + c];
  for (GroundTruth g : in.labels) {
    g.box.cx = 1.0 - g.box.cx;
    out.labels.push_back(g);
  }
  for (Ellipse e : in.objects) {
    e.cx = static_cast<double>(W) - e.cx;
    e.angle = std::numbers::pi - e.angle;
    out.objects.push_back(e);
  }
  return out;
}

LabeledImage rotate90(const LabeledImage& in) {
  const Index H = in.pixels.dim(0), W = in.pixels.dim(1), C = in.pixels.dim(2);
  LabeledImage out;
  out.pixels = Image({W, H, C});
  // Output (y', x') shows input (H - 1 - x', y').
  for (Index yo = 0; yo < W; ++yo)
    for (Index xo = 0; xo < H; ++xo)
      for (Index c = 0; c < C; ++c) out.pixels[(yo * H + xo) * C + c] = in.pixels[((H - 1 - xo) * W + yo) * C + c];
  for (const GroundTruth& g : in.labels) {
    out.labels.push_back({g.category, {1.0 - g.box.cy, g.box.cx, g.box.h, g.box.w}});
  }
  for (Ellipse e : in.objects) {
    const double cx = static_cast<double>(H) - e.cy, cy = e.cx;
    e.cx = cx;
    e.cy = cy;
    e.angle += 0.5 * std::numbers::pi;
    out.objects.push_back(e);
  }
  return out;
}

// --- dataset layout ----------------------------------------------------------

DatasetConfig DatasetConfig::from_keys(const KeyValues& kv) {
  DatasetConfig cfg;
  SceneConfig& s = cfg.scene;
  const long categories = kv.get_int("categories", 3);
  s.ratios = kv.get_doubles("ratios", s.ratios);
  if (static_cast<long>(s.ratios.size()) != categories) {
    throw ConfigError("dataset.cfg: 'ratios' needs " + std::to_string(categories) + " entries");
  }
  const std::vector<double> radii = kv.get_doubles("radii", {});
  if (!radii.empty()) {
    if (radii.size() != 2 * s.ratios.size()) throw ConfigError("dataset.cfg: 'radii' needs lo,hi per category");
    s.radii.clear();
    for (std::size_t i = 0; i < radii.size(); i += 2) s.radii.push_back({radii[i], radii[i + 1]});
  }
  cfg.train = kv.get_int("train", cfg.train);
  cfg.val = kv.get_int("val", cfg.val);
  s.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(s.seed)));
  s.height = kv.get_int("height", s.height);
  s.width = kv.get_int("width", s.width);
  s.min_objects = static_cast<int>(kv.get_int("min_objects", s.min_objects));
  s.max_objects = static_cast<int>(kv.get_int("max_objects", s.max_objects));
  s.overlap = kv.get_double("overlap", s.overlap);
  s.noise = kv.get_double("noise", s.noise);
  kv.reject_unknown("dataset.cfg");
  if (cfg.train < 0 || cfg.val < 0) throw ConfigError("dataset.cfg: counts must be nonnegative");
  s.validate();
  return cfg;
}

KeyValues DatasetConfig::to_keys() const {
  KeyValues kv;
  kv.set("categories", std::to_string(scene.num_categories()));
  kv.set("train", std::to_string(train));
  kv.set("val", std::to_string(val));
  kv.set("seed", std::to_string(scene.seed));
  kv.set("height", std::to_string(scene.height));
  kv.set("width", std::to_string(scene.width));
  kv.set("ratios", join_doubles(scene.ratios));
  std::vector<double> radii;
  for (const RadiusRange& r : scene.radii) {
    radii.push_back(r.lo);
    radii.push_back(r.hi);
  }
  kv.set("radii", join_doubles(radii));
  kv.set("min_objects", std::to_string(scene.min_objects));
  kv.set("max_objects", std::to_string(scene.max_objects));
  kv.set("overlap", join_doubles({scene.overlap}));
  kv.set("noise", join_doubles({scene.noise}));
  return kv;
}

namespace {

std::string stem_of(Index i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(i));
  return buf;
}

}  // namespace

void write_dataset(const std::string& root, const DatasetConfig& cfg) {
  cfg.scene.validate();
  const fs::path base(root);
  std::error_code ec;
  for (const char* split : {"train", "val"}) {
    fs::create_directories(base / "images" / split, ec);
    if (ec) throw IoError("cannot create " + (base / "images" / split).string() + ": " + ec.message());
    fs::create_directories(base / "labels" / split, ec);
    if (ec) throw IoError("cannot create " + (base / "labels" / split).string() + ": " + ec.message());
  }
  auto emit = [&](const char* split, Index first, Index count) {
    for (Index i = 0; i < count; ++i) {
      const LabeledImage scene = generate_scene(cfg.scene, static_cast<std::uint64_t>(first + i));
      const std::string stem = stem_of(i);
      write_ppm((base / "images" / split / (stem + ".ppm")).string(), scene.pixels);
      write_labels((base / "labels" / split / (stem + ".txt")).string(), scene.labels);
    }
  };
  emit("train", 0, cfg.train);
  emit("val", cfg.train, cfg.val);
  std::ofstream out(base / "dataset.cfg");
  if (!out) throw IoError("cannot write " + (base / "dataset.cfg").string());
  cfg.to_keys().write(out);
}

std::vector<Sample> list_split(const std::string& root, const std::string& split) {
  const fs::path images = fs::path(root) / "images" / split;
  const fs::path labels = fs::path(root) / "labels" / split;
  std::error_code ec;
  if (!fs::is_directory(images, ec)) throw IoError("missing image directory: " + images.string());
  std::vector<Sample> out;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.path().extension() != ".ppm") continue;
    const std::string stem = entry.path().stem().string();
    out.push_back({entry.path().string(), (labels / (stem + ".txt")).string(), stem});
  }
  std::sort(out.begin(), out.end(), [](const Sample& a, const Sample& b) { return a.stem < b.stem; });
  return out;
}

DatasetConfig read_dataset_config(const std::string& root) {
  return DatasetConfig::from_keys(KeyValues::load((fs::path(root) / "dataset.cfg").string()));
}

}  // namespace adahead
