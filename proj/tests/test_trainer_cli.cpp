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


#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adahead/bench.hpp"
#include "adahead/synth.hpp"
#include "adahead/trainer.hpp"

using namespace adahead;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.input_size = 32;
  m.backbone.stem = 4;
  m.backbone.widths = {4, 6, 8, 8, 8};
  m.backbone.channels = 8;
  m.theta_reduction = 2;
  m.anchor_scales = {2, 3};
  return m;
}

// Ten training and four validation scenes at 32x32, written once per process.
const fs::path& tiny_data() {
  static const fs::path root = [] {
    const fs::path r = fs::temp_directory_path() / "adahead_test_trainer_data";
    fs::remove_all(r);
    DatasetConfig d;
    d.scene.height = d.scene.width = 32;
    d.scene.radii = {{4, 6}, {3, 4}, {2, 3}};
    d.scene.min_objects = 1;
    d.scene.max_objects = 3;
    d.scene.seed = 5;
    d.train = 10;
    d.val = 4;
    write_dataset(r.string(), d);
    return r;
  }();
  return root;
}

TrainConfig tiny_train(const std::string& run) {
  TrainConfig c;
  c.data = tiny_data().string();
  const fs::path dir = fs::temp_directory_path() / ("adahead_test_run_" + run);
  fs::remove_all(dir);
  c.checkpoint = (dir / "model.ckpt").string();
  c.model = tiny_model();
  c.epochs = 2;
  c.batch = 4;
  c.lr = 0.005;
  return c;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters unchanged") {
  TrainConfig cfg = tiny_train("lr0");
  cfg.lr = cfg.lr_min = 0;
  const Dataset ds = load_dataset(cfg.data, "train", 3, 32);
  TrainState<double> st = make_train_state<double>(cfg);
  const Params<double> before = st.params;
  const EpochStats s = train_epoch(cfg, st, ds);
  CHECK(s.total > 0);
  CHECK(st.params.tensors == before.tensors);
}

TEST_CASE("same seed gives identical log and checkpoint") {
  // The checkpoint echoes its own path, so both runs use the same one.
  const TrainConfig a = tiny_train("det");
  train<double>(a);
  const std::string log = slurp(a.log_path()), ckpt = slurp(a.checkpoint);
  train<double>(tiny_train("det"));
  CHECK(slurp(a.log_path()) == log);
  CHECK(slurp(a.checkpoint) == ckpt);
  CHECK(log.rfind("epoch,cls,coord,noobj,total,val_mAP50\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 3);
}

TEST_CASE("training loss keeps falling on a tiny overfit set") {
  TrainConfig cfg = tiny_train("overfit");
  cfg.epochs = 10;
  cfg.mirror = false;
  cfg.batch = 10;
  const auto hist = train<double>(cfg);
  REQUIRE(hist.size() == 10);
  for (std::size_t e = 3; e < hist.size(); ++e) CHECK(hist[e].total <= hist[e - 1].total);
  CHECK(hist.back().total < hist.front().total);
}

TEST_CASE("checkpoint roundtrip reproduces forward outputs exactly") {
  const TrainConfig cfg = tiny_train("ckpt");
  for (int pass = 0; pass < 2; ++pass) {
    Checkpoint<double> ck;
    ck.config = cfg.to_keys();
    ck.epoch = 3;
    ck.rng_state = "12345";
    ck.params = init_params<double>(cfg.model, 77);
    fs::create_directories(fs::path(cfg.checkpoint).parent_path());
    save_checkpoint(cfg.checkpoint, ck);
    CHECK(checkpoint_precision(cfg.checkpoint) == "f64");
    const Checkpoint<double> back = load_checkpoint<double>(cfg.checkpoint);
    CHECK(back.epoch == 3);
    CHECK(back.rng_state == "12345");
    CHECK(back.params.names == ck.params.names);
    CHECK(back.params.tensors == ck.params.tensors);

    const Image img = generate_scene(SceneConfig{32, 32, {0.7, 0.15, 0.15}, 1, 3, {{4, 6}, {3, 4}, {2, 3}}}, 0).pixels;
    DecodeOptions opt;
    opt.conf_threshold = 0;
    CHECK(detect(ck.params, cfg.model, img, opt) == detect(back.params, cfg.model, img, opt));
  }
  Checkpoint<float> f;
  f.config = cfg.to_keys();
  f.params = init_params<float>(cfg.model, 3);
  save_checkpoint(cfg.checkpoint, f);
  CHECK(checkpoint_precision(cfg.checkpoint) == "f32");
  CHECK(load_checkpoint<float>(cfg.checkpoint).params.tensors == f.params.tensors);
  CHECK_THROWS(load_checkpoint<double>(cfg.checkpoint));
  CHECK_THROWS_AS(load_checkpoint<double>(cfg.checkpoint + ".missing"), IoError);
}

TEST_CASE("inference is deterministic and respects the threshold") {
  const ModelConfig m = tiny_model();
  const Params<float> p = init_params<float>(m, 1);
  const Image blank({32, 32, 3}, 0.5f);
  DecodeOptions strict;
  strict.conf_threshold = 1.0;
  CHECK(detect(p, m, blank, strict).empty());

  DecodeOptions loose;
  loose.conf_threshold = 0;
  const Image img = load_dataset(tiny_data().string(), "val", 3, 32).images[0];
  const auto a = detect(p, m, img, loose), b = detect(p, m, img, loose);
  CHECK(a == b);
  std::ostringstream sa, sb;
  write_detections(sa, a);
  write_detections(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.size() <= loose.max_detections);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK_FALSE(ranks_before(a[i], a[i - 1]));
}

TEST_CASE("learning-rate schedule") {
  CHECK(cosine_lr(0.01, 1e-4, 0, 100) == doctest::Approx(0.01).epsilon(1e-15));
  // The last of `total` steps runs at lr_min.
  CHECK(cosine_lr(0.01, 1e-4, 100, 101) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(cosine_lr(0.01, 1e-4, 50, 101) == doctest::Approx((0.01 + 1e-4) / 2).epsilon(1e-12));
  for (long s = 1; s <= 100; ++s) CHECK(cosine_lr(0.01, 1e-4, s, 100) <= cosine_lr(0.01, 1e-4, s - 1, 100));
}

TEST_CASE("train configuration text") {
  std::istringstream good("epochs=3\nlr=0.02\ninput_size=64\nanchor_scales=2,3\n");
  const TrainConfig c = TrainConfig::from_keys(KeyValues::parse(good));
  CHECK(c.epochs == 3);
  CHECK(c.lr == 0.02);
  CHECK(c.model.input_size == 64);
  CHECK(c.model.anchor_scales == std::vector<double>{2, 3});

  std::ostringstream os;
  c.to_keys().write(os);
  std::istringstream again(os.str());
  const TrainConfig d = TrainConfig::from_keys(KeyValues::parse(again));
  CHECK(d.epochs == c.epochs);
  CHECK(d.model.anchor_scales == c.model.anchor_scales);
  std::ostringstream os2;
  d.to_keys().write(os2);
  CHECK(os2.str() == os.str());

  std::istringstream unknown("epochs=3\nbogus=1\n");
  CHECK_THROWS_AS(TrainConfig::from_keys(KeyValues::parse(unknown)), ConfigError);
  std::istringstream negative("epochs=0\n");
  CHECK_THROWS_AS(TrainConfig::from_keys(KeyValues::parse(negative)).validate(), ConfigError);
  std::istringstream malformed("epochs 3\n");
  CHECK_THROWS_AS(KeyValues::parse(malformed), ParseError);
}

TEST_CASE("cost accounting closed forms") {
  CHECK(conv_flops(1, 8, 16, 4, 4) == 4096);
  CHECK(affine_flops(8, 16) == 256);
  CHECK(conv_params(3, 4, 8) == 296);
  CHECK(CostReport{}.params() == 0);
  CHECK(CostReport{}.flops() == 0);

  struct Fixture {
    ModelConfig model;
    std::int64_t bb_params, bb_flops, ada_params, ada_flops, plain_params, plain_flops;
  };
  ModelConfig a = tiny_model();
  a.backbone.widths = {4, 4, 4, 4, 4};
  a.backbone.channels = 4;
  a.anchor_scales = {3, 4, 5};
  ModelConfig c;
  c.input_size = 64;
  c.num_categories = 2;
  c.backbone.stem = 8;
  c.backbone.widths = {8, 8, 16, 16, 16};
  c.backbone.channels = 8;
  c.sampling_points = 1;
  c.anchor_scales = {4};
  c.anchor_ratios = {1, 2};
  // Totals worked out term by term from 2 k^2 Cin Cout H W per conv.
  const std::vector<Fixture> fixtures{
      {a, 912, 320064, 2656, 61526, 416, 16128},
      {ModelConfig{}, 112240, 94617600, 314830, 306826246, 75416, 79027200},
      {c, 7608, 3505152, 5062, 780838, 1294, 212352},
  };
  for (const Fixture& f : fixtures) {
    const CostReport bb = backbone_cost(f.model.backbone, f.model.input_size);
    const CostReport ada = ada_head_cost(f.model), plain = plain_head_cost(f.model);
    CHECK(bb.params() == f.bb_params);
    CHECK(bb.flops() == f.bb_flops);
    CHECK(ada.params() == f.ada_params);
    CHECK(ada.flops() == f.ada_flops);
    CHECK(plain.params() == f.plain_params);
    CHECK(plain.flops() == f.plain_flops);
    // Parameter accounting agrees with the tensors the model allocates.
    CHECK(init_params<float>(f.model, 1).element_count() == bb.params() + ada.params());
  }
  std::ostringstream os;
  write_bench_report(os, ModelConfig{});
  CHECK(os.str().find("head ratio adaptive/plain: params 4.175, flops 3.883") != std::string::npos);
  CHECK(os.str().find("35.1/9.4") != std::string::npos);
}
