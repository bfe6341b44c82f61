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

// adahead: dataset generation, training, evaluation, inference, gradient
// checks and cost accounting.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "adahead/bench.hpp"
#include "adahead/errors.hpp"
#include "adahead/evaluation.hpp"
#include "adahead/gradcheck_suite.hpp"
#include "adahead/model.hpp"
#include "adahead/synth.hpp"
#include "adahead/trainer.hpp"

namespace fs = std::filesystem;
using namespace adahead;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumeric = 2;

// "f32", "f64" or nothing when ADAHEAD_PRECISION is unset.
std::optional<std::string> env_precision() {
  const char* v = std::getenv("ADAHEAD_PRECISION");
  if (v == nullptr || *v == '\0') return std::nullopt;
  const std::string s(v);
  if (s != "f32" && s != "f64") throw ConfigError("ADAHEAD_PRECISION must be f32 or f64, got '" + s + "'");
  return s;
}

// Explicit env setting wins; otherwise follow the checkpoint.
std::string checkpoint_mode(const std::string& ckpt) {
  const std::string stored = checkpoint_precision(ckpt);
  const std::optional<std::string> env = env_precision();
  if (env && *env != stored) {
    throw ValidationError("checkpoint " + ckpt + " holds " + stored + " parameters but ADAHEAD_PRECISION=" + *env);
  }
  return stored;
}

void write_file(const fs::path& path, const std::string& what, const auto& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + what + ": " + path.string());
  writer(os);
  if (!os) throw IoError("write failed: " + path.string());
}

// --- subcommands -----------------------------------------------------------

int run_gen_data(const std::string& config, const std::string& out) {
  const DatasetConfig cfg = DatasetConfig::from_keys(KeyValues::load(config));
  write_dataset(out, cfg);
  std::printf("wrote %lld train and %lld val scenes to %s\n", static_cast<long long>(cfg.train),
              static_cast<long long>(cfg.val), out.c_str());
  return kExitOk;
}

template <typename S>
int run_train(TrainConfig cfg) {
  std::fprintf(stderr, "training %d epochs in %s on %s\n", cfg.epochs, sizeof(S) == 4 ? "f32" : "f64",
               cfg.data.c_str());
  train<S>(cfg, [&](const EpochStats& s) {
    std::fprintf(stderr, "epoch %3d  cls %.4f  coord %.4f  noobj %.4f  total %.4f  val_mAP50 %.4f\n", s.epoch,
                 s.cls, s.coord, s.noobj, s.total, s.val_map50);
  });
  std::printf("checkpoint %s\nlog %s\n", cfg.checkpoint.c_str(), cfg.log_path().c_str());
  return kExitOk;
}

template <typename S>
int run_eval(const std::string& ckpt, const std::string& data, const std::string& split, ApMode mode,
             double det_conf, double conf, bool all_classes, const std::string& out_dir) {
  const Checkpoint<S> ck = load_checkpoint<S>(ckpt);
  const ModelConfig model = ModelConfig::from_keys(ck.config);
  model.validate();
  const Dataset ds = load_dataset(data, split, model.num_categories, model.input_size);
  DecodeOptions dec;
  dec.conf_threshold = det_conf;
  dec.best_class_only = !all_classes;
  EvalOptions eo;
  eo.ap = mode;
  eo.conf_threshold = conf;
  const MetricsReport rep = evaluate(predict_dataset(ck.params, model, ds, dec), model.num_categories, eo);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "metrics.csv", "metrics", [&](std::ostream& os) { write_metrics_csv(os, rep); });
  write_file(fs::path(out_dir) / "confusion.csv", "confusion matrix",
             [&](std::ostream& os) { write_confusion_csv(os, rep.confusion); });
  for (const CategoryMetrics& c : rep.categories) {
    if (!c.included) continue;
    std::printf("category %d  P %.4f  R %.4f  AP50 %.4f  AP50-95 %.4f\n", c.category, c.precision, c.recall,
                c.ap50, c.ap5095);
  }
  std::printf("mAP50 %.4f  mAP50-95 %.4f  (%zu images, %s AP)\n", rep.map50, rep.map5095, ds.size(),
              mode == ApMode::kPaper ? "paper" : "interp");
  for (const std::string& n : rep.notes) std::fprintf(stderr, "note: %s\n", n.c_str());
  return kExitOk;
}

template <typename S>
int run_infer(const std::string& ckpt, const std::string& image_path, const DecodeOptions& opt,
              const std::string& out, const std::string& dump) {
  const Checkpoint<S> ck = load_checkpoint<S>(ckpt);
  const ModelConfig model = ModelConfig::from_keys(ck.config);
  model.validate();
  Image image = read_ppm(image_path);
  if (image.dim(0) != model.input_size || image.dim(1) != model.input_size) {
    image = resize_image(image, model.input_size, model.input_size);
  }

  Tape<S> tape;
  tape.set_grad_enabled(false);
  const ModelVars vars = bind_params(tape, ck.params, model, false);
  const ForwardResult<S> fwd = model_forward(tape, tape.constant(image_input<S>(image)), model, vars);
  const std::vector<Detection> dets = decode_detections(tape.value(fwd.class_logits), tape.value(fwd.objectness),
                                                        tape.value(fwd.box_params), model.anchors(), opt);
  if (!dump.empty()) {
    write_file(dump, "feature dump", [&](std::ostream& os) { write_tnsr(os, tape.value(fwd.dvf)); });
  }
  if (out.empty()) {
    write_detections(std::cout, dets);
  } else {
    write_file(out, "detections", [&](std::ostream& os) { write_detections(os, dets); });
  }
  return kExitOk;
}

int run_gradcheck_cmd(const std::string& scope, bool include_control) {
  const std::optional<std::string> env = env_precision();
  if (env && *env != "f64") {
    throw ValidationError("gradcheck runs in 64-bit mode only; unset ADAHEAD_PRECISION or set it to f64");
  }
  std::vector<GradCaseResult> results = run_gradcheck(scope, &std::cout);
  if (include_control) {
    results.push_back(run_case(corrupted_gradient_case()));
    print_result(std::cout, results.back());
  }
  std::size_t failed = 0;
  for (const GradCaseResult& r : results) failed += r.passed ? 0 : 1;
  std::printf("%zu of %zu cases passed (tolerance %.0e)\n", results.size() - failed, results.size(),
              kGradTolerance);
  return failed == 0 ? kExitOk : kExitNumeric;
}

int run_bench(const std::string& config) {
  const TrainConfig cfg = TrainConfig::load(config);
  cfg.model.validate();
  write_bench_report(std::cout, cfg.model);
  return kExitOk;
}

template <typename F>
int with_precision(const std::string& mode, F&& f) {
  return mode == "f64" ? f(double{}) : f(float{});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adahead: adaptive detection head on synthetic cell scenes"};
  app.require_subcommand(1);

  std::string config, out, ckpt, data, image, dump, scope = "all", split = "val";
  std::string ap = "interp", out_dir = ".";
  int threads = 0;
  double det_conf = 0.001, conf = kDefaultConfidence, nms = kDefaultNmsIou;
  bool control = false, all_classes = false;

  CLI::App* gen = app.add_subcommand("gen-data", "render a synthetic dataset");
  gen->add_option("--config", config, "dataset.cfg")->required();
  gen->add_option("--out", out, "dataset root")->required();

  CLI::App* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config, "train.cfg")->required();
  tr->add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);

  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--data", data, "dataset root")->required();
  ev->add_option("--ap", ap, "AP definition")->check(CLI::IsMember({"paper", "interp"}));
  ev->add_option("--split", split, "dataset split")->check(CLI::IsMember({"train", "val"}));
  ev->add_option("--det-conf", det_conf, "detection floor before ranking");
  ev->add_option("--conf", conf, "score threshold for precision, recall and confusion");
  ev->add_option("--out-dir", out_dir, "where metrics.csv and confusion.csv go");
  ev->add_flag("--all-classes", all_classes, "score every category of an anchor, not just the best");

  CLI::App* inf = app.add_subcommand("infer", "detect objects in one image");
  inf->add_option("--ckpt", ckpt)->required();
  inf->add_option("--image", image, "PPM image")->required();
  inf->add_option("--dump-features", dump, "write the DVF output as TNSR");
  inf->add_option("--conf", conf, "joint-score threshold");
  inf->add_option("--nms", nms, "NMS IoU threshold");
  inf->add_option("--out", out, "detection file (stdout when omitted)");
  inf->add_flag("--all-classes", all_classes, "score every category of an anchor, not just the best");

  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gc->add_option("--scope", scope)->check(CLI::IsMember({"ops", "head", "loss", "all"}));
  gc->add_flag("--with-corrupted", control, "append the corrupted-gradient control case");

  CLI::App* be = app.add_subcommand("bench", "parameter and FLOP accounting");
  be->add_option("--config", config, "train.cfg")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (gen->parsed()) return run_gen_data(config, out);
    if (tr->parsed()) {
      TrainConfig cfg = TrainConfig::load(config);
      if (threads > 0) cfg.threads = threads;
      const std::string mode = env_precision().value_or("f32");
      return with_precision(mode, [&](auto s) { return run_train<decltype(s)>(cfg); });
    }
    if (ev->parsed()) {
      const ApMode mode = ap == "paper" ? ApMode::kPaper : ApMode::kInterp;
      return with_precision(checkpoint_mode(ckpt), [&](auto s) {
        return run_eval<decltype(s)>(ckpt, data, split, mode, det_conf, conf, all_classes, out_dir);
      });
    }
    if (inf->parsed()) {
      DecodeOptions opt;
      opt.conf_threshold = conf;
      opt.nms_iou = nms;
      opt.best_class_only = !all_classes;
      return with_precision(checkpoint_mode(ckpt),
                            [&](auto s) { return run_infer<decltype(s)>(ckpt, image, opt, out, dump); });
    }
    if (gc->parsed()) return run_gradcheck_cmd(scope, control);
    if (be->parsed()) return run_bench(config);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
  return kExitInvalid;
}
