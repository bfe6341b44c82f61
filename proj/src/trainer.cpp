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

#include "adahead/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace adahead {

namespace fs = std::filesystem;

TrainConfig TrainConfig::from_keys(const KeyValues& kv) {
  TrainConfig c;
  c.data = kv.get_string("data", c.data);
  c.checkpoint = kv.get_string("checkpoint", c.checkpoint);
  c.log = kv.get_string("log", c.log);
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.batch = static_cast<int>(kv.get_int("batch", c.batch));
  c.lr = kv.get_double("lr", c.lr);
  c.lr_min = kv.get_double("lr_min", c.lr_min);
  c.momentum = kv.get_double("momentum", c.momentum);
  c.clip = kv.get_double("clip", c.clip);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(c.seed)));
  c.threads = static_cast<int>(kv.get_int("threads", c.threads));
  c.mirror = kv.get_bool("mirror", c.mirror);
  c.eval_conf = kv.get_double("eval_conf", c.eval_conf);
  c.loss.lambda_coord = kv.get_double("lambda_coord", c.loss.lambda_coord);
  c.loss.lambda_noobj = kv.get_double("lambda_noobj", c.loss.lambda_noobj);
  c.loss.gamma = kv.get_double("gamma", c.loss.gamma);
  c.loss.use_focal_cls = kv.get_bool("focal", c.loss.use_focal_cls);
  const std::string target = kv.get_string("objectness_target", "iou");
  if (target == "iou") {
    c.loss.objectness_target = ObjectnessTarget::kIou;
  } else if (target == "one") {
    c.loss.objectness_target = ObjectnessTarget::kOne;
  } else if (target == "none") {
    c.loss.objectness_target = ObjectnessTarget::kNone;
  } else {
    throw ConfigError("objectness_target must be iou, one or none");
  }
  if (kv.get_string("alpha", "auto") != "auto") {
    c.auto_alpha = false;
    c.loss.alpha = kv.get_doubles("alpha", {});
  }
  c.model = ModelConfig::from_keys(kv);
  kv.reject_unknown("train config");
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) { return from_keys(KeyValues::load(path)); }

KeyValues TrainConfig::to_keys() const {
  KeyValues kv;
  kv.set("data", data);
  kv.set("checkpoint", checkpoint);
  if (!log.empty()) kv.set("log", log);
  kv.set("epochs", std::to_string(epochs));
  kv.set("batch", std::to_string(batch));
  kv.set("lr", join_doubles({lr}));
  kv.set("lr_min", join_doubles({lr_min}));
  kv.set("momentum", join_doubles({momentum}));
  kv.set("clip", join_doubles({clip}));
  kv.set("seed", std::to_string(seed));
  kv.set("threads", std::to_string(threads));
  kv.set("mirror", mirror ? "true" : "false");
  kv.set("eval_conf", join_doubles({eval_conf}));
  kv.set("lambda_coord", join_doubles({loss.lambda_coord}));
  kv.set("lambda_noobj", join_doubles({loss.lambda_noobj}));
  kv.set("gamma", join_doubles({loss.gamma}));
  kv.set("focal", loss.use_focal_cls ? "true" : "false");
  const char* target = loss.objectness_target == ObjectnessTarget::kIou   ? "iou"
                       : loss.objectness_target == ObjectnessTarget::kOne ? "one"
                                                                          : "none";
  kv.set("objectness_target", target);
  kv.set("alpha", auto_alpha ? "auto" : join_doubles(loss.alpha));
  model.to_keys(kv);
  return kv;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch < 1) throw ConfigError("batch must be positive");
  if (!(lr >= 0) || !(lr_min >= 0)) throw ConfigError("learning rates must be nonnegative");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(clip >= 0)) throw ConfigError("clip must be nonnegative");
  if (threads < 1) throw ConfigError("threads must be positive");
  if (!(eval_conf >= 0 && eval_conf <= 1)) throw ConfigError("eval_conf must lie in [0, 1]");
  if (checkpoint.empty()) throw ConfigError("checkpoint path must not be empty");
  model.validate();
  if (!auto_alpha) loss.validate(model.num_categories);
}

std::string TrainConfig::log_path() const {
  if (!log.empty()) return log;
  return (fs::path(checkpoint).parent_path() / "train_log.csv").string();
}

Dataset load_dataset(const std::string& root, const std::string& split, int num_categories, Index input_size) {
  Dataset ds;
  for (const Sample& s : list_split(root, split)) {
    Image img = read_ppm(s.image_path);
    if (img.dim(0) != input_size || img.dim(1) != input_size) img = resize_image(img, input_size, input_size);
    ds.images.push_back(std::move(img));
    ds.labels.push_back(read_labels(s.label_path, num_categories));
    ds.stems.push_back(s.stem);
  }
  return ds;
}

std::vector<double> inverse_frequency_alpha(const Dataset& ds, int num_categories) {
  std::vector<double> counts(static_cast<std::size_t>(num_categories), 1.0);
  for (const auto& labels : ds.labels)
    for (const GroundTruth& g : labels) counts[static_cast<std::size_t>(g.category)] += 1.0;
  return class_weights(counts);
}

void write_log_header(std::ostream& os) { os << "epoch,cls,coord,noobj,total,val_mAP50\n"; }

void write_log_row(std::ostream& os, const EpochStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", s.epoch, s.cls, s.coord, s.noobj, s.total,
                s.val_map50);
  os << buf;
}

double cosine_lr(double lr, double lr_min, long step, long total) {
  const double floor = std::min(lr, lr_min);
  if (total <= 1) return lr;
  const double t = static_cast<double>(std::min(step, total - 1)) / static_cast<double>(total - 1);
  return floor + 0.5 * (lr - floor) * (1.0 + std::cos(std::numbers::pi * t));
}

template <typename Scalar>
TrainState<Scalar> make_train_state(const TrainConfig& cfg) {
  TrainState<Scalar> st;
  st.params = init_params<Scalar>(cfg.model, cfg.seed);
  for (const auto& t : st.params.tensors) st.velocity.emplace_back(t.shape(), Scalar(0));
  st.rng = Rng(Rng::mix(cfg.seed, 1));
  return st;
}

namespace {

template <typename Scalar>
struct ImageResult {
  std::vector<Tensor<Scalar>> grads;
  double cls = 0, coord = 0, noobj = 0, total = 0;
};

template <typename Scalar>
void run_image(const TrainConfig& cfg, const Params<Scalar>& params, const AnchorSet& anchors, const Image& image,
               const std::vector<GroundTruth>& labels, bool flip, ImageResult<Scalar>& out) {
  LabeledImage sample{image, labels, {}};
  if (flip) sample = mirror(sample);
  Tape<Scalar> tape;
  const ModelVars vars = bind_params(tape, params, cfg.model, true);
  Var x = tape.constant(image_input<Scalar>(sample.pixels));
  const ForwardResult<Scalar> fwd = model_forward(tape, x, cfg.model, vars);
  const TargetSet targets = build_targets(sample.labels, anchors);
  const LossVars lv = image_loss(tape, fwd, targets, anchors, cfg.loss);
  tape.backward(lv.total);
  out.grads.clear();
  for (Var v : vars.all) out.grads.push_back(tape.grad(v));
  out.cls = static_cast<double>(tape.value(lv.cls)[0]);
  out.coord = static_cast<double>(tape.value(lv.coord)[0]);
  out.noobj = static_cast<double>(tape.value(lv.conf)[0]);
  out.total = static_cast<double>(tape.value(lv.total)[0]);
}

}  // namespace

template <typename Scalar>
EpochStats train_epoch(const TrainConfig& cfg, TrainState<Scalar>& state, const Dataset& train) {
  const std::size_t n = train.size();
  if (n == 0) throw ValidationError("training split is empty");
  const AnchorSet anchors = cfg.model.anchors();
  const long batches_per_epoch = static_cast<long>((n + static_cast<std::size_t>(cfg.batch) - 1) /
                                                   static_cast<std::size_t>(cfg.batch));
  const long total_steps = batches_per_epoch * cfg.epochs;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  state.rng.shuffle(order);

  EpochStats stats;
  stats.epoch = state.epoch + 1;
  const std::size_t np = state.params.tensors.size();
  for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch)) {
    const std::size_t count = std::min(static_cast<std::size_t>(cfg.batch), n - start);
    std::vector<bool> flips(count, false);
    for (std::size_t i = 0; i < count; ++i) flips[i] = cfg.mirror && state.rng.uniform() < 0.5;

    std::vector<ImageResult<Scalar>> results(count);
    auto work = [&](std::size_t i) {
      const std::size_t idx = order[start + i];
      run_image(cfg, state.params, anchors, train.images[idx], train.labels[idx], flips[i], results[i]);
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), count);
    if (workers <= 1) {
      for (std::size_t i = 0; i < count; ++i) work(i);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < count; i += workers) work(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    // Fixed-order reduction, independent of the thread count.
    std::vector<Tensor<Scalar>> grad = results[0].grads;
    for (std::size_t i = 1; i < count; ++i)
      for (std::size_t p = 0; p < np; ++p) grad[p].matrix() += results[i].grads[p].matrix();
    const Scalar inv = Scalar(1) / static_cast<Scalar>(count);
    double norm2 = 0;
    for (auto& g : grad) {
      g.matrix() *= inv;
      for (Index i = 0; i < g.size(); ++i) norm2 += static_cast<double>(g[i]) * static_cast<double>(g[i]);
    }
    if (!std::isfinite(norm2)) throw NumericError("non-finite gradient norm", "sgd");
    Scalar factor = Scalar(1);
    const double norm = std::sqrt(norm2);
    if (cfg.clip > 0 && norm > cfg.clip) factor = static_cast<Scalar>(cfg.clip / norm);

    const Scalar lr = static_cast<Scalar>(cosine_lr(cfg.lr, cfg.lr_min, state.step, total_steps));
    const Scalar mu = static_cast<Scalar>(cfg.momentum);
    for (std::size_t p = 0; p < np; ++p) {
      auto v = state.velocity[p].matrix();
      v = mu * v + factor * grad[p].matrix();
      state.params.tensors[p].matrix() -= lr * v;
    }
    ++state.step;

    for (const auto& r : results) {
      stats.cls += r.cls;
      stats.coord += r.coord;
      stats.noobj += r.noobj;
      stats.total += r.total;
    }
  }
  const double dn = static_cast<double>(n);
  stats.cls /= dn;
  stats.coord /= dn;
  stats.noobj /= dn;
  stats.total /= dn;
  if (!std::isfinite(stats.total)) throw NumericError("non-finite epoch loss", "total_loss");
  ++state.epoch;
  return stats;
}

template <typename Scalar>
std::vector<ImageRecord> predict_dataset(const Params<Scalar>& params, const ModelConfig& cfg, const Dataset& ds,
                                         const DecodeOptions& opt) {
  std::vector<ImageRecord> records;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    records.push_back({detect(params, cfg, ds.images[i], opt), ds.labels[i]});
  }
  return records;
}

template <typename Scalar>
std::vector<EpochStats> train(const TrainConfig& config, const EpochCallback& on_epoch) {
  TrainConfig cfg = config;
  cfg.validate();
  const int n = cfg.model.num_categories;
  const Dataset train_ds = load_dataset(cfg.data, "train", n, cfg.model.input_size);
  const Dataset val_ds = load_dataset(cfg.data, "val", n, cfg.model.input_size);
  if (cfg.auto_alpha) cfg.loss.alpha = inverse_frequency_alpha(train_ds, n);
  cfg.loss.validate(n);

  TrainState<Scalar> state = make_train_state<Scalar>(cfg);
  const fs::path ck_dir = fs::path(cfg.checkpoint).parent_path();
  if (!ck_dir.empty()) fs::create_directories(ck_dir);
  std::ofstream log(cfg.log_path(), std::ios::binary);
  if (!log) throw IoError("cannot write training log: " + cfg.log_path());
  write_log_header(log);

  KeyValues echo = cfg.to_keys();
  echo.set("alpha", join_doubles(cfg.loss.alpha));
  auto save = [&](const Params<Scalar>& params) {
    Checkpoint<Scalar> ck;
    ck.config = echo;
    ck.epoch = state.epoch;
    std::ostringstream rs;
    rs << state.rng.engine();
    ck.rng_state = rs.str();
    ck.params = params;
    save_checkpoint(cfg.checkpoint, ck);
  };

  DecodeOptions dec;
  dec.conf_threshold = cfg.eval_conf;
  std::vector<EpochStats> history;
  for (int e = 0; e < cfg.epochs; ++e) {
    EpochStats stats;
    try {
      stats = train_epoch(cfg, state, train_ds);
    } catch (const NumericError&) {
      // state.params still holds the last completed update.
      save(state.params);
      throw;
    }
    if (val_ds.size() > 0) {
      EvalOptions eo;
      stats.val_map50 = evaluate(predict_dataset(state.params, cfg.model, val_ds, dec), n, eo).map50;
    }
    write_log_row(log, stats);
    log.flush();
    save(state.params);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

#define ADAHEAD_INSTANTIATE_TRAINER(S)                                                                 \
  template TrainState<S> make_train_state(const TrainConfig&);                                         \
  template EpochStats train_epoch(const TrainConfig&, TrainState<S>&, const Dataset&);                 \
  template std::vector<ImageRecord> predict_dataset(const Params<S>&, const ModelConfig&, const Dataset&, \
                                                    const DecodeOptions&);                             \
  template std::vector<EpochStats> train<S>(const TrainConfig&, const EpochCallback&);

ADAHEAD_INSTANTIATE_TRAINER(float)
ADAHEAD_INSTANTIATE_TRAINER(double)

}  // namespace adahead
