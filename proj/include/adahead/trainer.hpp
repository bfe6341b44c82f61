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

#ifndef ADAHEAD_TRAINER_HPP_
#define ADAHEAD_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "adahead/evaluation.hpp"
#include "adahead/model.hpp"
#include "adahead/rng.hpp"

namespace adahead {

struct TrainConfig {
  std::string data;                  // dataset root
  std::string checkpoint = "model.ckpt";
  std::string log;                   // defaults to train_log.csv next to the checkpoint
  int epochs = 30;
  int batch = 8;
  double lr = 0.01;
  double lr_min = 1e-4;
  double momentum = 0.9;
  double clip = 10.0;                // global gradient-norm cap, 0 disables
  std::uint64_t seed = 42;
  int threads = 1;
  bool mirror = true;                // random horizontal flips
  double eval_conf = 0.001;          // detection floor for validation mAP
  ModelConfig model;
  LossConfig loss;
  bool auto_alpha = true;            // alpha from inverse training frequencies

  static TrainConfig from_keys(const KeyValues& kv);
  static TrainConfig load(const std::string& path);
  KeyValues to_keys() const;
  void validate() const;
  std::string log_path() const;
};

struct Dataset {
  std::vector<Image> images;
  std::vector<std::vector<GroundTruth>> labels;
  std::vector<std::string> stems;

  std::size_t size() const { return images.size(); }
};

// Loads a split, resizing images to `input_size` when they differ.
Dataset load_dataset(const std::string& root, const std::string& split, int num_categories, Index input_size);

// Inverse-frequency weights of the labels (counts smoothed by +1).
std::vector<double> inverse_frequency_alpha(const Dataset& ds, int num_categories);

struct EpochStats {
  int epoch = 0;
  double cls = 0, coord = 0, noobj = 0, total = 0;
  double val_map50 = 0;
};

// cls/coord/noobj/total averaged over the epoch's images.
void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, const EpochStats& s);

// Cosine decay from lr to lr_min over `total` steps.
double cosine_lr(double lr, double lr_min, long step, long total);

template <typename Scalar>
struct TrainState {
  Params<Scalar> params;
  std::vector<Tensor<Scalar>> velocity;
  Rng rng;
  long step = 0;
  int epoch = 0;
};

template <typename Scalar>
TrainState<Scalar> make_train_state(const TrainConfig& cfg);

// One pass over `train` in seeded order. Parameters change only after a
// batch completes, so on NumericError `state.params` is the last good set.
template <typename Scalar>
EpochStats train_epoch(const TrainConfig& cfg, TrainState<Scalar>& state, const Dataset& train);

// Validation detections for every image.
template <typename Scalar>
std::vector<ImageRecord> predict_dataset(const Params<Scalar>& params, const ModelConfig& cfg,
                                         const Dataset& ds, const DecodeOptions& opt);

using EpochCallback = std::function<void(const EpochStats&)>;

// Full run: loads the data, trains, appends train_log.csv rows and writes the
// checkpoint after each epoch.
template <typename Scalar>
std::vector<EpochStats> train(const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace adahead

#endif  // ADAHEAD_TRAINER_HPP_
