/* Copyright 2026 The JNR Authors. All Rights Reserved.

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

// Weighted multi-task cross-entropy, backpropagation, Adam, the training
// loop and a finite-difference gradient checker.
//
// The per-sample loss is  sum_m alpha_m * -log(max(p_m[g_m], 1e-12))  over
// the holistic, tens, ones and count heads; a batch loss is the mean over
// samples.

#ifndef JNR_TRAINING_HPP_
#define JNR_TRAINING_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jnr/labels.hpp"
#include "jnr/network.hpp"
#include "jnr/synthgen.hpp"

namespace jnr {

inline constexpr double kProbabilityFloor = 1e-12;

struct LossWeights {
  std::array<double, 4> alpha{0.2, 0.3, 0.3, 0.2};

  // Throws DomainError unless all >= 0 (and finite) and not all zero.
  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

// The five weight combinations of the loss-weight ablation.
std::array<LossWeights, 5> loss_weight_grid();

struct LossBreakdown {
  std::array<double, 4> per_head{};
  double total = 0.0;
};

// Throws DomainError for inconsistent labels or invalid probabilities.
LossBreakdown multitask_loss(const HeadOutputs& outputs, const LabelSet& labels,
                             const LossWeights& weights);
// Mean over samples.
LossBreakdown multitask_loss(std::span<const HeadOutputs> outputs,
                             std::span<const LabelSet> labels, const LossWeights& weights);

struct BatchGradient {
  ModelParams grads;
  LossBreakdown loss;  // mean over the batch
};

// Exact gradient of the mean weighted loss. batch is n images scaled to
// [0, 1]. Throws NumericError naming the layer on a non-finite gradient.
BatchGradient backward(const ModelParams& params, std::span<const double> batch,
                       std::span<const LabelSet> labels, const LossWeights& weights);

// Mean total loss (forward only).
double batch_loss(const ModelParams& params, std::span<const double> batch,
                  std::span<const LabelSet> labels, const LossWeights& weights);
LossBreakdown dataset_loss(const ModelParams& params, const Dataset& dataset,
                           const LossWeights& weights);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;

  static AdamState for_params(const std::vector<Tensor>& params);
};

// Bias-corrected Adam update. Throws DomainError on a shape mismatch.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& config);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global seed; initialisation and shuffling use named sub-streams.
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  LossBreakdown train_loss;
  double val_top1 = 0.0;
  double val_top2 = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  ModelParams params;  // parameters of the epoch with the best val Top-2
  TrainHistory history;
};

// Throws DomainError for empty or mismatched datasets and NumericError
// (with epoch and batch) if the loss diverges.
TrainResult train(const NetConfig& net, const TrainConfig& config,
                  const LossWeights& weights, const Dataset& train_set,
                  const Dataset& val_set, const EpochCallback& on_epoch = {});

// epoch,l1,l2,l3,l4,total,val_top1,val_top2,seconds
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

struct GradCheckOptions {
  int n_probes = 200;
  std::uint64_t seed = 1;
  LossWeights weights;
  // Probe only tensors whose name starts with this prefix.
  std::string layer_prefix;
  double step = 1e-5;
  std::size_t batch_size = 4;
  // Negative control: perturbs the analytic gradient before comparing.
  bool corrupt_analytic = false;
};

struct GradProbe {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradProbe worst;
  std::vector<std::string> probed_layers;
  int n_probes = 0;
};

// 16x16x3 input, two conv blocks, 16-d feature; under 3k parameters.
NetConfig tiny_net_config();

// Central differences on randomly chosen coordinates over a random batch.
// rel_error = |analytic - numeric| / max(1e-8, |numeric|).
// Throws DomainError for configs over 10,000 parameters or n_probes < 100.
GradCheckReport grad_check(const NetConfig& config, const GradCheckOptions& options);

}  // namespace jnr

#endif  // JNR_TRAINING_HPP_
