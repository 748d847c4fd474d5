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

#include "jnr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "engine.hpp"
#include "jnr/error.hpp"
#include "jnr/metrics.hpp"
#include "jnr/parallel.hpp"
#include "jnr/rng.hpp"

namespace jnr {

void LossWeights::validate() const {
  bool any = false;
  for (double a : alpha) {
    if (!(a >= 0.0 && std::isfinite(a))) throw DomainError("loss weights must be finite and >= 0");
    any = any || a > 0.0;
  }
  if (!any) throw DomainError("loss weights must not all be zero");
}

std::array<LossWeights, 5> loss_weight_grid() {
  return {{{{0.25, 0.25, 0.25, 0.25}},
           {{0.3, 0.25, 0.25, 0.2}},
           {{0.2, 0.3, 0.3, 0.2}},
           {{0.1, 0.4, 0.4, 0.1}},
           {{0.4, 0.25, 0.25, 0.1}}}};
}

namespace {

std::array<int, 4> targets(const LabelSet& l) { return {l.holistic, l.tens, l.ones, l.count}; }

double head_loss(std::span<const double> probs, int target) {
  return -std::log(std::max(probs[target], kProbabilityFloor));
}

void check_labels(std::span<const LabelSet> labels) {
  for (const LabelSet& l : labels)
    if (!is_consistent(l)) throw DomainError("inconsistent label set");
}

}  // namespace

LossBreakdown multitask_loss(const HeadOutputs& outputs, const LabelSet& labels,
                             const LossWeights& weights) {
  if (!is_consistent(labels)) throw DomainError("multitask_loss: inconsistent labels");
  const auto g = targets(labels);
  LossBreakdown out;
  for (std::size_t m = 0; m < 4; ++m) {
    const auto& p = outputs.probs[m];
    if (p.size() != static_cast<std::size_t>(kHeadSizes[m]))
      throw DomainError("multitask_loss: probability vector of wrong length");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("multitask_loss: probability outside [0, 1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw DomainError("multitask_loss: probabilities do not sum to 1");
    out.per_head[m] = head_loss(p, g[m]);
    out.total += weights.alpha[m] * out.per_head[m];
  }
  return out;
}

LossBreakdown multitask_loss(std::span<const HeadOutputs> outputs,
                             std::span<const LabelSet> labels, const LossWeights& weights) {
  if (outputs.size() != labels.size() || outputs.empty())
    throw DomainError("multitask_loss: outputs and labels must be non-empty and aligned");
  LossBreakdown sum;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const LossBreakdown l = multitask_loss(outputs[i], labels[i], weights);
    for (std::size_t m = 0; m < 4; ++m) sum.per_head[m] += l.per_head[m];
  }
  const auto n = static_cast<double>(outputs.size());
  for (std::size_t m = 0; m < 4; ++m) {
    sum.per_head[m] /= n;
  }
  for (std::size_t m = 0; m < 4; ++m) sum.total += weights.alpha[m] * sum.per_head[m];
  return sum;
}

namespace {

using ChunkLoader =
    std::function<void(std::size_t first, std::size_t n, std::vector<double>& out)>;

struct ChunkPart {
  ModelParams grads;
  std::array<double, 4> loss_sum{};
};

BatchGradient gradient(const ModelParams& params, const std::vector<LayerSpec>& specs,
                       std::size_t n, const ChunkLoader& load,
                       std::span<const LabelSet> labels, const LossWeights& weights) {
  const std::size_t chunks = (n + detail::kChunkSize - 1) / detail::kChunkSize;
  std::vector<ChunkPart> parts(chunks);
  const double inv_n = 1.0 / static_cast<double>(n);

  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t first = c * detail::kChunkSize;
    const std::size_t m = std::min(detail::kChunkSize, n - first);
    std::vector<double> x;
    load(first, m, x);
    detail::Activations a;
    detail::forward_chunk(params, specs, x, m, a);

    ChunkPart& part = parts[c];
    part.grads = ModelParams::zeros(params.config);
    std::array<std::vector<double>, 4> dlogits;
    for (std::size_t h = 0; h < 4; ++h) {
      const std::size_t S = kHeadSizes[h];
      dlogits[h].resize(m * S);
      for (std::size_t b = 0; b < m; ++b) {
        const std::span<const double> z(a.logits[h].data() + b * S, S);
        for (double v : z)
          if (!std::isfinite(v)) throw NumericError(std::string("non-finite logit in ") + kHeadNames[h]);
        std::span<double> d(dlogits[h].data() + b * S, S);
        stable_softmax(z, d);
        const int target = targets(labels[first + b])[h];
        part.loss_sum[h] += head_loss(d, target);
        d[target] -= 1.0;
        const double scale = weights.alpha[h] * inv_n;
        for (double& v : d) v *= scale;
      }
    }
    detail::backward_chunk(params, specs, a, dlogits, part.grads);
  });

  BatchGradient out{std::move(parts[0].grads), {}};
  std::array<double, 4> loss_sum = parts[0].loss_sum;
  for (std::size_t c = 1; c < chunks; ++c) {
    for (std::size_t t = 0; t < out.grads.tensors.size(); ++t) {
      auto& dst = out.grads.tensors[t].values;
      const auto& src = parts[c].grads.tensors[t].values;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    for (std::size_t h = 0; h < 4; ++h) loss_sum[h] += parts[c].loss_sum[h];
  }
  for (const Tensor& t : out.grads.tensors)
    for (double v : t.values)
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in " + t.name);
  for (std::size_t h = 0; h < 4; ++h) {
    out.loss.per_head[h] = loss_sum[h] * inv_n;
    out.loss.total += weights.alpha[h] * out.loss.per_head[h];
  }
  return out;
}

ChunkLoader span_loader(std::span<const double> batch, std::size_t pixel_count) {
  return [batch, pixel_count](std::size_t first, std::size_t n, std::vector<double>& out) {
    auto s = batch.subspan(first * pixel_count, n * pixel_count);
    out.assign(s.begin(), s.end());
  };
}

void check_batch(const ModelParams& params, std::span<const double> batch,
                 std::span<const LabelSet> labels) {
  const std::size_t pc = params.config.input.pixel_count();
  if (labels.empty() || batch.size() != labels.size() * pc)
    throw DomainError("batch and labels are misaligned");
  check_labels(labels);
}

}  // namespace

BatchGradient backward(const ModelParams& params, std::span<const double> batch,
                       std::span<const LabelSet> labels, const LossWeights& weights) {
  check_batch(params, batch, labels);
  const auto specs = layer_specs(params.config);
  return gradient(params, specs, labels.size(),
                  span_loader(batch, params.config.input.pixel_count()), labels, weights);
}

double batch_loss(const ModelParams& params, std::span<const double> batch,
                  std::span<const LabelSet> labels, const LossWeights& weights) {
  check_batch(params, batch, labels);
  const ForwardResult r = forward(params, batch, labels.size());
  return multitask_loss(r.outputs, labels, weights).total;
}

LossBreakdown dataset_loss(const ModelParams& params, const Dataset& dataset,
                           const LossWeights& weights) {
  const auto outputs = forward_dataset(params, dataset);
  std::vector<LabelSet> labels(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) labels[i] = dataset.labels(i);
  return multitask_loss(outputs, labels, weights);
}

AdamState AdamState::for_params(const std::vector<Tensor>& params) {
  AdamState s;
  for (const Tensor& t : params) {
    s.m.emplace_back(t.size(), 0.0);
    s.v.emplace_back(t.size(), 0.0);
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DomainError("adam_step: tensor count mismatch");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (grads[t].size() != params[t].size() || state.m[t].size() != params[t].size() ||
        state.v[t].size() != params[t].size()) {
      throw DomainError("adam_step: shape mismatch in " + params[t].name);
    }
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t].values;
    const auto& g = grads[t].values;
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("epochs must be >= 1");
  if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate)))
    throw DomainError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw DomainError("adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw DomainError("adam epsilon must be > 0");
}

TrainResult train(const NetConfig& net, const TrainConfig& config,
                  const LossWeights& weights, const Dataset& train_set,
                  const Dataset& val_set, const EpochCallback& on_epoch) {
  config.validate();
  weights.validate();
  const auto specs = layer_specs(net);
  if (train_set.empty()) throw DomainError("training set is empty");
  if (val_set.empty()) throw DomainError("validation set is empty");
  if (train_set.dims() != net.input || val_set.dims() != net.input)
    throw DomainError("dataset dims do not match network input");
  for (std::size_t i = 0; i < train_set.size(); ++i)
    if (!is_consistent(train_set.labels(i))) throw DomainError("inconsistent training labels");

  TrainResult result;
  ModelParams params = init_params(net, named_stream(config.seed, "init"));
  AdamState state = AdamState::for_params(params.tensors);
  const AdamConfig adam = config.adam();
  const std::uint64_t shuffle_seed = named_stream(config.seed, "shuffle");
  const std::size_t n = train_set.size();
  const auto bs = static_cast<std::size_t>(config.batch_size);
  const std::size_t pc = net.input.pixel_count();

  double best_top2 = -1.0;
  std::vector<std::size_t> order(n);
  std::vector<LabelSet> batch_labels;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (config.shuffle) {
      Rng rng(mix_seed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }

    std::array<double, 4> loss_sum{};
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += bs, ++batch_index) {
      const std::size_t m = std::min(bs, n - start);
      const std::span<const std::size_t> idx(order.data() + start, m);
      batch_labels.resize(m);
      for (std::size_t i = 0; i < m; ++i) batch_labels[i] = train_set.labels(idx[i]);
      ChunkLoader load = [&](std::size_t first, std::size_t count, std::vector<double>& out) {
        out.resize(count * pc);
        for (std::size_t i = 0; i < count; ++i) {
          auto px = train_set.pixels(idx[first + i]);
          double* dst = out.data() + i * pc;
          for (std::size_t j = 0; j < pc; ++j) dst[j] = px[j] * (1.0 / 255.0);
        }
      };
      BatchGradient g;
      try {
        g = gradient(params, specs, m, load, batch_labels, weights);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(g.loss.total)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index) + ": non-finite loss");
      }
      adam_step(params.tensors, g.grads.tensors, state, adam);
      for (std::size_t h = 0; h < 4; ++h) loss_sum[h] += g.loss.per_head[h] * static_cast<double>(m);
    }
    if (!params.all_finite()) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite parameters");
    }

    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t h = 0; h < 4; ++h) {
      rec.train_loss.per_head[h] = loss_sum[h] / static_cast<double>(n);
      rec.train_loss.total += weights.alpha[h] * rec.train_loss.per_head[h];
    }
    const EvalReports ev = evaluate_all(params, val_set);
    rec.val_top1 = ev.top1.accuracy;
    rec.val_top2 = ev.top2.accuracy;
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rec.val_top2 > best_top2) {
      best_top2 = rec.val_top2;
      result.params = params;
      result.history.best_epoch = epoch;
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "epoch,l1,l2,l3,l4,total,val_top1,val_top2,seconds\n";
  char buf[320];
  for (const EpochRecord& r : history.epochs) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.6f,%.6f,%.3f\n",
                  r.epoch, r.train_loss.per_head[0], r.train_loss.per_head[1],
                  r.train_loss.per_head[2], r.train_loss.per_head[3], r.train_loss.total,
                  r.val_top1, r.val_top2, r.seconds);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

NetConfig tiny_net_config() {
  NetConfig c;
  c.input = {16, 16, 3};
  c.conv_blocks = {{4, 3, 2}, {8, 3, 2}};
  c.feature_dim = 16;
  return c;
}

GradCheckReport grad_check(const NetConfig& config, const GradCheckOptions& options) {
  if (count_params(config) > 10000)
    throw DomainError("grad_check: config exceeds 10,000 parameters");
  if (options.n_probes < 100) throw DomainError("grad_check: need at least 100 probes");
  if (options.batch_size < 1) throw DomainError("grad_check: empty batch");

  Rng rng(named_stream(options.seed, "gradcheck"));
  ModelParams params = init_params(config, named_stream(options.seed, "init"));
  // Non-zero biases so bias gradients are exercised away from symmetry.
  for (std::size_t l = 0; l < params.tensors.size() / 2; ++l)
    for (double& b : params.bias(l).values) b = rng.uniform(-0.1, 0.1);

  const std::size_t n = options.batch_size;
  std::vector<double> batch(n * config.input.pixel_count());
  for (double& v : batch) v = rng.uniform();
  std::vector<LabelSet> labels(n);
  for (LabelSet& l : labels) l = labels_from_number(static_cast<int>(rng.below(kHolisticClasses)));

  const BatchGradient analytic = backward(params, batch, labels, options.weights);

  std::vector<std::pair<std::size_t, std::size_t>> eligible;  // (tensor, offset)
  std::size_t coords = 0;
  for (std::size_t t = 0; t < params.tensors.size(); ++t) {
    if (params.tensors[t].name.starts_with(options.layer_prefix)) {
      eligible.emplace_back(t, coords);
      coords += params.tensors[t].size();
    }
  }
  if (coords == 0) throw DomainError("grad_check: no tensor matches '" + options.layer_prefix + "'");

  GradCheckReport report;
  report.n_probes = options.n_probes;
  report.worst.rel_error = -1.0;
  for (int p = 0; p < options.n_probes; ++p) {
    std::size_t t = 0, i = 0;
    const auto k = static_cast<std::size_t>(p);
    if (k < eligible.size()) {
      // One coordinate of every eligible tensor first, then uniform draws.
      t = eligible[k].first;
      i = rng.below(params.tensors[t].size());
    } else {
      const std::size_t flat = rng.below(coords);
      std::size_t e = eligible.size() - 1;
      while (eligible[e].second > flat) --e;
      t = eligible[e].first;
      i = flat - eligible[e].second;
    }

    double& w = params.tensors[t].values[i];
    const double saved = w;
    w = saved + options.step;
    const double up = batch_loss(params, batch, labels, options.weights);
    w = saved - options.step;
    const double down = batch_loss(params, batch, labels, options.weights);
    w = saved;

    GradProbe probe;
    probe.tensor = params.tensors[t].name;
    probe.index = i;
    probe.numeric = (up - down) / (2.0 * options.step);
    probe.analytic = analytic.grads.tensors[t].values[i];
    if (options.corrupt_analytic) probe.analytic = 1.5 * probe.analytic + 1e-3;
    probe.rel_error =
        std::abs(probe.analytic - probe.numeric) / std::max(1e-8, std::abs(probe.numeric));
    if (probe.rel_error > report.worst.rel_error) report.worst = probe;
    if (std::find(report.probed_layers.begin(), report.probed_layers.end(), probe.tensor) ==
        report.probed_layers.end()) {
      report.probed_layers.push_back(probe.tensor);
    }
  }
  report.max_rel_error = report.worst.rel_error;
  return report;
}

}  // namespace jnr
