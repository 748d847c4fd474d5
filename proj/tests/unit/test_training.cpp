#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "jnr/error.hpp"
#include "jnr/metrics.hpp"
#include "jnr/rng.hpp"
#include "jnr/training.hpp"

using namespace jnr;

namespace {

HeadOutputs uniform_outputs() {
  HeadOutputs o;
  for (std::size_t m = 0; m < 4; ++m) o.probs[m].assign(kHeadSizes[m], 1.0 / kHeadSizes[m]);
  return o;
}

HeadOutputs one_hot_outputs(const LabelSet& l) {
  HeadOutputs o;
  const std::array<int, 4> g{l.holistic, l.tens, l.ones, l.count};
  for (std::size_t m = 0; m < 4; ++m) {
    o.probs[m].assign(kHeadSizes[m], 0.0);
    o.probs[m][g[m]] = 1.0;
  }
  return o;
}

HeadOutputs random_outputs(Rng& rng) {
  HeadOutputs o;
  for (std::size_t m = 0; m < 4; ++m) {
    std::vector<double> z(kHeadSizes[m]);
    for (double& v : z) v = 4.0 * rng.normal();
    o.probs[m].resize(z.size());
    stable_softmax(z, o.probs[m]);
  }
  return o;
}

struct Batch {
  std::vector<double> x;
  std::vector<LabelSet> labels;
};

Batch random_batch(const NetConfig& c, std::size_t n, std::uint64_t seed) {
  Batch b;
  Rng rng(seed);
  b.x.resize(n * c.input.pixel_count());
  for (double& v : b.x) v = rng.uniform();
  for (std::size_t i = 0; i < n; ++i)
    b.labels.push_back(labels_from_number(static_cast<int>(rng.below(101))));
  return b;
}

SplitDatasets small_data(int n, std::uint64_t seed, bool balance = false) {
  GenConfig g;
  g.n_total = n;
  g.dims = {32, 32, 3};
  g.balance_visibility = balance;
  return generate_dataset(g, seed);
}

NetConfig small_net() {
  NetConfig c;
  c.input = {32, 32, 3};
  c.conv_blocks = {{8, 3, 2}, {16, 3, 2}, {16, 3, 2}};
  c.feature_dim = 32;
  return c;
}

}  // namespace

TEST_CASE("uniform probabilities cost ln of the class count") {
  const LossBreakdown l = multitask_loss(uniform_outputs(), labels_from_number(42), {});
  CHECK(std::abs(l.per_head[0] - std::log(101.0)) <= 1e-12);
  CHECK(std::abs(l.per_head[1] - std::log(11.0)) <= 1e-12);
  CHECK(std::abs(l.per_head[3] - std::log(3.0)) <= 1e-12);
}

TEST_CASE("perfect predictions cost nothing") {
  const LabelSet l = labels_from_number(93);
  const LossBreakdown b = multitask_loss(one_hot_outputs(l), l, {});
  CHECK(b.total == 0.0);
  for (double v : b.per_head) CHECK(v == 0.0);
}

TEST_CASE("zero probability on the truth hits the floor") {
  const LabelSet l = labels_from_number(5);
  const LossBreakdown b = multitask_loss(one_hot_outputs(labels_from_number(6)), l, {});
  CHECK(b.per_head[0] == doctest::Approx(-std::log(1e-12)));
  CHECK(std::isfinite(b.total));
}

TEST_CASE("weighted total") {
  // per-head losses of exactly 1 via probability 1/e on the truth
  HeadOutputs o;
  const LabelSet l = labels_from_number(93);
  const std::array<int, 4> g{93, 9, 3, 2};
  for (std::size_t m = 0; m < 4; ++m) {
    const double rest = (1.0 - std::exp(-1.0)) / (kHeadSizes[m] - 1);
    o.probs[m].assign(kHeadSizes[m], rest);
    o.probs[m][g[m]] = std::exp(-1.0);
  }
  const LossBreakdown b = multitask_loss(o, l, LossWeights{{0.2, 0.3, 0.3, 0.2}});
  CHECK(b.total == doctest::Approx(1.0).epsilon(1e-15));

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const LossWeights w{{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}};
    const LabelSet t = labels_from_number(static_cast<int>(rng.below(101)));
    const LossBreakdown r = multitask_loss(random_outputs(rng), t, w);
    double s = 0;
    for (std::size_t m = 0; m < 4; ++m) {
      CHECK(r.per_head[m] >= 0.0);
      s += w.alpha[m] * r.per_head[m];
    }
    CHECK(std::abs(r.total - s) <= 1e-12);
  }
}

TEST_CASE("loss input validation") {
  HeadOutputs o = uniform_outputs();
  CHECK_THROWS_AS(multitask_loss(o, LabelSet{93, 9, 4, 2}, {}), DomainError);
  o.probs[1][0] += 0.5;
  CHECK_THROWS_AS(multitask_loss(o, labels_from_number(1), {}), DomainError);
  o = uniform_outputs();
  o.probs[2].pop_back();
  CHECK_THROWS_AS(multitask_loss(o, labels_from_number(1), {}), DomainError);
  CHECK_THROWS_AS((LossWeights{{0, 0, 0, 0}}.validate()), DomainError);
  CHECK_THROWS_AS((LossWeights{{-0.1, 0.5, 0.3, 0.3}}.validate()), DomainError);
}

TEST_CASE("loss weight grid") {
  const auto grid = loss_weight_grid();
  CHECK(grid[0].alpha == std::array<double, 4>{0.25, 0.25, 0.25, 0.25});
  CHECK(grid[2].alpha == LossWeights{}.alpha);
  for (const LossWeights& w : grid)
    CHECK(w.alpha[0] + w.alpha[1] + w.alpha[2] + w.alpha[3] == doctest::Approx(1.0));
}

TEST_CASE("head bias gradients at zero parameters") {
  const NetConfig c = small_net();
  const ModelParams z = ModelParams::zeros(c);
  const Batch b = random_batch(c, 5, 1);
  const LossWeights w{};
  const BatchGradient g = backward(z, b.x, b.labels, w);
  const std::size_t first_head = c.conv_blocks.size() + 1;
  for (std::size_t m = 0; m < 4; ++m) {
    const Tensor& db = g.grads.bias(first_head + m);
    for (int k = 0; k < kHeadSizes[m]; ++k) {
      double expect = 0;
      for (const LabelSet& l : b.labels) {
        const std::array<int, 4> t{l.holistic, l.tens, l.ones, l.count};
        expect += w.alpha[m] * (1.0 / kHeadSizes[m] - (t[m] == k ? 1.0 : 0.0));
      }
      expect /= 5.0;
      CHECK(db.values[k] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("unweighted heads receive no gradient") {
  const NetConfig c = small_net();
  const ModelParams p = init_params(c, 2);
  const Batch b = random_batch(c, 6, 2);
  const BatchGradient g = backward(p, b.x, b.labels, LossWeights{{1, 0, 0, 0}});
  const std::size_t first_head = c.conv_blocks.size() + 1;
  for (std::size_t m = 1; m < 4; ++m) {
    for (double v : g.grads.weight(first_head + m).values) REQUIRE(v == 0.0);
    for (double v : g.grads.bias(first_head + m).values) REQUIRE(v == 0.0);
  }
}

TEST_CASE("loss and gradients scale with the weights") {
  const NetConfig c = small_net();
  const ModelParams p = init_params(c, 3);
  const Batch b = random_batch(c, 4, 3);
  const LossWeights w{{0.2, 0.3, 0.3, 0.2}};
  const LossWeights w2{{0.4, 0.6, 0.6, 0.4}};
  const BatchGradient g1 = backward(p, b.x, b.labels, w);
  const BatchGradient g2 = backward(p, b.x, b.labels, w2);
  CHECK(g2.loss.total == 2.0 * g1.loss.total);
  for (std::size_t t = 0; t < g1.grads.tensors.size(); ++t)
    for (std::size_t i = 0; i < g1.grads.tensors[t].size(); ++i)
      REQUIRE(g2.grads.tensors[t].values[i] == 2.0 * g1.grads.tensors[t].values[i]);

  const LossWeights w3{{0.6, 0.9, 0.9, 0.6}};
  const BatchGradient g3 = backward(p, b.x, b.labels, w3);
  CHECK(g3.loss.total == doctest::Approx(3.0 * g1.loss.total).epsilon(1e-14));
}

TEST_CASE("batch loss agrees with the forward pass") {
  const NetConfig c = small_net();
  const ModelParams p = init_params(c, 4);
  const Batch b = random_batch(c, 9, 4);
  const BatchGradient g = backward(p, b.x, b.labels, {});
  CHECK(g.loss.total == doctest::Approx(batch_loss(p, b.x, b.labels, {})).epsilon(1e-13));
  CHECK_THROWS_AS(backward(p, std::span<const double>(b.x).first(10), b.labels, {}),
                  DomainError);
}

TEST_CASE("gradients do not depend on the thread count") {
  const NetConfig c = small_net();
  const ModelParams p = init_params(c, 5);
  const Batch b = random_batch(c, 50, 5);
  setenv("JNR_THREADS", "1", 1);
  const BatchGradient g1 = backward(p, b.x, b.labels, {});
  setenv("JNR_THREADS", "4", 1);
  const BatchGradient g4 = backward(p, b.x, b.labels, {});
  unsetenv("JNR_THREADS");
  CHECK(g1.grads == g4.grads);
  CHECK(g1.loss.total == g4.loss.total);
}

TEST_CASE("finite-difference gradient check") {
  CHECK(count_params(tiny_net_config()) <= 10000);
  GradCheckOptions o;
  const GradCheckReport all = grad_check(tiny_net_config(), o);
  CHECK(all.max_rel_error < 1e-4);
  CHECK(all.n_probes == 200);
  CHECK(all.probed_layers.size() >= 5);

  o.layer_prefix = "conv1";
  const GradCheckReport deep = grad_check(tiny_net_config(), o);
  CHECK(deep.max_rel_error < 1e-4);
  CHECK(deep.probed_layers.size() == 2);

  o.layer_prefix = "head_count";
  o.weights = LossWeights{{0, 0, 0, 0.5}};
  CHECK(grad_check(tiny_net_config(), o).max_rel_error < 1e-4);

  o = GradCheckOptions{};
  o.corrupt_analytic = true;
  CHECK(grad_check(tiny_net_config(), o).max_rel_error > 1e-2);

  o = GradCheckOptions{};
  o.n_probes = 99;
  CHECK_THROWS_AS(grad_check(tiny_net_config(), o), DomainError);
  CHECK_THROWS_AS(grad_check(NetConfig{}, GradCheckOptions{}), DomainError);
}

TEST_CASE("adam closed forms") {
  std::vector<Tensor> p{{"x", {1}, {0.5}}};
  std::vector<Tensor> g{{"x", {1}, {0.0}}};
  AdamState s = AdamState::for_params(p);
  adam_step(p, g, s, {});
  CHECK(p[0].values[0] == 0.5);

  p[0].values[0] = 0.5;
  g[0].values[0] = 1.0;
  s = AdamState::for_params(p);
  adam_step(p, g, s, {});
  // m_hat = v_hat = 1, so the step is lr / (1 + eps)
  CHECK(p[0].values[0] == doctest::Approx(0.5 - 1e-3 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(s.step == 1);

  std::vector<Tensor> wrong{{"x", {2}, {0.0, 0.0}}};
  CHECK_THROWS_AS(adam_step(p, wrong, s, {}), DomainError);
}

TEST_CASE("adam descends a parabola") {
  std::vector<Tensor> p{{"x", {1}, {1.0}}};
  AdamState s = AdamState::for_params(p);
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  double prev = 1.0;
  for (int t = 0; t < 10; ++t) {
    std::vector<Tensor> g{{"x", {1}, {2.0 * p[0].values[0]}}};
    adam_step(p, g, s, cfg);
    CHECK(std::abs(p[0].values[0]) < prev);
    prev = std::abs(p[0].values[0]);
  }
}

TEST_CASE("training is deterministic") {
  const SplitDatasets d = small_data(84, 1);
  REQUIRE(d.train.size() == 65);
  TrainConfig t;
  t.epochs = 2;
  t.batch_size = 16;
  t.seed = 7;
  const TrainResult a = train(small_net(), t, {}, d.train, d.val);
  const TrainResult b = train(small_net(), t, {}, d.train, d.val);
  CHECK(a.params == b.params);
  CHECK(encode_checkpoint(a.params) == encode_checkpoint(b.params));
  CHECK(a.history.epochs.size() == 2);
  t.seed = 8;
  CHECK_FALSE(train(small_net(), t, {}, d.train, d.val).params == a.params);
}

TEST_CASE("training lowers the loss") {
  const SplitDatasets d = small_data(260, 2);
  REQUIRE(d.train.size() == 200);
  TrainConfig t;
  t.epochs = 30;
  t.batch_size = 32;
  t.seed = 3;
  const LossWeights w{};
  const double before = dataset_loss(init_params(small_net(), named_stream(3, "init")), d.train, w).total;
  const TrainResult r = train(small_net(), t, w, d.train, d.val);
  CHECK(r.history.epochs.back().train_loss.total < r.history.epochs.front().train_loss.total);
  CHECK(r.history.epochs.back().train_loss.total < before);
  CHECK(r.history.best_epoch >= 1);
  double best = 0;
  for (const EpochRecord& e : r.history.epochs) best = std::max(best, e.val_top2);
  CHECK(r.history.epochs[r.history.best_epoch - 1].val_top2 == best);
  for (const EpochRecord& e : r.history.epochs) CHECK(e.val_top2 >= e.val_top1);
}

TEST_CASE("a count-only objective learns the digit count") {
  const SplitDatasets d = small_data(1300, 4);
  TrainConfig t;
  t.epochs = 8;
  t.batch_size = 32;
  t.seed = 4;
  const TrainResult r = train(small_net(), t, LossWeights{{0, 0, 0, 1}}, d.train, d.val);
  const auto out = forward_dataset(r.params, d.val);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) hits += out[i].argmax[3] == d.val.labels(i).count;
  CHECK(static_cast<double>(hits) / out.size() > 1.0 / 3.0 + 0.1);
}

TEST_CASE("training input validation") {
  const SplitDatasets d = small_data(40, 5);
  TrainConfig t;
  t.epochs = 1;
  CHECK_THROWS_AS(train(small_net(), t, {}, Dataset({32, 32, 3}), d.val), DomainError);
  CHECK_THROWS_AS(train(small_net(), t, {}, d.train, Dataset({32, 32, 3})), DomainError);
  CHECK_THROWS_AS(train(NetConfig{}, t, {}, d.train, d.val), DomainError);
  t.batch_size = 0;
  CHECK_THROWS_AS(train(small_net(), t, {}, d.train, d.val), DomainError);
  t = TrainConfig{};
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), DomainError);
  t = TrainConfig{};
  t.learning_rate = 0;
  CHECK_THROWS_AS(t.validate(), DomainError);
}

TEST_CASE("divergence is reported with its position") {
  const SplitDatasets d = small_data(40, 6);
  TrainConfig t;
  t.epochs = 3;
  t.batch_size = 8;
  t.learning_rate = 1e300;
  try {
    train(small_net(), t, {}, d.train, d.val);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    const std::string what = e.what();
    CHECK(what.find("epoch") != std::string::npos);
  }
}

TEST_CASE("history csv") {
  TrainHistory h;
  EpochRecord r;
  r.epoch = 1;
  r.train_loss = {{1, 2, 3, 4}, 2.5};
  r.val_top1 = 0.25;
  r.val_top2 = 0.5;
  h.epochs.push_back(r);
  const auto path = std::filesystem::temp_directory_path() / "jnr_unit_history.csv";
  write_history_csv(h, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,l1,l2,l3,l4,total,val_top1,val_top2,seconds");
  CHECK(row.rfind("1,1,2,3,4,2.5,0.250000,0.500000,", 0) == 0);
  std::filesystem::remove(path);
}
