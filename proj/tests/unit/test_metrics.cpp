#include <algorithm>
#include <map>

#include "doctest.h"
#include "jnr/error.hpp"
#include "jnr/metrics.hpp"
#include "jnr/rng.hpp"

using namespace jnr;

namespace {

// Per-class counting straight from the sample lists, no confusion matrix.
struct OracleReport {
  double accuracy, precision, recall, f1;
  std::map<int, std::array<double, 3>> per_class;  // precision, recall, f1
};

OracleReport oracle(const std::vector<int>& preds, const std::vector<int>& truths) {
  std::map<int, std::uint64_t> support, predicted, hits;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++support[truths[i]];
    ++predicted[preds[i]];
    if (preds[i] == truths[i]) {
      ++hits[truths[i]];
      ++correct;
    }
  }
  OracleReport r{};
  const double n = static_cast<double>(truths.size());
  r.accuracy = static_cast<double>(correct) / n;
  double ps = 0, rs = 0, fs = 0;
  for (int c = 0; c < 101; ++c) {
    const std::uint64_t s = support[c], p = predicted[c], tp = hits[c];
    if (s == 0 && p == 0) continue;
    const double prec = p ? static_cast<double>(tp) / static_cast<double>(p) : 0.0;
    const double rec = s ? static_cast<double>(tp) / static_cast<double>(s) : 0.0;
    const double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    r.per_class[c] = {prec, rec, f};
    if (s == 0) continue;
    if (p) ps += static_cast<double>(s * tp) / static_cast<double>(p);
    rs += static_cast<double>(s * tp) / static_cast<double>(s);
    fs += static_cast<double>(s) * f;
  }
  r.precision = ps / n;
  r.recall = rs / n;
  r.f1 = fs / n;
  return r;
}

}  // namespace

TEST_CASE("confusion examples") {
  const std::vector<int> v{3, 93, 100};
  const ConfusionMatrix cm = confusion(v, v);
  CHECK(cm.at(3, 3) == 1);
  CHECK(cm.at(93, 93) == 1);
  CHECK(cm.at(100, 100) == 1);
  CHECK(cm.trace() == 3);
  const MetricsReport r = summarize(cm, GradingMode::kTop1);
  CHECK(r.accuracy == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);

  const std::vector<int> p1{1}, t1{2};
  const ConfusionMatrix one = confusion(p1, t1);
  CHECK(one.at(2, 1) == 1);
  CHECK(one.trace() == 0);

  CHECK_THROWS_AS(confusion(std::vector<int>{1, 2}, std::vector<int>{1}), DomainError);
  CHECK_THROWS_AS(confusion(std::vector<int>{}, std::vector<int>{}), DomainError);
  CHECK_THROWS_AS(confusion(std::vector<int>{101}, std::vector<int>{1}), DomainError);
  CHECK_THROWS_AS(summarize(ConfusionMatrix{}, GradingMode::kTop1), DomainError);
}

TEST_CASE("two-class hand-computed report") {
  // truths A A B, preds A B B with A = 0, B = 1
  const MetricsReport r =
      summarize(confusion(std::vector<int>{0, 1, 1}, std::vector<int>{0, 0, 1}),
                GradingMode::kTop1);
  CHECK(r.accuracy == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.recall == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.precision == doctest::Approx(5.0 / 6).epsilon(1e-15));
  // class A: P 1, R 1/2, F1 2/3; class B: P 1/2, R 1, F1 2/3
  CHECK(r.f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
  REQUIRE(r.per_class.size() == 2);
  CHECK(r.per_class[0].precision == 1.0);
  CHECK(r.per_class[0].recall == 0.5);
  CHECK(r.per_class[1].precision == 0.5);
  CHECK(r.per_class[1].recall == 1.0);
}

TEST_CASE("mass conservation") {
  Rng rng(4);
  std::vector<int> p(1000), t(1000);
  for (int i = 0; i < 1000; ++i) {
    p[i] = static_cast<int>(rng.below(101));
    t[i] = static_cast<int>(rng.below(101));
  }
  CHECK(confusion(p, t).total() == 1000);
}

TEST_CASE("summarize matches the brute-force oracle on random five-class data") {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = 40 + static_cast<int>(rng.below(5));
      t[i] = 40 + static_cast<int>(rng.below(5));
    }
    const MetricsReport r = summarize(confusion(p, t), GradingMode::kTop1);
    const OracleReport o = oracle(p, t);
    REQUIRE(r.accuracy == o.accuracy);
    REQUIRE(r.precision == o.precision);
    REQUIRE(r.recall == o.recall);
    REQUIRE(r.f1 == o.f1);
    REQUIRE(r.per_class.size() == o.per_class.size());
    for (const ClassMetrics& m : r.per_class) {
      const auto& e = o.per_class.at(m.label);
      REQUIRE(m.precision == e[0]);
      REQUIRE(m.recall == e[1]);
      REQUIRE(m.f1 == e[2]);
    }
  }
}

TEST_CASE("weighted recall equals accuracy on random matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    ConfusionMatrix cm;
    const int classes = 2 + static_cast<int>(rng.below(100));
    const std::size_t n = 1 + rng.below(3000);
    for (std::size_t i = 0; i < n; ++i)
      cm.add(static_cast<int>(rng.below(classes)), static_cast<int>(rng.below(classes)));
    const MetricsReport r = summarize(cm, GradingMode::kTop1);
    REQUIRE(r.recall == r.accuracy);
    REQUIRE(r.precision >= 0.0);
    REQUIRE(r.precision <= 1.0);
    REQUIRE(r.f1 >= 0.0);
    REQUIRE(r.f1 <= 1.0);
  }
}

TEST_CASE("metrics ignore sample order") {
  Rng rng(8);
  std::vector<int> p(500), t(500);
  for (int i = 0; i < 500; ++i) {
    t[i] = static_cast<int>(rng.below(20));
    p[i] = rng.uniform() < 0.6 ? t[i] : static_cast<int>(rng.below(20));
  }
  const MetricsReport a = summarize(confusion(p, t), GradingMode::kTop1);
  std::vector<std::size_t> idx(500);
  for (std::size_t i = 0; i < 500; ++i) idx[i] = 499 - i;
  std::vector<int> p2(500), t2(500);
  for (std::size_t i = 0; i < 500; ++i) {
    p2[i] = p[idx[i]];
    t2[i] = t[idx[i]];
  }
  const MetricsReport b = summarize(confusion(p2, t2), GradingMode::kTop1);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.precision == b.precision);
  CHECK(a.f1 == b.f1);
}

TEST_CASE("top-2 bookkeeping credits the matching element") {
  Decision hit;
  hit.pair = {39, 93};
  hit.top1 = {39, true};
  Decision miss;
  miss.pair = {39, 38};
  miss.top1 = {38, false};
  const std::vector<Decision> d{hit, miss};
  const std::vector<int> truths{93, 93};
  const ConfusionMatrix top1 = confusion(d, truths, GradingMode::kTop1);
  const ConfusionMatrix top2 = confusion(d, truths, GradingMode::kTop2);
  CHECK(top1.at(93, 39) == 1);
  CHECK(top1.at(93, 38) == 1);
  CHECK(top2.at(93, 93) == 1);
  CHECK(top2.at(93, 38) == 1);
}

TEST_CASE("random baseline is deterministic and top-2 dominates") {
  Dataset d({16, 16, 1});
  Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    ImageSample s;
    s.pixels.assign(256, 0);
    s.labels = labels_from_number(static_cast<int>(rng.below(101)));
    s.orientation = static_cast<float>(rng.uniform(0.0, 359.0));
    d.push_back(s);
  }
  const MetricsReport a = random_baseline(d, 20, 11, GradingMode::kTop1);
  const MetricsReport b = random_baseline(d, 20, 11, GradingMode::kTop1);
  const MetricsReport c = random_baseline(d, 20, 11, GradingMode::kTop2);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.f1 == b.f1);
  CHECK(c.accuracy >= a.accuracy);
  CHECK(a.total == 6000);
  CHECK_THROWS_AS(random_baseline(d, 0, 11, GradingMode::kTop1), DomainError);
}

TEST_CASE("json and table export") {
  const MetricsReport r =
      summarize(confusion(std::vector<int>{0, 1, 1}, std::vector<int>{0, 0, 1}),
                GradingMode::kTop2);
  const nlohmann::json j = to_json(r);
  CHECK(j["mode"] == "top2");
  CHECK(j["total"] == 3);
  CHECK(j["per_class"].size() == 2);
  CHECK(j["per_class"][1]["class"] == 1);
  const std::string table = format_table(r, "model");
  CHECK(table.find("Accuracy") != std::string::npos);
  CHECK(table.find("F1 score") != std::string::npos);
  CHECK(table.find("Top-2") != std::string::npos);
  CHECK(table.find("66.67%") != std::string::npos);
  CHECK(parse_mode("top1") == GradingMode::kTop1);
  CHECK_THROWS_AS(parse_mode("top3"), DomainError);
}
