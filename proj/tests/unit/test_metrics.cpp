#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "../oracles.hpp"
#include "spineseg/metrics.hpp"
#include "support.hpp"

using namespace spineseg;
using support::code_of;

namespace {

LabelMask labels(int w, int h, std::vector<std::uint8_t> v) { return LabelMask({w, h}, std::move(v)); }

MetricsRecord all(double v) { return MetricsRecord{v, v, v, v, {}}; }

void check_equal(const MetricsRecord& a, const oracle::Metrics& b, double tol) {
  CHECK(a.pixel_accuracy == doctest::Approx(b.pixel_accuracy).epsilon(tol));
  CHECK(std::abs(a.pixel_accuracy - b.pixel_accuracy) <= tol);
  CHECK(std::abs(a.mean_accuracy - b.mean_accuracy) <= tol);
  CHECK(std::abs(a.mean_iou - b.mean_iou) <= tol);
  CHECK(std::abs(a.fw_iou - b.fw_iou) <= tol);
}

}  // namespace

TEST_CASE("confusion_matrix examples") {
  const auto gt = labels(2, 2, {1, 1, 0, 0});
  SUBCASE("tally") {
    const auto cm = confusion_matrix(gt, labels(2, 2, {1, 0, 0, 0}), 2);
    CHECK(cm(0, 0) == 2);
    CHECK(cm(0, 1) == 0);
    CHECK(cm(1, 0) == 1);
    CHECK(cm(1, 1) == 1);
    CHECK(cm.truth_total(1) == 2);
    CHECK(cm.predicted_total(0) == 3);
    CHECK(cm.total() == 4);
  }
  SUBCASE("identity is diagonal") {
    Rng rng(5);
    const auto m = oracle::random_labels(rng, 9, 7, 4);
    const auto cm = confusion_matrix(m, m, 4);
    std::uint64_t diag = 0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i != j) CHECK(cm(i, j) == 0);
      }
      diag += cm(i, i);
    }
    CHECK(diag == 63);
  }
  SUBCASE("all wrong") {
    const auto cm = confusion_matrix(LabelMask(5, 3, 1), LabelMask(5, 3, 0), 2);
    CHECK(cm(1, 0) == 15);
    CHECK(cm(0, 0) + cm(0, 1) + cm(1, 1) == 0);
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { confusion_matrix(gt, LabelMask(3, 2), 2); }) == ErrorCode::kDimensionMismatch);
    CHECK(code_of([&] { confusion_matrix(gt, labels(2, 2, {2, 0, 0, 0}), 2); }) ==
          ErrorCode::kClassIndexOutOfRange);
  }
}

TEST_CASE("compute_metrics examples") {
  const auto gt = labels(2, 2, {1, 1, 0, 0});
  SUBCASE("one miss") {
    const auto r = compute_metrics(confusion_matrix(gt, labels(2, 2, {1, 0, 0, 0}), 2));
    CHECK(r.pixel_accuracy == doctest::Approx(0.75));
    CHECK(r.mean_accuracy == doctest::Approx(0.75));
    CHECK(r.mean_iou == doctest::Approx(7.0 / 12.0));
    CHECK(r.fw_iou == doctest::Approx(7.0 / 12.0));
    REQUIRE(r.per_class_iou.size() == 2);
    CHECK(*r.per_class_iou[0] == doctest::Approx(2.0 / 3.0));
    CHECK(*r.per_class_iou[1] == doctest::Approx(0.5));
  }
  SUBCASE("all background prediction") {
    const auto r = compute_metrics(confusion_matrix(gt, LabelMask(2, 2), 2));
    CHECK(r.pixel_accuracy == doctest::Approx(0.5));
    CHECK(r.mean_accuracy == doctest::Approx(0.5));
    CHECK(r.mean_iou == doctest::Approx(0.25));
    CHECK(r.fw_iou == doctest::Approx(0.25));
  }
  SUBCASE("perfect") {
    Rng rng(9);
    const auto m = oracle::random_labels(rng, 13, 11, 5);
    const auto r = compute_metrics(confusion_matrix(m, m, 5));
    CHECK(r.pixel_accuracy == 1.0);
    CHECK(r.mean_accuracy == 1.0);
    CHECK(r.mean_iou == 1.0);
    CHECK(r.fw_iou == 1.0);
  }
  SUBCASE("class absent from truth is undefined and excluded") {
    // Truth uses classes 0 and 1; prediction invents class 2.
    const auto r = compute_metrics(confusion_matrix(gt, labels(2, 2, {1, 2, 0, 0}), 3));
    CHECK_FALSE(r.per_class_iou[2].has_value());
    CHECK(r.pixel_accuracy == doctest::Approx(0.75));
    CHECK(r.mean_accuracy == doctest::Approx(0.75));
    CHECK(r.mean_iou == doctest::Approx(0.75));
  }
  SUBCASE("empty matrix") {
    CHECK(code_of([] { compute_metrics(ConfusionMatrix(3)); }) == ErrorCode::kEmptyMatrix);
  }
}

TEST_CASE("evaluate_pair examples") {
  InstanceSet gt(16, 16);
  gt.add({1, 1, std::nullopt, oracle::rect_mask(16, 16, 2, 2, 5, 3)});  // 8 px
  SUBCASE("identity") {
    for (auto mode : {EvalMode::kBinary, EvalMode::kPerClass}) {
      const auto r = evaluate_pair(gt, gt, mode, 6);
      CHECK(r.pixel_accuracy == 1.0);
      CHECK(r.mean_iou == 1.0);
      CHECK(r.mean_accuracy == 1.0);
      CHECK(r.fw_iou == 1.0);
    }
  }
  SUBCASE("one disjoint 4-pixel extra instance") {
    InstanceSet pred = gt;
    pred.add({2, 1, 0.7, oracle::rect_mask(16, 16, 10, 10, 11, 11)});
    const auto r = evaluate_pair(gt, pred, EvalMode::kBinary, 6);
    CHECK(r.pixel_accuracy == 1.0 - 4.0 / 256.0);
    CHECK(r.pixel_accuracy == 0.984375);
  }
  SUBCASE("binary equals per-class with one foreground class and no overlap") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      InstanceSet a(20, 20), b(20, 20);
      for (auto* s : {&a, &b}) {
        int id = 1;
        for (int k = 0; k < 3; ++k) {
          const int x0 = k * 7, y0 = rng.uniform_int(0, 12);
          if (!rng.bernoulli(0.8)) continue;
          s->add({id++, 1, std::nullopt,
                  oracle::rect_mask(20, 20, x0, y0, x0 + rng.uniform_int(0, 5), y0 + rng.uniform_int(0, 7))});
        }
      }
      const auto bin = evaluate_pair(a, b, EvalMode::kBinary, 2);
      const auto cls = evaluate_pair(a, b, EvalMode::kPerClass, 2);
      CHECK(bin.pixel_accuracy == cls.pixel_accuracy);
      CHECK(bin.mean_accuracy == cls.mean_accuracy);
      CHECK(bin.mean_iou == cls.mean_iou);
      CHECK(bin.fw_iou == cls.fw_iou);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK(code_of([&] { evaluate_pair(gt, InstanceSet(8, 8), EvalMode::kBinary, 2); }) ==
          ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("paint_instances: highest score owns overlaps, then lowest id") {
  InstanceSet set(6, 1);
  set.add({1, 1, 0.5, oracle::rect_mask(6, 1, 0, 0, 3, 0)});
  set.add({2, 3, 0.9, oracle::rect_mask(6, 1, 2, 0, 5, 0)});
  auto m = paint_instances(set);
  CHECK(m.at(1, 0) == 1);
  CHECK(m.at(2, 0) == 3);
  CHECK(m.at(3, 0) == 3);

  InstanceSet tie(4, 1);
  tie.add({7, 4, 0.5, oracle::rect_mask(4, 1, 0, 0, 3, 0)});
  tie.add({3, 2, 0.5, oracle::rect_mask(4, 1, 0, 0, 3, 0)});
  CHECK(paint_instances(tie).at(0, 0) == 2);

  InstanceSet scoreless(4, 1);
  scoreless.add({1, 4, 0.99, oracle::rect_mask(4, 1, 0, 0, 3, 0)});
  scoreless.add({2, 2, std::nullopt, oracle::rect_mask(4, 1, 0, 0, 3, 0)});
  CHECK(paint_instances(scoreless).at(0, 0) == 2);
}

TEST_CASE("aggregate examples") {
  SUBCASE("two records") {
    const auto s = aggregate({{"A", all(1.0)}, {"B", all(0.5)}});
    CHECK(s.pixel_accuracy == 0.75);
    CHECK(s.mean_accuracy == 0.75);
    CHECK(s.mean_iou == 0.75);
    CHECK(s.fw_iou == 0.75);
    CHECK(s.per_image.size() == 2);
  }
  SUBCASE("single record") {
    MetricsRecord r{0.91, 0.82, 0.73, 0.64, {}};
    const auto s = aggregate({{"only", r}});
    CHECK(s.pixel_accuracy == 0.91);
    CHECK(s.mean_accuracy == 0.82);
    CHECK(s.mean_iou == 0.73);
    CHECK(s.fw_iou == 0.64);
  }
  SUBCASE("three pixel accuracies") {
    const auto s = aggregate({{"a", all(0.9)}, {"b", all(0.8)}, {"c", all(1.0)}});
    CHECK(s.pixel_accuracy == doctest::Approx(0.9).epsilon(1e-15));
  }
  SUBCASE("empty") {
    CHECK(code_of([] { aggregate({}); }) == ErrorCode::kEmptyInput);
  }
}

TEST_CASE("metrics match the per-pixel oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = rng.uniform_int(1, 32), h = rng.uniform_int(1, 32), n = rng.uniform_int(2, 5);
    const auto gt = oracle::random_labels(rng, w, h, n);
    auto pred = gt;
    const double noise = rng.uniform();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (rng.bernoulli(noise)) pred.set(x, y, static_cast<std::uint8_t>(rng.uniform_int(0, n - 1)));
      }
    }
    check_equal(evaluate_pair(gt, pred, EvalMode::kPerClass, n), oracle::metrics(gt, pred, n), 1e-12);
  }
}

TEST_CASE("metric invariants") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = rng.uniform_int(1, 20), h = rng.uniform_int(1, 20), n = rng.uniform_int(2, 5);
    const auto gt = oracle::random_labels(rng, w, h, n);
    const auto pred = rng.bernoulli(0.2) ? gt : oracle::random_labels(rng, w, h, n);
    const auto r = compute_metrics(confusion_matrix(gt, pred, n));
    CHECK(r.mean_iou >= 0.0);
    CHECK(r.mean_iou <= r.mean_accuracy + 1e-15);
    CHECK(r.fw_iou >= 0.0);
    CHECK(r.fw_iou <= r.pixel_accuracy + 1e-15);
    const bool perfect = r.pixel_accuracy == 1.0 && r.mean_accuracy == 1.0 && r.mean_iou == 1.0 &&
                         r.fw_iou == 1.0;
    CHECK(perfect == (gt == pred));

    // Relabel both sides with the same permutation.
    std::vector<std::uint8_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    auto pg = gt, pp = pred;
    for (auto& v : pg.data()) v = perm[v];
    for (auto& v : pp.data()) v = perm[v];
    const auto q = compute_metrics(confusion_matrix(pg, pp, n));
    CHECK(std::abs(q.pixel_accuracy - r.pixel_accuracy) <= 1e-12);
    CHECK(std::abs(q.mean_accuracy - r.mean_accuracy) <= 1e-12);
    CHECK(std::abs(q.mean_iou - r.mean_iou) <= 1e-12);
    CHECK(std::abs(q.fw_iou - r.fw_iou) <= 1e-12);
  }
}

TEST_CASE("flipping k pixels of a correct prediction") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = rng.uniform_int(2, 24), h = rng.uniform_int(2, 24);
    const auto gt = oracle::random_labels(rng, w, h, 3);
    auto pred = gt;
    const int k = rng.uniform_int(0, w * h);
    std::vector<int> order(static_cast<std::size_t>(w * h));
    std::iota(order.begin(), order.end(), 0);
    for (int i = w * h - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
    for (int i = 0; i < k; ++i) {
      auto& v = pred.data()[order[i]];
      v = static_cast<std::uint8_t>((v + 1 + rng.uniform_int(0, 1)) % 3);
    }
    const auto r = compute_metrics(confusion_matrix(gt, pred, 3));
    // Correctly rounded value of the exact fraction (N - k) / N.
    CHECK(r.pixel_accuracy == static_cast<double>(w * h - k) / (w * h));
  }
}
