#include "spineseg/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "spineseg/error.hpp"

namespace spineseg {

ConfusionMatrix::ConfusionMatrix(int class_count)
    : n_(class_count),
      counts_(static_cast<std::size_t>(std::max(class_count, 0)) *
                  static_cast<std::size_t>(std::max(class_count, 0)),
              0) {
  if (class_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "class count must be positive");
  }
}

std::uint64_t ConfusionMatrix::truth_total(int i) const {
  std::uint64_t t = 0;
  for (int j = 0; j < n_; ++j) t += (*this)(i, j);
  return t;
}

std::uint64_t ConfusionMatrix::predicted_total(int j) const {
  std::uint64_t t = 0;
  for (int i = 0; i < n_; ++i) t += (*this)(i, j);
  return t;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

ConfusionMatrix confusion_matrix(const LabelMask& truth, const LabelMask& predicted,
                                 int class_count) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "ground truth and prediction sizes differ");
  }
  ConfusionMatrix cm(class_count);
  auto gt = truth.data();
  auto pr = predicted.data();
  for (std::size_t p = 0; p < gt.size(); ++p) {
    if (gt[p] >= class_count || pr[p] >= class_count) {
      throw Error(ErrorCode::kClassIndexOutOfRange,
                  "pixel value " + std::to_string(std::max(gt[p], pr[p])) +
                      " >= class count " + std::to_string(class_count));
    }
    ++cm(gt[p], pr[p]);
  }
  return cm;
}

ConfusionMatrix confusion_matrix(const BinaryMask& truth, const BinaryMask& predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "ground truth and prediction sizes differ");
  }
  ConfusionMatrix cm(2);
  auto gt = truth.data();
  auto pr = predicted.data();
  for (std::size_t p = 0; p < gt.size(); ++p) ++cm(gt[p] != 0, pr[p] != 0);
  return cm;
}

MetricsRecord compute_metrics(const ConfusionMatrix& cm) {
  const int n = cm.class_count();
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix is empty");

  MetricsRecord r;
  r.per_class_iou.resize(static_cast<std::size_t>(n));
  std::uint64_t correct = 0;
  double acc_sum = 0.0, iou_sum = 0.0, weighted_iou = 0.0;
  int present = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t nii = cm(i, i);
    const std::uint64_t ti = cm.truth_total(i);
    correct += nii;
    if (ti == 0) continue;
    ++present;
    const double iou = static_cast<double>(nii) /
                       static_cast<double>(ti + cm.predicted_total(i) - nii);
    r.per_class_iou[static_cast<std::size_t>(i)] = iou;
    acc_sum += static_cast<double>(nii) / static_cast<double>(ti);
    iou_sum += iou;
    weighted_iou += static_cast<double>(ti) * iou;
  }
  r.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  r.mean_accuracy = acc_sum / present;
  r.mean_iou = iou_sum / present;
  r.fw_iou = weighted_iou / static_cast<double>(total);
  return r;
}

LabelMask paint_instances(const InstanceSet& set) {
  std::vector<const Instance*> order;
  for (const auto& inst : set) order.push_back(&inst);
  // Lowest priority first so the highest-priority instance is painted last.
  std::sort(order.begin(), order.end(), [](const Instance* a, const Instance* b) {
    if (a->effective_score() != b->effective_score()) {
      return a->effective_score() < b->effective_score();
    }
    return a->id > b->id;
  });
  LabelMask out(set.width(), set.height());
  auto dst = out.data();
  for (const Instance* inst : order) {
    auto src = inst->mask.data();
    for (std::size_t p = 0; p < dst.size(); ++p) {
      if (src[p]) dst[p] = static_cast<std::uint8_t>(inst->class_index);
    }
  }
  return out;
}

MetricsRecord evaluate_pair(const InstanceSet& truth, const InstanceSet& predicted,
                            EvalMode mode, int class_count) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "ground truth and prediction sizes differ");
  }
  if (mode == EvalMode::kBinary) {
    return compute_metrics(
        confusion_matrix(merge_to_binary(truth), merge_to_binary(predicted)));
  }
  return compute_metrics(confusion_matrix(paint_instances(truth),
                                          paint_instances(predicted), class_count));
}

MetricsRecord evaluate_pair(const LabelMask& truth, const LabelMask& predicted,
                            EvalMode mode, int class_count) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "ground truth and prediction sizes differ");
  }
  if (mode == EvalMode::kBinary) {
    return compute_metrics(confusion_matrix(binarize(truth), binarize(predicted)));
  }
  return compute_metrics(confusion_matrix(truth, predicted, class_count));
}

DatasetSummary aggregate(std::vector<std::pair<std::string, MetricsRecord>> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to aggregate");
  DatasetSummary s;
  for (const auto& [id, r] : records) {
    s.pixel_accuracy += r.pixel_accuracy;
    s.mean_accuracy += r.mean_accuracy;
    s.mean_iou += r.mean_iou;
    s.fw_iou += r.fw_iou;
  }
  const double n = static_cast<double>(records.size());
  // Rounding in the sum must not push a mean outside the observed range.
  auto finish = [&](double sum, double MetricsRecord::*field) {
    auto [lo, hi] = std::minmax_element(
        records.begin(), records.end(),
        [field](const auto& a, const auto& b) { return a.second.*field < b.second.*field; });
    return std::clamp(sum / n, lo->second.*field, hi->second.*field);
  };
  s.pixel_accuracy = finish(s.pixel_accuracy, &MetricsRecord::pixel_accuracy);
  s.mean_accuracy = finish(s.mean_accuracy, &MetricsRecord::mean_accuracy);
  s.mean_iou = finish(s.mean_iou, &MetricsRecord::mean_iou);
  s.fw_iou = finish(s.fw_iou, &MetricsRecord::fw_iou);
  s.per_image = std::move(records);
  return s;
}

}  // namespace spineseg
