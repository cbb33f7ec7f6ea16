#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spineseg/mask.hpp"

namespace spineseg {

// counts(i, j) = pixels of true class i predicted as class j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int class_count);

  int class_count() const { return n_; }
  std::uint64_t operator()(int truth, int predicted) const {
    return counts_[index(truth, predicted)];
  }
  std::uint64_t& operator()(int truth, int predicted) {
    return counts_[index(truth, predicted)];
  }
  // t_i: ground-truth pixels of class i.
  std::uint64_t truth_total(int i) const;
  // Pixels predicted as class j.
  std::uint64_t predicted_total(int j) const;
  std::uint64_t total() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j);
  }

  int n_;
  std::vector<std::uint64_t> counts_;
};

struct MetricsRecord {
  double pixel_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double mean_iou = 0.0;
  double fw_iou = 0.0;
  // nullopt where the class is absent from the ground truth.
  std::vector<std::optional<double>> per_class_iou;
};

struct DatasetSummary {
  std::vector<std::pair<std::string, MetricsRecord>> per_image;
  double pixel_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double mean_iou = 0.0;
  double fw_iou = 0.0;
};

enum class EvalMode { kBinary, kPerClass };

// Throws DimensionMismatch, ClassIndexOutOfRange.
ConfusionMatrix confusion_matrix(const LabelMask& truth, const LabelMask& predicted,
                                 int class_count);
ConfusionMatrix confusion_matrix(const BinaryMask& truth, const BinaryMask& predicted);

// Means run over classes present in the ground truth. Throws EmptyMatrix.
MetricsRecord compute_metrics(const ConfusionMatrix& cm);

// Painting order for per-class evaluation: the instance with the highest
// score (ties: lowest id) owns contested pixels.
LabelMask paint_instances(const InstanceSet& set);

MetricsRecord evaluate_pair(const InstanceSet& truth, const InstanceSet& predicted,
                            EvalMode mode, int class_count);
MetricsRecord evaluate_pair(const LabelMask& truth, const LabelMask& predicted,
                            EvalMode mode, int class_count);

// Unweighted per-image means. Throws EmptyInput.
DatasetSummary aggregate(std::vector<std::pair<std::string, MetricsRecord>> records);

}  // namespace spineseg
