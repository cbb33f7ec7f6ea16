#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spineseg/error.hpp"

namespace spineseg {

struct Size {
  int width = 0;
  int height = 0;

  std::size_t area() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  friend bool operator==(const Size&, const Size&) = default;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Pixel {
  int x = 0;
  int y = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Row-major single-channel raster. Base of the two mask types below.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : size_{width, height}, data_(Size{width, height}.area(), fill) {}
  Raster(Size size, std::vector<T> data);

  int width() const { return size_.width; }
  int height() const { return size_.height; }
  Size size() const { return size_; }
  std::size_t pixel_count() const { return data_.size(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < size_.width && y < size_.height;
  }
  T at(int x, int y) const { return data_[index(x, y)]; }
  T& at(int x, int y) { return data_[index(x, y)]; }
  void set(int x, int y, T v) { data_[index(x, y)] = v; }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
           static_cast<std::size_t>(x);
  }

  Size size_;
  std::vector<T> data_;
};

template <typename T>
Raster<T>::Raster(Size size, std::vector<T> data)
    : size_(size), data_(std::move(data)) {
  if (size.width < 0 || size.height < 0 || data_.size() != size.area()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "raster data length does not match width x height");
  }
}

// Values are 0 or 1.
class BinaryMask : public Raster<std::uint8_t> {
 public:
  using Raster::Raster;

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  // Inclusive bounding box of the foreground; nullopt for an empty mask.
  struct Box {
    int x0, y0, x1, y1;
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
  };
  std::optional<Box> bounding_box() const;
  // Mean of foreground pixel centers; nullopt for an empty mask.
  std::optional<Point2> centroid() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

// Per-pixel class index; 0 is background.
class LabelMask : public Raster<std::uint8_t> {
 public:
  using Raster::Raster;
  friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

struct Instance {
  int id = 0;
  int class_index = 1;
  std::optional<double> score;
  BinaryMask mask;

  double effective_score() const { return score.value_or(1.0); }
};

// All instance masks share the set's dimensions and ids are unique.
class InstanceSet {
 public:
  InstanceSet() = default;
  InstanceSet(int width, int height) : size_{width, height} {}
  explicit InstanceSet(Size size) : size_(size) {}

  Size size() const { return size_; }
  int width() const { return size_.width; }
  int height() const { return size_.height; }

  const std::vector<Instance>& instances() const { return instances_; }
  std::size_t count() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }

  // Throws DimensionMismatch, InvalidArgument (duplicate id or empty mask).
  void add(Instance instance);
  const Instance* find(int id) const;
  int next_id() const;

  auto begin() const { return instances_.begin(); }
  auto end() const { return instances_.end(); }

 private:
  Size size_;
  std::vector<Instance> instances_;
};

// Background-first alternating run lengths, row-major.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> runs;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

BinaryMask merge_to_binary(const InstanceSet& set);

// |a & b| / |a | b|; 1.0 when both are empty. Throws DimensionMismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

RleMask rle_encode(const BinaryMask& mask);
// Throws CorruptRle when runs do not cover width x height.
BinaryMask rle_decode(const RleMask& rle);

// Any nonzero label becomes foreground.
BinaryMask binarize(const LabelMask& labels);
BinaryMask class_mask(const LabelMask& labels, int class_index);

}  // namespace spineseg
