#include "spineseg/mask.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace spineseg {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(data().begin(), data().end(), [](auto v) { return v != 0; }));
}

std::optional<BinaryMask::Box> BinaryMask::bounding_box() const {
  Box box{width(), height(), -1, -1};
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      if (at(x, y) == 0) continue;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x);
      box.y1 = std::max(box.y1, y);
    }
  }
  if (box.x1 < 0) return std::nullopt;
  return box;
}

std::optional<Point2> BinaryMask::centroid() const {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      if (at(x, y) == 0) continue;
      sx += x + 0.5;
      sy += y + 0.5;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return Point2{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

void InstanceSet::add(Instance instance) {
  if (instance.mask.size() != size_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "instance " + std::to_string(instance.id) +
                    " does not match the set dimensions");
  }
  if (find(instance.id) != nullptr) {
    throw Error(ErrorCode::kInvalidArgument,
                "duplicate instance id " + std::to_string(instance.id));
  }
  if (instance.mask.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "instance " + std::to_string(instance.id) + " has an empty mask");
  }
  instances_.push_back(std::move(instance));
}

const Instance* InstanceSet::find(int id) const {
  auto it = std::find_if(instances_.begin(), instances_.end(),
                         [id](const Instance& i) { return i.id == id; });
  return it == instances_.end() ? nullptr : &*it;
}

int InstanceSet::next_id() const {
  int next = 1;
  for (const auto& inst : instances_) next = std::max(next, inst.id + 1);
  return next;
}

BinaryMask merge_to_binary(const InstanceSet& set) {
  BinaryMask out(set.width(), set.height());
  auto dst = out.data();
  for (const auto& inst : set) {
    auto src = inst.mask.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
  }
  return out;
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask sizes differ");
  }
  auto da = a.data();
  auto db = b.data();
  std::size_t n = 0;
  for (std::size_t i = 0; i < da.size(); ++i) n += (da[i] & db[i]);
  return n;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask sizes differ");
  }
  auto da = a.data();
  auto db = b.data();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    inter += (da[i] & db[i]);
    uni += (da[i] | db[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

RleMask rle_encode(const BinaryMask& mask) {
  RleMask rle{mask.width(), mask.height(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (auto v : mask.data()) {
    if (v != current) {
      rle.runs.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  rle.runs.push_back(run);
  return rle;
}

BinaryMask rle_decode(const RleMask& rle) {
  if (rle.width < 0 || rle.height < 0) {
    throw Error(ErrorCode::kCorruptRle, "negative dimensions");
  }
  const Size size{rle.width, rle.height};
  const std::uint64_t total = std::accumulate(
      rle.runs.begin(), rle.runs.end(), std::uint64_t{0});
  if (total != size.area()) {
    throw Error(ErrorCode::kCorruptRle,
                "runs sum to " + std::to_string(total) + ", expected " +
                    std::to_string(size.area()));
  }
  for (std::size_t i = 1; i + 1 < rle.runs.size(); ++i) {
    if (rle.runs[i] == 0) {
      throw Error(ErrorCode::kCorruptRle, "zero-length interior run");
    }
  }
  std::vector<std::uint8_t> data;
  data.reserve(size.area());
  std::uint8_t value = 0;
  for (auto run : rle.runs) {
    data.insert(data.end(), run, value);
    value ^= 1;
  }
  return BinaryMask(size, std::move(data));
}

BinaryMask binarize(const LabelMask& labels) {
  BinaryMask out(labels.width(), labels.height());
  auto src = labels.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] != 0 ? 1 : 0;
  return out;
}

BinaryMask class_mask(const LabelMask& labels, int class_index) {
  BinaryMask out(labels.width(), labels.height());
  auto src = labels.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = src[i] == class_index ? 1 : 0;
  }
  return out;
}

}  // namespace spineseg
