#pragma once

#include <vector>

#include "spineseg/mask.hpp"

namespace spineseg {

// Square k x k structuring element centered on the pixel; k must be odd.
// Pixels outside the canvas count as background.
BinaryMask erode(const BinaryMask& mask, int k);
BinaryMask dilate(const BinaryMask& mask, int k);
BinaryMask open(const BinaryMask& mask, int k);

// a AND NOT b
BinaryMask subtract(const BinaryMask& a, const BinaryMask& b);

// 8-connected components. labels[p] = 0 for background, otherwise 1..count
// in raster order of each component's first pixel.
struct ComponentLabels {
  Raster<int> labels;
  std::vector<std::size_t> areas;  // areas[c - 1] for component c
  int count() const { return static_cast<int>(areas.size()); }
};
ComponentLabels label_components(const BinaryMask& mask);

// Foreground of one component as its own mask.
BinaryMask component_mask(const ComponentLabels& components, int label);

// The largest 8-connected component (earliest in raster order on ties).
BinaryMask largest_component(const BinaryMask& mask);

}  // namespace spineseg
