#pragma once

#include <span>

#include "spineseg/mask.hpp"

namespace spineseg {

// Fills every pixel whose center (x + 0.5, y + 0.5) lies inside the polygon
// (even-odd rule) or on its boundary. The polygon is implicitly closed and
// clipped to the canvas; it may be empty after clipping.
BinaryMask fill_polygon(std::span<const Point2> polygon, Size canvas);

// Same rule, OR-ed into an existing mask.
void fill_polygon_into(std::span<const Point2> polygon, BinaryMask& mask);

}  // namespace spineseg
