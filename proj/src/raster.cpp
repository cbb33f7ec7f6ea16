#include "spineseg/raster.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spineseg {
namespace {

constexpr double kEps = 1e-9;

void mark(BinaryMask& mask, int x, int y) {
  if (mask.contains(x, y)) mask.set(x, y, 1);
}

// Clamps before the integer conversion so far-off-canvas vertices stay defined.
int clamped(double v, int lo, int hi) {
  return static_cast<int>(std::clamp(v, static_cast<double>(lo), static_cast<double>(hi)));
}

}  // namespace

void fill_polygon_into(std::span<const Point2> polygon, BinaryMask& mask) {
  const std::size_t n = polygon.size();
  if (n == 0 || mask.width() == 0 || mask.height() == 0) return;

  double min_y = polygon[0].y, max_y = polygon[0].y;
  for (const auto& p : polygon) {
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int row_begin = clamped(std::floor(min_y - 0.5), 0, mask.height());
  const int row_end = clamped(std::ceil(max_y - 0.5), -1, mask.height() - 1);

  std::vector<double> crossings;
  for (int y = row_begin; y <= row_end; ++y) {
    const double yc = y + 0.5;
    crossings.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2& p = polygon[i];
      const Point2& q = polygon[(i + 1) % n];

      // Half-open crossing rule for the interior.
      if ((p.y <= yc && yc < q.y) || (q.y <= yc && yc < p.y)) {
        crossings.push_back(p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y));
      }

      // Pixel centers lying exactly on the edge.
      if (std::abs(p.y - q.y) < kEps) {
        if (std::abs(p.y - yc) < kEps) {
          const int x0 = clamped(std::ceil(std::min(p.x, q.x) - 0.5 - kEps), 0,
                                 mask.width());
          const int x1 = clamped(std::floor(std::max(p.x, q.x) - 0.5 + kEps), -1,
                                 mask.width() - 1);
          for (int x = x0; x <= x1; ++x) {
            mask.set(x, y, 1);
          }
        }
      } else if (yc >= std::min(p.y, q.y) - kEps && yc <= std::max(p.y, q.y) + kEps) {
        const double x = p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y);
        const double px = x - 0.5;
        const double r = std::round(px);
        if (std::abs(px - r) < kEps && r >= 0 && r < mask.width()) {
          mark(mask, static_cast<int>(r), y);
        }
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) {
      const int x0 = clamped(std::ceil(crossings[i] - 0.5 - kEps), 0, mask.width());
      const int x1 = clamped(std::floor(crossings[i + 1] - 0.5 + kEps), -1,
                             mask.width() - 1);
      for (int x = x0; x <= x1; ++x) mask.set(x, y, 1);
    }
  }
}

BinaryMask fill_polygon(std::span<const Point2> polygon, Size canvas) {
  BinaryMask mask(canvas.width, canvas.height);
  fill_polygon_into(polygon, mask);
  return mask;
}

}  // namespace spineseg
