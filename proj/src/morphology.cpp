#include "spineseg/morphology.hpp"

#include <array>
#include <string>

#include "spineseg/error.hpp"

namespace spineseg {
namespace {

void check_kernel(int k) {
  if (k < 1 || k % 2 == 0) {
    throw Error(ErrorCode::kInvalidKernel,
                "structuring element size must be odd and positive, got " +
                    std::to_string(k));
  }
}

// One separable pass. With `all`, a pixel survives iff every window pixel
// is set (erosion); otherwise iff any is (dilation).
BinaryMask window_pass(const BinaryMask& in, int k, bool horizontal, bool all) {
  const int r = k / 2;
  const int w = in.width(), h = in.height();
  BinaryMask out(w, h);
  const int outer = horizontal ? h : w;
  const int inner = horizontal ? w : h;
  std::vector<int> prefix(static_cast<std::size_t>(inner) + 1);
  for (int o = 0; o < outer; ++o) {
    for (int i = 0; i < inner; ++i) {
      const int v = horizontal ? in.at(i, o) : in.at(o, i);
      prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + v;
    }
    for (int i = 0; i < inner; ++i) {
      const int lo = i - r, hi = i + r;
      const int clo = std::max(lo, 0), chi = std::min(hi, inner - 1);
      const int sum = prefix[static_cast<std::size_t>(chi) + 1] -
                      prefix[static_cast<std::size_t>(clo)];
      const bool set = all ? (sum == k) : (sum > 0);
      if (!set) continue;
      if (horizontal) out.set(i, o, 1); else out.set(o, i, 1);
    }
  }
  return out;
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int k) {
  check_kernel(k);
  if (k == 1) return mask;
  return window_pass(window_pass(mask, k, true, true), k, false, true);
}

BinaryMask dilate(const BinaryMask& mask, int k) {
  check_kernel(k);
  if (k == 1) return mask;
  return window_pass(window_pass(mask, k, true, false), k, false, false);
}

BinaryMask open(const BinaryMask& mask, int k) { return dilate(erode(mask, k), k); }

BinaryMask subtract(const BinaryMask& a, const BinaryMask& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "mask sizes differ");
  }
  BinaryMask out(a.width(), a.height());
  auto da = a.data();
  auto db = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = da[i] & (db[i] ^ 1);
  return out;
}

ComponentLabels label_components(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  ComponentLabels out{Raster<int>(w, h, 0), {}};
  std::vector<Pixel> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) == 0 || out.labels.at(x, y) != 0) continue;
      const int label = out.count() + 1;
      std::size_t area = 0;
      out.labels.set(x, y, label);
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        ++area;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if ((dx == 0 && dy == 0) || !mask.contains(nx, ny)) continue;
            if (mask.at(nx, ny) == 0 || out.labels.at(nx, ny) != 0) continue;
            out.labels.set(nx, ny, label);
            stack.push_back({nx, ny});
          }
        }
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

BinaryMask component_mask(const ComponentLabels& components, int label) {
  BinaryMask out(components.labels.width(), components.labels.height());
  auto src = components.labels.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] == label ? 1 : 0;
  return out;
}

BinaryMask largest_component(const BinaryMask& mask) {
  auto components = label_components(mask);
  if (components.count() <= 1) return mask;
  int best = 1;
  for (int c = 2; c <= components.count(); ++c) {
    if (components.areas[static_cast<std::size_t>(c) - 1] >
        components.areas[static_cast<std::size_t>(best) - 1]) {
      best = c;
    }
  }
  return component_mask(components, best);
}

}  // namespace spineseg
