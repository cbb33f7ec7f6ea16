#pragma once

// Brute-force reference implementations used only by tests. They share no
// code with the library paths they check.

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "spineseg/mask.hpp"
#include "spineseg/rng.hpp"

namespace oracle {

using spineseg::BinaryMask;
using spineseg::LabelMask;
using spineseg::Point2;

inline bool on_segment(const Point2& p, const Point2& a, const Point2& b, double eps = 1e-9) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (std::abs(cross) > eps * std::max(len, 1.0)) return false;
  return p.x >= std::min(a.x, b.x) - eps && p.x <= std::max(a.x, b.x) + eps &&
         p.y >= std::min(a.y, b.y) - eps && p.y <= std::max(a.y, b.y) + eps;
}

// Even-odd ray casting plus explicit boundary test.
inline bool inside_or_on(const std::vector<Point2>& poly, const Point2& p) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (on_segment(p, poly[i], poly[(i + 1) % n])) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

inline BinaryMask fill(const std::vector<Point2>& poly, int w, int h) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (inside_or_on(poly, {x + 0.5, y + 0.5})) m.set(x, y, 1);
    }
  }
  return m;
}

struct Metrics {
  double pixel_accuracy, mean_accuracy, mean_iou, fw_iou;
};

// Per-class counts taken straight from the pixels, without a confusion matrix.
inline Metrics metrics(const LabelMask& gt, const LabelMask& pred, int n_cl) {
  double correct = 0, total = 0, acc = 0, iou = 0, fw = 0;
  int present = 0;
  for (int c = 0; c < n_cl; ++c) {
    double tp = 0, t = 0, p = 0;
    for (int y = 0; y < gt.height(); ++y) {
      for (int x = 0; x < gt.width(); ++x) {
        const bool g = gt.at(x, y) == c, q = pred.at(x, y) == c;
        tp += g && q;
        t += g;
        p += q;
      }
    }
    correct += tp;
    total += t;
    if (t == 0) continue;
    ++present;
    acc += tp / t;
    const double u = t + p - tp;
    iou += tp / u;
    fw += t * (tp / u);
  }
  return {correct / total, acc / present, iou / present, fw / total};
}

// Square-window morphology evaluated pixel by pixel.
inline BinaryMask erode(const BinaryMask& m, int k) {
  const int r = k / 2;
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy) {
        for (int dx = -r; dx <= r && all; ++dx) {
          all = m.contains(x + dx, y + dy) && m.at(x + dx, y + dy);
        }
      }
      out.set(x, y, all);
    }
  }
  return out;
}

inline BinaryMask dilate(const BinaryMask& m, int k) {
  const int r = k / 2;
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      for (int dy = -r; dy <= r && !any; ++dy) {
        for (int dx = -r; dx <= r && !any; ++dx) {
          any = m.contains(x + dx, y + dy) && m.at(x + dx, y + dy);
        }
      }
      out.set(x, y, any);
    }
  }
  return out;
}

// Breadth-first 8-connected flood fill; returns component sizes in raster
// order of first pixel.
inline std::vector<std::size_t> component_sizes(const BinaryMask& m) {
  std::vector<std::vector<bool>> seen(static_cast<std::size_t>(m.height()),
                                      std::vector<bool>(static_cast<std::size_t>(m.width())));
  std::vector<std::size_t> sizes;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y) || seen[y][x]) continue;
      std::deque<std::pair<int, int>> q{{x, y}};
      seen[y][x] = true;
      std::size_t n = 0;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop_front();
        ++n;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!m.contains(nx, ny) || !m.at(nx, ny) || seen[ny][nx]) continue;
            seen[ny][nx] = true;
            q.emplace_back(nx, ny);
          }
        }
      }
      sizes.push_back(n);
    }
  }
  return sizes;
}

inline double iou(const BinaryMask& a, const BinaryMask& b) {
  double i = 0, u = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      i += a.at(x, y) && b.at(x, y);
      u += a.at(x, y) || b.at(x, y);
    }
  }
  return u == 0 ? 1.0 : i / u;
}

inline BinaryMask random_mask(spineseg::Rng& rng, int w, int h, double density) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, rng.bernoulli(density));
  }
  return m;
}

inline LabelMask random_labels(spineseg::Rng& rng, int w, int h, int n_cl) {
  LabelMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, static_cast<std::uint8_t>(rng.uniform_int(0, n_cl - 1)));
  }
  return m;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) m.set(x, y, 1);
  }
  return m;
}

}  // namespace oracle
