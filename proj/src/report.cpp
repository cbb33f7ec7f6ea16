#include "spineseg/report.hpp"

#include <array>
#include <map>

#include <fmt/format.h>

#include "spineseg/error.hpp"
#include "spineseg/morphometry.hpp"

namespace spineseg {
namespace {

struct Row {
  const char* title;
  double DatasetSummary::*field;
};

constexpr std::array<Row, 4> kRows = {{
    {"Pixel Accuracy Average", &DatasetSummary::pixel_accuracy},
    {"Mean IoU Average", &DatasetSummary::mean_iou},
    {"Mean Accuracy Average", &DatasetSummary::mean_accuracy},
    {"Frequency Weighted IoU Average", &DatasetSummary::fw_iou},
}};

std::string percent(double fraction) { return fmt::format("{:.2f}", fraction * 100.0); }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

using Color = std::array<std::uint8_t, 3>;

// S1, L5, L4, L3, L2, L1, Th12 ... then class colors.
constexpr std::array<Color, 12> kPalette = {{
    {230, 25, 75},   {60, 180, 75},  {255, 225, 25}, {0, 130, 200},
    {245, 130, 48},  {145, 30, 180}, {70, 240, 240}, {240, 50, 230},
    {210, 245, 60},  {250, 190, 212}, {0, 128, 128}, {170, 110, 40},
}};

constexpr std::array<Color, 6> kClassPalette = {{
    {128, 128, 128}, {200, 120, 120}, {120, 200, 200}, {200, 200, 120},
    {120, 120, 200}, {180, 180, 180},
}};

// 3x5 glyphs, one row per 3-bit group, top row first.
const std::map<char, std::array<std::uint8_t, 5>>& glyphs() {
  static const std::map<char, std::array<std::uint8_t, 5>> table = {
      {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}},
      {'3', {7, 1, 7, 1, 7}}, {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}},
      {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}}, {'8', {7, 5, 7, 5, 7}},
      {'9', {7, 5, 7, 1, 7}}, {'S', {7, 4, 7, 1, 7}}, {'L', {4, 4, 4, 4, 7}},
      {'T', {7, 2, 2, 2, 2}}, {'h', {4, 4, 7, 5, 5}}, {'?', {7, 1, 2, 0, 2}},
      {'U', {5, 5, 5, 5, 7}}, {'n', {0, 0, 7, 5, 5}}, {'k', {4, 5, 6, 5, 5}},
      {'o', {0, 0, 7, 5, 7}}, {'w', {0, 5, 5, 7, 7}},
  };
  return table;
}

void draw_text(io::RgbImage& img, const std::string& text, Point2 center) {
  constexpr int kScale = 2;
  const int advance = 4 * kScale;
  const int total_w = static_cast<int>(text.size()) * advance - kScale;
  const int x0 = static_cast<int>(std::lround(center.x)) - total_w / 2;
  const int y0 = static_cast<int>(std::lround(center.y)) - 5 * kScale / 2;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto it = glyphs().find(text[i]);
    if (it == glyphs().end()) it = glyphs().find('?');
    for (int gy = 0; gy < 5; ++gy) {
      for (int gx = 0; gx < 3; ++gx) {
        if (!((it->second[static_cast<std::size_t>(gy)] >> (2 - gx)) & 1)) continue;
        for (int sy = 0; sy < kScale; ++sy) {
          for (int sx = 0; sx < kScale; ++sx) {
            const int x = x0 + static_cast<int>(i) * advance + gx * kScale + sx;
            const int y = y0 + gy * kScale + sy;
            if (x < 0 || y < 0 || x >= img.width || y >= img.height) continue;
            std::uint8_t* p = img.at(x, y);
            p[0] = p[1] = p[2] = 255;
          }
        }
      }
    }
  }
}

}  // namespace

RenderedReport render_report(const std::vector<std::pair<std::string, DatasetSummary>>& models) {
  if (models.empty()) throw Error(ErrorCode::kEmptyInput, "no models to report");
  std::size_t title_w = 0;
  for (const auto& row : kRows) title_w = std::max(title_w, std::string(row.title).size());
  std::vector<std::size_t> col_w;
  for (const auto& [name, summary] : models) col_w.push_back(std::max<std::size_t>(name.size(), 6));

  RenderedReport out;
  out.text += fmt::format("{:<{}}", "", title_w);
  out.csv += "metric";
  for (std::size_t m = 0; m < models.size(); ++m) {
    out.text += fmt::format("  {:>{}}", models[m].first, col_w[m]);
    out.csv += "," + csv_cell(models[m].first);
  }
  out.text += '\n';
  out.csv += '\n';
  for (const auto& row : kRows) {
    out.text += fmt::format("{:<{}}", row.title, title_w);
    out.csv += row.title;
    for (std::size_t m = 0; m < models.size(); ++m) {
      const std::string v = percent(models[m].second.*row.field);
      out.text += fmt::format("  {:>{}}", v, col_w[m]);
      out.csv += "," + v;
    }
    out.text += '\n';
    out.csv += '\n';
  }
  return out;
}

Color palette_color(AnatomicalLabel label) {
  const auto i = static_cast<std::size_t>(label);
  return i < kPalette.size() ? kPalette[i] : kPalette.back();
}

Color class_color(int class_index) {
  const auto i = static_cast<std::size_t>(std::max(class_index, 0));
  return kClassPalette[i % kClassPalette.size()];
}

io::RgbImage render_overlay(const std::optional<Raster<std::uint8_t>>& image,
                            const InstanceSet& set, const std::optional<VertebraChain>& chain) {
  if (image && image->size() != set.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "base image and instances differ in size");
  }
  io::RgbImage out(set.width(), set.height());
  if (image) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        std::uint8_t* p = out.at(x, y);
        p[0] = p[1] = p[2] = image->at(x, y);
      }
    }
  }

  std::map<int, AnatomicalLabel> labels;
  if (chain) {
    for (const auto& link : chain->links) labels[link.instance.id] = link.label;
  }
  auto color_of = [&](const Instance& inst) {
    auto it = labels.find(inst.id);
    return it != labels.end() ? palette_color(it->second) : class_color(inst.class_index);
  };

  // Fills first, in id order, so later layers read the blended base.
  std::vector<const Instance*> order;
  for (const auto& inst : set) order.push_back(&inst);
  std::sort(order.begin(), order.end(),
            [](const Instance* a, const Instance* b) { return a->id < b->id; });
  for (const Instance* inst : order) {
    const Color c = color_of(*inst);
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        if (!inst->mask.at(x, y)) continue;
        std::uint8_t* p = out.at(x, y);
        for (int k = 0; k < 3; ++k) {
          p[k] = static_cast<std::uint8_t>((p[k] + c[static_cast<std::size_t>(k)]) / 2);
        }
      }
    }
  }
  for (const Instance* inst : order) {
    const Color c = color_of(*inst);
    for (const Pixel& px : extract_contour(*inst)) {
      std::uint8_t* p = out.at(px.x, px.y);
      p[0] = c[0];
      p[1] = c[1];
      p[2] = c[2];
    }
  }
  for (const Instance* inst : order) {
    auto it = labels.find(inst->id);
    if (it == labels.end()) continue;
    draw_text(out, to_string(it->second), *inst->mask.centroid());
  }
  return out;
}

}  // namespace spineseg
