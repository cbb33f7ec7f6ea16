#include <doctest.h>

#include <set>
#include <sstream>

#include "../oracles.hpp"
#include "spineseg/report.hpp"
#include "spineseg/synthgen.hpp"
#include "support.hpp"

using namespace spineseg;
using support::code_of;

namespace {

DatasetSummary summary(double pa, double miou, double macc, double fw) {
  DatasetSummary s;
  s.pixel_accuracy = pa;
  s.mean_iou = miou;
  s.mean_accuracy = macc;
  s.fw_iou = fw;
  return s;
}

std::vector<std::vector<std::string>> csv_cells(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("render_report reproduces the published table") {
  const std::vector<std::pair<std::string, DatasetSummary>> models{
      {"U-Net", summary(0.9817, 0.8864, 0.9265, 0.9648)},
      {"Mask R-CNN", summary(0.9658, 0.8678, 0.9025, 0.9347)},
      {"PSPNet", summary(0.9788, 0.8650, 0.9091, 0.9593)},
      {"DeepLabV3", summary(0.9800, 0.8814, 0.9225, 0.9616)},
      {"YOLACT", summary(0.9784, 0.9164, 0.9443, 0.9584)},
  };
  const auto r = render_report(models);
  const auto cells = csv_cells(r.csv);
  REQUIRE(cells.size() == 5);
  CHECK(cells[0] == std::vector<std::string>{"metric", "U-Net", "Mask R-CNN", "PSPNet", "DeepLabV3", "YOLACT"});
  CHECK(cells[1] == std::vector<std::string>{"Pixel Accuracy Average", "98.17", "96.58", "97.88", "98.00", "97.84"});
  CHECK(cells[2] == std::vector<std::string>{"Mean IoU Average", "88.64", "86.78", "86.50", "88.14", "91.64"});
  CHECK(cells[3] == std::vector<std::string>{"Mean Accuracy Average", "92.65", "90.25", "90.91", "92.25", "94.43"});
  CHECK(cells[4] ==
        std::vector<std::string>{"Frequency Weighted IoU Average", "96.48", "93.47", "95.93", "96.16", "95.84"});
  CHECK(r.text.find("Frequency Weighted IoU Average") != std::string::npos);
  CHECK(r.text.find("91.64") != std::string::npos);
}

TEST_CASE("render_report minimal and repeated columns") {
  const auto one = csv_cells(render_report({{"m", summary(1, 0.5, 0.25, 0.125)}}).csv);
  CHECK(one[0].size() == 2);
  CHECK(one[1][1] == "100.00");
  CHECK(one[4][1] == "12.50");
  const auto two = csv_cells(render_report({{"a", summary(0.9, 0.8, 0.7, 0.6)}, {"b", summary(0.9, 0.8, 0.7, 0.6)}}).csv);
  for (std::size_t row = 1; row < two.size(); ++row) CHECK(two[row][1] == two[row][2]);
  CHECK(code_of([] { render_report({}); }) == ErrorCode::kEmptyInput);
}

TEST_CASE("render_overlay") {
  const auto g = generate_spine(SynthSpec{}, 12);
  Rng rng(7);
  Raster<std::uint8_t> base(g.instances.width(), g.instances.height());
  for (auto& v : base.data()) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));

  SUBCASE("empty set returns the image in color") {
    const auto out = render_overlay(base, InstanceSet(base.size()));
    for (int y = 0; y < base.height(); ++y) {
      for (int x = 0; x < base.width(); ++x) {
        const auto* p = out.at(x, y);
        CHECK((p[0] == base.at(x, y) && p[1] == base.at(x, y) && p[2] == base.at(x, y)));
      }
    }
  }
  SUBCASE("deterministic") {
    CHECK(render_overlay(base, g.instances, g.chain_truth) == render_overlay(base, g.instances, g.chain_truth));
  }
  SUBCASE("one fill color per labeled vertebra, in palette order") {
    const auto out = render_overlay(std::nullopt, g.instances, g.chain_truth);
    // Interior pixels: inside exactly one instance and away from its outline
    // and label text.
    std::set<std::array<std::uint8_t, 3>> fills;
    for (const auto& link : g.chain_truth.links) {
      const auto inner = oracle::erode(link.instance.mask, 3);
      const auto c = *link.instance.mask.centroid();
      std::set<std::array<std::uint8_t, 3>> mine;
      for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
          if (!inner.at(x, y) || (std::abs(x - c.x) < 14 && std::abs(y - c.y) < 6)) continue;
          const auto* p = out.at(x, y);
          mine.insert({p[0], p[1], p[2]});
        }
      }
      REQUIRE(mine.size() == 1);
      const auto want = palette_color(link.label);
      const std::array<std::uint8_t, 3> half{static_cast<std::uint8_t>(want[0] / 2),
                                             static_cast<std::uint8_t>(want[1] / 2),
                                             static_cast<std::uint8_t>(want[2] / 2)};
      CHECK(*mine.begin() == half);
      fills.insert(*mine.begin());
    }
    CHECK(fills.size() == 6);
  }
  SUBCASE("dimension mismatch") {
    CHECK(code_of([&] { render_overlay(Raster<std::uint8_t>(3, 3), g.instances); }) ==
          ErrorCode::kDimensionMismatch);
  }
}
