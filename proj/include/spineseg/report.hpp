#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spineseg/instancing.hpp"
#include "spineseg/io.hpp"
#include "spineseg/metrics.hpp"

namespace spineseg {

struct RenderedReport {
  std::string text;
  std::string csv;
};

// Four rows (pixel accuracy, mean IoU, mean accuracy, frequency weighted
// IoU averages), one column per model, percentages with two decimals.
// Throws EmptyInput.
RenderedReport render_report(const std::vector<std::pair<std::string, DatasetSummary>>& models);

// Fill color for a chain position label; unlabeled instances use the
// class-based entries after the anatomical ones.
std::array<std::uint8_t, 3> palette_color(AnatomicalLabel label);
std::array<std::uint8_t, 3> class_color(int class_index);

// Half-transparent fills, full-color contours, white label text at the
// centroid. Throws DimensionMismatch when the base image size differs.
io::RgbImage render_overlay(const std::optional<Raster<std::uint8_t>>& image,
                            const InstanceSet& set,
                            const std::optional<VertebraChain>& chain = std::nullopt);

}  // namespace spineseg
