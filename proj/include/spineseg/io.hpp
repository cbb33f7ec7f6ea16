#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spineseg/instancing.hpp"
#include "spineseg/mask.hpp"
#include "spineseg/metrics.hpp"
#include "spineseg/morphometry.hpp"
#include "spineseg/taxonomy.hpp"

namespace spineseg::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const fs::path& path, const std::string& bytes);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triplets

  RgbImage() = default;
  RgbImage(int w, int h)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, 0) {}
  std::uint8_t* at(int x, int y) {
    return &pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(x)) * 3];
  }
  const std::uint8_t* at(int x, int y) const {
    return &pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(x)) * 3];
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

std::string encode_png(const Raster<std::uint8_t>& gray);
std::string encode_png(const RgbImage& rgb);
// 8-bit PNGs of any color type are reduced to one channel (luma for color).
Raster<std::uint8_t> decode_png(const std::string& bytes);
Raster<std::uint8_t> read_png(const fs::path& path);
// Width and height from the PNG header only.
std::optional<Size> png_size(const fs::path& path);

void write_label_png(const fs::path& path, const LabelMask& mask);
// Foreground written as 255.
void write_binary_png(const fs::path& path, const BinaryMask& mask);
LabelMask read_label_png(const fs::path& path);

// Instance sidecar: a JSON list of {id, class_name, score, rle} records,
// plus "anatomical_label" when labels are supplied.
using LabelById = std::map<int, AnatomicalLabel>;
std::string write_sidecar(const InstanceSet& set, const LabelTaxonomy& taxonomy,
                          const LabelById* labels = nullptr);
// `fallback` gives the dimensions of an empty list. Throws MalformedDocument,
// UnknownClass, CorruptRle.
InstanceSet read_sidecar(const std::string& text, const LabelTaxonomy& taxonomy,
                         std::optional<Size> fallback = std::nullopt,
                         LabelById* labels = nullptr);

std::string chain_sidecar(const VertebraChain& chain, Size size,
                          const LabelTaxonomy& taxonomy);

std::string morphometry_json(const MorphometryRecord& record, double mm_per_px = 0.0);
std::string morphometry_csv_header();
// One row per gap plus a lordosis row.
std::string morphometry_csv_rows(const MorphometryRecord& record);

// image_id, four metrics, then one iou_<class> column per class.
std::string metrics_csv(const std::vector<std::pair<std::string, MetricsRecord>>& records,
                        const std::vector<std::string>& class_names);
// Parses metrics_csv output back into records.
std::vector<std::pair<std::string, MetricsRecord>> parse_metrics_csv(const std::string& text);

}  // namespace spineseg::io
