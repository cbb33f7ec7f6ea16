#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spineseg/mask.hpp"
#include "spineseg/taxonomy.hpp"

namespace spineseg {

struct PolygonAnnotation {
  std::vector<Point2> points;
  std::string class_name;
};

struct AnnotationSet {
  std::string image_id;
  std::string filename;
  int width = 0;
  int height = 0;
  std::vector<PolygonAnnotation> regions;
};

// VIA exports do not record image dimensions. When an image record carries
// no "width"/"height" (top level or in file_attributes), the resolver is
// asked with the record's filename.
using DimensionResolver = std::function<std::optional<Size>(const std::string&)>;

// Accepts both the flat via_region_data form and the _via_img_metadata
// project form. Regions may be a list or a VIA 1.x style keyed object.
// Throws MalformedDocument, UnsupportedShape, UnknownClass.
std::vector<AnnotationSet> parse_via(std::string_view document,
                                     const LabelTaxonomy& taxonomy,
                                     const DimensionResolver& resolve_size = {});

struct RasterizedAnnotation {
  LabelMask semantic;
  InstanceSet instances;
};

// Each region becomes one instance (ids 1..n in document order); the
// semantic mask is painted in document order so later regions win.
// Throws DegeneratePolygon when a region covers no pixel center.
RasterizedAnnotation rasterize(const AnnotationSet& annotation,
                               const LabelTaxonomy& taxonomy);

}  // namespace spineseg
