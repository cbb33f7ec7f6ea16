#include "spineseg/annotation.hpp"

#include <filesystem>

#include <json.hpp>

#include "spineseg/error.hpp"
#include "spineseg/raster.hpp"

namespace spineseg {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedDocument, what);
}

std::optional<int> positive_int(const Json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) return std::nullopt;
  if (it->is_number_integer() && it->get<long long>() > 0) {
    return static_cast<int>(it->get<long long>());
  }
  if (it->is_string()) {
    try {
      int v = std::stoi(it->get<std::string>());
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  malformed(std::string("invalid '") + key + "'");
}

std::optional<Size> record_size(const Json& record) {
  for (const Json* source :
       {&record, record.contains("file_attributes") ? &record["file_attributes"]
                                                     : nullptr}) {
    if (source == nullptr || !source->is_object()) continue;
    auto w = positive_int(*source, "width");
    auto h = positive_int(*source, "height");
    if (w && h) return Size{*w, *h};
  }
  return std::nullopt;
}

std::string resolve_class(const Json& attributes, const LabelTaxonomy& taxonomy,
                          const std::string& where) {
  std::optional<std::string> found;
  auto consider = [&](const std::string& candidate) {
    if (!taxonomy.index_of(candidate)) return;
    if (found && *found != candidate) {
      throw Error(ErrorCode::kUnknownClass,
                  where + ": ambiguous class attributes ('" + *found + "' and '" +
                      candidate + "')");
    }
    found = candidate;
  };
  if (attributes.is_object()) {
    for (const auto& [key, value] : attributes.items()) {
      if (value.is_string()) {
        consider(value.get<std::string>());
      } else if (value.is_object()) {
        // VIA checkbox attributes: {"option": true, ...}
        for (const auto& [option, checked] : value.items()) {
          if (checked.is_boolean() && checked.get<bool>()) consider(option);
        }
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::kUnknownClass,
                where + ": no region attribute names a known class");
  }
  return *found;
}

std::vector<Point2> region_points(const Json& shape, const std::string& where) {
  const auto& xs = shape.value("all_points_x", Json::array());
  const auto& ys = shape.value("all_points_y", Json::array());
  if (!xs.is_array() || !ys.is_array() || xs.size() != ys.size()) {
    malformed(where + ": all_points_x / all_points_y mismatch");
  }
  std::vector<Point2> points;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].is_number() || !ys[i].is_number()) {
      malformed(where + ": non-numeric point");
    }
    Point2 p{xs[i].get<double>(), ys[i].get<double>()};
    if (!points.empty() && points.back() == p) continue;
    points.push_back(p);
  }
  while (points.size() > 1 && points.front() == points.back()) points.pop_back();
  if (points.size() < 3) malformed(where + ": polygon needs at least 3 points");
  return points;
}

AnnotationSet parse_record(const Json& record, const LabelTaxonomy& taxonomy,
                           const DimensionResolver& resolve_size) {
  if (!record.is_object() || !record.contains("filename") ||
      !record["filename"].is_string()) {
    malformed("image record without a filename");
  }
  AnnotationSet set;
  set.filename = record["filename"].get<std::string>();
  set.image_id = std::filesystem::path(set.filename).stem().string();

  auto size = record_size(record);
  if (!size && resolve_size) size = resolve_size(set.filename);
  if (!size || size->width <= 0 || size->height <= 0) {
    malformed("no image dimensions for '" + set.filename + "'");
  }
  set.width = size->width;
  set.height = size->height;

  std::vector<const Json*> regions;
  if (auto it = record.find("regions"); it != record.end()) {
    if (it->is_array() || it->is_object()) {
      for (const auto& r : *it) regions.push_back(&r);
    } else if (!it->is_null()) {
      malformed(set.filename + ": 'regions' is neither a list nor a map");
    }
  }

  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Json& region = *regions[i];
    const std::string where = set.filename + " region " + std::to_string(i);
    if (!region.is_object() || !region.contains("shape_attributes")) {
      malformed(where + ": missing shape_attributes");
    }
    const Json& shape = region["shape_attributes"];
    const std::string name = shape.value("name", std::string{});
    if (name != "polygon" && name != "polyline") {
      throw Error(ErrorCode::kUnsupportedShape,
                  where + ": shape '" + name + "' is not a polygon");
    }
    PolygonAnnotation polygon;
    polygon.points = region_points(shape, where);
    polygon.class_name = resolve_class(
        region.value("region_attributes", Json::object()), taxonomy, where);
    set.regions.push_back(std::move(polygon));
  }
  return set;
}

}  // namespace

std::vector<AnnotationSet> parse_via(std::string_view document,
                                     const LabelTaxonomy& taxonomy,
                                     const DimensionResolver& resolve_size) {
  Json root;
  try {
    root = Json::parse(document);
  } catch (const Json::exception& e) {
    malformed(e.what());
  }
  if (!root.is_object()) malformed("top level is not an object");
  const Json& images =
      root.contains("_via_img_metadata") ? root["_via_img_metadata"] : root;
  if (!images.is_object()) malformed("_via_img_metadata is not an object");

  std::vector<AnnotationSet> out;
  for (const auto& [key, record] : images.items()) {
    out.push_back(parse_record(record, taxonomy, resolve_size));
  }
  return out;
}

RasterizedAnnotation rasterize(const AnnotationSet& annotation,
                               const LabelTaxonomy& taxonomy) {
  if (annotation.width <= 0 || annotation.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "annotation has no dimensions");
  }
  const Size canvas{annotation.width, annotation.height};
  RasterizedAnnotation out{LabelMask(canvas.width, canvas.height),
                           InstanceSet(canvas)};
  for (std::size_t i = 0; i < annotation.regions.size(); ++i) {
    const auto& region = annotation.regions[i];
    auto class_index = taxonomy.index_of(region.class_name);
    if (!class_index) {
      throw Error(ErrorCode::kUnknownClass, region.class_name);
    }
    BinaryMask mask = fill_polygon(region.points, canvas);
    if (mask.empty()) {
      throw Error(ErrorCode::kDegeneratePolygon,
                  annotation.image_id + " region " + std::to_string(i) +
                      " covers no pixel inside the canvas");
    }
    auto src = mask.data();
    auto dst = out.semantic.data();
    for (std::size_t p = 0; p < src.size(); ++p) {
      if (src[p]) dst[p] = static_cast<std::uint8_t>(*class_index);
    }
    out.instances.add(Instance{static_cast<int>(i) + 1, *class_index,
                               std::nullopt, std::move(mask)});
  }
  return out;
}

}  // namespace spineseg
