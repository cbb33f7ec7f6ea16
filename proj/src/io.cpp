#include "spineseg/io.hpp"

#include <png.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "spineseg/error.hpp"

namespace spineseg::io {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void io_error(const std::string& what) { throw Error(ErrorCode::kIo, what); }

struct PngWriteState {
  std::string out;
};

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
  state->out.append(reinterpret_cast<const char*>(data), length);
}

void png_error_handler(png_structp png, png_const_charp message) {
  auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
  if (msg != nullptr) *msg = message;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

std::string encode(int width, int height, int color_type, int channels,
                   const std::uint8_t* pixels) {
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_handler, png_warning_handler);
  if (png == nullptr) io_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  PngWriteState state;
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    io_error("PNG encode failed: " + message);
  }
  png_set_write_fn(png, &state, png_append, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * stride);
  }
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return std::move(state.out);
}

struct PngReadState {
  const std::string* bytes;
  std::size_t offset = 0;
};

void png_consume(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(data, state->bytes->data() + state->offset, length);
  state->offset += length;
}

std::string format_double(double v) { return fmt::format("{:.10f}", v); }

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) io_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) io_error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    io_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string encode_png(const Raster<std::uint8_t>& gray) {
  return encode(gray.width(), gray.height(), PNG_COLOR_TYPE_GRAY, 1, gray.data().data());
}

std::string encode_png(const RgbImage& rgb) {
  return encode(rgb.width, rgb.height, PNG_COLOR_TYPE_RGB, 3, rgb.pixels.data());
}

Raster<std::uint8_t> decode_png(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8)) {
    io_error("not a PNG stream");
  }
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_handler, png_warning_handler);
  if (png == nullptr) io_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngReadState state{&bytes, 0};
  Raster<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_error("PNG decode failed: " + message);
  }
  png_set_read_fn(png, &state, png_consume);
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
      color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(width)) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_error("unsupported PNG layout");
  }
  std::vector<std::uint8_t> data(stride * static_cast<std::size_t>(height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = data.data() + static_cast<std::size_t>(y) * stride;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return Raster<std::uint8_t>(Size{width, height}, std::move(data));
}

Raster<std::uint8_t> read_png(const fs::path& path) { return decode_png(read_text(path)); }

std::optional<Size> png_size(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  unsigned char header[24];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != sizeof header || png_sig_cmp(header, 0, 8)) return std::nullopt;
  auto be32 = [&](int off) {
    return static_cast<int>((static_cast<std::uint32_t>(header[off]) << 24) |
                            (static_cast<std::uint32_t>(header[off + 1]) << 16) |
                            (static_cast<std::uint32_t>(header[off + 2]) << 8) |
                            static_cast<std::uint32_t>(header[off + 3]));
  };
  return Size{be32(16), be32(20)};
}

void write_label_png(const fs::path& path, const LabelMask& mask) {
  write_atomic(path, encode_png(mask));
}

void write_binary_png(const fs::path& path, const BinaryMask& mask) {
  Raster<std::uint8_t> scaled(mask.width(), mask.height());
  auto src = mask.data();
  auto dst = scaled.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] ? 255 : 0;
  write_atomic(path, encode_png(scaled));
}

LabelMask read_label_png(const fs::path& path) {
  auto raster = read_png(path);
  const Size size = raster.size();
  auto data = raster.data();
  return LabelMask(size, std::vector<std::uint8_t>(data.begin(), data.end()));
}

std::string write_sidecar(const InstanceSet& set, const LabelTaxonomy& taxonomy,
                          const LabelById* labels) {
  Json doc = Json::array();
  for (const auto& inst : set) {
    const RleMask rle = rle_encode(inst.mask);
    Json record;
    record["id"] = inst.id;
    record["class_name"] = taxonomy.name_of(inst.class_index);
    record["score"] = inst.score ? Json(*inst.score) : Json(nullptr);
    record["rle"] = Json{{"width", rle.width}, {"height", rle.height}, {"runs", rle.runs}};
    if (labels != nullptr) {
      auto it = labels->find(inst.id);
      record["anatomical_label"] =
          it == labels->end() ? Json(nullptr) : Json(to_string(it->second));
    }
    doc.push_back(std::move(record));
  }
  return doc.dump(1) + "\n";
}

InstanceSet read_sidecar(const std::string& text, const LabelTaxonomy& taxonomy,
                         std::optional<Size> fallback, LabelById* labels) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::kMalformedDocument, "sidecar is not a list");
  std::optional<InstanceSet> set;
  if (doc.empty()) {
    if (!fallback) throw Error(ErrorCode::kMalformedDocument, "empty sidecar carries no dimensions");
    return InstanceSet(*fallback);
  }
  try {
    for (const auto& record : doc) {
      const auto& rle_doc = record.at("rle");
      RleMask rle{rle_doc.at("width").get<int>(), rle_doc.at("height").get<int>(),
                  rle_doc.at("runs").get<std::vector<std::uint32_t>>()};
      const auto class_name = record.at("class_name").get<std::string>();
      const auto class_index = taxonomy.index_of(class_name);
      if (!class_index) throw Error(ErrorCode::kUnknownClass, class_name);
      std::optional<double> score;
      if (record.contains("score") && !record["score"].is_null()) {
        score = record["score"].get<double>();
        if (*score < 0.0 || *score > 1.0) {
          throw Error(ErrorCode::kMalformedDocument, "score outside [0, 1]");
        }
      }
      Instance inst{record.at("id").get<int>(), *class_index, score, rle_decode(rle)};
      if (!set) set.emplace(inst.mask.size());
      if (labels != nullptr && record.contains("anatomical_label") &&
          !record["anatomical_label"].is_null()) {
        (*labels)[inst.id] =
            parse_anatomical_label(record["anatomical_label"].get<std::string>());
      }
      set->add(std::move(inst));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, e.what());
  }
  return std::move(*set);
}

std::string chain_sidecar(const VertebraChain& chain, Size size,
                          const LabelTaxonomy& taxonomy) {
  InstanceSet set(size);
  LabelById labels;
  for (const auto& link : chain.links) {
    set.add(link.instance);
    labels[link.instance.id] = link.label;
  }
  return write_sidecar(set, taxonomy, &labels);
}

namespace {

Json point_json(const Point2& p) { return Json::array({p.x, p.y}); }

Json endplate_json(const Endplate& e) {
  return Json{{"anterior", point_json(e.anterior)},
              {"posterior", point_json(e.posterior)},
              {"angle_deg", e.angle_deg}};
}

}  // namespace

std::string morphometry_json(const MorphometryRecord& record, double mm_per_px) {
  Json doc;
  doc["image_id"] = record.image_id;
  Json vertebrae = Json::array();
  for (const auto& v : record.vertebrae) {
    Json osteophytes = Json::array();
    for (const auto& o : v.osteophytes) {
      osteophytes.push_back(Json{{"centroid", point_json(o.centroid)}, {"area_px", o.area}});
    }
    vertebrae.push_back(Json{{"label", to_string(v.label)},
                             {"instance_id", v.instance_id},
                             {"superior", endplate_json(v.superior)},
                             {"inferior", endplate_json(v.inferior)},
                             {"kernel", v.kernel},
                             {"osteophytes", std::move(osteophytes)}});
  }
  doc["vertebrae"] = std::move(vertebrae);
  doc["lordosis_deg"] = record.lordosis_deg ? Json(*record.lordosis_deg) : Json(nullptr);
  Json gaps = Json::array();
  for (const auto& g : record.gaps) {
    Json entry{{"lower", to_string(g.lower)},
               {"upper", to_string(g.upper)},
               {"anterior_px", g.anterior},
               {"posterior_px", g.posterior}};
    if (mm_per_px > 0.0) {
      entry["anterior_mm"] = g.anterior * mm_per_px;
      entry["posterior_mm"] = g.posterior * mm_per_px;
    }
    gaps.push_back(std::move(entry));
  }
  doc["gaps"] = std::move(gaps);
  return doc.dump(1) + "\n";
}

std::string morphometry_csv_header() {
  return "image_id,measurement,level,anterior_px,posterior_px,angle_deg\n";
}

std::string morphometry_csv_rows(const MorphometryRecord& record) {
  std::string out;
  if (record.lordosis_deg) {
    out += fmt::format("{},lordosis,L1-S1,,,{}\n", record.image_id,
                       format_double(*record.lordosis_deg));
  }
  for (const auto& g : record.gaps) {
    out += fmt::format("{},gap,{}-{},{},{},\n", record.image_id, to_string(g.upper),
                       to_string(g.lower), format_double(g.anterior), format_double(g.posterior));
  }
  for (const auto& v : record.vertebrae) {
    out += fmt::format("{},superior_endplate,{},,,{}\n", record.image_id, to_string(v.label),
                       format_double(v.superior.angle_deg));
    out += fmt::format("{},inferior_endplate,{},,,{}\n", record.image_id, to_string(v.label),
                       format_double(v.inferior.angle_deg));
  }
  return out;
}

std::string metrics_csv(const std::vector<std::pair<std::string, MetricsRecord>>& records,
                        const std::vector<std::string>& class_names) {
  std::string out = "image_id,pixel_accuracy,mean_accuracy,mean_iou,fw_iou";
  for (const auto& name : class_names) out += ",iou_" + name;
  out += '\n';
  for (const auto& [id, r] : records) {
    out += fmt::format("{},{},{},{},{}", id, format_double(r.pixel_accuracy),
                       format_double(r.mean_accuracy), format_double(r.mean_iou),
                       format_double(r.fw_iou));
    for (std::size_t c = 0; c < class_names.size(); ++c) {
      out += ',';
      if (c < r.per_class_iou.size() && r.per_class_iou[c]) {
        out += format_double(*r.per_class_iou[c]);
      }
    }
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, MetricsRecord>> parse_metrics_csv(const std::string& text) {
  std::vector<std::pair<std::string, MetricsRecord>> out;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("image_id,", 0) != 0) {
        throw Error(ErrorCode::kMalformedDocument, "metrics CSV lacks a header");
      }
      continue;
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() < 5) throw Error(ErrorCode::kMalformedDocument, "short metrics row");
    MetricsRecord r;
    try {
      r.pixel_accuracy = std::stod(cells[1]);
      r.mean_accuracy = std::stod(cells[2]);
      r.mean_iou = std::stod(cells[3]);
      r.fw_iou = std::stod(cells[4]);
      for (std::size_t c = 5; c < cells.size(); ++c) {
        r.per_class_iou.push_back(cells[c].empty() ? std::nullopt
                                                   : std::optional<double>(std::stod(cells[c])));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedDocument, "non-numeric metric in row " + cells[0]);
    }
    out.emplace_back(cells[0], std::move(r));
  }
  return out;
}

}  // namespace spineseg::io
