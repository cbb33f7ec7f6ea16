#include "config.hpp"

#include <sstream>

#include "spineseg/error.hpp"
#include "spineseg/io.hpp"

namespace spineseg::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !in.eof()) {
    throw Error(ErrorCode::kInvalidArgument, "bad value '" + value + "' for " + key);
  }
  return out;
}

}  // namespace

EvalMode parse_mode(const std::string& text) {
  if (text == "binary") return EvalMode::kBinary;
  if (text == "per_class") return EvalMode::kPerClass;
  throw Error(ErrorCode::kInvalidArgument, "mode must be binary or per_class, got '" + text + "'");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  (void)label_taxonomy();
  if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) fail("nms_iou must lie in [0, 1]");
  if (min_area < 1) fail("min_area must be >= 1");
  if (max_erosions < 0) fail("max_erosions must be >= 0");
  if (!(max_gap > 0.0)) fail("max_gap must be > 0");
  if (kernel < 1 || kernel % 2 == 0) fail("kernel must be odd and >= 1");
  if (min_osteophyte_area < 1) fail("min_osteophyte_area must be >= 1");
  if (workers < 1 || workers > 256) fail("workers must lie in 1..256");
  if (mm_per_px < 0.0) fail("mm_per_px must be >= 0");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "config line " + std::to_string(number) + " is not key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_key_values(RunConfig& config, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "taxonomy") config.taxonomy = value;
    else if (key == "mode") config.mode = parse_mode(value);
    else if (key == "nms_iou") config.nms_iou = parse_number<double>(key, value);
    else if (key == "min_area") config.min_area = parse_number<int>(key, value);
    else if (key == "max_erosions") config.max_erosions = parse_number<int>(key, value);
    else if (key == "max_gap") config.max_gap = parse_number<double>(key, value);
    else if (key == "kernel") config.kernel = parse_number<int>(key, value);
    else if (key == "min_osteophyte_area") config.min_osteophyte_area = parse_number<int>(key, value);
    else if (key == "workers") config.workers = parse_number<int>(key, value);
    else if (key == "seed") config.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "mm_per_px") config.mm_per_px = parse_number<double>(key, value);
    else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig config;
  apply_key_values(config, parse_key_values(io::read_text(path)));
  return config;
}

}  // namespace spineseg::cli
