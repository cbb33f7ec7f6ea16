#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "spineseg/instancing.hpp"
#include "spineseg/metrics.hpp"
#include "spineseg/morphometry.hpp"
#include "spineseg/taxonomy.hpp"

namespace spineseg::cli {

// Settings shared by all subcommands. Loaded from a key=value file
// ('#' starts a comment), then overridden by command-line flags.
struct RunConfig {
  std::string taxonomy = LabelTaxonomy::standard().to_string();
  EvalMode mode = EvalMode::kBinary;
  double nms_iou = kDefaultNmsIou;
  int min_area = kDefaultMinArea;
  int max_erosions = kDefaultMaxErosions;
  double max_gap = kDefaultMaxGapFactor;
  int kernel = kDefaultOsteophyteKernel;
  int min_osteophyte_area = kDefaultMinOsteophyteArea;
  int workers = 1;
  std::uint64_t seed = 0;
  double mm_per_px = 0.0;

  LabelTaxonomy label_taxonomy() const { return LabelTaxonomy::parse(taxonomy); }
  // Throws InvalidArgument when a value is outside its documented range.
  void validate() const;
};

std::map<std::string, std::string> parse_key_values(const std::string& text);
// Unknown keys are rejected. Throws InvalidArgument.
void apply_key_values(RunConfig& config, const std::map<std::string, std::string>& values);
RunConfig load_config(const std::filesystem::path& path);

EvalMode parse_mode(const std::string& text);

}  // namespace spineseg::cli
