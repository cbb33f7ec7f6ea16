#pragma once

#include <string>
#include <vector>

#include "spineseg/mask.hpp"
#include "spineseg/taxonomy.hpp"

namespace spineseg {

inline constexpr double kDefaultNmsIou = 0.5;
inline constexpr int kDefaultMinArea = 32;
inline constexpr int kDefaultMaxErosions = 10;
inline constexpr double kDefaultMaxGapFactor = 2.0;

// Greedy suppression by descending score. Scoreless instances rank as 1.0
// and ahead of scored instances of equal score; remaining ties go to the
// lower id. An instance is dropped iff its IoU with an already kept
// instance (of the same class, when class_aware) exceeds iou_threshold.
InstanceSet nms(const InstanceSet& set, double iou_threshold = kDefaultNmsIou,
                bool class_aware = true);

// One instance per 8-connected component of at least min_area pixels; ids
// start at first_id in raster order of each component's first pixel.
InstanceSet connected_components(const BinaryMask& mask, int class_index,
                                 int min_area = kDefaultMinArea, int first_id = 1);

struct SplitResult {
  InstanceSet parts;
  bool split = false;
  int erosions = 0;  // erosion steps needed to separate; 0 when unsplit
};

// Separates a fused blob by repeated 3x3 erosion. At the first step that
// leaves two or more components of at least min_area pixels, those cores
// are grown back inside the original mask; each pixel goes to the seed it
// is geodesically nearest to (ties: lower seed). Parts get ids 1..n in
// raster order of their seed and inherit class and score. Unsplit blobs
// come back as the original instance.
SplitResult split_fused(const Instance& instance,
                        int max_erosions = kDefaultMaxErosions,
                        int min_area = kDefaultMinArea);

// Splits every instance and renumbers the result 1..n.
InstanceSet split_all(const InstanceSet& set, int max_erosions = kDefaultMaxErosions,
                      int min_area = kDefaultMinArea);

// S1, L5..L1, Th12..Th1, then Unknown.
enum class AnatomicalLabel {
  kS1, kL5, kL4, kL3, kL2, kL1,
  kTh12, kTh11, kTh10, kTh9, kTh8, kTh7, kTh6, kTh5, kTh4, kTh3, kTh2, kTh1,
  kUnknown,
};

std::string to_string(AnatomicalLabel label);
// Throws InvalidArgument for unrecognized text.
AnatomicalLabel parse_anatomical_label(const std::string& text);
// Label for chain position (0 = S1).
AnatomicalLabel label_for_position(std::size_t position);

struct ChainLink {
  Instance instance;
  AnatomicalLabel label;
  Point2 centroid;
};

// Caudal to cranial; the first link is the sacral S1 anchor.
struct VertebraChain {
  std::vector<ChainLink> links;

  std::size_t size() const { return links.size(); }
  const ChainLink* find(AnatomicalLabel label) const;
};

struct LabelOptions {
  // Maximum nearest-neighbor step as a multiple of the median instance height.
  double max_gap_factor = kDefaultMaxGapFactor;
};

// Walks nearest neighbors from the sacral instance over vertebra-class
// instances; other classes are ignored. Throws NoSacralAnchor,
// MultipleSacralAnchors, BrokenChain.
VertebraChain label_chain(const InstanceSet& set, const LabelTaxonomy& taxonomy,
                          const LabelOptions& options = {});

}  // namespace spineseg
