#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "spineseg/instancing.hpp"
#include "spineseg/mask.hpp"
#include "spineseg/morphometry.hpp"
#include "spineseg/taxonomy.hpp"

namespace spineseg {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// A rounded convex quadrilateral whose top and bottom edges are slanted
// independently relative to the body axis. Angles are image-frame degrees
// (y down), so a positive angle tilts the right end downward.
struct VertebraGeometry {
  Point2 center;
  double width = 56.0;
  double height = 34.0;
  double rotation_deg = 0.0;
  double top_slant_deg = 0.0;
  double bottom_slant_deg = 0.0;
  double corner_radius = 5.0;
  // Bottom edge width as a fraction of the top edge (sacral taper).
  double bottom_scale = 1.0;

  // Sharp corners: anterior-superior, posterior-superior, posterior-inferior,
  // anterior-inferior (clockwise on screen).
  std::array<Point2, 4> corners() const;
  std::vector<Point2> outline() const;  // with rounded corners
  double superior_angle_deg() const;
  double inferior_angle_deg() const;
  Point2 superior_midpoint() const;
  Point2 inferior_midpoint() const;
};

// Thin rectangle anchored at `base`, pointing along `direction_deg`.
struct SpurGeometry {
  Point2 base;
  double direction_deg = 180.0;
  double length = 8.0;
  double width = 2.0;

  std::vector<Point2> outline() const;
};

struct SynthSpec {
  int width = 384;
  int height = 640;
  int lumbar_count = 5;  // vertebrae above the sacrum, Th12 excluded
  bool include_sacrum = true;
  bool include_th12 = false;
  double lordosis_curve_deg = 40.0;
  Range vertebra_width{52.0, 64.0};
  Range vertebra_height{30.0, 38.0};
  Range gap{6.0, 10.0};
  Range overlap_fraction{0.0, 0.0};  // of the smaller vertebra height
  double overlap_probability = 0.0;  // per adjacent pair
  Range slant_deg{-3.0, 3.0};
  double corner_radius = 5.0;
  bool cages = false;
  bool screws = false;
  double spur_probability = 0.0;
  Range spur_length{7.0, 11.0};
  Range spur_width{2.0, 3.0};
  int margin = 4;
};

struct SpurTruth {
  int instance_id = 0;
  BinaryMask pixels;  // spur pixels outside the vertebral body
};

struct SyntheticSpine {
  InstanceSet instances;
  LabelMask semantic;
  VertebraChain chain_truth;  // empty when include_sacrum is false
  MorphometryRecord construction;
  std::vector<VertebraGeometry> geometry;  // caudal to cranial
  std::vector<SpurTruth> spurs;
};

// Throws InvalidArgument for malformed specs, InfeasibleLayout when the
// spine does not fit the canvas.
SyntheticSpine generate_spine(const SynthSpec& spec, std::uint64_t seed,
                              const LabelTaxonomy& taxonomy = LabelTaxonomy::standard());

struct PerturbSpec {
  double jitter_amplitude = 0.0;  // px
  double drop_probability = 0.0;
  int extra_instance_count = 0;
  double fuse_adjacent_probability = 0.0;
  Range extra_width{40.0, 60.0};
  Range extra_height{25.0, 35.0};
  Range extra_rotation_deg{0.0, 0.0};
  int extra_class_index = 1;
  bool assign_scores = false;
  Range score{0.5, 1.0};
};

// Jitter, drops, fusions, extras, then scores, each from its own seeded
// stream. Throws InvalidArgument for out-of-range probabilities.
InstanceSet perturb(const InstanceSet& truth, const PerturbSpec& spec, std::uint64_t seed);

// Union of two instances joined by a 3 px wide bridge between their centroids.
Instance fuse_instances(const Instance& a, const Instance& b);

}  // namespace spineseg
