#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spineseg/instancing.hpp"
#include "spineseg/mask.hpp"

namespace spineseg {

// Closed boundary, clockwise on screen (y grows downward).
using Contour = std::vector<Pixel>;

// Moore-neighborhood trace of the largest 8-connected component, starting
// at its topmost-then-leftmost pixel. A single pixel traces to itself.
Contour extract_contour(const Instance& instance);
Contour extract_contour(const BinaryMask& mask);

enum class EndplateKind { kSuperior, kInferior };

struct Endplate {
  EndplateKind kind = EndplateKind::kSuperior;
  Point2 anterior;   // smaller x
  Point2 posterior;
  // Image-frame direction angle (y down) in (-90, 90].
  double angle_deg = 0.0;
};

struct OsteophyteCandidate {
  Point2 centroid;
  std::size_t area = 0;
};

struct OsteophyteReport {
  BinaryMask residue;
  std::vector<OsteophyteCandidate> candidates;
  int kernel = 0;
};

inline constexpr int kDefaultOsteophyteKernel = 5;
inline constexpr int kDefaultMinOsteophyteArea = 6;

// residue = mask - open(mask, k x k). Throws InvalidKernel for even or
// non-positive k, KernelTooLarge when k exceeds the bounding box.
OsteophyteReport detect_osteophytes(const Instance& instance,
                                    int kernel = kDefaultOsteophyteKernel,
                                    int min_osteophyte_area = kDefaultMinOsteophyteArea);

struct EndplatePair {
  Endplate superior;
  Endplate inferior;
};

// Splits the contour along the principal axis into an upper and a lower
// band, fits each band's middle 80% (by projection on the axis) with a
// total-least-squares line shifted half a pixel outward to the pixel
// boundary, and takes the band's extreme projections as endpoints.
// Throws DegenerateShape.
EndplatePair approximate_endplates(const Instance& instance,
                                   int min_area = kDefaultMinArea);

// L1 superior angle minus S1 superior angle; positive when lordotic with
// the anterior side toward smaller x. Throws MissingLevel, DegenerateEndplate.
double lordosis_angle(const VertebraChain& chain);

struct IntervertebralSpace {
  AnatomicalLabel lower;
  AnatomicalLabel upper;
  double anterior = 0.0;   // px, negative when the bodies overlap
  double posterior = 0.0;
};

// One entry per adjacent pair, caudal first. Throws DegenerateEndplate.
std::vector<IntervertebralSpace> intervertebral_spaces(const VertebraChain& chain);

// Signed distance between two endpoints, negative when `upper_point` lies
// on the caudal side of the lower vertebra's superior endplate line.
double signed_gap(const Endplate& lower_superior, const Point2& lower_point,
                  const Point2& upper_point);

struct VertebraMeasurement {
  AnatomicalLabel label = AnatomicalLabel::kUnknown;
  int instance_id = 0;
  Endplate superior;
  Endplate inferior;
  std::vector<OsteophyteCandidate> osteophytes;
  int kernel = 0;
};

struct MorphometryRecord {
  std::string image_id;
  std::vector<VertebraMeasurement> vertebrae;
  std::optional<double> lordosis_deg;  // nullopt when L1 or S1 is missing
  std::vector<IntervertebralSpace> gaps;
};

struct MorphometryOptions {
  int kernel = kDefaultOsteophyteKernel;
  int min_osteophyte_area = kDefaultMinOsteophyteArea;
  int min_area = kDefaultMinArea;
};

MorphometryRecord measure_chain(const VertebraChain& chain,
                                const MorphometryOptions& options = {});

}  // namespace spineseg
