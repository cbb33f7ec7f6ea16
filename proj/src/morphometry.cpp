#include "spineseg/morphometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "spineseg/error.hpp"
#include "spineseg/morphology.hpp"

namespace spineseg {
namespace {

// Clockwise on screen, starting west.
constexpr std::array<Pixel, 8> kMoore = {{
    {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int direction_of(int dx, int dy) {
  for (int d = 0; d < 8; ++d) {
    if (kMoore[static_cast<std::size_t>(d)].x == dx &&
        kMoore[static_cast<std::size_t>(d)].y == dy) {
      return d;
    }
  }
  return 0;
}

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct Axis {
  Point2 center;
  Point2 direction;  // unit, direction.x >= 0
  double major = 0.0;
  double minor = 0.0;
};

// Principal axis of a 2D point cloud.
template <typename Points>
Axis principal_axis(const Points& points) {
  Axis axis;
  const double n = static_cast<double>(points.size());
  for (const Point2& p : points) {
    axis.center.x += p.x;
    axis.center.y += p.y;
  }
  axis.center.x /= n;
  axis.center.y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const Point2& p : points) {
    const double dx = p.x - axis.center.x, dy = p.y - axis.center.y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  sxx /= n;
  syy /= n;
  sxy /= n;
  const double half_trace = 0.5 * (sxx + syy);
  const double root = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  axis.major = half_trace + root;
  axis.minor = half_trace - root;
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  axis.direction = {std::cos(theta), std::sin(theta)};
  if (axis.direction.x < 0.0 || (axis.direction.x == 0.0 && axis.direction.y > 0.0)) {
    axis.direction = {-axis.direction.x, -axis.direction.y};
  }
  return axis;
}

double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
Point2 sub(const Point2& a, const Point2& b) { return {a.x - b.x, a.y - b.y}; }

// Normal pointing toward smaller y for a direction with x >= 0.
Point2 upward_normal(const Point2& d) { return {d.y, -d.x}; }

double normalized_angle(const Point2& d) {
  double a = std::atan2(d.y, d.x) * kRadToDeg;
  if (a <= -90.0) a += 180.0;
  if (a > 90.0) a -= 180.0;
  return a;
}

Endplate fit_band(const std::vector<Point2>& band, double t_lo, double t_hi,
                  const Axis& axis, EndplateKind kind) {
  std::vector<Point2> core;
  for (const auto& p : band) {
    const double t = dot(sub(p, axis.center), axis.direction);
    if (t >= t_lo && t <= t_hi) core.push_back(p);
  }
  if (core.size() < 2) {
    throw Error(ErrorCode::kDegenerateShape, "endplate band has fewer than 2 points");
  }
  const Axis line = principal_axis(core);
  if (line.major <= 0.0) {
    throw Error(ErrorCode::kDegenerateShape, "endplate band collapses to a point");
  }
  const Point2 n = upward_normal(line.direction);
  const double shift = kind == EndplateKind::kSuperior ? 0.5 : -0.5;
  const Point2 origin{line.center.x + shift * n.x, line.center.y + shift * n.y};

  double u_min = 0.0, u_max = 0.0;
  bool first = true;
  for (const auto& p : band) {
    const double u = dot(sub(p, origin), line.direction);
    if (first || u < u_min) u_min = u;
    if (first || u > u_max) u_max = u;
    first = false;
  }
  Point2 a{origin.x + u_min * line.direction.x, origin.y + u_min * line.direction.y};
  Point2 b{origin.x + u_max * line.direction.x, origin.y + u_max * line.direction.y};
  if (b.x < a.x) std::swap(a, b);
  return Endplate{kind, a, b, normalized_angle(line.direction)};
}

EndplatePair endplates_or_degenerate(const Instance& instance) {
  try {
    return approximate_endplates(instance);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateShape) throw;
    throw Error(ErrorCode::kDegenerateEndplate,
                "instance " + std::to_string(instance.id) + ": " + e.what());
  }
}

double lordosis_from(const Endplate& l1_superior, const Endplate& s1_superior) {
  return l1_superior.angle_deg - s1_superior.angle_deg;
}

IntervertebralSpace space_between(const ChainLink& lower, const EndplatePair& lo,
                                  const ChainLink& upper, const EndplatePair& up) {
  return IntervertebralSpace{
      lower.label, upper.label,
      signed_gap(lo.superior, lo.superior.anterior, up.inferior.anterior),
      signed_gap(lo.superior, lo.superior.posterior, up.inferior.posterior)};
}

}  // namespace

Contour extract_contour(const BinaryMask& full) {
  const BinaryMask mask = largest_component(full);
  const auto fg = [&](Pixel p) { return mask.contains(p.x, p.y) && mask.at(p.x, p.y) != 0; };

  std::optional<Pixel> start;
  for (int y = 0; y < mask.height() && !start; ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        start = Pixel{x, y};
        break;
      }
    }
  }
  if (!start) return {};

  // Returns the next boundary pixel and updates the backtrack direction.
  auto advance = [&](Pixel c, int& back) -> std::optional<Pixel> {
    for (int i = 1; i <= 8; ++i) {
      const int d = (back + i) % 8;
      const Pixel q{c.x + kMoore[static_cast<std::size_t>(d)].x,
                    c.y + kMoore[static_cast<std::size_t>(d)].y};
      if (!fg(q)) continue;
      const auto& prev = kMoore[static_cast<std::size_t>((d + 7) % 8)];
      back = direction_of(c.x + prev.x - q.x, c.y + prev.y - q.y);
      return q;
    }
    return std::nullopt;
  };

  Contour contour{*start};
  int back = 0;  // west of the start pixel is background
  Pixel current = *start;
  auto second = advance(current, back);
  if (!second) return contour;
  const Pixel first_step = *second;
  contour.push_back(first_step);
  current = first_step;
  const std::size_t limit = 4 * mask.count() + 8;
  while (contour.size() <= limit) {
    const Pixel next = *advance(current, back);
    if (current == *start && next == first_step) {
      contour.pop_back();
      break;
    }
    contour.push_back(next);
    current = next;
  }
  return contour;
}

Contour extract_contour(const Instance& instance) { return extract_contour(instance.mask); }

OsteophyteReport detect_osteophytes(const Instance& instance, int kernel,
                                    int min_osteophyte_area) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::kInvalidKernel,
                "kernel must be odd and positive, got " + std::to_string(kernel));
  }
  const auto box = instance.mask.bounding_box();
  if (!box) throw Error(ErrorCode::kDegenerateShape, "empty instance");
  if (kernel > std::min(box->width(), box->height())) {
    throw Error(ErrorCode::kKernelTooLarge,
                "kernel " + std::to_string(kernel) + " exceeds instance extent " +
                    std::to_string(box->width()) + "x" + std::to_string(box->height()));
  }

  // Work on the bounding-box crop; everything outside is background.
  BinaryMask crop(box->width(), box->height());
  for (int y = 0; y < crop.height(); ++y) {
    for (int x = 0; x < crop.width(); ++x) {
      crop.set(x, y, instance.mask.at(box->x0 + x, box->y0 + y));
    }
  }
  const BinaryMask local = subtract(crop, open(crop, kernel));

  OsteophyteReport report{BinaryMask(instance.mask.width(), instance.mask.height()), {},
                          kernel};
  for (int y = 0; y < local.height(); ++y) {
    for (int x = 0; x < local.width(); ++x) {
      if (local.at(x, y)) report.residue.set(box->x0 + x, box->y0 + y, 1);
    }
  }
  const auto components = label_components(local);
  for (int c = 1; c <= components.count(); ++c) {
    const std::size_t area = components.areas[static_cast<std::size_t>(c) - 1];
    if (area < static_cast<std::size_t>(std::max(min_osteophyte_area, 1))) continue;
    const Point2 centroid = *component_mask(components, c).centroid();
    report.candidates.push_back(
        {Point2{centroid.x + box->x0, centroid.y + box->y0}, area});
  }
  return report;
}

EndplatePair approximate_endplates(const Instance& instance, int min_area) {
  const BinaryMask mask = largest_component(instance.mask);
  if (mask.count() < static_cast<std::size_t>(std::max(min_area, 1))) {
    throw Error(ErrorCode::kDegenerateShape,
                "instance " + std::to_string(instance.id) + " has fewer than " +
                    std::to_string(min_area) + " pixels");
  }
  std::vector<Point2> pixels;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) pixels.push_back({x + 0.5, y + 0.5});
    }
  }
  const Axis axis = principal_axis(pixels);
  if (axis.minor <= 1e-12) {
    throw Error(ErrorCode::kDegenerateShape,
                "instance " + std::to_string(instance.id) + " has zero-variance moments");
  }

  const Point2 up = upward_normal(axis.direction);
  std::vector<Point2> upper, lower;
  double t_min = 0.0, t_max = 0.0;
  bool first = true;
  for (const Pixel& px : extract_contour(mask)) {
    const Point2 p{px.x + 0.5, px.y + 0.5};
    const Point2 rel = sub(p, axis.center);
    const double t = dot(rel, axis.direction);
    if (first || t < t_min) t_min = t;
    if (first || t > t_max) t_max = t;
    first = false;
    const double s = dot(rel, up);
    if (s > 0.0) upper.push_back(p);
    if (s < 0.0) lower.push_back(p);
  }
  const double margin = 0.1 * (t_max - t_min);
  return EndplatePair{
      fit_band(upper, t_min + margin, t_max - margin, axis, EndplateKind::kSuperior),
      fit_band(lower, t_min + margin, t_max - margin, axis, EndplateKind::kInferior)};
}

double signed_gap(const Endplate& lower_superior, const Point2& lower_point,
                  const Point2& upper_point) {
  const double a = lower_superior.angle_deg / kRadToDeg;
  const Point2 n = upward_normal({std::cos(a), std::sin(a)});
  const Point2 delta = sub(upper_point, lower_point);
  const double d = std::hypot(delta.x, delta.y);
  return dot(delta, n) < 0.0 ? -d : d;
}

double lordosis_angle(const VertebraChain& chain) {
  const ChainLink* l1 = chain.find(AnatomicalLabel::kL1);
  const ChainLink* s1 = chain.find(AnatomicalLabel::kS1);
  if (l1 == nullptr || s1 == nullptr) {
    throw Error(ErrorCode::kMissingLevel,
                l1 == nullptr ? "chain has no L1" : "chain has no S1");
  }
  return lordosis_from(endplates_or_degenerate(l1->instance).superior,
                       endplates_or_degenerate(s1->instance).superior);
}

std::vector<IntervertebralSpace> intervertebral_spaces(const VertebraChain& chain) {
  std::vector<EndplatePair> plates;
  for (const auto& link : chain.links) plates.push_back(endplates_or_degenerate(link.instance));
  std::vector<IntervertebralSpace> out;
  for (std::size_t i = 0; i + 1 < chain.links.size(); ++i) {
    out.push_back(space_between(chain.links[i], plates[i], chain.links[i + 1], plates[i + 1]));
  }
  return out;
}

MorphometryRecord measure_chain(const VertebraChain& chain,
                                const MorphometryOptions& options) {
  MorphometryRecord record;
  std::vector<EndplatePair> plates;
  for (const auto& link : chain.links) {
    EndplatePair pair;
    try {
      pair = approximate_endplates(link.instance, options.min_area);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateShape) throw;
      throw Error(ErrorCode::kDegenerateEndplate,
                  to_string(link.label) + ": " + e.what());
    }
    auto osteo = detect_osteophytes(link.instance, options.kernel,
                                    options.min_osteophyte_area);
    record.vertebrae.push_back({link.label, link.instance.id, pair.superior,
                                pair.inferior, std::move(osteo.candidates), osteo.kernel});
    plates.push_back(pair);
  }
  const auto l1 = std::find_if(chain.links.begin(), chain.links.end(),
                               [](const ChainLink& l) { return l.label == AnatomicalLabel::kL1; });
  const auto s1 = std::find_if(chain.links.begin(), chain.links.end(),
                               [](const ChainLink& l) { return l.label == AnatomicalLabel::kS1; });
  if (l1 != chain.links.end() && s1 != chain.links.end()) {
    record.lordosis_deg =
        lordosis_from(plates[static_cast<std::size_t>(l1 - chain.links.begin())].superior,
                      plates[static_cast<std::size_t>(s1 - chain.links.begin())].superior);
  }
  for (std::size_t i = 0; i + 1 < chain.links.size(); ++i) {
    record.gaps.push_back(
        space_between(chain.links[i], plates[i], chain.links[i + 1], plates[i + 1]));
  }
  return record;
}

}  // namespace spineseg
