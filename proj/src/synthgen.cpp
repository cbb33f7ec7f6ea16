#include "spineseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spineseg/error.hpp"
#include "spineseg/morphology.hpp"
#include "spineseg/raster.hpp"
#include "spineseg/rng.hpp"

namespace spineseg {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Point2 rotate(const Point2& p, double deg) {
  const double a = deg * kDegToRad;
  return {p.x * std::cos(a) - p.y * std::sin(a), p.x * std::sin(a) + p.y * std::cos(a)};
}

Point2 add(const Point2& a, const Point2& b) { return {a.x + b.x, a.y + b.y}; }
Point2 sub(const Point2& a, const Point2& b) { return {a.x - b.x, a.y - b.y}; }
Point2 scale(const Point2& a, double s) { return {a.x * s, a.y * s}; }
double norm(const Point2& a) { return std::hypot(a.x, a.y); }
Point2 unit(const Point2& a) { return scale(a, 1.0 / norm(a)); }

double normalized_angle(double deg) {
  while (deg <= -90.0) deg += 180.0;
  while (deg > 90.0) deg -= 180.0;
  return deg;
}

// Replaces each corner of a convex polygon with a circular arc.
std::vector<Point2> round_corners(const std::vector<Point2>& poly, double radius) {
  if (radius <= 0.0) return poly;
  const std::size_t n = poly.size();
  std::vector<Point2> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& prev = poly[(i + n - 1) % n];
    const Point2& corner = poly[i];
    const Point2& next = poly[(i + 1) % n];
    const Point2 to_prev = unit(sub(prev, corner));
    const Point2 to_next = unit(sub(next, corner));
    const double cos_angle = std::clamp(to_prev.x * to_next.x + to_prev.y * to_next.y, -1.0, 1.0);
    const double half = 0.5 * std::acos(cos_angle);
    const double max_inset =
        0.4 * std::min(norm(sub(prev, corner)), norm(sub(next, corner)));
    const double r = std::min(radius, max_inset * std::tan(half));
    const double inset = r / std::tan(half);
    const Point2 start = add(corner, scale(to_prev, inset));
    const Point2 end = add(corner, scale(to_next, inset));
    const Point2 center =
        add(corner, scale(unit(add(to_prev, to_next)), r / std::sin(half)));
    const double a0 = std::atan2(start.y - center.y, start.x - center.x);
    double sweep = std::atan2(end.y - center.y, end.x - center.x) - a0;
    while (sweep > std::numbers::pi) sweep -= 2 * std::numbers::pi;
    while (sweep < -std::numbers::pi) sweep += 2 * std::numbers::pi;
    constexpr int kSteps = 8;
    for (int s = 0; s <= kSteps; ++s) {
      const double a = a0 + sweep * s / kSteps;
      out.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
    }
  }
  return out;
}

std::vector<Point2> rectangle(const Point2& center, double w, double h, double rotation_deg) {
  std::vector<Point2> out;
  for (const Point2& c : {Point2{-w / 2, -h / 2}, Point2{w / 2, -h / 2},
                          Point2{w / 2, h / 2}, Point2{-w / 2, h / 2}}) {
    out.push_back(add(center, rotate(c, rotation_deg)));
  }
  return out;
}

void check_range(const Range& r, const char* what, double min_lo) {
  if (!(r.lo <= r.hi) || r.lo < min_lo) {
    throw Error(ErrorCode::kInvalidArgument, std::string("invalid range for ") + what);
  }
}

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must lie in [0, 1]");
  }
}

void validate(const SynthSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "canvas must be non-empty");
  }
  if (spec.lumbar_count < 3 || spec.lumbar_count > 6) {
    throw Error(ErrorCode::kInvalidArgument, "lumbar_count must lie in 3..6");
  }
  check_range(spec.vertebra_width, "vertebra_width", 4.0);
  check_range(spec.vertebra_height, "vertebra_height", 4.0);
  check_range(spec.gap, "gap", 0.0);
  check_range(spec.overlap_fraction, "overlap_fraction", 0.0);
  if (spec.overlap_fraction.hi >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "overlap_fraction must stay below 1");
  }
  check_range(spec.slant_deg, "slant_deg", -45.0);
  check_range(spec.spur_length, "spur_length", 0.0);
  check_range(spec.spur_width, "spur_width", 0.0);
  check_probability(spec.overlap_probability, "overlap_probability");
  check_probability(spec.spur_probability, "spur_probability");
  if (spec.corner_radius < 0.0 || spec.margin < 0) {
    throw Error(ErrorCode::kInvalidArgument, "corner_radius and margin must be >= 0");
  }
}

struct Implant {
  int class_index;
  std::vector<Point2> outline;
};

std::vector<Point2> translated(const std::vector<Point2>& poly, const Point2& by) {
  std::vector<Point2> out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.push_back(add(p, by));
  return out;
}

}  // namespace

std::array<Point2, 4> VertebraGeometry::corners() const {
  const double wt = width / 2.0;
  const double wb = width * bottom_scale / 2.0;
  const double tt = std::tan(top_slant_deg * kDegToRad);
  const double tb = std::tan(bottom_slant_deg * kDegToRad);
  const std::array<Point2, 4> local = {{{-wt, -height / 2 - wt * tt},
                                        {wt, -height / 2 + wt * tt},
                                        {wb, height / 2 + wb * tb},
                                        {-wb, height / 2 - wb * tb}}};
  std::array<Point2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = add(center, rotate(local[i], rotation_deg));
  return out;
}

std::vector<Point2> VertebraGeometry::outline() const {
  const auto c = corners();
  return round_corners({c.begin(), c.end()}, corner_radius);
}

double VertebraGeometry::superior_angle_deg() const {
  return normalized_angle(rotation_deg + top_slant_deg);
}

double VertebraGeometry::inferior_angle_deg() const {
  return normalized_angle(rotation_deg + bottom_slant_deg);
}

Point2 VertebraGeometry::superior_midpoint() const {
  return add(center, rotate({0.0, -height / 2}, rotation_deg));
}

Point2 VertebraGeometry::inferior_midpoint() const {
  return add(center, rotate({0.0, height / 2}, rotation_deg));
}

std::vector<Point2> SpurGeometry::outline() const {
  const Point2 d = rotate({1.0, 0.0}, direction_deg);
  const Point2 p{-d.y * width / 2, d.x * width / 2};
  const Point2 tip = add(base, scale(d, length));
  return {add(base, p), add(tip, p), sub(tip, p), sub(base, p)};
}

SyntheticSpine generate_spine(const SynthSpec& spec, std::uint64_t seed,
                              const LabelTaxonomy& taxonomy) {
  validate(spec);
  Rng rng(Rng::mix(seed, 0));
  const int sacral = taxonomy.sacral_index();
  const int lumbar = taxonomy.lumbar_index();

  const int above = spec.lumbar_count + (spec.include_th12 ? 1 : 0);
  const int first_position = spec.include_sacrum ? 0 : 1;

  // Superior endplate tilt by chain position; L1 sits exactly one full
  // curve above S1, anything cranial of L1 keeps L1's tilt.
  auto superior_tilt = [&](int position) {
    return -0.6 * spec.lordosis_curve_deg +
           spec.lordosis_curve_deg * std::min(position, 5) / 5.0;
  };

  std::vector<VertebraGeometry> geometry;
  std::vector<std::optional<SpurGeometry>> spurs;
  for (int position = first_position; position <= above; ++position) {
    VertebraGeometry g;
    g.width = rng.uniform(spec.vertebra_width.lo, spec.vertebra_width.hi);
    g.height = rng.uniform(spec.vertebra_height.lo, spec.vertebra_height.hi);
    g.top_slant_deg = rng.uniform(spec.slant_deg.lo, spec.slant_deg.hi);
    g.bottom_slant_deg = rng.uniform(spec.slant_deg.lo, spec.slant_deg.hi);
    g.corner_radius = spec.corner_radius;
    if (position == 0) {
      g.width *= 1.1;
      g.bottom_scale = 0.9;
    }
    g.rotation_deg = superior_tilt(position) - g.top_slant_deg;

    if (!geometry.empty()) {
      const VertebraGeometry& below = geometry.back();
      double gap = rng.uniform(spec.gap.lo, spec.gap.hi);
      if (spec.overlap_fraction.hi > 0.0 && rng.bernoulli(spec.overlap_probability)) {
        gap = -rng.uniform(spec.overlap_fraction.lo, spec.overlap_fraction.hi) *
              std::min(below.height, g.height);
      }
      const double a = below.superior_angle_deg() * kDegToRad;
      const Point2 up{std::sin(a), -std::cos(a)};
      const Point2 target = add(below.superior_midpoint(), scale(up, gap));
      g.center = sub(target, rotate({0.0, g.height / 2}, g.rotation_deg));
    }

    std::optional<SpurGeometry> spur;
    if (position > 0 && rng.bernoulli(spec.spur_probability)) {
      const auto corners = g.corners();
      const Point2 corner = corners[static_cast<std::size_t>(rng.uniform_int(0, 3))];
      const Point2 outward = unit(sub(corner, g.center));
      const double inset = spec.corner_radius + 2.0;
      SpurGeometry s;
      s.base = sub(corner, scale(outward, inset));
      s.direction_deg = std::atan2(outward.y, outward.x) / kDegToRad;
      s.length = inset + rng.uniform(spec.spur_length.lo, spec.spur_length.hi);
      s.width = rng.uniform(spec.spur_width.lo, spec.spur_width.hi);
      spur = s;
    }
    geometry.push_back(g);
    spurs.push_back(spur);
  }

  std::vector<Implant> implants;
  const int lumbar_first = spec.include_sacrum ? 1 : 0;
  const int vertebra_count = static_cast<int>(geometry.size());
  if ((spec.cages || spec.screws) && vertebra_count - lumbar_first >= 2) {
    const int level = rng.uniform_int(lumbar_first, vertebra_count - 2);
    const VertebraGeometry& lower = geometry[static_cast<std::size_t>(level)];
    const VertebraGeometry& upper = geometry[static_cast<std::size_t>(level) + 1];
    if (spec.cages) {
      if (auto idx = taxonomy.index_of("cage")) {
        const Point2 mid = scale(add(lower.superior_midpoint(), upper.inferior_midpoint()), 0.5);
        const double disc = norm(sub(upper.inferior_midpoint(), lower.superior_midpoint()));
        implants.push_back({*idx, rectangle(mid, 0.45 * lower.width, disc + 8.0,
                                            0.5 * (lower.rotation_deg + upper.rotation_deg))});
      }
    }
    if (spec.screws) {
      if (auto idx = taxonomy.index_of("screw")) {
        for (const VertebraGeometry* v : {&lower, &upper}) {
          const Point2 c = add(v->center, rotate({0.15 * v->width, 0.0}, v->rotation_deg));
          implants.push_back({*idx, rectangle(c, 0.7 * v->width, 5.0, v->rotation_deg + 10.0)});
        }
      }
    }
  }

  // Center the construction on the canvas.
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  auto extend = [&](const std::vector<Point2>& poly) {
    for (const auto& p : poly) {
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  };
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    extend(geometry[i].outline());
    if (spurs[i]) extend(spurs[i]->outline());
  }
  for (const auto& imp : implants) extend(imp.outline);
  const double room_x = spec.width - 2.0 * spec.margin;
  const double room_y = spec.height - 2.0 * spec.margin;
  if (x1 - x0 > room_x || y1 - y0 > room_y) {
    throw Error(ErrorCode::kInfeasibleLayout,
                "spine needs " + std::to_string(x1 - x0) + "x" + std::to_string(y1 - y0) +
                    " px inside a " + std::to_string(spec.width) + "x" +
                    std::to_string(spec.height) + " canvas");
  }
  const Point2 shift{std::round(spec.width / 2.0 - (x0 + x1) / 2.0),
                     std::round(spec.height / 2.0 - (y0 + y1) / 2.0)};
  for (auto& g : geometry) g.center = add(g.center, shift);
  for (auto& s : spurs) {
    if (s) s->base = add(s->base, shift);
  }
  for (auto& imp : implants) imp.outline = translated(imp.outline, shift);

  const Size canvas{spec.width, spec.height};
  SyntheticSpine out{InstanceSet(canvas), LabelMask(canvas.width, canvas.height), {}, {},
                     geometry, {}};
  auto paint = [&](const BinaryMask& mask, int class_index) {
    auto src = mask.data();
    auto dst = out.semantic.data();
    for (std::size_t p = 0; p < dst.size(); ++p) {
      if (src[p]) dst[p] = static_cast<std::uint8_t>(class_index);
    }
  };

  int id = 1;
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    const int position = first_position + static_cast<int>(i);
    const int class_index = position == 0 ? sacral : lumbar;
    BinaryMask body = fill_polygon(geometry[i].outline(), canvas);
    BinaryMask mask = body;
    std::vector<OsteophyteCandidate> spur_truth;
    if (spurs[i]) {
      fill_polygon_into(spurs[i]->outline(), mask);
      BinaryMask only = subtract(mask, body);
      if (!only.empty()) {
        spur_truth.push_back({*only.centroid(), only.count()});
        out.spurs.push_back({id, std::move(only)});
      }
    }
    paint(mask, class_index);
    Instance inst{id, class_index, std::nullopt, std::move(mask)};
    const AnatomicalLabel label = label_for_position(static_cast<std::size_t>(position));
    if (spec.include_sacrum) {
      out.chain_truth.links.push_back({inst, label, *inst.mask.centroid()});
    }
    const auto c = geometry[i].corners();
    out.construction.vertebrae.push_back(
        {label, id,
         Endplate{EndplateKind::kSuperior, c[0], c[1], geometry[i].superior_angle_deg()},
         Endplate{EndplateKind::kInferior, c[3], c[2], geometry[i].inferior_angle_deg()},
         std::move(spur_truth), 0});
    out.instances.add(std::move(inst));
    ++id;
  }
  for (const auto& imp : implants) {
    BinaryMask mask = fill_polygon(imp.outline, canvas);
    if (mask.empty()) continue;
    paint(mask, imp.class_index);
    out.instances.add(Instance{id++, imp.class_index, std::nullopt, std::move(mask)});
  }

  const auto& verts = out.construction.vertebrae;
  if (spec.include_sacrum && above >= 5) {
    out.construction.lordosis_deg = verts[5].superior.angle_deg - verts[0].superior.angle_deg;
  }
  for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
    const auto& lo = verts[i];
    const auto& up = verts[i + 1];
    out.construction.gaps.push_back(
        {lo.label, up.label, signed_gap(lo.superior, lo.superior.anterior, up.inferior.anterior),
         signed_gap(lo.superior, lo.superior.posterior, up.inferior.posterior)});
  }
  return out;
}

Instance fuse_instances(const Instance& a, const Instance& b) {
  BinaryMask mask = merge_to_binary([&] {
    InstanceSet pair(a.mask.size());
    pair.add(a);
    Instance copy = b;
    copy.id = a.id == b.id ? a.id + 1 : b.id;
    pair.add(std::move(copy));
    return pair;
  }());
  const Point2 ca = *a.mask.centroid();
  const Point2 cb = *b.mask.centroid();
  const Point2 along = sub(cb, ca);
  if (norm(along) > 0.0) {
    const Point2 d = unit(along);
    const Point2 p{-d.y * 1.5, d.x * 1.5};
    const std::vector<Point2> bridge = {add(ca, p), add(cb, p), sub(cb, p), sub(ca, p)};
    fill_polygon_into(bridge, mask);
  }
  std::optional<double> score;
  if (a.score || b.score) score = std::max(a.effective_score(), b.effective_score());
  return Instance{std::min(a.id, b.id), a.class_index, score, std::move(mask)};
}

InstanceSet perturb(const InstanceSet& truth, const PerturbSpec& spec, std::uint64_t seed) {
  if (!(spec.jitter_amplitude >= 0.0) || spec.extra_instance_count < 0) {
    throw Error(ErrorCode::kInvalidArgument, "jitter and extra count must be >= 0");
  }
  check_probability(spec.drop_probability, "drop_probability");
  check_probability(spec.fuse_adjacent_probability, "fuse_adjacent_probability");
  const Size canvas = truth.size();

  // Boundary jitter.
  std::vector<Instance> work;
  {
    Rng rng(Rng::mix(seed, 1));
    for (const auto& inst : truth) {
      if (spec.jitter_amplitude <= 0.0) {
        work.push_back(inst);
        continue;
      }
      const Point2 c = *inst.mask.centroid();
      std::vector<Point2> poly;
      for (const Pixel& px : extract_contour(inst.mask)) {
        const Point2 p{px.x + 0.5, px.y + 0.5};
        const Point2 radial = sub(p, c);
        const double len = norm(radial);
        const double shift = rng.uniform(-spec.jitter_amplitude, spec.jitter_amplitude);
        poly.push_back(len > 0.0 ? add(p, scale(radial, shift / len)) : p);
      }
      BinaryMask mask = fill_polygon(poly, canvas);
      if (mask.empty()) continue;
      work.push_back(Instance{inst.id, inst.class_index, inst.score, std::move(mask)});
    }
  }

  // Drops.
  {
    Rng rng(Rng::mix(seed, 2));
    std::vector<Instance> kept;
    for (auto& inst : work) {
      if (!rng.bernoulli(spec.drop_probability)) kept.push_back(std::move(inst));
    }
    work = std::move(kept);
  }

  // Fusions of each instance with its nearest same-class neighbor.
  if (spec.fuse_adjacent_probability > 0.0 && work.size() >= 2) {
    Rng rng(Rng::mix(seed, 3));
    std::vector<Point2> centroids;
    for (const auto& inst : work) centroids.push_back(*inst.mask.centroid());
    std::vector<bool> consumed(work.size(), false);
    std::vector<Instance> fused;
    for (std::size_t i = 0; i < work.size(); ++i) {
      if (consumed[i]) continue;
      std::optional<std::size_t> nearest;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < work.size(); ++j) {
        if (j == i || consumed[j] || work[j].class_index != work[i].class_index) continue;
        const double d = norm(sub(centroids[j], centroids[i]));
        if (d < best) {
          best = d;
          nearest = j;
        }
      }
      if (nearest && rng.bernoulli(spec.fuse_adjacent_probability)) {
        consumed[i] = consumed[*nearest] = true;
        fused.push_back(fuse_instances(work[i], work[*nearest]));
      }
    }
    std::vector<Instance> next;
    for (std::size_t i = 0; i < work.size(); ++i) {
      if (!consumed[i]) next.push_back(std::move(work[i]));
    }
    for (auto& f : fused) next.push_back(std::move(f));
    work = std::move(next);
  }

  InstanceSet out(canvas);
  for (auto& inst : work) out.add(std::move(inst));

  // Spurious extra instances, placed clear of existing foreground when possible.
  if (spec.extra_instance_count > 0 && canvas.area() > 0) {
    Rng rng(Rng::mix(seed, 4));
    BinaryMask occupied = merge_to_binary(out);
    for (int e = 0; e < spec.extra_instance_count; ++e) {
      const double w = rng.uniform(spec.extra_width.lo, spec.extra_width.hi);
      const double h = rng.uniform(spec.extra_height.lo, spec.extra_height.hi);
      const double rot = rng.uniform(spec.extra_rotation_deg.lo, spec.extra_rotation_deg.hi);
      // Half-pixel offsets keep odd integer sizes pixel-aligned.
      const double ox = std::fmod(std::round(w), 2.0) == 1.0 ? 0.5 : 0.0;
      const double oy = std::fmod(std::round(h), 2.0) == 1.0 ? 0.5 : 0.0;
      // Center range that keeps the whole rectangle on the canvas, if any.
      const double a = rot * kDegToRad;
      const double hx = 0.5 * (w * std::abs(std::cos(a)) + h * std::abs(std::sin(a)));
      const double hy = 0.5 * (w * std::abs(std::sin(a)) + h * std::abs(std::cos(a)));
      auto span = [](double half, double offset, int extent) {
        const int lo = static_cast<int>(std::ceil(half - offset));
        const int hi = static_cast<int>(std::floor(extent - half - offset));
        return lo <= hi ? std::pair{lo, hi} : std::pair{0, extent};
      };
      const auto [cx_lo, cx_hi] = span(hx, ox, canvas.width);
      const auto [cy_lo, cy_hi] = span(hy, oy, canvas.height);
      BinaryMask candidate;
      for (int attempt = 0; attempt < 200; ++attempt) {
        const Point2 c{rng.uniform_int(cx_lo, cx_hi) + ox, rng.uniform_int(cy_lo, cy_hi) + oy};
        BinaryMask m = fill_polygon(rectangle(c, w, h, rot), canvas);
        if (m.empty()) continue;
        const bool clear = intersection_count(m, occupied) == 0;
        candidate = std::move(m);
        if (clear) break;
      }
      if (candidate.pixel_count() == 0 || candidate.empty()) continue;
      auto src = candidate.data();
      auto dst = occupied.data();
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] |= src[p];
      out.add(Instance{out.next_id(), spec.extra_class_index, std::nullopt, std::move(candidate)});
    }
  }

  if (spec.assign_scores) {
    Rng rng(Rng::mix(seed, 5));
    InstanceSet scored(canvas);
    for (const auto& inst : out) {
      Instance s = inst;
      s.score = std::clamp(rng.uniform(spec.score.lo, spec.score.hi), 0.0, 1.0);
      scored.add(std::move(s));
    }
    return scored;
  }
  return out;
}

}  // namespace spineseg
