#include "spineseg/instancing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "spineseg/error.hpp"
#include "spineseg/morphology.hpp"

namespace spineseg {
namespace {

bool boxes_overlap(const std::optional<BinaryMask::Box>& a,
                   const std::optional<BinaryMask::Box>& b) {
  if (!a || !b) return false;
  return a->x0 <= b->x1 && b->x0 <= a->x1 && a->y0 <= b->y1 && b->y0 <= a->y1;
}

double distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace

InstanceSet nms(const InstanceSet& set, double iou_threshold, bool class_aware) {
  std::vector<const Instance*> order;
  for (const auto& inst : set) order.push_back(&inst);
  std::sort(order.begin(), order.end(), [](const Instance* a, const Instance* b) {
    if (a->effective_score() != b->effective_score()) {
      return a->effective_score() > b->effective_score();
    }
    if (a->score.has_value() != b->score.has_value()) return !a->score.has_value();
    return a->id < b->id;
  });

  struct Kept {
    const Instance* instance;
    std::optional<BinaryMask::Box> box;
  };
  std::vector<Kept> kept;
  for (const Instance* candidate : order) {
    const auto box = candidate->mask.bounding_box();
    bool suppressed = false;
    for (const auto& k : kept) {
      if (class_aware && k.instance->class_index != candidate->class_index) continue;
      // Disjoint boxes give IoU 0, which never exceeds a threshold >= 0.
      if (!boxes_overlap(box, k.box) && iou_threshold >= 0.0) continue;
      if (mask_iou(candidate->mask, k.instance->mask) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back({candidate, box});
  }

  // Output keeps the input order of the survivors.
  InstanceSet out(set.size());
  for (const auto& inst : set) {
    if (std::any_of(kept.begin(), kept.end(),
                    [&](const Kept& k) { return k.instance == &inst; })) {
      out.add(inst);
    }
  }
  return out;
}

InstanceSet connected_components(const BinaryMask& mask, int class_index,
                                 int min_area, int first_id) {
  InstanceSet out(mask.size());
  const auto components = label_components(mask);
  int id = first_id;
  for (int c = 1; c <= components.count(); ++c) {
    if (components.areas[static_cast<std::size_t>(c) - 1] <
        static_cast<std::size_t>(std::max(min_area, 1))) {
      continue;
    }
    out.add(Instance{id++, class_index, std::nullopt, component_mask(components, c)});
  }
  return out;
}

SplitResult split_fused(const Instance& instance, int max_erosions, int min_area) {
  const BinaryMask& original = instance.mask;
  SplitResult unsplit{InstanceSet(original.size()), false, 0};
  unsplit.parts.add(instance);

  BinaryMask core = original;
  for (int step = 1; step <= max_erosions; ++step) {
    core = erode(core, 3);
    if (core.empty()) return unsplit;
    const auto components = label_components(core);
    std::vector<int> seeds;
    for (int c = 1; c <= components.count(); ++c) {
      if (components.areas[static_cast<std::size_t>(c) - 1] >=
          static_cast<std::size_t>(std::max(min_area, 1))) {
        seeds.push_back(c);
      }
    }
    if (seeds.size() < 2) continue;

    // Geodesic growth inside the original mask, one 8-neighborhood ring per
    // layer; a pixel first reached in a layer goes to the lowest seed
    // reaching it in that layer.
    const int w = original.width(), h = original.height();
    Raster<int> owner(w, h, 0);
    std::vector<Pixel> frontier;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (components.labels.at(x, y) == seeds[s]) {
            owner.set(x, y, static_cast<int>(s) + 1);
            frontier.push_back({x, y});
          }
        }
      }
    }
    Raster<int> candidate(w, h, 0);
    std::vector<Pixel> next;
    while (!frontier.empty()) {
      next.clear();
      for (const Pixel p : frontier) {
        const int o = owner.at(p.x, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (!original.contains(nx, ny) || original.at(nx, ny) == 0) continue;
            if (owner.at(nx, ny) != 0) continue;
            int& c = candidate.at(nx, ny);
            if (c == 0) next.push_back({nx, ny});
            if (c == 0 || o < c) c = o;
          }
        }
      }
      for (const Pixel q : next) owner.set(q.x, q.y, candidate.at(q.x, q.y));
      frontier.swap(next);
    }

    std::vector<BinaryMask> parts(seeds.size(), BinaryMask(w, h));
    std::vector<Point2> seed_centroids;
    for (int s = 0; s < static_cast<int>(seeds.size()); ++s) {
      seed_centroids.push_back(*component_mask(components, seeds[static_cast<std::size_t>(s)]).centroid());
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (original.at(x, y) == 0) continue;
        int o = owner.at(x, y);
        if (o == 0) {
          // Not geodesically reachable (the blob had several pieces).
          const Point2 c{x + 0.5, y + 0.5};
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t s = 0; s < seed_centroids.size(); ++s) {
            const double d = distance(c, seed_centroids[s]);
            if (d < best) {
              best = d;
              o = static_cast<int>(s) + 1;
            }
          }
        }
        parts[static_cast<std::size_t>(o) - 1].set(x, y, 1);
      }
    }

    SplitResult result{InstanceSet(original.size()), true, step};
    for (std::size_t s = 0; s < parts.size(); ++s) {
      result.parts.add(Instance{static_cast<int>(s) + 1, instance.class_index,
                                instance.score, std::move(parts[s])});
    }
    return result;
  }
  return unsplit;
}

InstanceSet split_all(const InstanceSet& set, int max_erosions, int min_area) {
  InstanceSet out(set.size());
  int id = 1;
  for (const auto& inst : set) {
    auto result = split_fused(inst, max_erosions, min_area);
    for (const auto& part : result.parts) {
      Instance renumbered = part;
      renumbered.id = id++;
      out.add(std::move(renumbered));
    }
  }
  return out;
}

namespace {

constexpr std::array<const char*, 19> kLabelNames = {
    "S1",   "L5",   "L4",   "L3",  "L2",  "L1",  "Th12", "Th11", "Th10", "Th9",
    "Th8",  "Th7",  "Th6",  "Th5", "Th4", "Th3", "Th2",  "Th1",  "Unknown"};

}  // namespace

std::string to_string(AnatomicalLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

AnatomicalLabel parse_anatomical_label(const std::string& text) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (text == kLabelNames[i]) return static_cast<AnatomicalLabel>(i);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown anatomical label '" + text + "'");
}

AnatomicalLabel label_for_position(std::size_t position) {
  const auto last = static_cast<std::size_t>(AnatomicalLabel::kUnknown);
  return static_cast<AnatomicalLabel>(std::min(position, last));
}

const ChainLink* VertebraChain::find(AnatomicalLabel label) const {
  for (const auto& link : links) {
    if (link.label == label) return &link;
  }
  return nullptr;
}

VertebraChain label_chain(const InstanceSet& set, const LabelTaxonomy& taxonomy,
                          const LabelOptions& options) {
  const int sacral = taxonomy.sacral_index();
  const int lumbar = taxonomy.lumbar_index();

  const Instance* anchor = nullptr;
  std::vector<const Instance*> remaining;
  std::vector<double> heights;
  for (const auto& inst : set) {
    if (inst.class_index != sacral && inst.class_index != lumbar) continue;
    heights.push_back(static_cast<double>(inst.mask.bounding_box()->height()));
    if (inst.class_index == lumbar) {
      remaining.push_back(&inst);
      continue;
    }
    if (anchor != nullptr) {
      throw Error(ErrorCode::kMultipleSacralAnchors,
                  "instances " + std::to_string(anchor->id) + " and " +
                      std::to_string(inst.id) + " are both sacral");
    }
    anchor = &inst;
  }
  if (anchor == nullptr) {
    throw Error(ErrorCode::kNoSacralAnchor, "no sacral instance");
  }

  std::sort(heights.begin(), heights.end());
  const std::size_t mid = heights.size() / 2;
  const double median_height = heights.size() % 2 == 1
                                   ? heights[mid]
                                   : 0.5 * (heights[mid - 1] + heights[mid]);
  const double max_step = options.max_gap_factor * median_height;

  VertebraChain chain;
  chain.links.push_back({*anchor, AnatomicalLabel::kS1, *anchor->mask.centroid()});

  std::vector<std::pair<const Instance*, Point2>> pending;
  for (const Instance* inst : remaining) pending.emplace_back(inst, *inst->mask.centroid());

  while (!pending.empty()) {
    const Point2 current = chain.links.back().centroid;
    auto nearest = std::min_element(
        pending.begin(), pending.end(), [&](const auto& a, const auto& b) {
          const double da = distance(current, a.second);
          const double db = distance(current, b.second);
          if (da != db) return da < db;
          return a.first->id < b.first->id;
        });
    const double step = distance(current, nearest->second);
    if (step > max_step) {
      throw Error(ErrorCode::kBrokenChain,
                  "step of " + std::to_string(step) + " px to instance " +
                      std::to_string(nearest->first->id) + " exceeds " +
                      std::to_string(max_step) + " px");
    }
    chain.links.push_back(
        {*nearest->first, label_for_position(chain.links.size()), nearest->second});
    pending.erase(nearest);
  }
  return chain;
}

}  // namespace spineseg
