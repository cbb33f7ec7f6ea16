#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "spineseg/metrics.hpp"
#include "spineseg/morphometry.hpp"
#include "spineseg/synthgen.hpp"
#include "support.hpp"

using namespace spineseg;
using support::code_of;

namespace {

const LabelTaxonomy kTax = LabelTaxonomy::standard();

SynthSpec straight() {
  SynthSpec s;
  s.lordosis_curve_deg = 0.0;
  return s;
}

bool same(const InstanceSet& a, const InstanceSet& b) {
  if (a.size() != b.size() || a.count() != b.count()) return false;
  for (std::size_t i = 0; i < a.count(); ++i) {
    if (a[i].id != b[i].id || a[i].class_index != b[i].class_index || a[i].score != b[i].score ||
        !(a[i].mask == b[i].mask)) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("generate_spine: straight five-level spine") {
  const auto g = generate_spine(straight(), 1, kTax);
  REQUIRE(g.instances.count() == 6);
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) CHECK(mask_iou(g.instances[a].mask, g.instances[b].mask) == 0.0);
  }
  std::vector<std::string> labels;
  for (const auto& l : g.chain_truth.links) labels.push_back(to_string(l.label));
  CHECK(labels == std::vector<std::string>{"S1", "L5", "L4", "L3", "L2", "L1"});
  CHECK(g.instances[0].class_index == kTax.sacral_index());
  CHECK(g.semantic == paint_instances(g.instances));
  CHECK(*g.construction.lordosis_deg == doctest::Approx(0.0));
  CHECK(g.construction.gaps.size() == 5);
}

TEST_CASE("generate_spine is deterministic per seed") {
  SynthSpec spec;
  spec.overlap_fraction = {0.0, 0.2};
  spec.overlap_probability = 0.5;
  spec.spur_probability = 0.5;
  spec.cages = spec.screws = true;
  const auto a = generate_spine(spec, 77, kTax);
  const auto b = generate_spine(spec, 77, kTax);
  CHECK(same(a.instances, b.instances));
  CHECK(a.semantic == b.semantic);
  CHECK(*a.construction.lordosis_deg == *b.construction.lordosis_deg);
  const auto c = generate_spine(spec, 78, kTax);
  CHECK_FALSE(same(a.instances, c.instances));
}

TEST_CASE("generated lordosis is recovered by measurement") {
  SynthSpec spec;
  spec.lordosis_curve_deg = 50.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = generate_spine(spec, seed, kTax);
    CHECK(*g.construction.lordosis_deg == doctest::Approx(50.0));
    CHECK(std::abs(lordosis_angle(g.chain_truth) - 50.0) <= 2.0);
  }
}

TEST_CASE("construction gaps match measured gaps") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = generate_spine(SynthSpec{}, seed, kTax);
    const auto measured = intervertebral_spaces(g.chain_truth);
    REQUIRE(measured.size() == g.construction.gaps.size());
    for (std::size_t i = 0; i < measured.size(); ++i) {
      CHECK(std::abs(measured[i].anterior - g.construction.gaps[i].anterior) <= 1.5);
      CHECK(std::abs(measured[i].posterior - g.construction.gaps[i].posterior) <= 1.5);
    }
  }
}

TEST_CASE("overlap bound holds and chains are reproduced") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    SynthSpec spec;
    spec.lumbar_count = rng.uniform_int(3, 6);
    spec.include_th12 = rng.bernoulli(0.5);
    spec.overlap_fraction = {0.0, 0.3};
    spec.overlap_probability = 0.5;
    spec.lordosis_curve_deg = rng.uniform(0, 60);
    const auto g = generate_spine(spec, seed, kTax);
    for (std::size_t a = 0; a < g.instances.count(); ++a) {
      for (std::size_t b = a + 1; b < g.instances.count(); ++b) {
        CHECK(mask_iou(g.instances[a].mask, g.instances[b].mask) <= 0.3);
      }
    }
    const auto chain = label_chain(g.instances, kTax);
    REQUIRE(chain.size() == g.chain_truth.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
      CHECK(chain.links[i].instance.id == g.chain_truth.links[i].instance.id);
      CHECK(chain.links[i].label == g.chain_truth.links[i].label);
    }
  }
}

TEST_CASE("generate_spine errors") {
  SynthSpec tiny;
  tiny.width = 60;
  tiny.height = 80;
  CHECK(code_of([&] { generate_spine(tiny, 1, kTax); }) == ErrorCode::kInfeasibleLayout);
  SynthSpec bad;
  bad.lumbar_count = 0;
  CHECK(code_of([&] { generate_spine(bad, 1, kTax); }) == ErrorCode::kInvalidArgument);
  SynthSpec inverted;
  inverted.vertebra_width = {60, 50};
  CHECK(code_of([&] { generate_spine(inverted, 1, kTax); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("perturb examples") {
  const auto g = generate_spine(SynthSpec{}, 3, kTax);
  SUBCASE("identity") {
    const auto p = perturb(g.instances, PerturbSpec{}, 5);
    CHECK(same(p, g.instances));
    const auto r = evaluate_pair(g.instances, p, EvalMode::kBinary, kTax.class_count());
    CHECK(r.pixel_accuracy == 1.0);
    CHECK(r.mean_iou == 1.0);
  }
  SUBCASE("drop everything") {
    PerturbSpec spec;
    spec.drop_probability = 1.0;
    CHECK(perturb(g.instances, spec, 5).empty());
  }
  SUBCASE("one 4-pixel extra on a 16x16 canvas") {
    InstanceSet gt(16, 16);
    gt.add({1, 1, std::nullopt, oracle::rect_mask(16, 16, 1, 1, 4, 2)});
    PerturbSpec spec;
    spec.extra_instance_count = 1;
    spec.extra_width = {2, 2};
    spec.extra_height = {2, 2};
    const auto p = perturb(gt, spec, 9);
    REQUIRE(p.count() == 2);
    CHECK(p[1].mask.count() == 4);
    CHECK(intersection_count(p[1].mask, gt[0].mask) == 0);
    CHECK(evaluate_pair(gt, p, EvalMode::kBinary, 2).pixel_accuracy == 1.0 - 4.0 / 256.0);
  }
  SUBCASE("fusion merges a neighbouring pair") {
    PerturbSpec spec;
    spec.fuse_adjacent_probability = 1.0;
    const auto p = perturb(g.instances, spec, 5);
    CHECK(p.count() < g.instances.count());
    CHECK(merge_to_binary(p).count() >= merge_to_binary(g.instances).count());
  }
  SUBCASE("scores") {
    PerturbSpec spec;
    spec.assign_scores = true;
    for (const auto& inst : perturb(g.instances, spec, 5)) {
      REQUIRE(inst.score.has_value());
      CHECK(*inst.score >= 0.5);
      CHECK(*inst.score <= 1.0);
    }
  }
  SUBCASE("determinism and invalid input") {
    PerturbSpec spec;
    spec.jitter_amplitude = 2.0;
    spec.drop_probability = 0.2;
    spec.extra_instance_count = 2;
    CHECK(same(perturb(g.instances, spec, 11), perturb(g.instances, spec, 11)));
    spec.drop_probability = 1.5;
    CHECK(code_of([&] { perturb(g.instances, spec, 11); }) == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("jitter degrades overlap with amplitude") {
  double prev = 1.0;
  for (double amp : {0.0, 2.0, 4.0}) {
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto g = generate_spine(SynthSpec{}, seed, kTax);
      PerturbSpec spec;
      spec.jitter_amplitude = amp;
      sum += evaluate_pair(g.instances, perturb(g.instances, spec, seed), EvalMode::kBinary, 2).mean_iou;
    }
    const double mean = sum / 10;
    if (amp == 0.0) CHECK(mean == 1.0);
    CHECK(mean <= prev + 0.01);
    prev = mean;
  }
}

TEST_CASE("fuse_instances joins two disjoint blocks") {
  const Instance a{1, 1, std::nullopt, oracle::rect_mask(40, 20, 2, 2, 10, 10)};
  const Instance b{2, 1, std::nullopt, oracle::rect_mask(40, 20, 25, 5, 35, 15)};
  const auto f = fuse_instances(a, b);
  CHECK(oracle::component_sizes(f.mask).size() == 1);
  CHECK(intersection_count(f.mask, a.mask) == a.mask.count());
  CHECK(intersection_count(f.mask, b.mask) == b.mask.count());
}
