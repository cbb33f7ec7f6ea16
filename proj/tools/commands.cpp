#include "commands.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "config.hpp"
#include "spineseg/annotation.hpp"
#include "spineseg/error.hpp"
#include "spineseg/instancing.hpp"
#include "spineseg/io.hpp"
#include "spineseg/metrics.hpp"
#include "spineseg/morphometry.hpp"
#include "spineseg/report.hpp"
#include "spineseg/rng.hpp"
#include "spineseg/synthgen.hpp"
#include "worker_pool.hpp"

namespace spineseg::cli {
namespace {

namespace fs = std::filesystem;

// Flags that override config-file values when given.
struct Overrides {
  std::string config_path;
  std::optional<std::string> taxonomy;
  std::optional<std::string> mode;
  std::optional<double> nms_iou;
  std::optional<int> min_area;
  std::optional<int> max_erosions;
  std::optional<double> max_gap;
  std::optional<int> kernel;
  std::optional<int> min_osteophyte_area;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<double> mm_per_px;

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (taxonomy) c.taxonomy = *taxonomy;
    if (mode) c.mode = parse_mode(*mode);
    if (nms_iou) c.nms_iou = *nms_iou;
    if (min_area) c.min_area = *min_area;
    if (max_erosions) c.max_erosions = *max_erosions;
    if (max_gap) c.max_gap = *max_gap;
    if (kernel) c.kernel = *kernel;
    if (min_osteophyte_area) c.min_osteophyte_area = *min_osteophyte_area;
    if (workers) c.workers = *workers;
    if (seed) c.seed = *seed;
    if (mm_per_px) c.mm_per_px = *mm_per_px;
    c.validate();
    return c;
  }
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "key=value configuration file");
  cmd->add_option("--taxonomy", o.taxonomy, "class list name:index,...");
}

struct Failure {
  std::string image_id;
  std::string message;
};

int report_failures(const std::vector<Failure>& failures, std::ostream& err) {
  if (failures.empty()) return 0;
  err << failures.size() << " image(s) failed:\n";
  for (const auto& f : failures) err << "  " << f.image_id << ": " << f.message << '\n';
  return 1;
}

// Ground truth or prediction for one image: an instance sidecar (.json) or
// a label mask (.png); the sidecar wins when both exist.
std::optional<fs::path> find_input(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".json", ".png"}) {
    fs::path p = dir / (id + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

std::vector<std::string> image_ids(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::set<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".json" || ext == ".png")) {
      ids.insert(entry.path().stem().string());
    }
  }
  return {ids.begin(), ids.end()};
}

LabelMask load_labels(const fs::path& path, const LabelTaxonomy& taxonomy,
                      std::optional<Size> fallback) {
  if (path.extension() == ".png") return io::read_label_png(path);
  return paint_instances(io::read_sidecar(io::read_text(path), taxonomy, fallback));
}

std::vector<std::string> class_names(const LabelTaxonomy& taxonomy, EvalMode mode) {
  if (mode == EvalMode::kBinary) return {"background", "foreground"};
  std::vector<std::string> names{"background"};
  for (const auto& e : taxonomy.entries()) names.push_back(e.name);
  return names;
}

fs::path sibling_csv(const fs::path& p) {
  fs::path out = p;
  out.replace_extension(".csv");
  if (out == p) out += ".csv";
  return out;
}

// --- rasterize ---------------------------------------------------------------

struct RasterizeArgs {
  std::string via;
  std::string out;
  std::string images;
  int width = 0;
  int height = 0;
  bool instance_pngs = false;
};

int cmd_rasterize(const RasterizeArgs& a, const RunConfig& config, std::ostream& out,
                  std::ostream& err) {
  const auto taxonomy = config.label_taxonomy();
  DimensionResolver resolve = [&](const std::string& filename) -> std::optional<Size> {
    if (!a.images.empty()) {
      if (auto s = io::png_size(fs::path(a.images) / filename)) return s;
    }
    if (a.width > 0 && a.height > 0) return Size{a.width, a.height};
    return std::nullopt;
  };
  const auto sets = parse_via(io::read_text(a.via), taxonomy, resolve);
  std::vector<Failure> failures;
  for (const auto& set : sets) {
    try {
      const auto r = rasterize(set, taxonomy);
      const fs::path dir(a.out);
      io::write_label_png(dir / (set.image_id + ".png"), r.semantic);
      io::write_atomic(dir / (set.image_id + ".json"), io::write_sidecar(r.instances, taxonomy));
      if (a.instance_pngs) {
        for (const auto& inst : r.instances) {
          io::write_binary_png(dir / fmt::format("{}_inst{:03d}.png", set.image_id, inst.id),
                               inst.mask);
        }
      }
      out << set.image_id << ": " << r.instances.count() << " instances\n";
    } catch (const Error& e) {
      failures.push_back({set.image_id, e.what()});
    }
  }
  return report_failures(failures, err);
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string gt;
  std::string pred;
  std::string out;
  std::string report;
  std::string model = "model";
};

int cmd_eval(const EvalArgs& a, const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto taxonomy = config.label_taxonomy();
  const auto ids = image_ids(a.gt);
  if (ids.empty()) throw Error(ErrorCode::kEmptyInput, "no ground truth in " + a.gt);

  std::vector<std::optional<MetricsRecord>> results(ids.size());
  std::vector<std::string> errors(ids.size());
  parallel_for(ids.size(), config.workers, [&](std::size_t i) {
    try {
      const auto gt_path = find_input(a.gt, ids[i]);
      const auto pred_path = find_input(a.pred, ids[i]);
      if (!pred_path) throw Error(ErrorCode::kIo, "no prediction found");
      const LabelMask gt = load_labels(*gt_path, taxonomy, std::nullopt);
      const LabelMask pred = load_labels(*pred_path, taxonomy, gt.size());
      results[i] = evaluate_pair(gt, pred, config.mode, taxonomy.class_count());
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  // Single reducer in image_id order.
  std::vector<std::pair<std::string, MetricsRecord>> records;
  std::vector<Failure> failures;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (results[i]) records.emplace_back(ids[i], *results[i]);
    else failures.push_back({ids[i], errors[i]});
  }
  io::write_atomic(a.out, io::metrics_csv(records, class_names(taxonomy, config.mode)));
  if (!records.empty()) {
    const auto summary = aggregate(records);
    const auto rendered = render_report({{a.model, summary}});
    if (!a.report.empty()) {
      io::write_atomic(a.report, rendered.text);
      io::write_atomic(sibling_csv(a.report), rendered.csv);
    }
    out << rendered.text;
  }
  return report_failures(failures, err);
}

// --- instances ---------------------------------------------------------------

struct InstancesArgs {
  std::string mask;
  std::string out;
  std::string class_name;
  bool no_split = false;
};

int cmd_instances(const InstancesArgs& a, const RunConfig& config, std::ostream& out) {
  const auto taxonomy = config.label_taxonomy();
  const LabelMask labels = io::read_label_png(a.mask);
  std::vector<int> classes;
  if (!a.class_name.empty()) {
    auto idx = taxonomy.index_of(a.class_name);
    if (!idx) throw Error(ErrorCode::kUnknownClass, a.class_name);
    classes.push_back(*idx);
  } else {
    std::set<int> present(labels.data().begin(), labels.data().end());
    present.erase(0);
    for (int c : present) {
      if (c >= taxonomy.class_count()) {
        throw Error(ErrorCode::kClassIndexOutOfRange, "mask value " + std::to_string(c));
      }
      classes.push_back(c);
    }
  }
  InstanceSet all(labels.size());
  int id = 1;
  for (int c : classes) {
    const auto components = connected_components(class_mask(labels, c), c, config.min_area);
    const auto parts =
        a.no_split ? components : split_all(components, config.max_erosions, config.min_area);
    for (const auto& inst : parts) {
      Instance renumbered = inst;
      renumbered.id = id++;
      all.add(std::move(renumbered));
    }
  }
  io::write_atomic(a.out, io::write_sidecar(all, taxonomy));
  out << all.count() << " instances\n";
  return 0;
}

// --- label -------------------------------------------------------------------

struct LabelArgs {
  std::string in;
  std::string out;
  bool no_nms = false;
};

int cmd_label(const LabelArgs& a, const RunConfig& config, std::ostream& out) {
  const auto taxonomy = config.label_taxonomy();
  InstanceSet set = io::read_sidecar(io::read_text(a.in), taxonomy);
  if (!a.no_nms) set = nms(set, config.nms_iou, true);
  const auto chain = label_chain(set, taxonomy, LabelOptions{config.max_gap});
  io::LabelById labels;
  for (const auto& link : chain.links) labels[link.instance.id] = link.label;
  io::write_atomic(a.out, io::write_sidecar(set, taxonomy, &labels));
  for (const auto& link : chain.links) out << to_string(link.label) << ' ';
  out << '\n';
  return 0;
}

// --- morph -------------------------------------------------------------------

VertebraChain chain_from_labels(const InstanceSet& set, const io::LabelById& labels) {
  VertebraChain chain;
  for (const auto& inst : set) {
    auto it = labels.find(inst.id);
    if (it == labels.end()) continue;
    chain.links.push_back({inst, it->second, *inst.mask.centroid()});
  }
  std::sort(chain.links.begin(), chain.links.end(),
            [](const ChainLink& x, const ChainLink& y) {
              if (x.label != y.label) return x.label < y.label;
              return x.instance.id < y.instance.id;
            });
  return chain;
}

struct MorphArgs {
  std::string in;
  std::string out;
};

int cmd_morph(const MorphArgs& a, const RunConfig& config, std::ostream& out,
              std::ostream& err) {
  const auto taxonomy = config.label_taxonomy();
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.in)) {
    for (const auto& entry : fs::directory_iterator(a.in)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        inputs.push_back(entry.path());
      }
    }
  } else {
    inputs.emplace_back(a.in);
  }
  std::sort(inputs.begin(), inputs.end());

  const MorphometryOptions options{config.kernel, config.min_osteophyte_area, config.min_area};
  std::vector<std::optional<MorphometryRecord>> results(inputs.size());
  std::vector<std::string> errors(inputs.size());
  parallel_for(inputs.size(), config.workers, [&](std::size_t i) {
    try {
      io::LabelById labels;
      const auto set = io::read_sidecar(io::read_text(inputs[i]), taxonomy, std::nullopt, &labels);
      auto record = measure_chain(chain_from_labels(set, labels), options);
      record.image_id = inputs[i].stem().string();
      results[i] = std::move(record);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::string csv = io::morphometry_csv_header();
  std::vector<Failure> failures;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!results[i]) {
      failures.push_back({inputs[i].stem().string(), errors[i]});
      continue;
    }
    io::write_atomic(fs::path(a.out) / (results[i]->image_id + ".morph.json"),
                     io::morphometry_json(*results[i], config.mm_per_px));
    csv += io::morphometry_csv_rows(*results[i]);
  }
  io::write_atomic(fs::path(a.out) / "morphometry.csv", csv);
  out << inputs.size() - failures.size() << " record(s) written\n";
  return report_failures(failures, err);
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int count = 10;
  SynthSpec spec;
  PerturbSpec perturb;
  double overlap_max = 0.0;
  bool write_pngs = true;
};

int cmd_synth(SynthArgs a, const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto taxonomy = config.label_taxonomy();
  if (a.overlap_max > 0.0) {
    a.spec.overlap_fraction = {0.0, a.overlap_max};
    if (a.spec.overlap_probability == 0.0) a.spec.overlap_probability = 0.5;
  }
  const fs::path root(a.out);
  std::vector<Failure> failures;
  for (int i = 0; i < a.count; ++i) {
    const std::string id = fmt::format("spine_{:04d}", i);
    const std::uint64_t seed = Rng::mix(config.seed, static_cast<std::uint64_t>(i));
    try {
      auto spine = generate_spine(a.spec, seed, taxonomy);
      spine.construction.image_id = id;
      io::write_atomic(root / "gt" / (id + ".json"), io::write_sidecar(spine.instances, taxonomy));
      if (a.write_pngs) io::write_label_png(root / "semantic" / (id + ".png"), spine.semantic);
      io::write_atomic(root / "truth" / (id + ".json"), io::morphometry_json(spine.construction));
      if (!spine.chain_truth.links.empty()) {
        io::write_atomic(root / "labeled" / (id + ".json"),
                         io::chain_sidecar(spine.chain_truth, spine.instances.size(), taxonomy));
      }
      const auto pred = perturb(spine.instances, a.perturb, Rng::mix(seed, 99));
      io::write_atomic(root / "pred" / (id + ".json"), io::write_sidecar(pred, taxonomy));
    } catch (const Error& e) {
      failures.push_back({id, e.what()});
    }
  }
  out << a.count - static_cast<int>(failures.size()) << " fixture(s) written to " << a.out << '\n';
  return report_failures(failures, err);
}

// --- overlay -----------------------------------------------------------------

struct OverlayArgs {
  std::string in;
  std::string out;
  std::string image;
};

int cmd_overlay(const OverlayArgs& a, const RunConfig& config) {
  const auto taxonomy = config.label_taxonomy();
  io::LabelById labels;
  std::optional<Raster<std::uint8_t>> base;
  if (!a.image.empty()) base = io::read_png(a.image);
  const auto set = io::read_sidecar(io::read_text(a.in), taxonomy,
                                    base ? std::optional<Size>(base->size()) : std::nullopt,
                                    &labels);
  std::optional<VertebraChain> chain;
  if (!labels.empty()) chain = chain_from_labels(set, labels);
  io::write_atomic(a.out, io::encode_png(render_overlay(base, set, chain)));
  return 0;
}

// --- report ------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> models;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::vector<std::pair<std::string, DatasetSummary>> summaries;
  for (const auto& spec : a.models) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "--model expects NAME=metrics.csv");
    }
    summaries.emplace_back(spec.substr(0, eq),
                           aggregate(io::parse_metrics_csv(io::read_text(spec.substr(eq + 1)))));
  }
  const auto rendered = render_report(summaries);
  if (!a.out.empty()) {
    io::write_atomic(a.out, rendered.text);
    io::write_atomic(sibling_csv(a.out), rendered.csv);
  }
  out << rendered.text;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spine segmentation evaluation and morphometry", "spineseg"};
  app.require_subcommand(1);
  Overrides o;

  RasterizeArgs rasterize_args;
  auto* rasterize_cmd = app.add_subcommand("rasterize", "VIA polygons to label masks and sidecars");
  add_common(rasterize_cmd, o);
  rasterize_cmd->add_option("--via", rasterize_args.via, "VIA project export")->required();
  rasterize_cmd->add_option("--out", rasterize_args.out, "output directory")->required();
  rasterize_cmd->add_option("--images", rasterize_args.images, "image directory for sizes");
  rasterize_cmd->add_option("--width", rasterize_args.width, "fallback image width");
  rasterize_cmd->add_option("--height", rasterize_args.height, "fallback image height");
  rasterize_cmd->add_flag("--instance-pngs", rasterize_args.instance_pngs,
                          "also write one 0/255 PNG per instance");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "metrics of predictions against ground truth");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--gt", eval_args.gt, "ground-truth directory")->required();
  eval_cmd->add_option("--pred", eval_args.pred, "prediction directory")->required();
  eval_cmd->add_option("--out", eval_args.out, "per-image metrics CSV")->required();
  eval_cmd->add_option("--report", eval_args.report, "summary table (text; CSV alongside)");
  eval_cmd->add_option("--model", eval_args.model, "column name in the summary");
  eval_cmd->add_option("--mode", o.mode, "binary | per_class");
  eval_cmd->add_option("--workers", o.workers, "worker threads");

  InstancesArgs instances_args;
  auto* instances_cmd = app.add_subcommand("instances", "semantic mask to instance sidecar");
  add_common(instances_cmd, o);
  instances_cmd->add_option("--mask", instances_args.mask, "label PNG")->required();
  instances_cmd->add_option("--out", instances_args.out, "sidecar output")->required();
  instances_cmd->add_option("--class", instances_args.class_name, "only this class");
  instances_cmd->add_option("--min-area", o.min_area, "smallest kept component");
  instances_cmd->add_option("--max-erosions", o.max_erosions, "fused-blob erosion cap");
  instances_cmd->add_flag("--no-split", instances_args.no_split, "skip fused-blob splitting");

  LabelArgs label_args;
  auto* label_cmd = app.add_subcommand("label", "anatomical labels anchored at the sacrum");
  add_common(label_cmd, o);
  label_cmd->add_option("--in", label_args.in, "instance sidecar")->required();
  label_cmd->add_option("--out", label_args.out, "labeled sidecar")->required();
  label_cmd->add_option("--nms-iou", o.nms_iou, "suppression IoU threshold");
  label_cmd->add_option("--max-gap", o.max_gap, "max step / median vertebra height");
  label_cmd->add_flag("--no-nms", label_args.no_nms, "skip non-maximum suppression");

  MorphArgs morph_args;
  auto* morph_cmd = app.add_subcommand("morph", "endplates, lordosis, gaps, osteophytes");
  add_common(morph_cmd, o);
  morph_cmd->add_option("--in", morph_args.in, "labeled sidecar or directory")->required();
  morph_cmd->add_option("--out", morph_args.out, "output directory")->required();
  morph_cmd->add_option("--kernel", o.kernel, "osteophyte opening kernel (odd)");
  morph_cmd->add_option("--min-osteophyte-area", o.min_osteophyte_area, "candidate area floor");
  morph_cmd->add_option("--mm-per-px", o.mm_per_px, "pixel spacing for reported gaps");
  morph_cmd->add_option("--workers", o.workers, "worker threads");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "synthetic ground truth and predictions");
  add_common(synth_cmd, o);
  synth_cmd->add_option("--out", synth_args.out, "fixture directory")->required();
  synth_cmd->add_option("--count", synth_args.count, "number of spines");
  synth_cmd->add_option("--seed", o.seed, "base seed");
  synth_cmd->add_option("--canvas-width", synth_args.spec.width);
  synth_cmd->add_option("--canvas-height", synth_args.spec.height);
  synth_cmd->add_option("--lumbar", synth_args.spec.lumbar_count, "3..6");
  synth_cmd->add_flag("--th12", synth_args.spec.include_th12);
  synth_cmd->add_option("--curve", synth_args.spec.lordosis_curve_deg, "lordosis in degrees");
  synth_cmd->add_option("--overlap", synth_args.overlap_max, "max overlap fraction");
  synth_cmd->add_option("--spur-probability", synth_args.spec.spur_probability);
  synth_cmd->add_flag("--cages", synth_args.spec.cages);
  synth_cmd->add_flag("--screws", synth_args.spec.screws);
  synth_cmd->add_option("--jitter", synth_args.perturb.jitter_amplitude, "prediction jitter px");
  synth_cmd->add_option("--drop", synth_args.perturb.drop_probability);
  synth_cmd->add_option("--extra", synth_args.perturb.extra_instance_count);
  synth_cmd->add_option("--fuse", synth_args.perturb.fuse_adjacent_probability);
  synth_cmd->add_flag("--scores", synth_args.perturb.assign_scores);

  OverlayArgs overlay_args;
  auto* overlay_cmd = app.add_subcommand("overlay", "render instances over an image");
  add_common(overlay_cmd, o);
  overlay_cmd->add_option("--in", overlay_args.in, "sidecar (labeled or not)")->required();
  overlay_cmd->add_option("--out", overlay_args.out, "RGB PNG output")->required();
  overlay_cmd->add_option("--image", overlay_args.image, "grayscale base image");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "summary table over models");
  report_cmd->add_option("--model", report_args.models, "NAME=metrics.csv (repeatable)")
      ->required();
  report_cmd->add_option("--out", report_args.out, "table output (text; CSV alongside)");

  std::vector<std::string> argv_tail(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_tail.begin(), argv_tail.end());
  try {
    app.parse(argv_tail);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = o.resolve();
    if (*rasterize_cmd) return cmd_rasterize(rasterize_args, config, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, config, out, err);
    if (*instances_cmd) return cmd_instances(instances_args, config, out);
    if (*label_cmd) return cmd_label(label_args, config, out);
    if (*morph_cmd) return cmd_morph(morph_args, config, out, err);
    if (*synth_cmd) return cmd_synth(synth_args, config, out, err);
    if (*overlay_cmd) return cmd_overlay(overlay_args, config);
    if (*report_cmd) return cmd_report(report_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace spineseg::cli
