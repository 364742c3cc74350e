#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "detgeo/annotations.hpp"
#include "detgeo/assignment.hpp"
#include "detgeo/errors.hpp"
#include "detgeo/evaluation.hpp"
#include "detgeo/format.hpp"
#include "detgeo/fusion.hpp"
#include "detgeo/metrics.hpp"
#include "detgeo/shift.hpp"
#include "detgeo/sweep.hpp"
#include "json.hpp"
#include "manifest.hpp"

namespace detgeo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw InputError("malformed " + what + ": '" + text + "'");
  }
  return v;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number(item, what));
  if (out.empty()) throw InputError(what + " list is empty");
  return out;
}

std::vector<MetricKind> parse_metric_list(const std::string& text) {
  std::vector<MetricKind> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_metric_kind(item));
  if (out.empty()) throw InputError("metric list is empty");
  return out;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) { open_output(path) << dump_json(j) << '\n'; }

std::string sanitize(const std::string& name) {
  std::string out;
  for (unsigned char c : name) out.push_back(std::isalnum(c) || c == '-' || c == '_' ? static_cast<char>(c) : '_');
  return out;
}

struct Common {
  std::string out_dir;
  std::string manifest;

  fs::path dir() const { return out_dir; }
  fs::path manifest_path(const std::string& cmd) const {
    return manifest.empty() ? dir() / (cmd + ".manifest.json") : fs::path(manifest);
  }
  fs::path resolve(const std::string& given, const std::string& fallback) const {
    return given.empty() ? dir() / fallback : fs::path(given);
  }
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--out-dir", common.out_dir, std::string("Output directory (default $") + kOutDirEnv + " or .)");
  sub->add_option("--manifest", common.manifest, "Run manifest path (default <out-dir>/<command>.manifest.json)");
}

// metric ---------------------------------------------------------------------

struct MetricArgs {
  std::string kind = "iou";
  std::string p, g;
  double c = kDefaultNwdConstant;
  double beta = kDefaultBeta;
  bool grad = false;
  std::string grad_mode = "exact";
  int digits = 9;
};

void cmd_metric(const MetricArgs& a, const Common& common, std::ostream& out) {
  const auto kind = parse_metric_kind(a.kind);
  const Box p = parse_box(a.p);
  const Box g = parse_box(a.g);
  const CombinedParams params{a.beta, {a.c}};
  validate(params);
  const double value = metric_value(kind, p, g, params);
  if (a.digits < 1 || a.digits > 17) throw InputError("--digits must lie in [1, 17]");
  out << format_fixed(value, a.digits) << '\n';

  RunManifest m;
  m.subcommand = "metric";
  m.parameters = {{"kind", std::string(to_string(kind))}, {"p", a.p}, {"g", a.g}, {"c", a.c},
                  {"beta", a.beta}, {"grad", a.grad}};
  m.parameters["value"] = value;
  if (a.grad) {
    GradMode mode;
    if (a.grad_mode == "exact") {
      mode = GradMode::Exact;
    } else if (a.grad_mode == "alpha-detached") {
      mode = GradMode::AlphaDetached;
    } else {
      throw InputError("--grad-mode must be exact or alpha-detached");
    }
    const Grad8 gr = grad(kind, p, g, params, mode);
    static constexpr const char* names[] = {"cx_p", "cy_p", "w_p", "h_p", "cx_g", "cy_g", "w_g", "h_g"};
    json jg = json::object();
    for (std::size_t i = 0; i < 8; ++i) {
      out << "d/d" << names[i] << ' ' << format_real(gr[i]) << '\n';
      jg[names[i]] = gr[i];
    }
    m.parameters["grad_mode"] = a.grad_mode;
    m.parameters["gradient"] = jg;
  }
  m.write(common.manifest_path("metric"));
}

// sweep ----------------------------------------------------------------------

struct SweepArgs {
  std::string sizes = "4,8,16,32";
  double max_offset = 16;
  double step = 0.5;
  double pred_scale = 1.0;
  std::string metrics = "iou,ciou,nwd";
  double c = kDefaultNwdConstant;
  double beta = kDefaultBeta;
  std::string out;
  std::string smoothness;
};

void cmd_sweep(const SweepArgs& a, const Common& common, std::ostream& out) {
  SweepConfig cfg;
  cfg.box_sizes = parse_number_list(a.sizes, "box size");
  cfg.max_offset = a.max_offset;
  cfg.step = a.step;
  cfg.pred_scale = a.pred_scale;
  cfg.metrics = parse_metric_list(a.metrics);
  const CombinedParams params{a.beta, {a.c}};
  const auto curves = sweep(cfg, params);
  const auto report = smoothness_report(curves);

  const auto csv_path = common.resolve(a.out, "sweep.csv");
  {
    auto f = open_output(csv_path);
    write_sweep_csv(f, curves);
  }
  json rows = json::array();
  for (const auto& r : report) {
    rows.push_back({{"metric", std::string(to_string(r.metric))},
                    {"box_size", r.box_size},
                    {"max_slope", r.max_slope}});
  }
  const auto smooth_path = common.resolve(a.smoothness, "smoothness.json");
  write_json(smooth_path, {{"smoothness", rows}});

  std::size_t samples = 0;
  for (const auto& c : curves) samples += c.samples.size();
  out << "wrote " << samples << " rows to " << csv_path.string() << '\n';

  RunManifest m;
  m.subcommand = "sweep";
  m.parameters = {{"sizes", cfg.box_sizes}, {"max_offset", a.max_offset}, {"step", a.step},
                  {"pred_scale", a.pred_scale}, {"metrics", a.metrics}, {"c", a.c}, {"beta", a.beta},
                  {"csv", csv_path.string()}, {"smoothness", smooth_path.string()}};
  m.write(common.manifest_path("sweep"));
}

// eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string gt_dir, dets, classes;
  double iou_threshold = 0.5;
  double score_threshold = 0.0;
  std::string ap_mode = "all-points";
};

void cmd_eval(const EvalArgs& a, const Common& common, std::ostream& out) {
  const auto table = read_class_table(a.classes);
  const auto anns = read_voc_dir(a.gt_dir);
  std::vector<ImageGroundTruth> gts;
  for (const auto& ann : anns) gts.push_back({ann.image_id, to_ground_truths(ann, table)});
  const auto dets = read_detections(a.dets, table);

  MatchConfig cfg;
  cfg.iou_threshold = a.iou_threshold;
  cfg.score_threshold = a.score_threshold;
  if (a.ap_mode == "all-points") {
    cfg.ap_mode = ApMode::AllPoints;
  } else if (a.ap_mode == "11-point") {
    cfg.ap_mode = ApMode::ElevenPoint;
  } else {
    throw InputError("--ap-mode must be all-points or 11-point");
  }
  const auto res = evaluate(dets, gts, table, cfg);

  json per_class = json::object();
  for (const auto& [id, ap] : res.summary.per_class_ap) per_class[table.names()[id]] = ap;
  const json summary = {{"map50", res.summary.map50},
                        {"precision", res.summary.precision},
                        {"recall", res.summary.recall},
                        {"tp", res.summary.tp},
                        {"fp", res.summary.fp},
                        {"fn", res.summary.fn},
                        {"per_class_ap", per_class},
                        {"classes_evaluated", res.summary.per_class_ap.size()}};
  write_json(common.dir() / "summary.json", summary);
  for (const auto& curve : res.curves) {
    auto f = open_output(common.dir() / ("pr_" + sanitize(table.names()[curve.class_id]) + ".csv"));
    f << "recall,precision\n";
    for (const auto& p : curve.points) f << format_real(p.recall) << ',' << format_real(p.precision) << '\n';
  }
  out << "map50 " << format_real(res.summary.map50) << '\n';

  RunManifest m;
  m.subcommand = "eval";
  m.parameters = {{"gt_dir", a.gt_dir}, {"dets", a.dets}, {"classes", a.classes},
                  {"iou_threshold", a.iou_threshold}, {"score_threshold", a.score_threshold},
                  {"ap_mode", a.ap_mode}};
  m.add_input(a.gt_dir);
  m.add_input(a.dets);
  m.add_input(a.classes);
  m.write(common.manifest_path("eval"));
}

// assign ---------------------------------------------------------------------

struct AssignArgs {
  int image_w = 640;
  int image_h = 640;
  std::string strides = "8,16,32";
  std::string anchor_sizes;  // "8x8;16x16;32x32", comma-separated sizes within a stride
  std::string metric = "ciou";
  double threshold = 0.5;
  double c = kDefaultNwdConstant;
  std::size_t count = 1000;
  double box_w = 6;
  double box_h = 6;
  std::uint64_t seed = 0;
  std::string gt_dir;
  std::string out;
};

AnchorSize parse_anchor_size(const std::string& text) {
  const auto parts = split(text, 'x');
  if (parts.size() != 2) throw InputError("anchor size must look like WxH, got '" + text + "'");
  return {parse_number(parts[0], "anchor width"), parse_number(parts[1], "anchor height")};
}

void cmd_assign(const AssignArgs& a, const Common& common, std::ostream& out) {
  AnchorGrid grid;
  grid.image_w = a.image_w;
  grid.image_h = a.image_h;
  for (double s : parse_number_list(a.strides, "stride")) {
    if (s != std::floor(s)) throw InputError("strides must be integers");
    grid.strides.push_back(static_cast<int>(s));
  }
  if (a.anchor_sizes.empty()) {
    for (int s : grid.strides) grid.anchor_sizes.push_back({{static_cast<double>(s), static_cast<double>(s)}});
  } else {
    for (const auto& group : split(a.anchor_sizes, ';')) {
      std::vector<AnchorSize> sizes;
      for (const auto& item : split(group, ',')) sizes.push_back(parse_anchor_size(item));
      grid.anchor_sizes.push_back(std::move(sizes));
    }
  }
  const auto metric = parse_metric_kind(a.metric);
  const CombinedParams params{kDefaultBeta, {a.c}};

  std::vector<GroundTruth> gts;
  if (!a.gt_dir.empty()) {
    for (const auto& ann : read_voc_dir(a.gt_dir)) {
      for (const auto& obj : ann.objects) gts.push_back(make_ground_truth(obj.box, 0));
    }
  } else {
    gts = random_ground_truths(a.count, a.box_w, a.box_h, a.image_w, a.image_h, a.seed);
  }
  const auto report = assign(gts, grid, metric, a.threshold, params);

  const json j = {{"metric", std::string(to_string(report.metric))},
                  {"threshold", report.threshold},
                  {"mean_positives", report.mean_positives},
                  {"gt_count", report.per_gt_positive_counts.size()},
                  {"anchor_count", generate_anchors(grid).size()},
                  {"per_gt_positive_counts", report.per_gt_positive_counts}};
  const auto path = common.resolve(a.out, "assignment.json");
  write_json(path, j);
  out << "mean_positives " << format_real(report.mean_positives) << '\n';

  RunManifest m;
  m.subcommand = "assign";
  m.parameters = {{"image_w", a.image_w}, {"image_h", a.image_h}, {"strides", a.strides},
                  {"anchor_sizes", a.anchor_sizes}, {"metric", a.metric}, {"threshold", a.threshold},
                  {"c", a.c}, {"count", a.count}, {"box_w", a.box_w}, {"box_h", a.box_h},
                  {"seed", a.seed}, {"gt_dir", a.gt_dir}, {"report", path.string()}};
  if (!a.gt_dir.empty()) m.add_input(a.gt_dir);
  m.write(common.manifest_path("assign"));
}

// shift ----------------------------------------------------------------------

struct ShiftArgs {
  std::string dir_a, dir_b, hist_a, hist_b, out;
};

void cmd_shift(const ShiftArgs& a, const Common& common, std::ostream& out) {
  const bool dirs = !a.dir_a.empty() || !a.dir_b.empty();
  const bool hists = !a.hist_a.empty() || !a.hist_b.empty();
  if (dirs == hists) throw InputError("give either --dir-a/--dir-b or --hist-a/--hist-b");
  Histogram p = Histogram::from_probs({1.0});
  Histogram q = p;
  RunManifest m;
  m.subcommand = "shift";
  if (dirs) {
    if (a.dir_a.empty() || a.dir_b.empty()) throw InputError("both --dir-a and --dir-b are required");
    const auto fa = list_images(a.dir_a);
    const auto fb = list_images(a.dir_b);
    if (fa.empty()) throw InputError(a.dir_a + " contains no .pgm/.png images");
    if (fb.empty()) throw InputError(a.dir_b + " contains no .pgm/.png images");
    p = intensity_histogram_of_files(fa);
    q = intensity_histogram_of_files(fb);
    m.parameters = {{"dir_a", a.dir_a}, {"dir_b", a.dir_b}};
    m.add_input(a.dir_a);
    m.add_input(a.dir_b);
  } else {
    if (a.hist_a.empty() || a.hist_b.empty()) throw InputError("both --hist-a and --hist-b are required");
    p = read_histogram_csv(a.hist_a);
    q = read_histogram_csv(a.hist_b);
    m.parameters = {{"hist_a", a.hist_a}, {"hist_b", a.hist_b}};
    m.add_input(a.hist_a);
    m.add_input(a.hist_b);
  }
  const double js = js_divergence(p, q);
  const auto path = common.resolve(a.out, "shift.json");
  write_json(path, {{"js_divergence", js}, {"bins", p.bin_count()}, {"log_base", "e"}});
  out << "js_divergence " << format_real(js) << '\n';
  m.parameters["report"] = path.string();
  m.write(common.manifest_path("shift"));
}

// sizes ----------------------------------------------------------------------

struct SizesArgs {
  std::string gt_dir, out, totals;
};

void cmd_sizes(const SizesArgs& a, const Common& common, std::ostream& out, std::ostream& err) {
  const auto anns = read_voc_dir(a.gt_dir);
  const auto csv_path = common.resolve(a.out, "sizes.csv");
  const auto totals_path = common.resolve(a.totals, "class_totals.csv");
  std::map<std::string, std::array<long long, 3>> totals;
  std::size_t rows = 0;
  {
    auto f = open_output(csv_path);
    f << "rel_w,rel_h,size_class\n";
    for (const auto& ann : anns) {
      if (!ann.width || !ann.height) throw InputError(ann.image_id + ": missing <size> width/height");
      for (const auto& obj : ann.objects) {
        const auto rec = size_record(make_ground_truth(obj.box, 0), *ann.width, *ann.height);
        if (rec.overhangs) {
          err << "warning: " << ann.image_id << ": box of class '" << obj.name << "' extends past the image border\n";
        }
        f << format_real(rec.rel_w) << ',' << format_real(rec.rel_h) << ',' << to_string(rec.size_class) << '\n';
        ++totals[obj.name][static_cast<int>(rec.size_class)];
        ++rows;
      }
    }
  }
  {
    auto f = open_output(totals_path);
    f << "class,small,medium,large,total\n";
    for (const auto& [name, t] : totals) {
      f << name << ',' << t[0] << ',' << t[1] << ',' << t[2] << ',' << (t[0] + t[1] + t[2]) << '\n';
    }
  }
  out << "wrote " << rows << " boxes to " << csv_path.string() << '\n';

  RunManifest m;
  m.subcommand = "sizes";
  m.parameters = {{"gt_dir", a.gt_dir}, {"csv", csv_path.string()}, {"totals", totals_path.string()}};
  m.add_input(a.gt_dir);
  m.write(common.manifest_path("sizes"));
}

// fuse -----------------------------------------------------------------------

struct FuseArgs {
  std::string spec, weights, input, out, report, save_weights;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> input_seed;
};

void cmd_fuse(const FuseArgs& a, const Common& common, std::ostream& out) {
  const PyramidSpec spec = a.spec.empty() ? default_pyramid_spec() : read_pyramid_spec(a.spec);
  if (a.weights.empty() == !a.seed.has_value()) throw InputError("give exactly one of --weights or --seed");
  if (a.input.empty() == !a.input_seed.has_value()) throw InputError("give exactly one of --input or --input-seed");

  const FusionWeights weights =
      a.weights.empty() ? seeded_weights(spec, *a.seed) : weights_from_tensors(spec, read_tensor_file(a.weights));
  Pyramid inputs;
  if (a.input.empty()) {
    inputs = seeded_pyramid(spec, *a.input_seed);
  } else {
    const auto tensors = read_tensor_file(a.input);
    for (const auto& level : spec.levels) {
      const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const Tensor& t) { return t.name == level.id; });
      if (it == tensors.end()) throw InputError(a.input + ": missing tensor for level " + level.id);
      inputs.push_back(to_feature_map(*it));
    }
  }
  const Pyramid outputs = forward(spec, inputs, weights);

  std::vector<Tensor> tensors;
  json levels = json::array();
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    tensors.push_back(to_tensor(spec.levels[i].id, outputs[i]));
    levels.push_back({{"id", spec.levels[i].id},
                      {"input_shape", {inputs[i].channels(), inputs[i].height(), inputs[i].width()}},
                      {"output_shape", {outputs[i].channels(), outputs[i].height(), outputs[i].width()}}});
  }
  const auto out_path = common.resolve(a.out, "fused.dgt");
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_tensor_file(out_path, tensors);
  if (!a.save_weights.empty()) write_tensor_file(a.save_weights, weights_to_tensors(weights));

  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(pyramid_hash(outputs)));
  const json report = {{"levels", levels}, {"output_hash", hash}};
  const auto report_path = common.resolve(a.report, "shapes.json");
  write_json(report_path, report);
  for (const auto& l : levels) out << l["id"].get<std::string>() << ' ' << l["output_shape"].dump() << '\n';

  RunManifest m;
  m.subcommand = "fuse";
  m.parameters = {{"spec", a.spec.empty() ? json(to_json(spec)) : json(a.spec)},
                  {"weights", a.weights},
                  {"input", a.input},
                  {"output", out_path.string()},
                  {"report", report_path.string()}};
  if (a.seed) m.parameters["seed"] = *a.seed;
  if (a.input_seed) m.parameters["input_seed"] = *a.input_seed;
  if (!a.spec.empty()) m.add_input(a.spec);
  if (!a.weights.empty()) m.add_input(a.weights);
  if (!a.input.empty()) m.add_input(a.input);
  m.write(common.manifest_path("fuse"));
}

}  // namespace

Box parse_box(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw InputError("box must be 'cx,cy,w,h', got '" + text + "'");
  return Box(parse_number(parts[0], "box cx"), parse_number(parts[1], "box cy"), parse_number(parts[2], "box w"),
             parse_number(parts[3], "box h"));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detection geometry toolkit: box metrics, evaluation, assignment, shift and fusion"};
  app.require_subcommand(1);

  Common common;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    common.out_dir = env;
  } else {
    common.out_dir = ".";
  }

  MetricArgs ma;
  auto* metric = app.add_subcommand("metric", "Evaluate one metric on a box pair");
  metric->add_option("--kind", ma.kind, "iou|giou|diou|ciou|eiou|siou|nwd|combined");
  metric->add_option("--p", ma.p, "Predicted box cx,cy,w,h")->required();
  metric->add_option("--g", ma.g, "Ground-truth box cx,cy,w,h")->required();
  metric->add_option("--c", ma.c, "NWD normalization constant");
  metric->add_option("--beta", ma.beta, "Combined-loss NWD weight");
  metric->add_flag("--grad", ma.grad, "Also print the analytic gradient");
  metric->add_option("--grad-mode", ma.grad_mode, "exact|alpha-detached");
  metric->add_option("--digits", ma.digits, "Decimals printed for the value (default 9)");
  add_common(metric, common);

  SweepArgs sa;
  auto* sw = app.add_subcommand("sweep", "Diagonal offset sweep of box metrics");
  sw->add_option("--sizes", sa.sizes, "Ground-truth side lengths");
  sw->add_option("--max-offset", sa.max_offset, "Largest center distance (px)");
  sw->add_option("--step", sa.step, "Offset step (px)");
  sw->add_option("--pred-scale", sa.pred_scale, "Predicted side / ground-truth side");
  sw->add_option("--metrics", sa.metrics, "Comma-separated metric kinds");
  sw->add_option("--c", sa.c, "NWD normalization constant");
  sw->add_option("--beta", sa.beta, "Combined-loss NWD weight");
  sw->add_option("--out", sa.out, "CSV path (default <out-dir>/sweep.csv)");
  sw->add_option("--smoothness", sa.smoothness, "Smoothness JSON path (default <out-dir>/smoothness.json)");
  add_common(sw, common);

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Precision, recall, AP and mAP@0.5");
  ev->add_option("--gt-dir", ea.gt_dir, "Directory of VOC XML files")->required();
  ev->add_option("--dets", ea.dets, "Detections, one JSON object per line")->required();
  ev->add_option("--classes", ea.classes, "Class table, one name per line")->required();
  ev->add_option("--iou-threshold", ea.iou_threshold, "IoU needed for a match");
  ev->add_option("--score-threshold", ea.score_threshold, "Score cut for the summary P/R");
  ev->add_option("--ap-mode", ea.ap_mode, "all-points|11-point");
  add_common(ev, common);

  AssignArgs aa;
  auto* as = app.add_subcommand("assign", "Anchor positive-sample assignment statistics");
  as->add_option("--image-w", aa.image_w);
  as->add_option("--image-h", aa.image_h);
  as->add_option("--strides", aa.strides, "Comma-separated strides");
  as->add_option("--anchor-sizes", aa.anchor_sizes, "Per-stride sizes, e.g. 8x8;16x16;32x32 (default side = stride)");
  as->add_option("--metric", aa.metric, "Similarity used for assignment");
  as->add_option("--threshold", aa.threshold, "Minimum similarity for a positive");
  as->add_option("--c", aa.c, "NWD normalization constant");
  as->add_option("--count", aa.count, "Number of random ground-truth boxes");
  as->add_option("--box-w", aa.box_w, "Random box width");
  as->add_option("--box-h", aa.box_h, "Random box height");
  auto* seed_opt = as->add_option("--seed", aa.seed, "Seed for random placement");
  auto* gtdir_opt = as->add_option("--gt-dir", aa.gt_dir, "Use VOC boxes instead of random ones");
  seed_opt->excludes(gtdir_opt);
  as->add_option("--out", aa.out, "Report path (default <out-dir>/assignment.json)");
  add_common(as, common);

  ShiftArgs sh;
  auto* shift = app.add_subcommand("shift", "JS divergence between two intensity distributions");
  shift->add_option("--dir-a", sh.dir_a, "First image directory (.pgm/.png)");
  shift->add_option("--dir-b", sh.dir_b, "Second image directory");
  shift->add_option("--hist-a", sh.hist_a, "First histogram CSV (bin,count)");
  shift->add_option("--hist-b", sh.hist_b, "Second histogram CSV");
  shift->add_option("--out", sh.out, "Report path (default <out-dir>/shift.json)");
  add_common(shift, common);

  SizesArgs sz;
  auto* sizes = app.add_subcommand("sizes", "Relative box sizes and per-class totals");
  sizes->add_option("--gt-dir", sz.gt_dir, "Directory of VOC XML files")->required();
  sizes->add_option("--out", sz.out, "Per-box CSV (default <out-dir>/sizes.csv)");
  sizes->add_option("--totals", sz.totals, "Per-class totals CSV (default <out-dir>/class_totals.csv)");
  add_common(sizes, common);

  FuseArgs fa;
  auto* fuse = app.add_subcommand("fuse", "Gather-and-distribute forward pass over a p2..p6 pyramid");
  fuse->add_option("--spec", fa.spec, "Pyramid spec JSON (default built-in 64x64 spec)");
  fuse->add_option("--weights", fa.weights, "Weights tensor file");
  fuse->add_option("--seed", fa.seed, "Seed for generated weights");
  fuse->add_option("--input", fa.input, "Input tensors file (tensors named p2..p6)");
  fuse->add_option("--input-seed", fa.input_seed, "Seed for generated inputs");
  fuse->add_option("--out", fa.out, "Output tensors file (default <out-dir>/fused.dgt)");
  fuse->add_option("--report", fa.report, "Shape report JSON (default <out-dir>/shapes.json)");
  fuse->add_option("--save-weights", fa.save_weights, "Write the weights used to this file");
  add_common(fuse, common);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*metric) cmd_metric(ma, common, out);
    else if (*sw) cmd_sweep(sa, common, out);
    else if (*ev) cmd_eval(ea, common, out);
    else if (*as) {
      if (aa.gt_dir.empty() && seed_opt->count() == 0) throw InputError("assign needs --seed (or --gt-dir)");
      cmd_assign(aa, common, out);
    } else if (*shift) cmd_shift(sh, common, out);
    else if (*sizes) cmd_sizes(sz, common, out, err);
    else if (*fuse) cmd_fuse(fa, common, out);
    return kOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const NonDifferentiableError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace detgeo::cli
