#include "detgeo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detgeo/errors.hpp"
#include "detgeo/metrics.hpp"

namespace detgeo {

void MatchConfig::validate() const {
  if (!(iou_threshold >= 0 && iou_threshold <= 1)) throw InputError("iou_threshold must lie in [0, 1]");
  if (!(score_threshold >= 0 && score_threshold <= 1)) throw InputError("score_threshold must lie in [0, 1]");
}

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                             const MatchConfig& cfg) {
  cfg.validate();
  MatchResult r;
  r.is_tp.assign(dets.size(), false);
  r.matched_gt.assign(dets.size(), -1);
  r.gt_matched.assign(gts.size(), false);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  for (auto d : order) {
    int best = -1;
    double best_iou = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (r.gt_matched[g]) continue;
      const double v = iou(dets[d].box, gts[g].box);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= cfg.iou_threshold) {
      r.is_tp[d] = true;
      r.matched_gt[d] = best;
      r.gt_matched[best] = true;
    }
  }
  return r;
}

std::pair<double, double> precision_recall(long long tp, long long fp, long long fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw InputError("counts must be non-negative");
  const double p = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return {p, r};
}

std::optional<double> average_precision(const PrCurve& curve, ApMode mode) {
  if (curve.gt_count == 0) return std::nullopt;
  const auto& pts = curve.points;
  if (mode == ApMode::ElevenPoint) {
    double sum = 0;
    for (int i = 0; i <= 10; ++i) {
      const double t = i / 10.0;
      double best = 0;
      for (const auto& p : pts) {
        if (p.recall >= t) best = std::max(best, p.precision);
      }
      sum += best;
    }
    return sum / 11.0;
  }
  std::vector<double> envelope(pts.size());
  double running = 0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    envelope[i] = running;
  }
  double ap = 0;
  double prev_recall = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ap += (pts[i].recall - prev_recall) * envelope[i];
    prev_recall = pts[i].recall;
  }
  return ap;
}

EvalResult evaluate(const std::vector<DetectionRecord>& dets, const std::vector<ImageGroundTruth>& gts,
                    const ClassTable& classes, const MatchConfig& cfg) {
  cfg.validate();
  const int num_classes = static_cast<int>(classes.size());
  for (const auto& d : dets) {
    if (d.det.class_id >= num_classes) {
      throw InputError("detection class id " + std::to_string(d.det.class_id) + " is not in the class table");
    }
  }

  // image id -> ground truths; images that only appear in detections have none.
  std::map<std::string, std::vector<GroundTruth>> gt_by_image;
  for (const auto& img : gts) {
    auto& dst = gt_by_image[img.image_id];
    for (const auto& g : img.objects) {
      if (g.class_id >= num_classes) {
        throw InputError(img.image_id + ": ground-truth class id " + std::to_string(g.class_id) +
                         " is not in the class table");
      }
      dst.push_back(g);
    }
  }

  // Global rank: score desc, then image id, then input index.
  std::vector<std::size_t> rank(dets.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].det.score != dets[b].det.score) return dets[a].det.score > dets[b].det.score;
    if (dets[a].image_id != dets[b].image_id) return dets[a].image_id < dets[b].image_id;
    return a < b;
  });

  std::vector<bool> is_tp(dets.size(), false);
  std::vector<std::size_t> gt_per_class(num_classes, 0);
  for (const auto& [image_id, objs] : gt_by_image) {
    for (int c = 0; c < num_classes; ++c) {
      std::vector<GroundTruth> class_gts;
      for (const auto& g : objs) {
        if (g.class_id == c) class_gts.push_back(g);
      }
      gt_per_class[c] += class_gts.size();
    }
  }

  // Per (image, class) matching, detections fed in global rank order so the
  // greedy visit order agrees with the pooled ranking.
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (auto idx : rank) groups[{dets[idx].image_id, dets[idx].det.class_id}].push_back(idx);
  for (const auto& [key, members] : groups) {
    std::vector<GroundTruth> class_gts;
    if (auto it = gt_by_image.find(key.first); it != gt_by_image.end()) {
      for (const auto& g : it->second) {
        if (g.class_id == key.second) class_gts.push_back(g);
      }
    }
    std::vector<Detection> ordered;
    ordered.reserve(members.size());
    for (auto idx : members) ordered.push_back(dets[idx].det);
    // Scores are already non-increasing, so the stable sort inside keeps this order.
    const auto m = match_detections(ordered, class_gts, cfg);
    for (std::size_t i = 0; i < members.size(); ++i) is_tp[members[i]] = m.is_tp[i];
  }

  EvalResult res;
  res.curves.resize(num_classes);
  double ap_sum = 0;
  int ap_count = 0;
  for (int c = 0; c < num_classes; ++c) {
    auto& curve = res.curves[c];
    curve.class_id = c;
    curve.gt_count = gt_per_class[c];
    long long tp = 0, fp = 0;
    for (auto idx : rank) {
      if (dets[idx].det.class_id != c) continue;
      (is_tp[idx] ? tp : fp) += 1;
      const auto [p, r] = precision_recall(tp, fp, static_cast<long long>(curve.gt_count) - tp);
      curve.points.push_back({r, p});
    }
    if (auto ap = average_precision(curve, cfg.ap_mode)) {
      res.summary.per_class_ap[c] = *ap;
      ap_sum += *ap;
      ++ap_count;
    }
  }
  res.summary.map50 = ap_count > 0 ? ap_sum / ap_count : 0.0;

  long long total_gt = 0;
  for (auto n : gt_per_class) total_gt += static_cast<long long>(n);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].det.score < cfg.score_threshold) continue;
    (is_tp[i] ? res.summary.tp : res.summary.fp) += 1;
  }
  res.summary.fn = total_gt - res.summary.tp;
  std::tie(res.summary.precision, res.summary.recall) =
      precision_recall(res.summary.tp, res.summary.fp, res.summary.fn);
  return res;
}

}  // namespace detgeo
