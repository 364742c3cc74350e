#include "detgeo/assignment.hpp"

#include <cmath>
#include <random>
#include <string>

#include "detgeo/errors.hpp"

namespace detgeo {

void AnchorGrid::validate() const {
  if (image_w <= 0 || image_h <= 0) throw InputError("image dimensions must be positive");
  if (strides.empty()) throw InputError("anchor grid needs at least one stride");
  if (anchor_sizes.size() != strides.size()) throw InputError("anchor_sizes needs one list per stride");
  for (std::size_t i = 0; i < strides.size(); ++i) {
    const int s = strides[i];
    if (s <= 0) throw InputError("strides must be positive");
    if (s > image_w || s > image_h) {
      throw InputError("stride " + std::to_string(s) + " is larger than the image");
    }
    if (anchor_sizes[i].empty()) throw InputError("stride " + std::to_string(s) + " has no anchor sizes");
    for (const auto& a : anchor_sizes[i]) {
      if (!(a.w > 0) || !(a.h > 0) || !std::isfinite(a.w) || !std::isfinite(a.h)) {
        throw InputError("anchor sizes must be positive");
      }
    }
  }
}

AnchorGrid default_anchor_grid() {
  return {{8, 16, 32}, {{{8, 8}}, {{16, 16}}, {{32, 32}}}, 640, 640};
}

std::vector<Box> generate_anchors(const AnchorGrid& grid) {
  grid.validate();
  std::vector<Box> out;
  for (std::size_t k = 0; k < grid.strides.size(); ++k) {
    const int s = grid.strides[k];
    const int cols = grid.image_w / s;
    const int rows = grid.image_h / s;
    for (int j = 0; j < rows; ++j) {
      for (int i = 0; i < cols; ++i) {
        for (const auto& a : grid.anchor_sizes[k]) out.emplace_back((i + 0.5) * s, (j + 0.5) * s, a.w, a.h);
      }
    }
  }
  return out;
}

namespace {

// Index of the gt this anchor is positive for, or -1.
int best_gt(const Box& anchor, const std::vector<GroundTruth>& gts, MetricKind metric, double threshold,
            const CombinedParams& params) {
  int best = -1;
  double best_value = threshold;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const double v = metric_value(metric, anchor, gts[g].box, params);
    if (v > best_value || (best < 0 && v >= best_value)) {
      best = static_cast<int>(g);
      best_value = v;
    }
  }
  return best;
}

}  // namespace

AssignmentReport assign_to_anchors(const std::vector<GroundTruth>& gts, const std::vector<Box>& anchors,
                                   MetricKind metric, double threshold, const CombinedParams& params,
                                   bool parallel) {
  if (gts.empty()) throw InputError("assignment needs at least one ground truth");
  if (!(threshold > 0 && threshold < 1)) throw InputError("assignment threshold must lie in (0, 1)");
  if (metric == MetricKind::Combined) throw InputError("assignment needs a similarity, not the combined loss");
  validate(params);

  const auto n = static_cast<long long>(anchors.size());
  std::vector<int> owner(anchors.size(), -1);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long long a = 0; a < n; ++a) owner[a] = best_gt(anchors[a], gts, metric, threshold, params);
  } else {
    for (long long a = 0; a < n; ++a) owner[a] = best_gt(anchors[a], gts, metric, threshold, params);
  }

  AssignmentReport r;
  r.metric = metric;
  r.threshold = threshold;
  r.per_gt_positive_counts.assign(gts.size(), 0);
  for (int o : owner) {
    if (o >= 0) ++r.per_gt_positive_counts[o];
  }
  long long total = 0;
  for (int c : r.per_gt_positive_counts) total += c;
  r.mean_positives = static_cast<double>(total) / static_cast<double>(gts.size());
  return r;
}

AssignmentReport assign(const std::vector<GroundTruth>& gts, const AnchorGrid& grid, MetricKind metric,
                        double threshold, const CombinedParams& params) {
  return assign_to_anchors(gts, generate_anchors(grid), metric, threshold, params);
}

std::vector<GroundTruth> random_ground_truths(std::size_t count, double w, double h, int image_w, int image_h,
                                              std::uint64_t seed) {
  if (!(w > 0) || !(h > 0) || w > image_w || h > image_h) {
    throw InputError("random boxes must be positive and fit inside the image");
  }
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };
  std::vector<GroundTruth> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double cx = uniform(w / 2, image_w - w / 2);
    const double cy = uniform(h / 2, image_h - h / 2);
    out.push_back(make_ground_truth(Box(cx, cy, w, h), 0));
  }
  return out;
}

}  // namespace detgeo
