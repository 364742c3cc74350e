#pragma once

#include <cstdint>
#include <vector>

#include "detgeo/box.hpp"
#include "detgeo/metrics.hpp"

namespace detgeo {

struct AnchorSize {
  double w;
  double h;
};

struct AnchorGrid {
  std::vector<int> strides;
  std::vector<std::vector<AnchorSize>> anchor_sizes;  // one list per stride
  int image_w = 0;
  int image_h = 0;

  // Throws InputError: mismatched lists, non-positive values, stride larger than the image.
  void validate() const;
};

// 640x640, strides 8/16/32, one square anchor per stride with side = stride.
AnchorGrid default_anchor_grid();

/// Row-major per stride: for each stride, rows j, columns i, then sizes.
/// Centers at ((i + 0.5) s, (j + 0.5) s); floor(W/s) * floor(H/s) cells.
std::vector<Box> generate_anchors(const AnchorGrid& grid);

struct AssignmentReport {
  std::vector<int> per_gt_positive_counts;
  double mean_positives = 0;
  MetricKind metric = MetricKind::IoU;
  double threshold = 0;
};

/// Each anchor goes to the ground truth with the highest metric value (lowest
/// index on ties) provided that value reaches `threshold`.
/// Throws InputError on empty gts, threshold outside (0, 1) or metric Combined.
AssignmentReport assign(const std::vector<GroundTruth>& gts, const AnchorGrid& grid, MetricKind metric,
                        double threshold, const CombinedParams& params = {});

// Same over an explicit anchor list. `parallel` selects the OpenMP kernel.
AssignmentReport assign_to_anchors(const std::vector<GroundTruth>& gts, const std::vector<Box>& anchors,
                                   MetricKind metric, double threshold, const CombinedParams& params = {},
                                   bool parallel = true);

/// `count` boxes of side w x h with centers uniform over positions that keep
/// the box inside the image. Deterministic in `seed`.
std::vector<GroundTruth> random_ground_truths(std::size_t count, double w, double h, int image_w, int image_h,
                                              std::uint64_t seed);

}  // namespace detgeo
