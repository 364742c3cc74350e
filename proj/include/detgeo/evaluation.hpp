#pragma once

// Detection evaluation at a fixed IoU matching threshold.
//
//   P = TP / (TP + FP),  R = TP / (TP + FN)   (0 when the denominator is 0)
//   AP_c  area under the monotone precision envelope, all-points integration
//   mAP   mean of AP_c over the classes that have at least one ground truth

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "detgeo/annotations.hpp"
#include "detgeo/box.hpp"

namespace detgeo {

enum class ApMode { AllPoints, ElevenPoint };

struct MatchConfig {
  double iou_threshold = 0.5;
  double score_threshold = 0.0;
  ApMode ap_mode = ApMode::AllPoints;

  void validate() const;
};

struct MatchResult {
  std::vector<bool> is_tp;       // per detection, input order
  std::vector<int> matched_gt;   // per detection, -1 when FP
  std::vector<bool> gt_matched;  // per ground truth
};

/// Greedy one-to-one matching for a single image and class. Detections are
/// visited by descending score (input order on ties); each takes the unmatched
/// gt with the highest IoU (lowest index on ties) if that IoU reaches the
/// threshold.
MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                             const MatchConfig& cfg = {});

std::pair<double, double> precision_recall(long long tp, long long fp, long long fn);

struct PrPoint {
  double recall;
  double precision;
};

struct PrCurve {
  int class_id = 0;
  std::size_t gt_count = 0;
  std::vector<PrPoint> points;  // one per ranked detection
};

// Empty when the class has no ground truth.
std::optional<double> average_precision(const PrCurve& curve, ApMode mode = ApMode::AllPoints);

struct ImageGroundTruth {
  std::string image_id;
  std::vector<GroundTruth> objects;
};

struct EvalSummary {
  std::map<int, double> per_class_ap;  // classes with at least one gt
  double map50 = 0;
  double precision = 0;
  double recall = 0;
  long long tp = 0, fp = 0, fn = 0;
};

struct EvalResult {
  EvalSummary summary;
  std::vector<PrCurve> curves;  // one per class-table entry
};

/// Pools every image per class. Detections are ranked by (score desc,
/// image_id, input index). Throws InputError for class ids outside the table.
EvalResult evaluate(const std::vector<DetectionRecord>& dets, const std::vector<ImageGroundTruth>& gts,
                    const ClassTable& classes, const MatchConfig& cfg = {});

}  // namespace detgeo
