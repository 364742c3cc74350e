#pragma once

// Offset-sensitivity sweeps: the ground truth G = (0, 0, s, s) stays fixed
// while the prediction P = (d/sqrt2, d/sqrt2, k s, k s) slides along G's
// diagonal, d being the center-to-center distance and k the prediction scale.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "detgeo/metrics.hpp"

namespace detgeo {

struct SweepConfig {
  std::vector<double> box_sizes{4, 8, 16, 32};
  double max_offset = 16;
  double step = 0.5;
  double pred_scale = 1.0;
  std::vector<MetricKind> metrics{MetricKind::IoU, MetricKind::CIoU, MetricKind::NWD};

  void validate() const;
  // Offsets 0, step, 2 step, ... up to max_offset (inclusive when it lands on the grid).
  std::vector<double> offsets() const;
};

struct SweepSample {
  double offset;
  double value;
};

struct SweepCurve {
  MetricKind metric;
  double box_size;
  std::vector<SweepSample> samples;
};

// One curve per (metric, size), metric-major in config order.
std::vector<SweepCurve> sweep(const SweepConfig& cfg, const CombinedParams& params = {});

struct SmoothnessRow {
  MetricKind metric;
  double box_size;
  double max_slope;  // max |dv / d offset| over consecutive samples
};

// Throws InputError on a curve with fewer than two samples.
std::vector<SmoothnessRow> smoothness_report(const std::vector<SweepCurve>& curves);

// CSV "metric,box_size,offset,value".
void write_sweep_csv(std::ostream& out, const std::vector<SweepCurve>& curves);
std::vector<SweepCurve> parse_sweep_csv(std::istream& in, const std::string& source = "<stream>");

}  // namespace detgeo
