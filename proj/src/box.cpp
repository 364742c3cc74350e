#include "detgeo/box.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "detgeo/errors.hpp"

namespace detgeo {

namespace {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) {
    throw InputError(std::string("box field ") + field + " is not finite");
  }
}

}  // namespace

Box::Box(double cx, double cy, double w, double h) : cx_(cx), cy_(cy), w_(w), h_(h) {
  require_finite(cx, "cx");
  require_finite(cy, "cy");
  require_finite(w, "w");
  require_finite(h, "h");
  if (!(w > 0.0)) {
    std::ostringstream os;
    os << "box width must be positive, got " << w;
    throw InputError(os.str());
  }
  if (!(h > 0.0)) {
    std::ostringstream os;
    os << "box height must be positive, got " << h;
    throw InputError(os.str());
  }
}

CornerBox to_corner(const Box& b) {
  return {b.cx() - b.w() / 2, b.cy() - b.h() / 2, b.cx() + b.w() / 2, b.cy() + b.h() / 2};
}

Box from_corner(const CornerBox& c) {
  require_finite(c.xmin, "xmin");
  require_finite(c.ymin, "ymin");
  require_finite(c.xmax, "xmax");
  require_finite(c.ymax, "ymax");
  if (!(c.xmax > c.xmin)) throw InputError("degenerate rectangle: zero or negative width");
  if (!(c.ymax > c.ymin)) throw InputError("degenerate rectangle: zero or negative height");
  return {(c.xmin + c.xmax) / 2, (c.ymin + c.ymax) / 2, c.xmax - c.xmin, c.ymax - c.ymin};
}

GroundTruth make_ground_truth(const Box& box, int class_id) {
  if (class_id < 0) throw InputError("class_id must be non-negative");
  return {box, class_id};
}

Detection make_detection(const Box& box, int class_id, double score) {
  if (class_id < 0) throw InputError("class_id must be non-negative");
  if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
    throw InputError("detection score must lie in [0, 1]");
  }
  return {box, class_id, score};
}

std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "unknown";
}

SizeClass classify_size(double rel_w, double rel_h) {
  const double extent = std::max(rel_w, rel_h);
  if (extent < kSmallSizeLimit) return SizeClass::Small;
  if (extent > kLargeSizeLimit) return SizeClass::Large;
  return SizeClass::Medium;
}

SizeRecord size_record(const GroundTruth& gt, double image_w, double image_h) {
  if (!std::isfinite(image_w) || !std::isfinite(image_h) || image_w <= 0 || image_h <= 0) {
    throw InputError("image dimensions must be positive");
  }
  const auto c = to_corner(gt.box);
  const bool overhangs = c.xmin < 0 || c.ymin < 0 || c.xmax > image_w || c.ymax > image_h;
  const double rel_w = gt.box.w() / image_w;
  const double rel_h = gt.box.h() / image_h;
  return {rel_w, rel_h, classify_size(rel_w, rel_h), overhangs};
}

}  // namespace detgeo
