#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace detgeo {

struct CornerBox;

/// Axis-aligned rectangle in center-size form, pixel units.
///
/// Every metric in the library is written against (cx, cy, w, h). Construction
/// rejects non-finite fields and non-positive extents, so code holding a Box can
/// assume w > 0 and h > 0.
class Box {
 public:
  Box(double cx, double cy, double w, double h);

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double area() const { return w_ * h_; }

  Box translated(double dx, double dy) const { return {cx_ + dx, cy_ + dy, w_, h_}; }
  Box scaled(double s) const { return {cx_ * s, cy_ * s, w_ * s, h_ * s}; }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double cx_, cy_, w_, h_;
};

/// Corner form, used only at I/O boundaries (VOC files, detection records).
struct CornerBox {
  double xmin, ymin, xmax, ymax;

  friend bool operator==(const CornerBox&, const CornerBox&) = default;
};

CornerBox to_corner(const Box& b);

// Throws InputError for non-finite values or xmax <= xmin / ymax <= ymin.
Box from_corner(const CornerBox& c);

struct GroundTruth {
  Box box;
  int class_id;
};

struct Detection {
  Box box;
  int class_id;
  double score;
};

// Validating constructors for the record types.
GroundTruth make_ground_truth(const Box& box, int class_id);
Detection make_detection(const Box& box, int class_id, double score);

enum class SizeClass { Small, Medium, Large };

std::string_view to_string(SizeClass s);

inline constexpr double kSmallSizeLimit = 0.20;
inline constexpr double kLargeSizeLimit = 0.60;

struct SizeRecord {
  double rel_w;
  double rel_h;
  SizeClass size_class;
  // Box extends past the image border. Kept as-is, never clipped.
  bool overhangs;
};

// Strict thresholds on max(rel_w, rel_h): < 0.20 small, > 0.60 large.
SizeClass classify_size(double rel_w, double rel_h);

SizeRecord size_record(const GroundTruth& gt, double image_w, double image_h);

}  // namespace detgeo
