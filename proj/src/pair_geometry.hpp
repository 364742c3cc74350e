#pragma once

#include <algorithm>

#include "detgeo/box.hpp"

namespace detgeo::detail {

// Shared intermediate quantities for the IoU family.
struct PairGeometry {
  double px1, py1, px2, py2;
  double gx1, gy1, gx2, gy2;
  double iw_raw, ih_raw;  // signed overlap extents
  double iw, ih;          // clamped at 0
  double inter, area_p, area_g, uni, iou;
  double cw, ch;          // smallest enclosing box
  double dx, dy;          // center offset p - g
  double rho2, c2;

  PairGeometry(const Box& p, const Box& g) {
    px1 = p.cx() - p.w() / 2;
    px2 = p.cx() + p.w() / 2;
    py1 = p.cy() - p.h() / 2;
    py2 = p.cy() + p.h() / 2;
    gx1 = g.cx() - g.w() / 2;
    gx2 = g.cx() + g.w() / 2;
    gy1 = g.cy() - g.h() / 2;
    gy2 = g.cy() + g.h() / 2;
    iw_raw = std::min(px2, gx2) - std::max(px1, gx1);
    ih_raw = std::min(py2, gy2) - std::max(py1, gy1);
    iw = std::max(0.0, iw_raw);
    ih = std::max(0.0, ih_raw);
    inter = iw * ih;
    area_p = p.w() * p.h();
    area_g = g.w() * g.h();
    uni = area_p + area_g - inter;
    iou = inter / uni;
    cw = std::max(px2, gx2) - std::min(px1, gx1);
    ch = std::max(py2, gy2) - std::min(py1, gy1);
    dx = p.cx() - g.cx();
    dy = p.cy() - g.cy();
    rho2 = dx * dx + dy * dy;
    c2 = cw * cw + ch * ch;
  }
};

inline constexpr double kFourOverPiSq = 0.40528473456935108578;  // 4 / pi^2

}  // namespace detgeo::detail
