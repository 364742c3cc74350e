// Hand-derived reverse-mode gradients for every metric kind.
//
// Each metric is written as a function of a few intermediate quantities
// (intersection area, box areas, enclosing extents, center offset, sizes).
// The metric-specific code seeds adjoints on those quantities; backprop()
// pushes them through the corner parameterization down to the 8 inputs.

#include <cmath>
#include <string>

#include "detgeo/errors.hpp"
#include "detgeo/metrics.hpp"
#include "pair_geometry.hpp"

namespace detgeo {

using detail::PairGeometry;

namespace {

enum Slot { kCxP, kCyP, kWP, kHP, kCxG, kCyG, kWG, kHG };

struct Adjoints {
  double inter = 0, area_p = 0, area_g = 0;
  double cw = 0, ch = 0;
  double dx = 0, dy = 0;
  double wp = 0, hp = 0, wg = 0, hg = 0;
};

struct CornerAdjoints {
  double px1 = 0, px2 = 0, py1 = 0, py2 = 0;
  double gx1 = 0, gx2 = 0, gy1 = 0, gy2 = 0;
};

Grad8 backprop(const PairGeometry& q, const Box& p, const Box& g, Adjoints a) {
  CornerAdjoints c;

  a.wp += a.area_p * p.h();
  a.hp += a.area_p * p.w();
  a.wg += a.area_g * g.h();
  a.hg += a.area_g * g.w();

  // inter = relu(iw_raw) * relu(ih_raw)
  if (q.iw_raw > 0 && q.ih_raw > 0) {
    const double a_iw = a.inter * q.ih;
    const double a_ih = a.inter * q.iw;
    (q.px2 < q.gx2 ? c.px2 : c.gx2) += a_iw;
    (q.px1 > q.gx1 ? c.px1 : c.gx1) -= a_iw;
    (q.py2 < q.gy2 ? c.py2 : c.gy2) += a_ih;
    (q.py1 > q.gy1 ? c.py1 : c.gy1) -= a_ih;
  }

  // enclosing extents
  (q.px2 > q.gx2 ? c.px2 : c.gx2) += a.cw;
  (q.px1 < q.gx1 ? c.px1 : c.gx1) -= a.cw;
  (q.py2 > q.gy2 ? c.py2 : c.gy2) += a.ch;
  (q.py1 < q.gy1 ? c.py1 : c.gy1) -= a.ch;

  Grad8 out;
  out[kCxP] = c.px1 + c.px2 + a.dx;
  out[kCyP] = c.py1 + c.py2 + a.dy;
  out[kWP] = (c.px2 - c.px1) / 2 + a.wp;
  out[kHP] = (c.py2 - c.py1) / 2 + a.hp;
  out[kCxG] = c.gx1 + c.gx2 - a.dx;
  out[kCyG] = c.gy1 + c.gy2 - a.dy;
  out[kWG] = (c.gx2 - c.gx1) / 2 + a.wg;
  out[kHG] = (c.gy2 - c.gy1) / 2 + a.hg;
  return out;
}

void seed_iou(const PairGeometry& q, double s, Adjoints& a) {
  const double u2 = q.uni * q.uni;
  a.inter += s * (q.uni + q.inter) / u2;
  a.area_p -= s * q.inter / u2;
  a.area_g -= s * q.inter / u2;
}

void seed_giou_penalty(const PairGeometry& q, double s, Adjoints& a) {
  // giou = iou - 1 + uni / hull
  const double hull = q.cw * q.ch;
  a.area_p += s / hull;
  a.area_g += s / hull;
  a.inter -= s / hull;
  const double d_hull = -s * q.uni / (hull * hull);
  a.cw += d_hull * q.ch;
  a.ch += d_hull * q.cw;
}

void seed_distance_penalty(const PairGeometry& q, double s, Adjoints& a) {
  // -rho2 / c2
  a.dx -= s * 2 * q.dx / q.c2;
  a.dy -= s * 2 * q.dy / q.c2;
  const double d_c2 = s * q.rho2 / (q.c2 * q.c2);
  a.cw += d_c2 * 2 * q.cw;
  a.ch += d_c2 * 2 * q.ch;
}

// -alpha * v, with alpha = v / (1 - iou + v)
void seed_aspect_penalty(const PairGeometry& q, const Box& p, const Box& g, double s, GradMode mode,
                         Adjoints& a) {
  const double da = std::atan(g.w() / g.h()) - std::atan(p.w() / p.h());
  const double v = detail::kFourOverPiSq * da * da;
  if (v == 0.0) return;
  const double denom = (1.0 - q.iou) + v;
  const double alpha = v / denom;
  double d_v;
  double d_iou;
  if (mode == GradMode::AlphaDetached) {
    d_v = -alpha;
    d_iou = 0.0;
  } else {
    d_v = -(2 * v / denom - v * v / (denom * denom));
    d_iou = -(v * v / (denom * denom));
  }
  seed_iou(q, s * d_iou, a);

  const double k = 2 * detail::kFourOverPiSq * da * s * d_v;
  const double np = p.w() * p.w() + p.h() * p.h();
  const double ng = g.w() * g.w() + g.h() * g.h();
  a.wp += k * (-p.h() / np);
  a.hp += k * (p.w() / np);
  a.wg += k * (g.h() / ng);
  a.hg += k * (-g.w() / ng);
}

void seed_eiou_size_penalty(const PairGeometry& q, const Box& p, const Box& g, double s, Adjoints& a) {
  const double dw = p.w() - g.w();
  const double dh = p.h() - g.h();
  const double cw2 = q.cw * q.cw;
  const double ch2 = q.ch * q.ch;
  a.wp -= s * 2 * dw / cw2;
  a.wg += s * 2 * dw / cw2;
  a.hp -= s * 2 * dh / ch2;
  a.hg += s * 2 * dh / ch2;
  a.cw += s * 2 * dw * dw / (cw2 * q.cw);
  a.ch += s * 2 * dh * dh / (ch2 * q.ch);
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// -(distance + shape) / 2
void seed_siou_penalty(const PairGeometry& q, const Box& p, const Box& g, double s, Adjoints& a) {
  const double sigma2 = q.rho2;
  const double adx = std::abs(q.dx);
  const double ady = std::abs(q.dy);
  const double angle = 2 * adx * ady / sigma2;
  const double gamma = angle - 2;
  const double rho_x = q.dx * q.dx / (q.cw * q.cw);
  const double rho_y = q.dy * q.dy / (q.ch * q.ch);
  const double ex = std::exp(gamma * rho_x);
  const double ey = std::exp(gamma * rho_y);

  const double sd = -0.5 * s;  // adjoint of the distance cost
  const double d_gamma = sd * (-rho_x * ex - rho_y * ey);
  const double d_rho_x = sd * (-gamma * ex);
  const double d_rho_y = sd * (-gamma * ey);

  // angle = 2 |dx| |dy| / (dx^2 + dy^2)
  const double s4 = sigma2 * sigma2;
  a.dx += d_gamma * (2 * sign(q.dx) * ady / sigma2 - 4 * adx * ady * q.dx / s4);
  a.dy += d_gamma * (2 * sign(q.dy) * adx / sigma2 - 4 * adx * ady * q.dy / s4);

  a.dx += d_rho_x * 2 * q.dx / (q.cw * q.cw);
  a.cw += d_rho_x * (-2 * q.dx * q.dx / (q.cw * q.cw * q.cw));
  a.dy += d_rho_y * 2 * q.dy / (q.ch * q.ch);
  a.ch += d_rho_y * (-2 * q.dy * q.dy / (q.ch * q.ch * q.ch));

  // shape cost; each term is (1 - exp(-omega))^4, omega = |x_p - x_g| / max(x_p, x_g)
  auto shape_term = [&](double xp, double xg, double& a_xp, double& a_xg) {
    const double omega = std::abs(xp - xg) / std::max(xp, xg);
    const double e = std::exp(-omega);
    const double t = 1 - e;
    const double d_omega = sd * 4 * t * t * t * e;
    if (xp > xg) {  // omega = 1 - xg / xp
      a_xp += d_omega * xg / (xp * xp);
      a_xg += d_omega * (-1 / xp);
    } else {  // omega = 1 - xp / xg (derivative vanishes at xp == xg)
      a_xp += d_omega * (-1 / xg);
      a_xg += d_omega * xp / (xg * xg);
    }
  };
  shape_term(p.w(), g.w(), a.wp, a.wg);
  shape_term(p.h(), g.h(), a.hp, a.hg);
}

Grad8 nwd_grad(const Box& p, const Box& g, const NwdParams& params) {
  validate(params);
  const double w2 = wasserstein2_sq(p, g);
  const double r = std::sqrt(w2);
  const double value = std::exp(-r / params.c);
  const double d_w2 = -value / params.c / (2 * r);
  Grad8 out;
  const double dx = p.cx() - g.cx();
  const double dy = p.cy() - g.cy();
  const double dw = (p.w() - g.w()) / 2;
  const double dh = (p.h() - g.h()) / 2;
  out[kCxP] = d_w2 * 2 * dx;
  out[kCyP] = d_w2 * 2 * dy;
  out[kWP] = d_w2 * dw;
  out[kHP] = d_w2 * dh;
  out[kCxG] = -out[kCxP];
  out[kCyG] = -out[kCyP];
  out[kWG] = -out[kWP];
  out[kHG] = -out[kHP];
  return out;
}

Grad8 iou_family_grad(MetricKind kind, const Box& p, const Box& g, GradMode mode) {
  const PairGeometry q(p, g);
  Adjoints a;
  seed_iou(q, 1.0, a);
  switch (kind) {
    case MetricKind::IoU: break;
    case MetricKind::GIoU: seed_giou_penalty(q, 1.0, a); break;
    case MetricKind::DIoU: seed_distance_penalty(q, 1.0, a); break;
    case MetricKind::CIoU:
      seed_distance_penalty(q, 1.0, a);
      seed_aspect_penalty(q, p, g, 1.0, mode, a);
      break;
    case MetricKind::EIoU:
      seed_distance_penalty(q, 1.0, a);
      seed_eiou_size_penalty(q, p, g, 1.0, a);
      break;
    case MetricKind::SIoU: seed_siou_penalty(q, p, g, 1.0, a); break;
    default: throw InvariantError("not an IoU-family metric");
  }
  return backprop(q, p, g, a);
}

// Distance from (a, b) to the surfaces where relu(a) * relu(b) is not smooth.
double overlap_margin(double a, double b) {
  if (a > 0 && b > 0) return std::min(a, b);
  if (a <= 0 && b <= 0) return std::max(-a, -b);
  return a > 0 ? -b : -a;
}

}  // namespace

double kink_margin(MetricKind kind, const Box& p, const Box& g) {
  if (kind == MetricKind::NWD) return std::sqrt(wasserstein2_sq(p, g));
  if (kind == MetricKind::Combined) {
    return std::min(kink_margin(MetricKind::CIoU, p, g), kink_margin(MetricKind::NWD, p, g));
  }

  const PairGeometry q(p, g);
  const double edges = std::min({std::abs(q.px1 - q.gx1), std::abs(q.px2 - q.gx2),
                                 std::abs(q.py1 - q.gy1), std::abs(q.py2 - q.gy2)});
  double m = overlap_margin(q.iw_raw, q.ih_raw);
  if (q.iw_raw > 0 && q.ih_raw > 0) m = std::min(m, edges);
  if (kind == MetricKind::IoU) return m;
  // Enclosing box uses the same max/min selections whether or not the boxes overlap.
  m = std::min(m, edges);
  if (kind == MetricKind::SIoU) m = std::min({m, std::abs(q.dx), std::abs(q.dy)});
  return m;
}

Grad8 grad(MetricKind kind, const Box& p, const Box& g, const CombinedParams& params, GradMode mode) {
  const double scale = std::max({1.0, p.w(), p.h(), g.w(), g.h()});
  const double margin = kink_margin(kind, p, g);
  if (margin <= kKinkTolerance * scale) {
    throw NonDifferentiableError(std::string(to_string(kind)) +
                                 " is not differentiable at this box pair (margin " +
                                 std::to_string(margin) + ")");
  }
  switch (kind) {
    case MetricKind::NWD: return nwd_grad(p, g, params.nwd);
    case MetricKind::Combined: {
      validate(params);
      const Grad8 gc = iou_family_grad(MetricKind::CIoU, p, g, mode);
      const Grad8 gn = nwd_grad(p, g, params.nwd);
      Grad8 out;
      for (std::size_t i = 0; i < 8; ++i) out[i] = -gc[i] - params.beta * gn[i];
      return out;
    }
    default: return iou_family_grad(kind, p, g, mode);
  }
}

}  // namespace detgeo
