#include "detgeo/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "detgeo/errors.hpp"
#include "pair_geometry.hpp"

namespace detgeo {

using detail::PairGeometry;

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::IoU: return "iou";
    case MetricKind::GIoU: return "giou";
    case MetricKind::DIoU: return "diou";
    case MetricKind::CIoU: return "ciou";
    case MetricKind::EIoU: return "eiou";
    case MetricKind::SIoU: return "siou";
    case MetricKind::NWD: return "nwd";
    case MetricKind::Combined: return "combined";
  }
  return "unknown";
}

MetricKind parse_metric_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto kind : kAllMetricKinds) {
    if (to_string(kind) == lower) return kind;
  }
  throw InputError("unknown metric kind '" + std::string(name) + "'");
}

void validate(const NwdParams& params) {
  if (!std::isfinite(params.c) || params.c <= 0) throw InputError("NWD constant c must be positive");
}

void validate(const CombinedParams& params) {
  if (!std::isfinite(params.beta) || params.beta < 0) throw InputError("beta must be non-negative");
  validate(params.nwd);
}

double iou(const Box& p, const Box& g) { return PairGeometry(p, g).iou; }

double giou(const Box& p, const Box& g) {
  const PairGeometry q(p, g);
  const double hull = q.cw * q.ch;
  return q.iou - (hull - q.uni) / hull;
}

double diou(const Box& p, const Box& g) {
  const PairGeometry q(p, g);
  return q.iou - q.rho2 / q.c2;
}

namespace {

double aspect_term(const Box& p, const Box& g) {
  const double da = std::atan(g.w() / g.h()) - std::atan(p.w() / p.h());
  return detail::kFourOverPiSq * da * da;
}

}  // namespace

double ciou(const Box& p, const Box& g) {
  const PairGeometry q(p, g);
  const double v = aspect_term(p, g);
  // v == 0 covers the identical-box case where alpha would be 0/0.
  const double penalty = v == 0.0 ? 0.0 : v * v / ((1.0 - q.iou) + v);
  return q.iou - q.rho2 / q.c2 - penalty;
}

double eiou(const Box& p, const Box& g) {
  const PairGeometry q(p, g);
  const double dw = p.w() - g.w();
  const double dh = p.h() - g.h();
  return q.iou - q.rho2 / q.c2 - dw * dw / (q.cw * q.cw) - dh * dh / (q.ch * q.ch);
}

double siou(const Box& p, const Box& g) {
  const PairGeometry q(p, g);
  const double angle = q.rho2 > 0 ? 2.0 * std::abs(q.dx) * std::abs(q.dy) / q.rho2 : 0.0;
  const double gamma = angle - 2.0;
  const double rho_x = (q.dx / q.cw) * (q.dx / q.cw);
  const double rho_y = (q.dy / q.ch) * (q.dy / q.ch);
  const double distance = 2.0 - std::exp(gamma * rho_x) - std::exp(gamma * rho_y);
  const double omega_w = std::abs(p.w() - g.w()) / std::max(p.w(), g.w());
  const double omega_h = std::abs(p.h() - g.h()) / std::max(p.h(), g.h());
  const double shape = std::pow(1.0 - std::exp(-omega_w), 4) + std::pow(1.0 - std::exp(-omega_h), 4);
  return q.iou - 0.5 * (distance + shape);
}

double wasserstein2_sq(const Box& p, const Box& g) {
  const double dx = p.cx() - g.cx();
  const double dy = p.cy() - g.cy();
  const double dw = (p.w() - g.w()) / 2;
  const double dh = (p.h() - g.h()) / 2;
  return dx * dx + dy * dy + dw * dw + dh * dh;
}

double nwd(const Box& p, const Box& g, const NwdParams& params) {
  validate(params);
  return std::exp(-std::sqrt(wasserstein2_sq(p, g)) / params.c);
}

double nwd_loss(const Box& p, const Box& g, const NwdParams& params) {
  return 1.0 - nwd(p, g, params);
}

double combined_loss(const Box& p, const Box& g, const CombinedParams& params) {
  validate(params);
  return (1.0 - ciou(p, g)) + params.beta * nwd_loss(p, g, params.nwd);
}

double metric_value(MetricKind kind, const Box& p, const Box& g, const CombinedParams& params) {
  switch (kind) {
    case MetricKind::IoU: return iou(p, g);
    case MetricKind::GIoU: return giou(p, g);
    case MetricKind::DIoU: return diou(p, g);
    case MetricKind::CIoU: return ciou(p, g);
    case MetricKind::EIoU: return eiou(p, g);
    case MetricKind::SIoU: return siou(p, g);
    case MetricKind::NWD: return nwd(p, g, params.nwd);
    case MetricKind::Combined: return combined_loss(p, g, params);
  }
  throw InvariantError("unhandled metric kind");
}

std::vector<std::vector<double>> pairwise_matrix(MetricKind kind, const std::vector<Box>& preds,
                                                 const std::vector<Box>& gts,
                                                 const CombinedParams& params) {
  std::vector<std::vector<double>> out(preds.size(), std::vector<double>(gts.size()));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) out[i][j] = metric_value(kind, preds[i], gts[j], params);
  }
  return out;
}

}  // namespace detgeo
