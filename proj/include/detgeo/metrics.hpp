#pragma once

// Pairwise box similarity measures and the regression losses built on them.
//
// Formulas (p = predicted, g = ground truth, corners x1 = cx - w/2 etc.):
//
//   IoU   = |P ∩ G| / |P ∪ G|                      (touching boxes give 0)
//   GIoU  = IoU - (|C| - |P ∪ G|) / |C|            C = smallest enclosing box
//   DIoU  = IoU - rho^2 / c^2                      rho = center distance,
//                                                  c = diagonal of C
//   CIoU  = DIoU - alpha * v                       v = 4/pi^2 (atan(wg/hg) - atan(wp/hp))^2
//                                                  alpha = v / ((1 - IoU) + v), alpha*v = 0 if v = 0
//   EIoU  = IoU - rho^2/c^2 - (wp-wg)^2/Cw^2 - (hp-hg)^2/Ch^2   (Efficient-IoU)
//   SIoU  = IoU - (Delta + Omega) / 2                            (SCYLLA-IoU)
//           Lambda = sin(2 arcsin(min(|dx|,|dy|)/sigma)) = 2|dx||dy|/sigma^2
//           Delta  = 2 - exp((Lambda-2)(dx/Cw)^2) - exp((Lambda-2)(dy/Ch)^2)
//           Omega  = sum over w,h of (1 - exp(-|a_p - a_g| / max(a_p, a_g)))^4
//   W2^2  = (cxp-cxg)^2 + (cyp-cyg)^2 + ((wp-wg)/2)^2 + ((hp-hg)/2)^2
//   NWD   = exp(-sqrt(W2^2) / c)
//   L_NWD = 1 - NWD
//   L     = (1 - CIoU) + beta * L_NWD              (combined loss)

#include <array>
#include <string_view>
#include <vector>

#include "detgeo/box.hpp"

namespace detgeo {

enum class MetricKind { IoU, GIoU, DIoU, CIoU, EIoU, SIoU, NWD, Combined };

inline constexpr std::array kAllMetricKinds{MetricKind::IoU,  MetricKind::GIoU, MetricKind::DIoU,
                                            MetricKind::CIoU, MetricKind::EIoU, MetricKind::SIoU,
                                            MetricKind::NWD,  MetricKind::Combined};

std::string_view to_string(MetricKind kind);
// Case-insensitive; throws InputError on unknown names.
MetricKind parse_metric_kind(std::string_view name);

inline constexpr double kDefaultNwdConstant = 43.0;
inline constexpr double kDefaultBeta = 0.5;

struct NwdParams {
  double c = kDefaultNwdConstant;
};

struct CombinedParams {
  double beta = kDefaultBeta;
  NwdParams nwd{};
};

// Throws InputError on c <= 0 or beta < 0 (or non-finite).
void validate(const NwdParams& params);
void validate(const CombinedParams& params);

double iou(const Box& p, const Box& g);
double giou(const Box& p, const Box& g);
double diou(const Box& p, const Box& g);
double ciou(const Box& p, const Box& g);
double eiou(const Box& p, const Box& g);
double siou(const Box& p, const Box& g);

double wasserstein2_sq(const Box& p, const Box& g);
double nwd(const Box& p, const Box& g, const NwdParams& params = {});
double nwd_loss(const Box& p, const Box& g, const NwdParams& params = {});
double combined_loss(const Box& p, const Box& g, const CombinedParams& params = {});

/// Value of `kind` for the pair. For Combined this is the loss; every other
/// kind is a similarity where larger means closer.
double metric_value(MetricKind kind, const Box& p, const Box& g, const CombinedParams& params = {});

// Row i = prediction i, column j = ground truth j.
std::vector<std::vector<double>> pairwise_matrix(MetricKind kind, const std::vector<Box>& preds,
                                                 const std::vector<Box>& gts,
                                                 const CombinedParams& params = {});

/// d(metric)/d(cx_p, cy_p, w_p, h_p, cx_g, cy_g, w_g, h_g).
struct Grad8 {
  std::array<double, 8> d{};

  double& operator[](std::size_t i) { return d[i]; }
  double operator[](std::size_t i) const { return d[i]; }
};

enum class GradMode {
  // Full derivative of the metric value.
  Exact,
  // CIoU's alpha held constant (training-time convention). Affects CIoU and Combined only.
  AlphaDetached,
};

/// Smallest coordinate-space distance from (p, g) to a surface where `kind`
/// is not differentiable (coinciding edges, touching boxes, coincident
/// centers, ...). Zero means the pair sits on such a surface.
double kink_margin(MetricKind kind, const Box& p, const Box& g);

inline constexpr double kKinkTolerance = 1e-9;

/// Analytic gradient. Throws NonDifferentiableError when kink_margin is at or
/// below kKinkTolerance times the box scale.
Grad8 grad(MetricKind kind, const Box& p, const Box& g, const CombinedParams& params = {},
           GradMode mode = GradMode::Exact);

}  // namespace detgeo
