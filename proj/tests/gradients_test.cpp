#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "detgeo/errors.hpp"
#include "detgeo/metrics.hpp"
#include "oracles.hpp"

using namespace detgeo;

namespace {

constexpr double kStep = 1e-5;
constexpr double kRelTol = 1e-6;

double norm(const std::array<double, 8>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_error(const Grad8& analytic, const std::array<double, 8>& fd) {
  std::array<double, 8> diff{};
  for (int i = 0; i < 8; ++i) diff[i] = analytic[i] - fd[i];
  return norm(diff) / std::max(norm(fd), 1e-12);
}

// Overlapping or nearby pairs, kept away from every kink by at least 1e-3.
std::pair<Box, Box> random_pair(std::mt19937_64& rng, MetricKind kind) {
  std::uniform_real_distribution<double> c(-6, 6), s(1, 12);
  for (;;) {
    const Box p(c(rng), c(rng), s(rng), s(rng)), g(c(rng), c(rng), s(rng), s(rng));
    if (kink_margin(kind, p, g) > 1e-3) return {p, g};
  }
}

}  // namespace

TEST(Gradient, NwdHandExample) {
  const Box p(10, 10, 8, 8), g(13, 14, 8, 8);
  const Grad8 d = grad(MetricKind::NWD, p, g, {0.5, {43}});
  // Moving p towards g raises the similarity, so the partial is positive.
  EXPECT_NEAR(d[0], (3.0 / 5.0) / 43.0 * std::exp(-5.0 / 43.0), 1e-15);
  EXPECT_NEAR(d[0], 0.012422, 1e-6);
  EXPECT_NEAR(d[1], (4.0 / 5.0) / 43.0 * std::exp(-5.0 / 43.0), 1e-15);
  EXPECT_NEAR(d[4], -d[0], 1e-15);
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (auto kind : kAllMetricKinds) {
    double worst = 0;
    for (int i = 0; i < 300; ++i) {
      const auto [p, g] = random_pair(rng, kind);
      const Grad8 a = grad(kind, p, g);
      worst = std::max(worst, relative_error(a, oracle::finite_difference(kind, p, g, kStep)));
    }
    EXPECT_LT(worst, kRelTol) << to_string(kind);
  }
}

TEST(Gradient, TranslationInvarianceShowsInGradient) {
  // Moving both boxes together leaves the value unchanged, so the center
  // partials of p and g cancel.
  std::mt19937_64 rng(22);
  for (auto kind : kAllMetricKinds) {
    const auto [p, g] = random_pair(rng, kind);
    const Grad8 d = grad(kind, p, g);
    EXPECT_NEAR(d[0] + d[4], 0.0, 1e-12) << to_string(kind);
    EXPECT_NEAR(d[1] + d[5], 0.0, 1e-12) << to_string(kind);
  }
}

TEST(Gradient, AlphaDetachedAgreesWhenAspectTermVanishes) {
  const Box p(0.3, 0.1, 4, 2), g(1.1, -0.45, 6, 3);
  const Grad8 exact = grad(MetricKind::CIoU, p, g, {}, GradMode::Exact);
  const Grad8 detached = grad(MetricKind::CIoU, p, g, {}, GradMode::AlphaDetached);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(exact[i], detached[i], 1e-15);
}

TEST(Gradient, AlphaDetachedDropsOnlyTheAlphaPath) {
  const Box p(0.3, 0.1, 4, 3), g(1.1, -0.45, 6, 2);
  const Grad8 exact = grad(MetricKind::CIoU, p, g, {}, GradMode::Exact);
  const Grad8 detached = grad(MetricKind::CIoU, p, g, {}, GradMode::AlphaDetached);
  // d(alpha v) = alpha dv + v dalpha; the detached form keeps alpha dv, so the
  // two differ, and the exact one matches finite differences.
  double gap = 0;
  for (int i = 0; i < 8; ++i) gap = std::max(gap, std::abs(exact[i] - detached[i]));
  EXPECT_GT(gap, 1e-6);
  EXPECT_LT(relative_error(exact, oracle::finite_difference(MetricKind::CIoU, p, g, kStep)), kRelTol);
}

TEST(Gradient, KinksAreReported) {
  const Box a(10, 10, 8, 8);
  EXPECT_EQ(kink_margin(MetricKind::NWD, a, a), 0.0);
  EXPECT_THROW(grad(MetricKind::NWD, a, a), NonDifferentiableError);
  // Shared top and bottom edges.
  EXPECT_THROW(grad(MetricKind::IoU, Box(0, 0, 4, 4), Box(1, 0, 4, 4)), NonDifferentiableError);
  // Touching boxes.
  EXPECT_THROW(grad(MetricKind::IoU, Box(0, 0, 2, 2), Box(2, 0.5, 2, 2)), NonDifferentiableError);
  // Disjoint boxes: IoU is flat and differentiable there.
  const Grad8 z = grad(MetricKind::IoU, Box(0, 0, 2, 2), Box(5, 5, 2, 2));
  for (double v : z.d) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, KinkMarginIsTranslationInvariant) {
  const Box p(0.3, 0.1, 4, 3), g(1.1, -0.4, 6, 2);
  for (auto kind : kAllMetricKinds) {
    EXPECT_NEAR(kink_margin(kind, p, g), kink_margin(kind, p.translated(8, -16), g.translated(8, -16)), 1e-12)
        << to_string(kind);
  }
}
