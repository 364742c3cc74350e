#pragma once
// Independent reference implementations used only by the tests. Each one is
// written straight from the defining formula with plain loops and shares no
// code with the library beyond its data types.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "detgeo/annotations.hpp"
#include "detgeo/evaluation.hpp"
#include "detgeo/fusion.hpp"
#include "detgeo/metrics.hpp"

namespace oracle {

using detgeo::Box;

// --- box metrics, corner arithmetic -----------------------------------------

double iou(const Box& p, const Box& g);
double giou(const Box& p, const Box& g);
double diou(const Box& p, const Box& g);
double ciou(const Box& p, const Box& g);
double eiou(const Box& p, const Box& g);
double siou(const Box& p, const Box& g);
double nwd(const Box& p, const Box& g, double c);
double combined_loss(const Box& p, const Box& g, double beta, double c);
double metric(detgeo::MetricKind kind, const Box& p, const Box& g, double beta = 0.5, double c = 43.0);

// Central differences over (cx_p, cy_p, w_p, h_p, cx_g, cy_g, w_g, h_g).
std::array<double, 8> finite_difference(detgeo::MetricKind kind, const Box& p, const Box& g, double step,
                                        const detgeo::CombinedParams& params = {});

// --- evaluation ---------------------------------------------------------------

struct BruteEval {
  std::vector<double> ap;      // per class, NaN when the class has no gt
  double map50 = 0;
  long long tp = 0, fp = 0, fn = 0;
};

// Re-runs matching from scratch for every rank cutoff and integrates the
// interpolated precision over the distinct recall levels.
BruteEval evaluate(const std::vector<detgeo::DetectionRecord>& dets,
                   const std::vector<detgeo::ImageGroundTruth>& gts, int num_classes, double iou_threshold,
                   double score_threshold);

// --- assignment ---------------------------------------------------------------

std::vector<int> assign_counts(const std::vector<detgeo::GroundTruth>& gts, const std::vector<Box>& anchors,
                               detgeo::MetricKind kind, double threshold, double c);

// --- distributions ------------------------------------------------------------

double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

// --- fusion kernels -----------------------------------------------------------

detgeo::FeatureMap bilinear(const detgeo::FeatureMap& in, int out_h, int out_w);
detgeo::FeatureMap avg_pool(const detgeo::FeatureMap& in, int out_h, int out_w);
detgeo::FeatureMap conv(const detgeo::FeatureMap& in, const detgeo::ConvWeights& w);
detgeo::FeatureMap align(const detgeo::FeatureMap& in, int out_h, int out_w);
detgeo::Matrix attention(const detgeo::Matrix& x, const detgeo::AttentionWeights& w, int heads);
detgeo::FeatureMap inject(const detgeo::FeatureMap& local, const detgeo::FeatureMap& global,
                          const detgeo::InjectionWeights& w);

// --- random inputs ------------------------------------------------------------

detgeo::FeatureMap random_map(std::mt19937_64& rng, int c, int h, int w, double lo = -1, double hi = 1);
detgeo::Matrix random_matrix(std::mt19937_64& rng, int rows, int cols);
detgeo::ConvWeights random_conv(std::mt19937_64& rng, int out, int in, int k);
detgeo::LinearWeights random_linear(std::mt19937_64& rng, int out, int in);
double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

// Default wiring with two channels per level, two heads and a 4-wide FFN.
detgeo::PyramidSpec tiny_spec();
// Frozen output hash of forward(tiny_spec, seeded_pyramid(.., 2), seeded_weights(.., 1)).
inline constexpr std::uint64_t kTinySpecGoldenHash = 9903750554376313234ull;

}  // namespace oracle
