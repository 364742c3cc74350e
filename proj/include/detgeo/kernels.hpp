#pragma once

// Numeric kernels behind the fusion reference. The functions in
// detgeo::kernels are OpenMP-parallel; detgeo::kernels::serial holds the plain
// single-threaded versions they are tested and benchmarked against.
//
// Resizing conventions:
//   bilinear  align_corners = false: src = (dst + 0.5) * in / out - 0.5,
//             clamped below at 0; the upper neighbour is clamped to in - 1.
//   pooling   adaptive average: window [floor(i*in/out), ceil((i+1)*in/out)).
// Convolutions are stride 1 with zero padding k/2 (k odd).

#include <vector>

#include "detgeo/feature_map.hpp"

namespace detgeo {

struct ConvWeights {
  int out_channels = 0;
  int in_channels = 0;
  int kernel = 1;
  std::vector<double> weight;  // [out][in][k][k]
  std::vector<double> bias;    // [out]

  // Throws InputError when sizes disagree or the kernel is even.
  void check() const;
};

struct LinearWeights {
  int out_features = 0;
  int in_features = 0;
  std::vector<double> weight;  // [out][in]
  std::vector<double> bias;    // [out]

  void check() const;
};

struct AttentionWeights {
  LinearWeights query, key, value, output;
};

struct AttentionResult {
  Matrix output;                 // tokens x features, after the output projection
  std::vector<Matrix> weights;   // per head, tokens x tokens, row-stochastic
};

namespace kernels {

FeatureMap bilinear_resize(const FeatureMap& in, int out_h, int out_w);
FeatureMap adaptive_avg_pool(const FeatureMap& in, int out_h, int out_w);
FeatureMap conv2d(const FeatureMap& in, const ConvWeights& w);
Matrix linear(const Matrix& x, const LinearWeights& w);
// Throws InputError when features are not divisible by heads.
AttentionResult multi_head_attention(const Matrix& x, const AttentionWeights& w, int heads);

namespace serial {

FeatureMap bilinear_resize(const FeatureMap& in, int out_h, int out_w);
FeatureMap adaptive_avg_pool(const FeatureMap& in, int out_h, int out_w);
FeatureMap conv2d(const FeatureMap& in, const ConvWeights& w);
Matrix linear(const Matrix& x, const LinearWeights& w);
AttentionResult multi_head_attention(const Matrix& x, const AttentionWeights& w, int heads);

}  // namespace serial
}  // namespace kernels

double sigmoid(double x);

}  // namespace detgeo
