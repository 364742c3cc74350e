#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "detgeo/errors.hpp"
#include "detgeo/fusion.hpp"
#include "oracles.hpp"

using namespace detgeo;
using oracle::max_abs_diff;

namespace {

ConvWeights identity_conv(int channels, int k) {
  ConvWeights w{channels, channels, k, std::vector<double>(static_cast<std::size_t>(channels) * channels * k * k),
                std::vector<double>(channels)};
  for (int c = 0; c < channels; ++c) w.weight[((c * channels + c) * k + k / 2) * k + k / 2] = 1.0;
  return w;
}

ConvWeights zero_conv(int out, int in, int k) {
  return {out, in, k, std::vector<double>(static_cast<std::size_t>(out) * in * k * k), std::vector<double>(out)};
}

InjectionWeights random_injection(std::mt19937_64& rng, int local_c, int global_c) {
  return {oracle::random_conv(rng, local_c, local_c, 1), oracle::random_conv(rng, local_c, global_c, 1),
          oracle::random_conv(rng, local_c, global_c, 1), oracle::random_conv(rng, local_c, local_c, 3)};
}

}  // namespace

TEST(Align, ConstantsSurviveEveryPath) {
  const FeatureMap m(1, 4, 8, std::vector<double>(32, -0.625));
  for (auto [h, w] : {std::pair{8, 16}, {2, 2}, {8, 2}, {1, 16}, {4, 8}}) {
    const auto a = align(m, h, w);
    for (double v : a.data()) EXPECT_NEAR(v, -0.625, 1e-12);
  }
}

TEST(Align, MatchesOracle) {
  std::mt19937_64 rng(1);
  const auto m = oracle::random_map(rng, 2, 4, 4);
  for (auto [h, w] : {std::pair{8, 8}, {2, 2}, {2, 8}, {3, 4}, {4, 4}}) {
    EXPECT_LE(max_abs_diff(align(m, h, w).data(), oracle::align(m, h, w).data()), 1e-12);
  }
}

TEST(Inject, HandComputedHalfGate) {
  const FeatureMap local(1, 2, 2, {1, 2, 3, 4});
  const FeatureMap global(1, 2, 2);
  const InjectionWeights w{identity_conv(1, 1), zero_conv(1, 1, 1), zero_conv(1, 1, 1), identity_conv(1, 3)};
  const auto out = inject(local, global, w);
  EXPECT_EQ(out.data(), (std::vector<double>{0.5, 1.0, 1.5, 2.0}));
}

TEST(Inject, SaturatedGateOpensOrCloses) {
  std::mt19937_64 rng(2);
  const auto local = oracle::random_map(rng, 2, 4, 4);
  const auto global = oracle::random_map(rng, 3, 2, 2);
  InjectionWeights w{identity_conv(2, 1), zero_conv(2, 3, 1), zero_conv(2, 3, 1), identity_conv(2, 3)};
  w.gate.bias = {60, 60};
  EXPECT_LE(max_abs_diff(inject(local, global, w).data(), local.data()), 1e-12);

  w = random_injection(rng, 2, 3);
  w.gate.weight.assign(w.gate.weight.size(), 0.0);
  w.gate.bias = {-1e4, -1e4};
  const auto expect = oracle::conv(oracle::conv(oracle::align(global, 4, 4), w.proj), w.rep);
  EXPECT_LE(max_abs_diff(inject(local, global, w).data(), expect.data()), 1e-12);
}

TEST(Inject, MatchesOracle) {
  std::mt19937_64 rng(3);
  for (auto [gh, gw] : {std::pair{4, 4}, {2, 2}, {8, 8}, {2, 8}, {1, 1}}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto local = oracle::random_map(rng, 1, 4, 4);
      const auto global = oracle::random_map(rng, 2, gh, gw);
      const auto w = random_injection(rng, 1, 2);
      EXPECT_LE(max_abs_diff(inject(local, global, w).data(), oracle::inject(local, global, w).data()), 1e-9);
    }
  }
}

TEST(Inject, RejectsMismatchedChannels) {
  std::mt19937_64 rng(4);
  const auto w = random_injection(rng, 2, 3);
  EXPECT_THROW(inject(FeatureMap(1, 4, 4), FeatureMap(3, 4, 4), w), InputError);
  EXPECT_THROW(inject(FeatureMap(2, 4, 4), FeatureMap(2, 4, 4), w), InputError);
}

TEST(Spec, DefaultShapes) {
  const auto spec = default_pyramid_spec();
  EXPECT_EQ(spec.extent("p2"), 16);
  EXPECT_EQ(spec.extent("p6"), 1);
  EXPECT_EQ(spec.channel_sum(spec.low.targets), 8 + 8 + 16);
  EXPECT_EQ(spec.token_width(), 8 + 16 + 16 + 32);
  const auto w = seeded_weights(spec, 1);
  EXPECT_EQ(w.low_fuse.out_channels, spec.channel_sum(spec.low.targets));
  EXPECT_EQ(w.high_proj.out_channels, spec.channel_sum(spec.high.targets));
}

TEST(Spec, JsonRoundTripAndValidation) {
  const auto spec = oracle::tiny_spec();
  const auto back = pyramid_spec_from_json(to_json(spec));
  EXPECT_EQ(to_json(back), to_json(spec));

  auto j = to_json(spec);
  j["levels"][2]["stride"] = 12;
  EXPECT_THROW(pyramid_spec_from_json(j), InputError);
  j = to_json(spec);
  j["heads"] = 3;
  EXPECT_THROW(pyramid_spec_from_json(j), InputError);
  j = to_json(spec);
  j["low"]["targets"] = {"p2", "p9"};
  EXPECT_THROW(pyramid_spec_from_json(j), InputError);
  j = to_json(spec);
  j.erase("levels");
  EXPECT_THROW(pyramid_spec_from_json(j), InputError);
  EXPECT_THROW(default_pyramid_spec(48), InputError);
}

TEST(Forward, PreservesShapesAndIsDeterministic) {
  const auto spec = default_pyramid_spec();
  const auto w = seeded_weights(spec, 7);
  const auto in = seeded_pyramid(spec, 8);
  const auto a = forward(spec, in, w);
  const auto b = forward(spec, in, w);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].same_shape(in[i])) << spec.levels[i].id;
    EXPECT_EQ(a[i], b[i]);
  }
  EXPECT_EQ(pyramid_hash(a), pyramid_hash(b));
  EXPECT_NE(pyramid_hash(a), pyramid_hash(forward(spec, in, seeded_weights(spec, 9))));
}

TEST(Forward, StagesOnlyTouchTheirTargets) {
  const auto spec = oracle::tiny_spec();
  const auto w = seeded_weights(spec, 3);
  const auto in = seeded_pyramid(spec, 4);
  const auto low = low_gd(spec, in, w);
  EXPECT_EQ(low[3], in[3]);
  EXPECT_EQ(low[4], in[4]);
  EXPECT_NE(low[0], in[0]);
  const auto high = high_gd(spec, low, w);
  EXPECT_EQ(high[0], low[0]);
  EXPECT_EQ(high[1], low[1]);
  EXPECT_NE(high[4], low[4]);
}

TEST(Forward, TransformerTraceIsRowStochastic) {
  const auto spec = oracle::tiny_spec();
  const auto w = seeded_weights(spec, 3);
  TransformerTrace trace;
  high_gd(spec, seeded_pyramid(spec, 4), w, &trace);
  ASSERT_EQ(trace.attention.weights.size(), 2u);
  for (const auto& a : trace.attention.weights) {
    EXPECT_EQ(a.rows, spec.extent(spec.high.align_to) * spec.extent(spec.high.align_to));
    for (int i = 0; i < a.rows; ++i) {
      double s = 0;
      for (int j = 0; j < a.cols; ++j) s += a(i, j);
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Forward, RejectsBadInputsAndWeights) {
  const auto spec = oracle::tiny_spec();
  const auto w = seeded_weights(spec, 1);
  auto in = seeded_pyramid(spec, 2);
  in[2] = FeatureMap(2, 3, 3);
  EXPECT_THROW(forward(spec, in, w), InputError);
  in.pop_back();
  EXPECT_THROW(forward(spec, in, w), InputError);

  auto broken = w;
  broken.low_fuse.weight.pop_back();
  try {
    forward(spec, seeded_pyramid(spec, 2), broken);
    FAIL() << "broken weights accepted";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("low.fuse"), std::string::npos) << e.what();
  }
  broken = w;
  broken.high_inject.erase("p5");
  EXPECT_THROW(forward(spec, seeded_pyramid(spec, 2), broken), InputError);
}

TEST(Weights, SeededAreFloatExactAndRoundTrip) {
  const auto spec = oracle::tiny_spec();
  const auto w = seeded_weights(spec, 5);
  for (double v : w.low_fuse.weight) EXPECT_EQ(static_cast<double>(static_cast<float>(v)), v);
  const auto back = weights_from_tensors(spec, weights_to_tensors(w));
  const auto in = seeded_pyramid(spec, 6);
  EXPECT_EQ(pyramid_hash(forward(spec, in, back)), pyramid_hash(forward(spec, in, w)));

  auto tensors = weights_to_tensors(w);
  tensors.pop_back();
  EXPECT_THROW(weights_from_tensors(spec, tensors), InputError);
}

TEST(Forward, TinySpecGoldenHash) {
  const auto spec = oracle::tiny_spec();
  const auto out = forward(spec, seeded_pyramid(spec, 2), seeded_weights(spec, 1));
  EXPECT_EQ(pyramid_hash(out), oracle::kTinySpecGoldenHash) << std::hex << pyramid_hash(out);
}
