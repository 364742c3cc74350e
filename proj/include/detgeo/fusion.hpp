#pragma once

// Forward-only reference of a five-level (p2..p6) feature pyramid with
// gather-and-distribute fusion.
//
//   align      resize every map to a common H x W: bilinear where the map is
//              smaller, adaptive average pooling where it is larger
//   low_gd     align the low gather set, concatenate, 3x3 fuse conv to the sum
//              of the target channels, split, inject into each target
//   high_gd    align the high gather set, concatenate, flatten to tokens,
//              one transformer block (multi-head self-attention + FFN, both
//              residual), 1x1 projection to the target channel sum, split,
//              inject
//   inject     out = rep3x3(embed(local) * sigmoid(gate(global)) + proj(global))
//              where global is first aligned to local's H x W
//
// The level wiring (gather sets, alignment level, targets) is configuration.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detgeo/feature_map.hpp"
#include "detgeo/kernels.hpp"
#include "detgeo/tensor_file.hpp"
#include "json.hpp"

namespace detgeo {

struct LevelSpec {
  std::string id;
  int channels = 0;
  int stride = 0;
};

struct GdStageSpec {
  std::vector<std::string> gather;
  std::string align_to;
  std::vector<std::string> targets;
};

struct PyramidSpec {
  int input_size = 64;
  std::vector<LevelSpec> levels;
  GdStageSpec low;
  GdStageSpec high;
  int heads = 1;
  int ffn_hidden = 0;  // 0 means twice the high-stage token width

  // Throws InputError on any broken invariant: stride must double per level
  // and divide input_size, stage level ids must exist, ...
  void validate() const;

  std::size_t index_of(const std::string& id) const;
  const LevelSpec& level(const std::string& id) const { return levels[index_of(id)]; }
  int extent(const std::string& id) const { return input_size / level(id).stride; }
  int channel_sum(std::span<const std::string> ids) const;
  int token_width() const { return channel_sum(high.gather); }
  int hidden_width() const { return ffn_hidden > 0 ? ffn_hidden : 2 * token_width(); }
};

// p2..p6 at strides 4..64 with channels {8, 8, 16, 16, 32}; low gathers
// p2..p5 aligned to p4 and feeds p2..p4; high gathers p3..p6 aligned to p5
// and feeds p4..p6.
PyramidSpec default_pyramid_spec(int input_size = 64);

PyramidSpec pyramid_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PyramidSpec& spec);
PyramidSpec read_pyramid_spec(const std::filesystem::path& path);

struct InjectionWeights {
  ConvWeights embed;  // 1x1, local -> local channels
  ConvWeights gate;   // 1x1, global -> local channels
  ConvWeights proj;   // 1x1, global -> local channels
  ConvWeights rep;    // 3x3 reparameterized block
};

struct FusionWeights {
  ConvWeights low_fuse;
  std::map<std::string, InjectionWeights> low_inject;
  AttentionWeights attention;
  LinearWeights ffn_in;
  LinearWeights ffn_out;
  ConvWeights high_proj;
  std::map<std::string, InjectionWeights> high_inject;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases, values
// rounded to float32 so a saved-and-reloaded set is identical.
FusionWeights seeded_weights(const PyramidSpec& spec, std::uint64_t seed);
// Throws InputError naming the first tensor whose shape disagrees with spec.
void check_weights(const PyramidSpec& spec, const FusionWeights& weights);

std::vector<Tensor> weights_to_tensors(const FusionWeights& weights);
FusionWeights weights_from_tensors(const PyramidSpec& spec, const std::vector<Tensor>& tensors);

// Levels in spec order.
using Pyramid = std::vector<FeatureMap>;

// Seeded uniform(-1, 1) inputs with the spec's shapes.
Pyramid seeded_pyramid(const PyramidSpec& spec, std::uint64_t seed);
void check_pyramid(const PyramidSpec& spec, const Pyramid& pyramid);

FeatureMap align(const FeatureMap& map, int height, int width);
std::vector<FeatureMap> align(std::span<const FeatureMap> maps, int height, int width);

FeatureMap inject(const FeatureMap& local, const FeatureMap& global, const InjectionWeights& w);

struct TransformerTrace {
  AttentionResult attention;
};

Matrix transformer_block(const Matrix& tokens, const FusionWeights& w, int heads,
                         TransformerTrace* trace = nullptr);

Pyramid low_gd(const PyramidSpec& spec, const Pyramid& pyramid, const FusionWeights& w);
Pyramid high_gd(const PyramidSpec& spec, const Pyramid& pyramid, const FusionWeights& w,
                TransformerTrace* trace = nullptr);
// low_gd followed by high_gd.
Pyramid forward(const PyramidSpec& spec, const Pyramid& pyramid, const FusionWeights& w);

// FNV-1a over the IEEE-754 bit patterns of every level, in order.
std::uint64_t pyramid_hash(const Pyramid& pyramid);

}  // namespace detgeo
