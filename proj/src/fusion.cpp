#include "detgeo/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <set>

#include "detgeo/errors.hpp"

namespace detgeo {

namespace {

const std::vector<std::string> kLevelIds = {"p2", "p3", "p4", "p5", "p6"};

// Portable uniform draw in [-bound, bound), rounded to float32.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : state_(seed) {}

  double next(double bound) {
    const double u = static_cast<double>(splitmix() >> 11) * 0x1.0p-53;
    return static_cast<float>((2 * u - 1) * bound);
  }

 private:
  std::uint64_t splitmix() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

ConvWeights make_conv(int out, int in, int k, UniformSource& rng) {
  ConvWeights w{out, in, k, {}, {}};
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k));
  w.weight.resize(static_cast<std::size_t>(out) * in * k * k);
  for (auto& v : w.weight) v = rng.next(bound);
  w.bias.resize(out);
  for (auto& v : w.bias) v = rng.next(bound);
  return w;
}

LinearWeights make_linear(int out, int in, UniformSource& rng) {
  LinearWeights w{out, in, {}, {}};
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  w.weight.resize(static_cast<std::size_t>(out) * in);
  for (auto& v : w.weight) v = rng.next(bound);
  w.bias.resize(out);
  for (auto& v : w.bias) v = rng.next(bound);
  return w;
}

InjectionWeights make_injection(int channels, UniformSource& rng) {
  return {make_conv(channels, channels, 1, rng), make_conv(channels, channels, 1, rng),
          make_conv(channels, channels, 1, rng), make_conv(channels, channels, 3, rng)};
}

void expect_conv(const ConvWeights& w, int out, int in, int k, const std::string& name) {
  if (w.out_channels != out || w.in_channels != in || w.kernel != k) {
    throw InputError("weight '" + name + "' has shape [" + std::to_string(w.out_channels) + "," +
                     std::to_string(w.in_channels) + "," + std::to_string(w.kernel) + "," +
                     std::to_string(w.kernel) + "], expected [" + std::to_string(out) + "," +
                     std::to_string(in) + "," + std::to_string(k) + "," + std::to_string(k) + "]");
  }
  try {
    w.check();
  } catch (const InputError& e) {
    throw InputError("weight '" + name + "': " + e.what());
  }
}

void expect_linear(const LinearWeights& w, int out, int in, const std::string& name) {
  if (w.out_features != out || w.in_features != in) {
    throw InputError("weight '" + name + "' has shape [" + std::to_string(w.out_features) + "," +
                     std::to_string(w.in_features) + "], expected [" + std::to_string(out) + "," +
                     std::to_string(in) + "]");
  }
  try {
    w.check();
  } catch (const InputError& e) {
    throw InputError("weight '" + name + "': " + e.what());
  }
}

void expect_injections(const std::map<std::string, InjectionWeights>& inj, const PyramidSpec& spec,
                       const GdStageSpec& stage, const std::string& prefix) {
  for (const auto& id : stage.targets) {
    const auto it = inj.find(id);
    if (it == inj.end()) throw InputError("missing injection weights '" + prefix + id + "'");
    const int c = spec.level(id).channels;
    const auto base = prefix + id;
    expect_conv(it->second.embed, c, c, 1, base + ".embed");
    expect_conv(it->second.gate, c, c, 1, base + ".gate");
    expect_conv(it->second.proj, c, c, 1, base + ".proj");
    expect_conv(it->second.rep, c, c, 3, base + ".rep");
  }
}

std::vector<int> target_channels(const PyramidSpec& spec, const GdStageSpec& stage) {
  std::vector<int> out;
  for (const auto& id : stage.targets) out.push_back(spec.level(id).channels);
  return out;
}

std::vector<FeatureMap> gather(const PyramidSpec& spec, const Pyramid& pyramid, const GdStageSpec& stage) {
  std::vector<FeatureMap> maps;
  for (const auto& id : stage.gather) maps.push_back(pyramid[spec.index_of(id)]);
  const int extent = spec.extent(stage.align_to);
  return align(maps, extent, extent);
}

Pyramid distribute(const PyramidSpec& spec, const Pyramid& pyramid, const GdStageSpec& stage,
                   const FeatureMap& global, const std::map<std::string, InjectionWeights>& inj) {
  const auto sizes = target_channels(spec, stage);
  const auto parts = split_channels(global, sizes);
  Pyramid out = pyramid;
  for (std::size_t i = 0; i < stage.targets.size(); ++i) {
    const auto idx = spec.index_of(stage.targets[i]);
    const auto it = inj.find(stage.targets[i]);
    if (it == inj.end()) throw InputError("missing injection weights for level " + stage.targets[i]);
    out[idx] = inject(pyramid[idx], parts[i], it->second);
  }
  return out;
}

// Tensor naming -------------------------------------------------------------

void push_conv(std::vector<Tensor>& out, const std::string& name, const ConvWeights& w) {
  out.push_back({name + ".weight",
                 {w.out_channels, w.in_channels, w.kernel, w.kernel},
                 std::vector<float>(w.weight.begin(), w.weight.end())});
  out.push_back({name + ".bias", {w.out_channels}, std::vector<float>(w.bias.begin(), w.bias.end())});
}

void push_linear(std::vector<Tensor>& out, const std::string& name, const LinearWeights& w) {
  out.push_back({name + ".weight",
                 {w.out_features, w.in_features},
                 std::vector<float>(w.weight.begin(), w.weight.end())});
  out.push_back({name + ".bias", {w.out_features}, std::vector<float>(w.bias.begin(), w.bias.end())});
}

void push_injections(std::vector<Tensor>& out, const std::string& prefix,
                     const std::map<std::string, InjectionWeights>& inj) {
  for (const auto& [id, w] : inj) {
    push_conv(out, prefix + id + ".embed", w.embed);
    push_conv(out, prefix + id + ".gate", w.gate);
    push_conv(out, prefix + id + ".proj", w.proj);
    push_conv(out, prefix + id + ".rep", w.rep);
  }
}

class TensorLookup {
 public:
  explicit TensorLookup(const std::vector<Tensor>& tensors) {
    for (const auto& t : tensors) by_name_[t.name] = &t;
  }

  const Tensor& get(const std::string& name, std::size_t rank) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw InputError("weights file lacks tensor '" + name + "'");
    if (it->second->shape.size() != rank) {
      throw InputError("tensor '" + name + "' has rank " + std::to_string(it->second->shape.size()) +
                       ", expected " + std::to_string(rank));
    }
    return *it->second;
  }

  ConvWeights conv(const std::string& name) const {
    const auto& w = get(name + ".weight", 4);
    const auto& b = get(name + ".bias", 1);
    if (w.shape[2] != w.shape[3]) throw InputError("tensor '" + name + ".weight' has a non-square kernel");
    return {static_cast<int>(w.shape[0]), static_cast<int>(w.shape[1]), static_cast<int>(w.shape[2]),
            std::vector<double>(w.values.begin(), w.values.end()),
            std::vector<double>(b.values.begin(), b.values.end())};
  }

  LinearWeights linear(const std::string& name) const {
    const auto& w = get(name + ".weight", 2);
    const auto& b = get(name + ".bias", 1);
    return {static_cast<int>(w.shape[0]), static_cast<int>(w.shape[1]),
            std::vector<double>(w.values.begin(), w.values.end()),
            std::vector<double>(b.values.begin(), b.values.end())};
  }

  InjectionWeights injection(const std::string& name) const {
    return {conv(name + ".embed"), conv(name + ".gate"), conv(name + ".proj"), conv(name + ".rep")};
  }

 private:
  std::map<std::string, const Tensor*> by_name_;
};

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  return j.at(key).get<std::vector<std::string>>();
}

GdStageSpec stage_from_json(const nlohmann::json& j) {
  return {string_list(j, "gather"), j.at("align_to").get<std::string>(), string_list(j, "targets")};
}

nlohmann::json stage_to_json(const GdStageSpec& s) {
  return {{"gather", s.gather}, {"align_to", s.align_to}, {"targets", s.targets}};
}

}  // namespace

// PyramidSpec ----------------------------------------------------------------

std::size_t PyramidSpec::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].id == id) return i;
  }
  throw InputError("unknown pyramid level '" + id + "'");
}

int PyramidSpec::channel_sum(std::span<const std::string> ids) const {
  int total = 0;
  for (const auto& id : ids) total += level(id).channels;
  return total;
}

void PyramidSpec::validate() const {
  if (input_size <= 0) throw InputError("input_size must be positive");
  if (levels.size() != kLevelIds.size()) throw InputError("pyramid must list the five levels p2..p6");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& l = levels[i];
    if (l.id != kLevelIds[i]) throw InputError("pyramid levels must be p2..p6 in order");
    if (l.channels <= 0) throw InputError("level " + l.id + " needs positive channels");
    if (l.stride <= 0 || input_size % l.stride != 0) {
      throw InputError("level " + l.id + " stride must divide input_size");
    }
    if (i > 0 && l.stride != 2 * levels[i - 1].stride) {
      throw InputError("level strides must double from one level to the next");
    }
  }
  for (const auto* stage : {&low, &high}) {
    if (stage->gather.empty() || stage->targets.empty()) {
      throw InputError("each fusion stage needs gather and target levels");
    }
    std::set<std::string> seen;
    for (const auto& id : stage->gather) {
      index_of(id);
      if (!seen.insert(id).second) throw InputError("level " + id + " gathered twice");
    }
    index_of(stage->align_to);
    seen.clear();
    for (const auto& id : stage->targets) {
      index_of(id);
      if (!seen.insert(id).second) throw InputError("level " + id + " targeted twice");
    }
  }
  if (heads <= 0) throw InputError("heads must be positive");
  if (token_width() % heads != 0) {
    throw InputError("high-stage channel count " + std::to_string(token_width()) +
                     " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (ffn_hidden < 0) throw InputError("ffn_hidden must be non-negative");
}

PyramidSpec default_pyramid_spec(int input_size) {
  PyramidSpec s;
  s.input_size = input_size;
  s.levels = {{"p2", 8, 4}, {"p3", 8, 8}, {"p4", 16, 16}, {"p5", 16, 32}, {"p6", 32, 64}};
  s.low = {{"p2", "p3", "p4", "p5"}, "p4", {"p2", "p3", "p4"}};
  s.high = {{"p3", "p4", "p5", "p6"}, "p5", {"p4", "p5", "p6"}};
  s.heads = 1;
  s.ffn_hidden = 0;
  s.validate();
  return s;
}

PyramidSpec pyramid_spec_from_json(const nlohmann::json& j) {
  PyramidSpec s;
  try {
    s.input_size = j.at("input_size").get<int>();
    for (const auto& l : j.at("levels")) {
      s.levels.push_back({l.at("id").get<std::string>(), l.at("channels").get<int>(), l.at("stride").get<int>()});
    }
    s.low = stage_from_json(j.at("low"));
    s.high = stage_from_json(j.at("high"));
    s.heads = j.value("heads", 1);
    s.ffn_hidden = j.value("ffn_hidden", 0);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed pyramid spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const PyramidSpec& spec) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : spec.levels) levels.push_back({{"id", l.id}, {"channels", l.channels}, {"stride", l.stride}});
  return {{"input_size", spec.input_size},
          {"levels", levels},
          {"low", stage_to_json(spec.low)},
          {"high", stage_to_json(spec.high)},
          {"heads", spec.heads},
          {"ffn_hidden", spec.ffn_hidden}};
}

PyramidSpec read_pyramid_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return pyramid_spec_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

// Weights --------------------------------------------------------------------

FusionWeights seeded_weights(const PyramidSpec& spec, std::uint64_t seed) {
  spec.validate();
  UniformSource rng(seed);
  FusionWeights w;
  const auto low_targets = target_channels(spec, spec.low);
  int low_out = 0;
  for (int c : low_targets) low_out += c;
  w.low_fuse = make_conv(low_out, spec.channel_sum(spec.low.gather), 3, rng);
  for (const auto& id : spec.low.targets) w.low_inject[id] = make_injection(spec.level(id).channels, rng);

  const int d = spec.token_width();
  w.attention = {make_linear(d, d, rng), make_linear(d, d, rng), make_linear(d, d, rng), make_linear(d, d, rng)};
  w.ffn_in = make_linear(spec.hidden_width(), d, rng);
  w.ffn_out = make_linear(d, spec.hidden_width(), rng);
  w.high_proj = make_conv(spec.channel_sum(spec.high.targets), d, 1, rng);
  for (const auto& id : spec.high.targets) w.high_inject[id] = make_injection(spec.level(id).channels, rng);
  return w;
}

void check_weights(const PyramidSpec& spec, const FusionWeights& w) {
  spec.validate();
  expect_conv(w.low_fuse, spec.channel_sum(spec.low.targets), spec.channel_sum(spec.low.gather), 3, "low.fuse");
  expect_injections(w.low_inject, spec, spec.low, "low.inject.");
  const int d = spec.token_width();
  expect_linear(w.attention.query, d, d, "high.attn.q");
  expect_linear(w.attention.key, d, d, "high.attn.k");
  expect_linear(w.attention.value, d, d, "high.attn.v");
  expect_linear(w.attention.output, d, d, "high.attn.o");
  expect_linear(w.ffn_in, spec.hidden_width(), d, "high.ffn.in");
  expect_linear(w.ffn_out, d, spec.hidden_width(), "high.ffn.out");
  expect_conv(w.high_proj, spec.channel_sum(spec.high.targets), d, 1, "high.proj");
  expect_injections(w.high_inject, spec, spec.high, "high.inject.");
}

std::vector<Tensor> weights_to_tensors(const FusionWeights& w) {
  std::vector<Tensor> out;
  push_conv(out, "low.fuse", w.low_fuse);
  push_injections(out, "low.inject.", w.low_inject);
  push_linear(out, "high.attn.q", w.attention.query);
  push_linear(out, "high.attn.k", w.attention.key);
  push_linear(out, "high.attn.v", w.attention.value);
  push_linear(out, "high.attn.o", w.attention.output);
  push_linear(out, "high.ffn.in", w.ffn_in);
  push_linear(out, "high.ffn.out", w.ffn_out);
  push_conv(out, "high.proj", w.high_proj);
  push_injections(out, "high.inject.", w.high_inject);
  return out;
}

FusionWeights weights_from_tensors(const PyramidSpec& spec, const std::vector<Tensor>& tensors) {
  const TensorLookup t(tensors);
  FusionWeights w;
  w.low_fuse = t.conv("low.fuse");
  for (const auto& id : spec.low.targets) w.low_inject[id] = t.injection("low.inject." + id);
  w.attention = {t.linear("high.attn.q"), t.linear("high.attn.k"), t.linear("high.attn.v"),
                 t.linear("high.attn.o")};
  w.ffn_in = t.linear("high.ffn.in");
  w.ffn_out = t.linear("high.ffn.out");
  w.high_proj = t.conv("high.proj");
  for (const auto& id : spec.high.targets) w.high_inject[id] = t.injection("high.inject." + id);
  check_weights(spec, w);
  return w;
}

// Forward --------------------------------------------------------------------

Pyramid seeded_pyramid(const PyramidSpec& spec, std::uint64_t seed) {
  spec.validate();
  UniformSource rng(seed);
  Pyramid out;
  for (const auto& l : spec.levels) {
    const int e = spec.input_size / l.stride;
    FeatureMap m(l.channels, e, e);
    for (auto& v : m.data()) v = rng.next(1.0);
    out.push_back(std::move(m));
  }
  return out;
}

void check_pyramid(const PyramidSpec& spec, const Pyramid& pyramid) {
  if (pyramid.size() != spec.levels.size()) {
    throw InputError("pyramid has " + std::to_string(pyramid.size()) + " levels, spec lists " +
                     std::to_string(spec.levels.size()));
  }
  for (std::size_t i = 0; i < pyramid.size(); ++i) {
    const auto& l = spec.levels[i];
    const int e = spec.input_size / l.stride;
    const auto& m = pyramid[i];
    if (m.channels() != l.channels || m.height() != e || m.width() != e) {
      throw InputError("level " + l.id + " input has shape [" + std::to_string(m.channels()) + "," +
                       std::to_string(m.height()) + "," + std::to_string(m.width()) + "], expected [" +
                       std::to_string(l.channels) + "," + std::to_string(e) + "," + std::to_string(e) + "]");
    }
  }
}

FeatureMap align(const FeatureMap& map, int height, int width) {
  if (height <= 0 || width <= 0) throw InputError("alignment target must be positive");
  if (map.height() == height && map.width() == width) return map;
  // Pool whatever axis is too large, then interpolate whatever is too small.
  const int ph = std::min(map.height(), height);
  const int pw = std::min(map.width(), width);
  FeatureMap reduced = (ph != map.height() || pw != map.width()) ? kernels::adaptive_avg_pool(map, ph, pw) : map;
  if (ph == height && pw == width) return reduced;
  return kernels::bilinear_resize(reduced, height, width);
}

std::vector<FeatureMap> align(std::span<const FeatureMap> maps, int height, int width) {
  if (maps.empty()) throw InputError("nothing to align");
  std::vector<FeatureMap> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.push_back(align(m, height, width));
  return out;
}

FeatureMap inject(const FeatureMap& local, const FeatureMap& global, const InjectionWeights& w) {
  const FeatureMap g = align(global, local.height(), local.width());
  if (w.embed.in_channels != local.channels() || w.gate.in_channels != g.channels() ||
      w.proj.in_channels != g.channels()) {
    throw InputError("injection weights do not match local/global channel counts");
  }
  const FeatureMap embedded = kernels::conv2d(local, w.embed);
  const FeatureMap gate = kernels::conv2d(g, w.gate);
  const FeatureMap projected = kernels::conv2d(g, w.proj);
  if (!embedded.same_shape(gate) || !embedded.same_shape(projected) || embedded.channels() != local.channels()) {
    throw InputError("injection branches disagree on output channels");
  }
  FeatureMap mixed(embedded.channels(), embedded.height(), embedded.width());
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed.data()[i] = embedded.data()[i] * sigmoid(gate.data()[i]) + projected.data()[i];
  }
  FeatureMap out = kernels::conv2d(mixed, w.rep);
  if (!out.same_shape(local)) throw InputError("injection output shape differs from the local input");
  return out;
}

Matrix transformer_block(const Matrix& tokens, const FusionWeights& w, int heads, TransformerTrace* trace) {
  AttentionResult attn = kernels::multi_head_attention(tokens, w.attention, heads);
  Matrix x = tokens;
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += attn.output.data[i];
  Matrix hidden = kernels::linear(x, w.ffn_in);
  for (auto& v : hidden.data) v = std::max(0.0, v);
  const Matrix ffn = kernels::linear(hidden, w.ffn_out);
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += ffn.data[i];
  if (trace) trace->attention = std::move(attn);
  return x;
}

Pyramid low_gd(const PyramidSpec& spec, const Pyramid& pyramid, const FusionWeights& w) {
  check_pyramid(spec, pyramid);
  const auto aligned = gather(spec, pyramid, spec.low);
  const FeatureMap fused = kernels::conv2d(concat_channels(aligned), w.low_fuse);
  return distribute(spec, pyramid, spec.low, fused, w.low_inject);
}

Pyramid high_gd(const PyramidSpec& spec, const Pyramid& pyramid, const FusionWeights& w, TransformerTrace* trace) {
  check_pyramid(spec, pyramid);
  const auto aligned = gather(spec, pyramid, spec.high);
  const FeatureMap stacked = concat_channels(aligned);
  const Matrix mixed = transformer_block(to_tokens(stacked), w, spec.heads, trace);
  const FeatureMap global =
      kernels::conv2d(from_tokens(mixed, stacked.height(), stacked.width()), w.high_proj);
  return distribute(spec, pyramid, spec.high, global, w.high_inject);
}

Pyramid forward(const PyramidSpec& spec, const Pyramid& pyramid, const FusionWeights& w) {
  check_weights(spec, w);
  return high_gd(spec, low_gd(spec, pyramid, w), w);
}

std::uint64_t pyramid_hash(const Pyramid& pyramid) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& m : pyramid) {
    mix(static_cast<std::uint64_t>(m.channels()));
    mix(static_cast<std::uint64_t>(m.height()));
    mix(static_cast<std::uint64_t>(m.width()));
    for (double v : m.data()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

}  // namespace detgeo
