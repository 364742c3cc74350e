#include "detgeo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detgeo/errors.hpp"

namespace detgeo {

FeatureMap::FeatureMap(int channels, int height, int width) : c_(channels), h_(height), w_(width) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw InputError("feature map dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, 0.0);
}

FeatureMap::FeatureMap(int channels, int height, int width, std::vector<double> data)
    : FeatureMap(channels, height, width) {
  if (data.size() != data_.size()) {
    throw InputError("feature map data length " + std::to_string(data.size()) + " != C*H*W = " +
                     std::to_string(data_.size()));
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw InputError("feature map contains a non-finite value");
  }
  data_ = std::move(data);
}

FeatureMap concat_channels(std::span<const FeatureMap> maps) {
  if (maps.empty()) throw InputError("cannot concatenate an empty list of feature maps");
  int channels = 0;
  for (const auto& m : maps) {
    if (m.height() != maps[0].height() || m.width() != maps[0].width()) {
      throw InputError("concatenated feature maps must share height and width");
    }
    channels += m.channels();
  }
  FeatureMap out(channels, maps[0].height(), maps[0].width());
  auto dst = out.data().begin();
  for (const auto& m : maps) dst = std::copy(m.data().begin(), m.data().end(), dst);
  return out;
}

std::vector<FeatureMap> split_channels(const FeatureMap& map, std::span<const int> sizes) {
  int total = 0;
  for (int s : sizes) {
    if (s <= 0) throw InputError("split sizes must be positive");
    total += s;
  }
  if (total != map.channels()) {
    throw InputError("split sizes sum to " + std::to_string(total) + " but map has " +
                     std::to_string(map.channels()) + " channels");
  }
  std::vector<FeatureMap> out;
  const std::size_t plane = static_cast<std::size_t>(map.height()) * map.width();
  auto src = map.data().begin();
  for (int s : sizes) {
    FeatureMap part(s, map.height(), map.width());
    const auto n = static_cast<std::ptrdiff_t>(plane * s);
    std::copy(src, src + n, part.data().begin());
    src += n;
    out.push_back(std::move(part));
  }
  return out;
}

Matrix to_tokens(const FeatureMap& map) {
  const int n = map.height() * map.width();
  Matrix t(n, map.channels());
  for (int c = 0; c < map.channels(); ++c) {
    for (int y = 0; y < map.height(); ++y) {
      for (int x = 0; x < map.width(); ++x) t(y * map.width() + x, c) = map.at(c, y, x);
    }
  }
  return t;
}

FeatureMap from_tokens(const Matrix& tokens, int height, int width) {
  if (tokens.rows != height * width) throw InputError("token count does not match height*width");
  FeatureMap out(tokens.cols, height, width);
  for (int c = 0; c < tokens.cols; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out.at(c, y, x) = tokens(y * width + x, c);
    }
  }
  return out;
}

void ConvWeights::check() const {
  if (out_channels <= 0 || in_channels <= 0 || kernel <= 0 || kernel % 2 == 0) {
    throw InputError("convolution needs positive channels and an odd kernel size");
  }
  const auto expected = static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  if (weight.size() != expected || bias.size() != static_cast<std::size_t>(out_channels)) {
    throw InputError("convolution weight/bias sizes do not match their declared shape");
  }
}

void LinearWeights::check() const {
  if (out_features <= 0 || in_features <= 0) throw InputError("linear layer needs positive sizes");
  if (weight.size() != static_cast<std::size_t>(out_features) * in_features ||
      bias.size() != static_cast<std::size_t>(out_features)) {
    throw InputError("linear weight/bias sizes do not match their declared shape");
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

void check_target(int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw InputError("resize target must be positive");
}

void check_pool_target(const FeatureMap& in, int out_h, int out_w) {
  check_target(out_h, out_w);
  if (out_h > in.height() || out_w > in.width()) throw InputError("average pooling cannot upsample");
}

struct Tap {
  int i0, i1;
  double frac;
};

Tap bilinear_tap(int dst, int in, int out) {
  const double scale = static_cast<double>(in) / out;
  double src = (dst + 0.5) * scale - 0.5;
  if (src < 0) src = 0;
  const int i0 = std::min(static_cast<int>(src), in - 1);
  const int i1 = i0 < in - 1 ? i0 + 1 : i0;
  return {i0, i1, i0 < in - 1 ? src - i0 : 0.0};
}

struct Window {
  int begin, end;
};

Window pool_window(int i, int in, int out) {
  const int begin = static_cast<int>((static_cast<long long>(i) * in) / out);
  const int end = static_cast<int>((static_cast<long long>(i + 1) * in + out - 1) / out);
  return {begin, end};
}

double bilinear_pixel(const FeatureMap& in, int c, const Tap& ty, const Tap& tx) {
  const double top = (1 - tx.frac) * in.at(c, ty.i0, tx.i0) + tx.frac * in.at(c, ty.i0, tx.i1);
  const double bot = (1 - tx.frac) * in.at(c, ty.i1, tx.i0) + tx.frac * in.at(c, ty.i1, tx.i1);
  return (1 - ty.frac) * top + ty.frac * bot;
}

double pool_pixel(const FeatureMap& in, int c, const Window& wy, const Window& wx) {
  double sum = 0;
  for (int y = wy.begin; y < wy.end; ++y) {
    for (int x = wx.begin; x < wx.end; ++x) sum += in.at(c, y, x);
  }
  return sum / ((wy.end - wy.begin) * (wx.end - wx.begin));
}

double conv_pixel(const FeatureMap& in, const ConvWeights& w, int o, int y, int x) {
  const int pad = w.kernel / 2;
  const int k = w.kernel;
  double acc = w.bias[o];
  for (int i = 0; i < w.in_channels; ++i) {
    const double* kern = &w.weight[(static_cast<std::size_t>(o) * w.in_channels + i) * k * k];
    for (int ky = 0; ky < k; ++ky) {
      const int sy = y + ky - pad;
      if (sy < 0 || sy >= in.height()) continue;
      for (int kx = 0; kx < k; ++kx) {
        const int sx = x + kx - pad;
        if (sx < 0 || sx >= in.width()) continue;
        acc += kern[ky * k + kx] * in.at(i, sy, sx);
      }
    }
  }
  return acc;
}

void check_conv_input(const FeatureMap& in, const ConvWeights& w) {
  w.check();
  if (in.channels() != w.in_channels) {
    throw InputError("convolution expects " + std::to_string(w.in_channels) + " input channels, got " +
                     std::to_string(in.channels()));
  }
}

double linear_entry(const Matrix& x, const LinearWeights& w, int r, int o) {
  double acc = w.bias[o];
  const double* row = &w.weight[static_cast<std::size_t>(o) * w.in_features];
  for (int i = 0; i < w.in_features; ++i) acc += row[i] * x(r, i);
  return acc;
}

void check_linear_input(const Matrix& x, const LinearWeights& w) {
  w.check();
  if (x.cols != w.in_features) throw InputError("linear layer input width mismatch");
}

void check_attention(const Matrix& x, const AttentionWeights& w, int heads) {
  if (heads <= 0) throw InputError("head count must be positive");
  if (x.cols % heads != 0) {
    throw InputError("feature count " + std::to_string(x.cols) + " is not divisible by " +
                     std::to_string(heads) + " heads");
  }
  for (const auto* l : {&w.query, &w.key, &w.value, &w.output}) {
    if (l->in_features != x.cols || l->out_features != x.cols) {
      throw InputError("attention projections must be features x features");
    }
  }
}

// Scaled dot-product attention of one head over precomputed projections.
// Writes the head's slice of `concat` and its weight matrix.
void attend_row(const Matrix& q, const Matrix& k, const Matrix& v, int head, int head_dim, int row,
                Matrix& weights, Matrix& concat) {
  const int n = q.rows;
  const int off = head * head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  double max_logit = -INFINITY;
  for (int j = 0; j < n; ++j) {
    double dot = 0;
    for (int d = 0; d < head_dim; ++d) dot += q(row, off + d) * k(j, off + d);
    weights(row, j) = dot * scale;
    max_logit = std::max(max_logit, weights(row, j));
  }
  double total = 0;
  for (int j = 0; j < n; ++j) {
    weights(row, j) = std::exp(weights(row, j) - max_logit);
    total += weights(row, j);
  }
  for (int j = 0; j < n; ++j) weights(row, j) /= total;
  for (int d = 0; d < head_dim; ++d) {
    double acc = 0;
    for (int j = 0; j < n; ++j) acc += weights(row, j) * v(j, off + d);
    concat(row, off + d) = acc;
  }
}

}  // namespace

namespace kernels {

namespace serial {

FeatureMap bilinear_resize(const FeatureMap& in, int out_h, int out_w) {
  check_target(out_h, out_w);
  FeatureMap out(in.channels(), out_h, out_w);
  for (int c = 0; c < in.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      const Tap ty = bilinear_tap(y, in.height(), out_h);
      for (int x = 0; x < out_w; ++x) {
        out.at(c, y, x) = bilinear_pixel(in, c, ty, bilinear_tap(x, in.width(), out_w));
      }
    }
  }
  return out;
}

FeatureMap adaptive_avg_pool(const FeatureMap& in, int out_h, int out_w) {
  check_pool_target(in, out_h, out_w);
  FeatureMap out(in.channels(), out_h, out_w);
  for (int c = 0; c < in.channels(); ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        out.at(c, y, x) = pool_pixel(in, c, pool_window(y, in.height(), out_h),
                                     pool_window(x, in.width(), out_w));
      }
    }
  }
  return out;
}

FeatureMap conv2d(const FeatureMap& in, const ConvWeights& w) {
  check_conv_input(in, w);
  FeatureMap out(w.out_channels, in.height(), in.width());
  for (int o = 0; o < w.out_channels; ++o) {
    for (int y = 0; y < in.height(); ++y) {
      for (int x = 0; x < in.width(); ++x) out.at(o, y, x) = conv_pixel(in, w, o, y, x);
    }
  }
  return out;
}

Matrix linear(const Matrix& x, const LinearWeights& w) {
  check_linear_input(x, w);
  Matrix out(x.rows, w.out_features);
  for (int r = 0; r < x.rows; ++r) {
    for (int o = 0; o < w.out_features; ++o) out(r, o) = linear_entry(x, w, r, o);
  }
  return out;
}

AttentionResult multi_head_attention(const Matrix& x, const AttentionWeights& w, int heads) {
  check_attention(x, w, heads);
  const Matrix q = linear(x, w.query);
  const Matrix k = linear(x, w.key);
  const Matrix v = linear(x, w.value);
  const int head_dim = x.cols / heads;
  Matrix concat(x.rows, x.cols);
  AttentionResult res;
  for (int h = 0; h < heads; ++h) {
    Matrix weights(x.rows, x.rows);
    for (int r = 0; r < x.rows; ++r) attend_row(q, k, v, h, head_dim, r, weights, concat);
    res.weights.push_back(std::move(weights));
  }
  res.output = linear(concat, w.output);
  return res;
}

}  // namespace serial

FeatureMap bilinear_resize(const FeatureMap& in, int out_h, int out_w) {
  check_target(out_h, out_w);
  FeatureMap out(in.channels(), out_h, out_w);
  std::vector<Tap> tx(out_w);
  for (int x = 0; x < out_w; ++x) tx[x] = bilinear_tap(x, in.width(), out_w);
  const int channels = in.channels();
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const Tap ty = bilinear_tap(y, in.height(), out_h);
      for (int x = 0; x < out_w; ++x) out.at(c, y, x) = bilinear_pixel(in, c, ty, tx[x]);
    }
  }
  return out;
}

FeatureMap adaptive_avg_pool(const FeatureMap& in, int out_h, int out_w) {
  check_pool_target(in, out_h, out_w);
  FeatureMap out(in.channels(), out_h, out_w);
  std::vector<Window> wx(out_w);
  for (int x = 0; x < out_w; ++x) wx[x] = pool_window(x, in.width(), out_w);
  const int channels = in.channels();
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      const Window wy = pool_window(y, in.height(), out_h);
      for (int x = 0; x < out_w; ++x) out.at(c, y, x) = pool_pixel(in, c, wy, wx[x]);
    }
  }
  return out;
}

FeatureMap conv2d(const FeatureMap& in, const ConvWeights& w) {
  check_conv_input(in, w);
  FeatureMap out(w.out_channels, in.height(), in.width());
  const int oc = w.out_channels;
  const int height = in.height();
  const int width = in.width();
#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < oc; ++o) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out.at(o, y, x) = conv_pixel(in, w, o, y, x);
    }
  }
  return out;
}

Matrix linear(const Matrix& x, const LinearWeights& w) {
  check_linear_input(x, w);
  Matrix out(x.rows, w.out_features);
  const int rows = x.rows;
  const int outs = w.out_features;
#pragma omp parallel for collapse(2) schedule(static)
  for (int r = 0; r < rows; ++r) {
    for (int o = 0; o < outs; ++o) out(r, o) = linear_entry(x, w, r, o);
  }
  return out;
}

AttentionResult multi_head_attention(const Matrix& x, const AttentionWeights& w, int heads) {
  check_attention(x, w, heads);
  const Matrix q = linear(x, w.query);
  const Matrix k = linear(x, w.key);
  const Matrix v = linear(x, w.value);
  const int head_dim = x.cols / heads;
  const int rows = x.rows;
  Matrix concat(rows, x.cols);
  AttentionResult res;
  res.weights.assign(heads, Matrix(rows, rows));
#pragma omp parallel for collapse(2) schedule(static)
  for (int h = 0; h < heads; ++h) {
    for (int r = 0; r < rows; ++r) attend_row(q, k, v, h, head_dim, r, res.weights[h], concat);
  }
  res.output = linear(concat, w.output);
  return res;
}

}  // namespace kernels

}  // namespace detgeo
