#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace detgeo {

/// Dense channels x height x width array, row-major (CHW).
class FeatureMap {
 public:
  FeatureMap() = default;
  // Zero-filled. Throws InputError on non-positive dims.
  FeatureMap(int channels, int height, int width);
  // Throws InputError if data.size() != C*H*W or any value is non-finite.
  FeatureMap(int channels, int height, int width, std::vector<double> data);

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t size() const { return data_.size(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<double> channel(int c) { return {data_.data() + index(c, 0, 0), plane()}; }
  std::span<const double> channel(int c) const { return {data_.data() + index(c, 0, 0), plane()}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const FeatureMap& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t plane() const { return static_cast<std::size_t>(h_) * w_; }
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * h_ + y) * w_ + x;
  }

  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

/// Row-major 2-D matrix; used for token sequences (rows = tokens).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Channel concatenation; all maps must share H x W.
FeatureMap concat_channels(std::span<const FeatureMap> maps);
// Split along channels into consecutive chunks of the given sizes (must sum to C).
std::vector<FeatureMap> split_channels(const FeatureMap& map, std::span<const int> sizes);

// (C, H, W) <-> (H*W tokens, C features)
Matrix to_tokens(const FeatureMap& map);
FeatureMap from_tokens(const Matrix& tokens, int height, int width);

}  // namespace detgeo
