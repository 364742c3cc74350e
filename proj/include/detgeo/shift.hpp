#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "detgeo/image_io.hpp"

namespace detgeo {

/// Normalized discrete distribution over intensity bins.
class Histogram {
 public:
  // Normalizes `counts`; throws InputError when empty, negative or all zero.
  static Histogram from_counts(std::span<const double> counts);
  // Takes probabilities as given; they must be non-negative and sum to 1 +- 1e-9.
  static Histogram from_probs(std::vector<double> probs);

  std::size_t bin_count() const { return probs_.size(); }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

/// Raw 256-bin pixel counts. Shards merge by addition, so accumulation order
/// does not matter.
struct IntensityCounts {
  std::vector<std::uint64_t> bins = std::vector<std::uint64_t>(256, 0);

  void add(const GrayImage& img);
  void merge(const IntensityCounts& other);
  std::uint64_t total() const;
};

// Pooled 256-bin histogram over every pixel of every image. Throws on an empty set.
Histogram intensity_histogram(std::span<const GrayImage> images);
Histogram intensity_histogram_of_files(std::span<const std::filesystem::path> files);

/// JS(p, q) = KL(p || m) / 2 + KL(q || m) / 2 with m = (p + q) / 2, natural
/// log, 0 log 0 = 0. Range [0, ln 2].
double js_divergence(const Histogram& p, const Histogram& q);

// CSV with header "bin,count"; bins must be 0..n-1, each listed once.
Histogram parse_histogram_csv(std::istream& in, const std::string& source = "<stream>");
Histogram read_histogram_csv(const std::filesystem::path& path);

}  // namespace detgeo
