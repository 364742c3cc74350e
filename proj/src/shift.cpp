#include "detgeo/shift.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "detgeo/errors.hpp"

namespace detgeo {

Histogram Histogram::from_counts(std::span<const double> counts) {
  if (counts.empty()) throw InputError("histogram needs at least one bin");
  double total = 0;
  for (double c : counts) {
    if (!std::isfinite(c) || c < 0) throw InputError("histogram counts must be finite and non-negative");
    total += c;
  }
  if (total <= 0) throw InputError("histogram has no mass");
  Histogram h;
  h.probs_.reserve(counts.size());
  for (double c : counts) h.probs_.push_back(c / total);
  return h;
}

Histogram Histogram::from_probs(std::vector<double> probs) {
  if (probs.empty()) throw InputError("histogram needs at least one bin");
  double total = 0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0) throw InputError("histogram probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("histogram probabilities must sum to 1");
  Histogram h;
  h.probs_ = std::move(probs);
  return h;
}

void IntensityCounts::add(const GrayImage& img) {
  for (auto px : img.pixels) ++bins[px];
}

void IntensityCounts::merge(const IntensityCounts& other) {
  for (std::size_t i = 0; i < bins.size(); ++i) bins[i] += other.bins[i];
}

std::uint64_t IntensityCounts::total() const {
  return std::accumulate(bins.begin(), bins.end(), std::uint64_t{0});
}

namespace {

Histogram to_histogram(const IntensityCounts& counts) {
  std::vector<double> c(counts.bins.begin(), counts.bins.end());
  return Histogram::from_counts(c);
}

}  // namespace

Histogram intensity_histogram(std::span<const GrayImage> images) {
  if (images.empty()) throw InputError("intensity histogram needs at least one image");
  IntensityCounts counts;
  for (const auto& img : images) counts.add(img);
  return to_histogram(counts);
}

Histogram intensity_histogram_of_files(std::span<const std::filesystem::path> files) {
  if (files.empty()) throw InputError("intensity histogram needs at least one image");
  const auto n = static_cast<long long>(files.size());
  std::vector<IntensityCounts> shards(files.size());
  std::string error;
  // Files decode independently; shards are merged in file order afterwards.
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    try {
      shards[i].add(read_gray_image(files[i]));
    } catch (const std::exception& e) {
#pragma omp critical
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw InputError(error);
  IntensityCounts total;
  for (const auto& s : shards) total.merge(s);
  return to_histogram(total);
}

double js_divergence(const Histogram& p, const Histogram& q) {
  if (p.bin_count() != q.bin_count()) {
    throw InputError("histogram bin counts differ (" + std::to_string(p.bin_count()) + " vs " +
                     std::to_string(q.bin_count()) + ")");
  }
  double kl_p = 0;
  double kl_q = 0;
  for (std::size_t i = 0; i < p.bin_count(); ++i) {
    const double a = p.probs()[i];
    const double b = q.probs()[i];
    const double m = 0.5 * (a + b);
    if (a > 0) kl_p += a * std::log(a / m);
    if (b > 0) kl_q += b * std::log(b / m);
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

Histogram parse_histogram_csv(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  bool header = false;
  std::map<long, double> counts;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "bin,count") throw InputError(source + ":1: expected header 'bin,count'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    const std::string where = source + ":" + std::to_string(lineno);
    if (comma == std::string::npos) throw InputError(where + ": expected 'bin,count'");
    long bin = 0;
    double count = 0;
    const char* b = line.data();
    const char* e = line.data() + line.size();
    auto r1 = std::from_chars(b, b + comma, bin);
    auto r2 = std::from_chars(b + comma + 1, e, count);
    if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} || r2.ptr != e) {
      throw InputError(where + ": malformed histogram row");
    }
    if (bin < 0) throw InputError(where + ": negative bin index");
    if (!counts.emplace(bin, count).second) throw InputError(where + ": duplicate bin " + std::to_string(bin));
  }
  if (!header) throw InputError(source + ": empty histogram file");
  if (counts.empty()) throw InputError(source + ": histogram has no rows");
  std::vector<double> dense(static_cast<std::size_t>(counts.rbegin()->first) + 1, 0.0);
  if (counts.size() != dense.size()) throw InputError(source + ": bins must be listed contiguously from 0");
  for (const auto& [bin, c] : counts) dense[bin] = c;
  try {
    return Histogram::from_counts(dense);
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

Histogram read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_histogram_csv(in, path.string());
}

}  // namespace detgeo
