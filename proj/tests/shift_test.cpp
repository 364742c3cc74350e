#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "detgeo/errors.hpp"
#include "detgeo/image_io.hpp"
#include "detgeo/shift.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace detgeo;

namespace {

GrayImage flat(int w, int h, std::uint8_t v) { return {w, h, std::vector<std::uint8_t>(w * h, v)}; }

GrayImage noise(std::mt19937_64& rng, int w, int h) {
  GrayImage img{w, h, std::vector<std::uint8_t>(w * h)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

Histogram random_hist(std::mt19937_64& rng, std::size_t n, double zero_fraction) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> counts(n);
  for (auto& c : counts) c = u(rng) < zero_fraction ? 0.0 : u(rng);
  counts[rng() % n] += 1;
  return Histogram::from_counts(counts);
}

}  // namespace

TEST(IntensityHistogram, Counting) {
  const std::vector<GrayImage> zero{flat(4, 3, 0)};
  const auto h = intensity_histogram(zero);
  EXPECT_EQ(h.bin_count(), 256u);
  EXPECT_EQ(h.probs()[0], 1.0);

  const std::vector<GrayImage> two{flat(5, 5, 10), flat(5, 5, 200)};
  const auto h2 = intensity_histogram(two);
  EXPECT_EQ(h2.probs()[10], 0.5);
  EXPECT_EQ(h2.probs()[200], 0.5);

  std::mt19937_64 rng(3);
  const std::vector<GrayImage> rand{noise(rng, 17, 9), noise(rng, 3, 40)};
  double s = 0;
  for (double p : intensity_histogram(rand).probs()) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_THROW(intensity_histogram({}), InputError);
}

TEST(IntensityHistogram, FilesPoolPixelsNotImages) {
  testutil::TempDir dir;
  testutil::write_file(dir / "a.pgm", encode_pgm(flat(2, 2, 7)));
  testutil::write_file(dir / "b.pgm", encode_pgm(flat(6, 1, 9)));
  testutil::write_file(dir / "c.txt", "skip");
  const auto files = list_images(dir.path());
  ASSERT_EQ(files.size(), 2u);
  const auto h = intensity_histogram_of_files(files);
  EXPECT_DOUBLE_EQ(h.probs()[7], 0.4);
  EXPECT_DOUBLE_EQ(h.probs()[9], 0.6);
}

TEST(Pgm, RoundTripAndErrors) {
  std::mt19937_64 rng(4);
  const auto img = noise(rng, 7, 5);
  const auto back = decode_pgm(encode_pgm(img));
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.pixels, img.pixels);
  EXPECT_THROW(decode_pgm("P2\n1 1\n255\n0"), InputError);
  EXPECT_THROW(decode_pgm("P5\n4 4\n255\nab"), InputError);
  // Comments and a 16-bit raster scaled to 8 bits.
  const std::string wide = std::string("P5\n# c\n2 1\n65535\n") + std::string("\xff\xff\x00\x00", 4);
  const auto w = decode_pgm(wide);
  EXPECT_EQ(w.pixels[0], 255);
  EXPECT_EQ(w.pixels[1], 0);
}

TEST(JsDivergence, Bounds) {
  const auto p = Histogram::from_probs({0.2, 0.3, 0.5, 0.0});
  EXPECT_EQ(js_divergence(p, p), 0.0);
  const auto a = Histogram::from_probs({0.5, 0.5, 0.0, 0.0});
  const auto b = Histogram::from_probs({0.0, 0.0, 0.25, 0.75});
  EXPECT_NEAR(js_divergence(a, b), std::numbers::ln2, 1e-12);
  EXPECT_THROW(js_divergence(a, Histogram::from_probs({1.0})), InputError);
}

TEST(JsDivergence, TwoBinExample) {
  const auto p = Histogram::from_probs({0.5, 0.5});
  const auto q = Histogram::from_probs({1.0, 0.0});
  // 0.5 [0.5 ln(0.5/0.75) + 0.5 ln 2] + 0.5 ln(1/0.75)
  const double closed = 0.5 * (0.5 * std::log(0.5 / 0.75) + 0.5 * std::log(2.0)) + 0.5 * std::log(1 / 0.75);
  EXPECT_NEAR(js_divergence(p, q), closed, 1e-15);
  EXPECT_NEAR(js_divergence(p, q), 0.2157615543388357, 1e-15);
}

TEST(JsDivergence, MatchesDirectSummationAndIsSymmetric) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto p = random_hist(rng, 256, 0.3), q = random_hist(rng, 256, 0.3);
    const double js = js_divergence(p, q);
    EXPECT_NEAR(js, oracle::js_divergence(p.probs(), q.probs()), 1e-12);
    EXPECT_NEAR(js, js_divergence(q, p), 1e-12);
    EXPECT_GE(js, 0.0);
    EXPECT_LE(js, std::numbers::ln2 + 1e-12);
  }
}

TEST(Histogram, Validation) {
  EXPECT_THROW(Histogram::from_probs({0.5, 0.4}), InputError);
  EXPECT_THROW(Histogram::from_probs({1.5, -0.5}), InputError);
  EXPECT_THROW(Histogram::from_counts(std::vector<double>{0, 0}), InputError);
  EXPECT_NO_THROW(Histogram::from_probs({0.5, 0.5 + 1e-12}));
}

TEST(HistogramCsv, Parse) {
  std::istringstream ok("bin,count\n0,1\n2,3\n1,0\n");
  const auto h = parse_histogram_csv(ok);
  ASSERT_EQ(h.bin_count(), 3u);
  EXPECT_DOUBLE_EQ(h.probs()[2], 0.75);
  std::istringstream gap("bin,count\n0,1\n2,3\n");
  EXPECT_THROW(parse_histogram_csv(gap), InputError);
  std::istringstream dup("bin,count\n0,1\n0,3\n");
  EXPECT_THROW(parse_histogram_csv(dup), InputError);
  std::istringstream header("b,c\n0,1\n");
  EXPECT_THROW(parse_histogram_csv(header), InputError);
}
