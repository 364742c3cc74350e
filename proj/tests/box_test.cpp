#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "detgeo/box.hpp"
#include "detgeo/errors.hpp"

using namespace detgeo;

TEST(Box, RejectsDegenerateAndNonFinite) {
  EXPECT_THROW(Box(0, 0, 0, 5), InputError);
  EXPECT_THROW(Box(0, 0, 5, -1), InputError);
  EXPECT_THROW(Box(std::nan(""), 0, 1, 1), InputError);
  EXPECT_THROW(Box(0, std::numeric_limits<double>::infinity(), 1, 1), InputError);
  EXPECT_NO_THROW(Box(-3, -4, 1e-6, 1e6));
}

TEST(Box, ToCorner) {
  EXPECT_EQ(to_corner(Box(5, 5, 10, 10)), (CornerBox{0, 0, 10, 10}));
  EXPECT_EQ(to_corner(Box(0, 0, 2, 4)), (CornerBox{-1, -2, 1, 2}));
}

TEST(Box, FromCorner) {
  EXPECT_EQ(from_corner({0, 0, 10, 10}), Box(5, 5, 10, 10));
  EXPECT_EQ(from_corner({-1, -2, 1, 2}), Box(0, 0, 2, 4));
  try {
    from_corner({0, 0, 0, 5});
    FAIL() << "zero width accepted";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("width"), std::string::npos);
  }
  EXPECT_THROW(from_corner({0, 3, 1, 2}), InputError);
}

TEST(Box, CornerRoundTripIsExact) {
  // Dyadic coordinates keep every intermediate exactly representable.
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pos(-64000, 64000), ext(1, 64000);
  for (int i = 0; i < 2000; ++i) {
    const Box b(pos(rng) / 64.0, pos(rng) / 64.0, ext(rng) / 64.0, ext(rng) / 64.0);
    EXPECT_EQ(from_corner(to_corner(b)), b);
  }
}

TEST(Box, RecordConstructorsValidate) {
  const Box b(1, 1, 2, 2);
  EXPECT_THROW(make_ground_truth(b, -1), InputError);
  EXPECT_THROW(make_detection(b, 0, 1.5), InputError);
  EXPECT_THROW(make_detection(b, 0, std::nan("")), InputError);
  EXPECT_EQ(make_detection(b, 2, 0.25).class_id, 2);
}

TEST(SizeRecord, Examples) {
  auto rec = size_record(make_ground_truth(Box(100, 100, 64, 64), 0), 640, 640);
  EXPECT_DOUBLE_EQ(rec.rel_w, 0.1);
  EXPECT_DOUBLE_EQ(rec.rel_h, 0.1);
  EXPECT_EQ(rec.size_class, SizeClass::Small);
  EXPECT_FALSE(rec.overhangs);

  rec = size_record(make_ground_truth(Box(320, 320, 400, 100), 0), 640, 640);
  EXPECT_DOUBLE_EQ(rec.rel_w, 0.625);
  EXPECT_EQ(rec.size_class, SizeClass::Large);

  rec = size_record(make_ground_truth(Box(320, 320, 200, 200), 0), 640, 640);
  EXPECT_DOUBLE_EQ(rec.rel_w, 0.3125);
  EXPECT_EQ(rec.size_class, SizeClass::Medium);
}

TEST(SizeRecord, ThresholdsAreStrict) {
  EXPECT_EQ(classify_size(0.2, 0.1), SizeClass::Medium);
  EXPECT_EQ(classify_size(0.6, 0.1), SizeClass::Medium);
  EXPECT_EQ(classify_size(0.1999, 0.1), SizeClass::Small);
  EXPECT_EQ(classify_size(0.1, 0.6001), SizeClass::Large);
}

TEST(SizeRecord, OverhangIsFlaggedNotClipped) {
  const auto rec = size_record(make_ground_truth(Box(5, 5, 20, 20), 0), 100, 100);
  EXPECT_TRUE(rec.overhangs);
  EXPECT_DOUBLE_EQ(rec.rel_w, 0.2);
  EXPECT_THROW(size_record(make_ground_truth(Box(5, 5, 1, 1), 0), 0, 100), InputError);
}
