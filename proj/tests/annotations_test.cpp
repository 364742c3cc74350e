#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "detgeo/annotations.hpp"
#include "detgeo/errors.hpp"
#include "test_util.hpp"

using namespace detgeo;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ClassTable, ParsesAndRejectsDuplicates) {
  std::istringstream in("crack\n\n  finger \ncrack\n");
  EXPECT_THROW(parse_class_table(in), InputError);
  std::istringstream ok("crack\nfinger\n");
  const auto t = parse_class_table(ok);
  EXPECT_EQ(t.size(), 2u);
  EXPECT_EQ(t.id_of("finger"), 1);
  EXPECT_FALSE(t.find("black_core"));
  EXPECT_THROW(t.id_of("black_core"), InputError);
}

TEST(Voc, ParsesSizeAndObjects) {
  std::istringstream in(testutil::voc_xml(640, 480, {{"crack", 10, 20, 30, 60}, {"finger", 0, 0, 4, 4}}));
  const auto ann = parse_voc(in, "img01");
  EXPECT_EQ(ann.image_id, "img01");
  ASSERT_TRUE(ann.width && ann.height);
  EXPECT_EQ(*ann.width, 640);
  EXPECT_EQ(*ann.height, 480);
  ASSERT_EQ(ann.objects.size(), 2u);
  EXPECT_EQ(ann.objects[0].name, "crack");
  EXPECT_EQ(ann.objects[0].box, Box(20, 40, 20, 40));
}

TEST(Voc, ErrorsNameTheObject) {
  std::istringstream degenerate(testutil::voc_xml(64, 64, {{"a", 1, 1, 2, 2}, {"b", 5, 1, 5, 9}}));
  const auto msg = message_of([&] { parse_voc(degenerate, "x", "x.xml"); });
  EXPECT_NE(msg.find("x.xml: object 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("width"), std::string::npos) << msg;

  std::istringstream nan_coord(
      "<annotation><object><name>a</name><bndbox><xmin>nan</xmin><ymin>0</ymin><xmax>1</xmax>"
      "<ymax>1</ymax></bndbox></object></annotation>");
  EXPECT_THROW(parse_voc(nan_coord, "x"), InputError);

  std::istringstream broken("<annotation><object>");
  EXPECT_THROW(parse_voc(broken, "x"), InputError);

  std::istringstream no_box("<annotation><object><name>a</name></object></annotation>");
  EXPECT_THROW(parse_voc(no_box, "x"), InputError);
}

TEST(Voc, DirectoryIsSortedAndMissingClassRejected) {
  testutil::TempDir dir;
  testutil::write_file(dir / "b.xml", testutil::voc_xml(10, 10, {{"crack", 0, 0, 1, 1}}));
  testutil::write_file(dir / "a.xml", testutil::voc_xml(10, 10, {{"other", 0, 0, 1, 1}}));
  testutil::write_file(dir / "notes.txt", "ignored");
  const auto anns = read_voc_dir(dir.path());
  ASSERT_EQ(anns.size(), 2u);
  EXPECT_EQ(anns[0].image_id, "a");
  EXPECT_EQ(anns[1].image_id, "b");
  const ClassTable table({"crack"});
  EXPECT_EQ(to_ground_truths(anns[1], table).size(), 1u);
  EXPECT_THROW(to_ground_truths(anns[0], table), InputError);
  EXPECT_THROW(read_voc_dir(dir / "missing"), InputError);
}

TEST(Detections, ParsesJsonLinesWithLocations) {
  const ClassTable table({"crack", "finger"});
  std::istringstream in(
      "{\"image_id\": \"a\", \"class\": \"finger\", \"score\": 0.9, \"bbox\": [0, 0, 10, 20]}\n"
      "\n"
      "{\"image_id\": \"b\", \"class\": \"crack\", \"score\": 0.1, \"bbox\": [1, 1, 3, 3]}\n");
  const auto dets = parse_detections(in, table, "d.jsonl");
  ASSERT_EQ(dets.size(), 2u);
  EXPECT_EQ(dets[0].det.class_id, 1);
  EXPECT_EQ(dets[0].det.box, Box(5, 10, 10, 20));
  EXPECT_EQ(dets[1].image_id, "b");

  std::istringstream bad(
      "{\"image_id\": \"a\", \"class\": \"crack\", \"score\": 0.9, \"bbox\": [0, 0, 10, 20]}\n"
      "{\"image_id\": \"a\", \"class\": \"crack\", \"score\": 0.9, \"bbox\": [0, 0, 0, 20]}\n");
  EXPECT_NE(message_of([&] { parse_detections(bad, table, "d.jsonl"); }).find("d.jsonl:2"), std::string::npos);

  std::istringstream unknown("{\"image_id\": \"a\", \"class\": \"dust\", \"score\": 0.9, \"bbox\": [0, 0, 1, 1]}\n");
  EXPECT_THROW(parse_detections(unknown, table), InputError);
  std::istringstream garbage("not json\n");
  EXPECT_THROW(parse_detections(garbage, table), InputError);
}
