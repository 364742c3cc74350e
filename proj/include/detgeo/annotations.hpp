#pragma once

// Dataset ingestion: Pascal VOC XML ground truth, JSON-lines detections and
// plain-text class tables. Every entry path validates boxes through Box, so
// NaN/inf and degenerate rectangles are rejected with the offending location.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "detgeo/box.hpp"

namespace detgeo {

class ClassTable {
 public:
  ClassTable() = default;
  explicit ClassTable(std::vector<std::string> names);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::optional<int> find(const std::string& name) const;
  // Throws InputError when the name is not in the table.
  int id_of(const std::string& name) const;

 private:
  std::vector<std::string> names_;
};

// One class name per line; blank lines are skipped, duplicates rejected.
ClassTable read_class_table(const std::filesystem::path& path);
ClassTable parse_class_table(std::istream& in, const std::string& source = "<stream>");

struct VocObject {
  std::string name;
  Box box;
};

struct ImageAnnotation {
  std::string image_id;  // file stem of the XML file
  std::optional<double> width;
  std::optional<double> height;
  std::vector<VocObject> objects;
};

ImageAnnotation parse_voc(std::istream& in, const std::string& image_id,
                          const std::string& source = "<stream>");
ImageAnnotation read_voc(const std::filesystem::path& path);
// All *.xml files of a directory, ordered by file name.
std::vector<ImageAnnotation> read_voc_dir(const std::filesystem::path& dir);

std::vector<GroundTruth> to_ground_truths(const ImageAnnotation& ann, const ClassTable& table);

struct DetectionRecord {
  std::string image_id;
  Detection det;
};

// {"image_id": str, "class": str, "score": real, "bbox": [xmin, ymin, xmax, ymax]}
// per line. Errors carry "source:line".
std::vector<DetectionRecord> parse_detections(std::istream& in, const ClassTable& table,
                                              const std::string& source = "<stream>");
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path,
                                             const ClassTable& table);

}  // namespace detgeo
