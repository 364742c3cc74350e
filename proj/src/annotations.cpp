#include "detgeo/annotations.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include "json.hpp"

#include "detgeo/errors.hpp"

namespace detgeo {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

ClassTable::ClassTable(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw InputError("class table contains an empty name");
    if (!seen.insert(n).second) throw InputError("duplicate class name '" + n + "'");
  }
}

std::optional<int> ClassTable::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<int>(it - names_.begin());
}

int ClassTable::id_of(const std::string& name) const {
  if (auto id = find(name)) return *id;
  throw InputError("class '" + name + "' is not in the class table");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

double parse_real(const std::string& text, const std::string& where) {
  const auto t = trim(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw InputError(where + ": expected a number, got '" + t + "'");
  }
  if (used != t.size()) throw InputError(where + ": expected a number, got '" + t + "'");
  return v;
}

}  // namespace

ClassTable parse_class_table(std::istream& in, const std::string& source) {
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) names.push_back(std::move(t));
  }
  try {
    return ClassTable(std::move(names));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

ClassTable read_class_table(const fs::path& path) {
  auto in = open_or_throw(path);
  return parse_class_table(in, path.string());
}

ImageAnnotation parse_voc(std::istream& in, const std::string& image_id, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw InputError(source + ": malformed XML: " + e.message() + " (line " +
                     std::to_string(e.line()) + ")");
  }
  const auto root = tree.get_child_optional("annotation");
  if (!root) throw InputError(source + ": missing <annotation> root element");

  ImageAnnotation ann;
  ann.image_id = image_id;
  if (const auto size = root->get_child_optional("size")) {
    if (auto w = size->get_optional<std::string>("width")) ann.width = parse_real(*w, source + ": size/width");
    if (auto h = size->get_optional<std::string>("height")) ann.height = parse_real(*h, source + ": size/height");
    if ((ann.width && *ann.width <= 0) || (ann.height && *ann.height <= 0)) {
      throw InputError(source + ": image size must be positive");
    }
  }

  int index = 0;
  for (const auto& [tag, node] : *root) {
    if (tag != "object") continue;
    const std::string where = source + ": object " + std::to_string(index);
    const auto name = trim(node.get<std::string>("name", ""));
    if (name.empty()) throw InputError(where + ": missing <name>");
    const auto bnd = node.get_child_optional("bndbox");
    if (!bnd) throw InputError(where + ": missing <bndbox>");
    auto coord = [&](const char* key) {
      const auto v = bnd->get_optional<std::string>(key);
      if (!v) throw InputError(where + ": missing bndbox/" + key);
      return parse_real(*v, where + ": bndbox/" + key);
    };
    const CornerBox c{coord("xmin"), coord("ymin"), coord("xmax"), coord("ymax")};
    try {
      ann.objects.push_back({name, from_corner(c)});
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    ++index;
  }
  return ann;
}

ImageAnnotation read_voc(const fs::path& path) {
  auto in = open_or_throw(path);
  return parse_voc(in, path.stem().string(), path.string());
}

std::vector<ImageAnnotation> read_voc_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ImageAnnotation> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_voc(f));
  return out;
}

std::vector<GroundTruth> to_ground_truths(const ImageAnnotation& ann, const ClassTable& table) {
  std::vector<GroundTruth> out;
  out.reserve(ann.objects.size());
  for (const auto& obj : ann.objects) {
    const auto id = table.find(obj.name);
    if (!id) throw InputError(ann.image_id + ": class '" + obj.name + "' is not in the class table");
    out.push_back(make_ground_truth(obj.box, *id));
  }
  return out;
}

std::vector<DetectionRecord> parse_detections(std::istream& in, const ClassTable& table,
                                              const std::string& source) {
  std::vector<DetectionRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      const auto image_id = j.at("image_id").get<std::string>();
      const auto cls = j.at("class").get<std::string>();
      const auto score = j.at("score").get<double>();
      const auto& bbox = j.at("bbox");
      if (!bbox.is_array() || bbox.size() != 4) throw InputError("bbox must be [xmin, ymin, xmax, ymax]");
      const CornerBox c{bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
                        bbox[3].get<double>()};
      out.push_back({image_id, make_detection(from_corner(c), table.id_of(cls), score)});
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<DetectionRecord> read_detections(const fs::path& path, const ClassTable& table) {
  auto in = open_or_throw(path);
  return parse_detections(in, table, path.string());
}

}  // namespace detgeo
