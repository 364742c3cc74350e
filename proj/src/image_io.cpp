#include "detgeo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>

#include "detgeo/errors.hpp"

namespace detgeo {

namespace fs = std::filesystem;

namespace {

class PgmReader {
 public:
  PgmReader(const std::string& bytes, const std::string& source) : b_(bytes), src_(source) {}

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      throw InputError(src_ + ": malformed PGM header");
    }
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > 1'000'000) throw InputError(src_ + ": PGM header value too large");
    }
    return static_cast<int>(v);
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& b_;
  const std::string& src_;
  std::size_t pos_ = 2;
};

}  // namespace

GrayImage decode_pgm(const std::string& bytes, const std::string& source) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw InputError(source + ": not a binary PGM (P5) file");
  }
  PgmReader r(bytes, source);
  GrayImage img;
  img.width = r.next_int();
  img.height = r.next_int();
  const int maxval = r.next_int();
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw InputError(source + ": invalid PGM dimensions or maxval");
  }
  r.advance();  // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  const std::size_t sample = maxval > 255 ? 2 : 1;
  if (bytes.size() < r.pos() + n * sample) throw InputError(source + ": truncated PGM raster");
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned v;
    if (sample == 2) {
      v = (static_cast<unsigned char>(bytes[r.pos() + 2 * i]) << 8) |
          static_cast<unsigned char>(bytes[r.pos() + 2 * i + 1]);
    } else {
      v = static_cast<unsigned char>(bytes[r.pos() + i]);
    }
    if (v > static_cast<unsigned>(maxval)) throw InputError(source + ": PGM sample exceeds maxval");
    img.pixels[i] = maxval == 255 ? static_cast<std::uint8_t>(v)
                                  : static_cast<std::uint8_t>(std::lround(255.0 * v / maxval));
  }
  return img;
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

GrayImage read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw InputError(path.string() + ": " + image.message);
  }
  // libpng expands every colour type to 8-bit RGB; luma is applied here.
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw InputError(path.string() + ": " + msg);
  }
  GrayImage img;
  img.width = static_cast<int>(image.width);
  img.height = static_cast<int>(image.height);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double y = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
  }
  return img;
}

GrayImage read_gray_image(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_pgm(bytes, path.string());
  }
  throw InputError(path.string() + ": unsupported image type (expected .pgm or .png)");
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detgeo
