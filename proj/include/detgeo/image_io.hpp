#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace detgeo {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Binary PGM (P5, maxval <= 255; larger maxvals are rescaled to 8 bits).
GrayImage decode_pgm(const std::string& bytes, const std::string& source = "<memory>");
std::string encode_pgm(const GrayImage& img);

// Any PNG colour type; colour is reduced with BT.601 luma weights
// (0.299 R + 0.587 G + 0.114 B), 16-bit samples are scaled to 8 bits and
// alpha is ignored.
GrayImage read_png(const std::filesystem::path& path);

// Dispatch on extension: .pgm or .png. Throws InputError otherwise.
GrayImage read_gray_image(const std::filesystem::path& path);

// Sorted list of *.pgm / *.png files in a directory.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace detgeo
