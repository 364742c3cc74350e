#pragma once

// Flat tensor container used for fusion weights, inputs and outputs.
//
// Layout (all integers little-endian):
//   bytes 0..3   magic "DGTF"
//   bytes 4..7   u32 format version (1)
//   bytes 8..15  u64 manifest length N
//   next N bytes UTF-8 JSON manifest:
//                {"dtype": "float32-le",
//                 "tensors": [{"name": str, "shape": [int...], "offset": int, "length": int}, ...]}
//                offset/length in bytes, relative to the payload start
//   payload      concatenated IEEE-754 binary32 values, little-endian

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "detgeo/feature_map.hpp"

namespace detgeo {

struct Tensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::int64_t element_count() const;
};

std::string encode_tensors(const std::vector<Tensor>& tensors);
// Throws InputError on a malformed container (bad magic, offsets out of range, ...).
std::vector<Tensor> decode_tensors(const std::string& bytes);

void write_tensor_file(const std::filesystem::path& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> read_tensor_file(const std::filesystem::path& path);

// FeatureMap <-> rank-3 tensor [C, H, W] (values narrowed to float32).
Tensor to_tensor(const std::string& name, const FeatureMap& map);
FeatureMap to_feature_map(const Tensor& t);

}  // namespace detgeo
