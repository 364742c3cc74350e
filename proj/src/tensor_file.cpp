#include "detgeo/tensor_file.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "detgeo/errors.hpp"
#include "json.hpp"

namespace detgeo {

namespace {

constexpr char kMagic[4] = {'D', 'G', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::int64_t Tensor::element_count() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string encode_tensors(const std::vector<Tensor>& tensors) {
  nlohmann::json manifest;
  manifest["dtype"] = "float32-le";
  manifest["tensors"] = nlohmann::json::array();
  std::string payload;
  std::set<std::string> names;
  for (const auto& t : tensors) {
    if (!names.insert(t.name).second) throw InputError("duplicate tensor name '" + t.name + "'");
    if (t.element_count() != static_cast<std::int64_t>(t.values.size())) {
      throw InputError("tensor '" + t.name + "' shape does not match its value count");
    }
    const auto offset = payload.size();
    for (float v : t.values) put_le<std::uint32_t>(payload, std::bit_cast<std::uint32_t>(v));
    manifest["tensors"].push_back({{"name", t.name},
                                   {"shape", t.shape},
                                   {"offset", offset},
                                   {"length", payload.size() - offset}});
  }
  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out += payload;
  return out;
}

std::vector<Tensor> decode_tensors(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, kMagic, 4) != 0) {
    throw InputError("not a tensor container (bad magic)");
  }
  if (get_le<std::uint32_t>(bytes, 4) != kVersion) throw InputError("unsupported tensor container version");
  const auto manifest_len = get_le<std::uint64_t>(bytes, 8);
  if (manifest_len > bytes.size() - 16) throw InputError("tensor manifest runs past end of file");
  const std::size_t payload_start = 16 + manifest_len;
  const std::size_t payload_size = bytes.size() - payload_start;

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(16, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("tensor manifest is not valid JSON: ") + e.what());
  }
  if (manifest.value("dtype", "") != "float32-le") throw InputError("tensor container dtype must be float32-le");

  std::vector<Tensor> out;
  try {
    for (const auto& entry : manifest.at("tensors")) {
      Tensor t;
      t.name = entry.at("name").get<std::string>();
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      for (auto d : t.shape) {
        if (d < 0) throw InputError("tensor '" + t.name + "' has a negative dimension");
      }
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto length = entry.at("length").get<std::uint64_t>();
      if (length != static_cast<std::uint64_t>(t.element_count()) * 4) {
        throw InputError("tensor '" + t.name + "' length does not match its shape");
      }
      if (offset > payload_size || length > payload_size - offset) {
        throw InputError("tensor '" + t.name + "' payload is out of range");
      }
      t.values.resize(t.element_count());
      for (std::size_t i = 0; i < t.values.size(); ++i) {
        t.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, payload_start + offset + 4 * i));
      }
      out.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed tensor manifest: ") + e.what());
  }
  return out;
}

void write_tensor_file(const std::filesystem::path& path, const std::vector<Tensor>& tensors) {
  const auto bytes = encode_tensors(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<Tensor> read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_tensors(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Tensor to_tensor(const std::string& name, const FeatureMap& map) {
  Tensor t{name, {map.channels(), map.height(), map.width()}, {}};
  t.values.reserve(map.size());
  for (double v : map.data()) t.values.push_back(static_cast<float>(v));
  return t;
}

FeatureMap to_feature_map(const Tensor& t) {
  if (t.shape.size() != 3) throw InputError("tensor '" + t.name + "' is not rank 3 (C, H, W)");
  std::vector<double> data(t.values.begin(), t.values.end());
  return FeatureMap(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]),
                    static_cast<int>(t.shape[2]), std::move(data));
}

}  // namespace detgeo
