#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <memory>

#include "detgeo/errors.hpp"
#include "detgeo/format.hpp"

namespace detgeo::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw InvariantError("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

namespace {

// Floats are swapped for tagged strings, dumped, then spliced back unquoted.
constexpr char kFloatTag = '\x01';

nlohmann::json tag_floats(const nlohmann::json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    return std::string(1, kFloatTag) + format_real(v);
  }
  if (j.is_structured()) {
    auto out = j;
    for (auto& item : out) item = tag_floats(item);
    return out;
  }
  return j;
}

}  // namespace

std::string dump_json(const nlohmann::json& j) {
  const std::string text = tag_floats(j).dump(2);
  static const std::string open = "\"\\u0001";
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  for (std::size_t hit; (hit = text.find(open, pos)) != std::string::npos;) {
    const std::size_t start = hit + open.size();
    const std::size_t end = text.find('"', start);
    out.append(text, pos, hit - pos).append(text, start, end - start);
    pos = end + 1;
  }
  return out.append(text, pos);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_input(const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) input_digests.emplace_back(f.string(), sha256_file(f));
  } else {
    input_digests.emplace_back(path.string(), sha256_file(path));
  }
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : input_digests) inputs.push_back({{"path", path}, {"sha256", digest}});
  return {{"subcommand", subcommand},
          {"parameters", parameters},
          {"inputs", inputs},
          {"tool_version", tool_version},
          {"timestamp", timestamp.empty() ? utc_timestamp() : timestamp}};
}

void RunManifest::write(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << dump_json(to_json()) << '\n';
}

}  // namespace detgeo::cli
