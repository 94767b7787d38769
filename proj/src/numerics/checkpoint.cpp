#include "hyperinv/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hyperinv/errors.hpp"
#include "hyperinv/numerics/rng.hpp"

namespace hyperinv {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "hyperinv-checkpoint";
constexpr int kVersion = 1;

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.tensor;
  throw ContractError("checkpoint has no tensor named '" + name + "'");
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void write_checkpoint(const fs::path& dir, const std::string& stem, const Checkpoint& checkpoint) {
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little";
  manifest["blob"] = stem + ".bin";
  manifest["metadata"] = checkpoint.metadata;
  auto entries = nlohmann::json::array();

  std::string blob;
  for (const auto& t : checkpoint.tensors) {
    entries.push_back({{"name", t.name}, {"shape", t.tensor.shape()}, {"offset", blob.size()}});
    for (double v : t.tensor.data()) {
      const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      char bytes[8];
      std::memcpy(bytes, &bits, 8);
      blob.append(bytes, 8);
    }
  }
  manifest["tensors"] = entries;
  manifest["blob_bytes"] = blob.size();
  write_file_atomic(dir / (stem + ".bin"), blob);
  write_file_atomic(dir / (stem + ".json"), manifest.dump(2) + "\n");
}

Checkpoint read_checkpoint(const fs::path& dir, const std::string& stem) {
  const fs::path manifest_path = dir / (stem + ".json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_all(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed checkpoint manifest '" + manifest_path.string() + "': " + e.what(), e.byte);
  }
  Checkpoint cp;
  try {
    if (manifest.at("format") != kFormat) throw ParseError("not a hyperinv checkpoint manifest", 0);
    if (manifest.at("version").get<int>() != kVersion) throw ParseError("unsupported checkpoint version", 0);
    if (manifest.at("dtype") != "float64" || manifest.at("byte_order") != "little") {
      throw ParseError("checkpoint must be little-endian float64", 0);
    }
    const std::string blob = read_all(dir / manifest.at("blob").get<std::string>());
    if (manifest.contains("blob_bytes") && manifest["blob_bytes"].get<std::size_t>() != blob.size()) {
      throw ParseError("checkpoint blob size does not match manifest", blob.size());
    }
    cp.metadata = manifest.value("metadata", nlohmann::json::object());
    for (const auto& e : manifest.at("tensors")) {
      const auto shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto n = shape_numel(shape);
      if (offset % 8 != 0 || offset + 8 * n > blob.size()) {
        throw ParseError("tensor '" + e.at("name").get<std::string>() + "' overruns the blob", offset);
      }
      std::vector<double> values(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, blob.data() + offset + 8 * i, 8);
        values[i] = std::bit_cast<double>(to_little_endian(bits));
      }
      cp.tensors.push_back({e.at("name").get<std::string>(), Tensor::from_data(shape, std::move(values))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid checkpoint manifest '" + manifest_path.string() + "': " + e.what(), 0);
  }
  return cp;
}

std::uint64_t checkpoint_digest(const Checkpoint& checkpoint) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : checkpoint.tensors) {
    h = fnv1a64(t.name.data(), t.name.size(), h);
    for (auto d : t.tensor.shape()) {
      const std::uint64_t v = d;
      h = fnv1a64(&v, sizeof v, h);
    }
    const auto data = t.tensor.data();
    h = fnv1a64(data.data(), data.size() * sizeof(double), h);
  }
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << digest;
  return os.str();
}

}  // namespace hyperinv
