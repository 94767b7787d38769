#include "hyperinv/data/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hyperinv/errors.hpp"

namespace hyperinv::data {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open IDX file '" + path.string() + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint32_t read_be32(std::string_view bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) {
    throw ParseError("IDX header truncated at byte offset " + std::to_string(offset), offset);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

void expect_magic(std::string_view bytes, std::uint32_t want, const char* kind) {
  const auto magic = read_be32(bytes, 0);
  if (magic != want) {
    std::ostringstream os;
    os << "IDX " << kind << " file: bad magic 0x" << std::hex << magic << " at byte offset 0 (expected 0x" << want
       << ")";
    throw ParseError(os.str(), 0);
  }
}

void append_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

Tensor parse_idx_images(std::string_view bytes) {
  expect_magic(bytes, kIdxImageMagic, "image");
  const std::size_t n = read_be32(bytes, 4), rows = read_be32(bytes, 8), cols = read_be32(bytes, 12);
  const std::size_t payload = n * rows * cols;
  if (16 + payload != bytes.size()) {
    const std::size_t at = std::min(bytes.size(), 16 + payload);
    throw ParseError("IDX image payload has " + std::to_string(bytes.size() - 16) + " bytes, header declares " +
                         std::to_string(payload) + " (mismatch at byte offset " + std::to_string(at) + ")",
                     at);
  }
  std::vector<double> values(payload);
  for (std::size_t i = 0; i < payload; ++i) values[i] = static_cast<unsigned char>(bytes[16 + i]) / 255.0;
  return Tensor::from_data(Shape{n, 1, rows, cols}, std::move(values));
}

std::vector<int> parse_idx_labels(std::string_view bytes) {
  expect_magic(bytes, kIdxLabelMagic, "label");
  const std::size_t n = read_be32(bytes, 4);
  if (8 + n != bytes.size()) {
    const std::size_t at = std::min(bytes.size(), 8 + n);
    throw ParseError("IDX label payload has " + std::to_string(bytes.size() - 8) + " bytes, header declares " +
                         std::to_string(n) + " (mismatch at byte offset " + std::to_string(at) + ")",
                     at);
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<unsigned char>(bytes[8 + i]);
  return labels;
}

Tensor load_idx_images(const std::filesystem::path& path) { return parse_idx_images(slurp(path)); }
std::vector<int> load_idx_labels(const std::filesystem::path& path) { return parse_idx_labels(slurp(path)); }

void write_idx_images(const std::filesystem::path& path, const Tensor& images) {
  std::size_t n, rows, cols;
  if (images.rank() == 4 && images.dim(1) == 1) {
    n = images.dim(0), rows = images.dim(2), cols = images.dim(3);
  } else if (images.rank() == 3) {
    n = images.dim(0), rows = images.dim(1), cols = images.dim(2);
  } else {
    throw DimensionError("write_idx_images expects [N,1,H,W] or [N,H,W], got " + shape_to_string(images.shape()));
  }
  std::string out;
  append_be32(out, kIdxImageMagic);
  append_be32(out, static_cast<std::uint32_t>(n));
  append_be32(out, static_cast<std::uint32_t>(rows));
  append_be32(out, static_cast<std::uint32_t>(cols));
  for (double v : images.data()) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
  std::string out;
  append_be32(out, kIdxLabelMagic);
  append_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw IndexError("IDX labels must fit in one byte, got " + std::to_string(l));
    out.push_back(static_cast<char>(static_cast<unsigned char>(l)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace hyperinv::data
