#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// A set of named float64 tensors plus free-form metadata.
///
/// On disk: `<stem>.json` (manifest: name, shape, byte offset per tensor,
/// plus metadata) and `<stem>.bin` (raw little-endian float64 values in
/// manifest order). Reading back reproduces every value bit-exactly.
struct Checkpoint {
  std::vector<NamedTensor> tensors;
  nlohmann::json metadata = nlohmann::json::object();

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& dir, const std::string& stem, const Checkpoint& checkpoint);
/// Throws ParseError for malformed manifests or blobs.
Checkpoint read_checkpoint(const std::filesystem::path& dir, const std::string& stem);

/// FNV-1a digest of names, shapes and values; equal digests mean equal contents.
std::uint64_t checkpoint_digest(const Checkpoint& checkpoint);
std::string digest_hex(std::uint64_t digest);

/// Writes via a temporary sibling and rename so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace hyperinv
