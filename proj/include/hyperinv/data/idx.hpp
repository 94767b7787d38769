#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv::data {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Big-endian IDX image file (magic 0x803, dims N, rows, cols, then
/// unsigned bytes) as Tensor[N,1,rows,cols] scaled to [0,1].
Tensor load_idx_images(const std::filesystem::path& path);
/// IDX label file (magic 0x801, dim N, then unsigned bytes).
std::vector<int> load_idx_labels(const std::filesystem::path& path);

Tensor parse_idx_images(std::string_view bytes);
std::vector<int> parse_idx_labels(std::string_view bytes);

/// Pixels are stored as round(255 * v); values of the form k/255 round-trip exactly.
void write_idx_images(const std::filesystem::path& path, const Tensor& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);

}  // namespace hyperinv::data
