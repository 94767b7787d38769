#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <vector>

#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv::hypernet {

struct ConvLayerSpec {
  std::size_t in_channels = 3;
  std::size_t out_channels = 16;
  std::size_t kernel = 5;
  std::size_t stride = 2;
  std::size_t padding = 2;

  std::size_t weight_count() const { return out_channels * in_channels * kernel * kernel; }
  Shape kernel_shape() const { return {out_channels, in_channels, kernel, kernel}; }

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Conv -> batchnorm -> ReLU blocks followed by a flatten.
struct EncoderArchitecture {
  std::size_t channels = 3;
  std::size_t height = 28;
  std::size_t width = 28;
  std::vector<ConvLayerSpec> layers;

  /// One 16-filter 5x5 stride-2 conv with padding 2: 3x28x28 -> 16x14x14.
  static EncoderArchitecture synthetic();
  /// Two conv layers (8 filters 5x5/2, then 16 filters 3x3/2): 3x28x28 -> 16x7x7.
  static EncoderArchitecture toy_contrastive();

  /// Spatial size after layer `index` (inclusive).
  std::pair<std::size_t, std::size_t> output_hw(std::size_t index) const;
  std::size_t feature_dim() const;
  std::size_t generated_weight_count() const;
  void validate() const;

  nlohmann::json to_json() const;
  static EncoderArchitecture from_json(const nlohmann::json& j);

  friend bool operator==(const EncoderArchitecture&, const EncoderArchitecture&) = default;
};

}  // namespace hyperinv::hypernet
