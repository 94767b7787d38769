#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperinv/numerics/tensor.hpp"

namespace hyperinv::data {

/// One CHW image with float64 pixels.
struct Image {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  static Image zeros(std::size_t c, std::size_t h, std::size_t w) { return {c, h, w, std::vector<double>(c * h * w, 0.0)}; }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return pixels[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return pixels[(c * height + y) * width + x]; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// N images of identical geometry in one contiguous NCHW buffer.
class ImageStack {
 public:
  ImageStack() = default;
  ImageStack(std::size_t channels, std::size_t height, std::size_t width)
      : channels_(channels), height_(height), width_(width) {}

  static ImageStack from_tensor(const Tensor& nchw);

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t image_size() const { return channels_ * height_ * width_; }

  Image image(std::size_t i) const;
  std::span<const double> view(std::size_t i) const;
  void push_back(const Image& img);
  void set(std::size_t i, const Image& img);
  ImageStack select(std::span<const std::size_t> indices) const;

  Tensor to_tensor(bool requires_grad = false) const;
  Tensor gather(std::span<const std::size_t> indices) const;
  std::span<const double> pixels() const { return pixels_; }

  friend bool operator==(const ImageStack&, const ImageStack&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

Tensor image_to_tensor(const Image& img);
Image image_from_tensor(const Tensor& chw);

}  // namespace hyperinv::data
