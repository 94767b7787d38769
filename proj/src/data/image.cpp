#include "hyperinv/data/image.hpp"

#include <algorithm>

#include "hyperinv/errors.hpp"

namespace hyperinv::data {

ImageStack ImageStack::from_tensor(const Tensor& nchw) {
  if (nchw.rank() != 4) throw DimensionError("expected an NCHW tensor, got " + shape_to_string(nchw.shape()));
  ImageStack s(nchw.dim(1), nchw.dim(2), nchw.dim(3));
  s.count_ = nchw.dim(0);
  s.pixels_.assign(nchw.data().begin(), nchw.data().end());
  return s;
}

Image ImageStack::image(std::size_t i) const {
  const auto v = view(i);
  return {channels_, height_, width_, std::vector<double>(v.begin(), v.end())};
}

std::span<const double> ImageStack::view(std::size_t i) const {
  if (i >= count_) throw IndexError("image index " + std::to_string(i) + " out of range");
  return std::span<const double>(pixels_).subspan(i * image_size(), image_size());
}

void ImageStack::push_back(const Image& img) {
  if (count_ == 0 && channels_ == 0) {
    channels_ = img.channels;
    height_ = img.height;
    width_ = img.width;
  }
  if (img.channels != channels_ || img.height != height_ || img.width != width_) {
    throw DimensionError("image geometry does not match the stack");
  }
  pixels_.insert(pixels_.end(), img.pixels.begin(), img.pixels.end());
  ++count_;
}

void ImageStack::set(std::size_t i, const Image& img) {
  if (i >= count_) throw IndexError("image index " + std::to_string(i) + " out of range");
  if (img.pixels.size() != image_size()) throw DimensionError("image geometry does not match the stack");
  std::copy(img.pixels.begin(), img.pixels.end(), pixels_.begin() + static_cast<long>(i * image_size()));
}

ImageStack ImageStack::select(std::span<const std::size_t> indices) const {
  ImageStack out(channels_, height_, width_);
  out.pixels_.reserve(indices.size() * image_size());
  for (auto i : indices) {
    const auto v = view(i);
    out.pixels_.insert(out.pixels_.end(), v.begin(), v.end());
  }
  out.count_ = indices.size();
  return out;
}

Tensor ImageStack::to_tensor(bool requires_grad) const {
  return Tensor::from_data(Shape{count_, channels_, height_, width_}, pixels_, requires_grad);
}

Tensor ImageStack::gather(std::span<const std::size_t> indices) const { return select(indices).to_tensor(); }

Tensor image_to_tensor(const Image& img) {
  return Tensor::from_data(Shape{img.channels, img.height, img.width}, img.pixels);
}

Image image_from_tensor(const Tensor& chw) {
  if (chw.rank() != 3) throw DimensionError("expected a CHW tensor, got " + shape_to_string(chw.shape()));
  return {chw.dim(0), chw.dim(1), chw.dim(2), std::vector<double>(chw.data().begin(), chw.data().end())};
}

}  // namespace hyperinv::data
