#include "hyperinv/data/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hyperinv/errors.hpp"

namespace hyperinv::data {

namespace {

constexpr std::array<std::array<int, 3>, 6> kPermutations = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

double luminance(const Image& img, std::size_t y, std::size_t x) {
  if (img.channels == 3) return 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
  return img.at(0, y, x);
}

// Bilinear sample of one channel; zero outside the image.
double sample_zero(const Image& img, std::size_t c, double sy, double sx) {
  const double fy = std::floor(sy), fx = std::floor(sx);
  const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
  const double wy = sy - fy, wx = sx - fx;
  const long H = static_cast<long>(img.height), W = static_cast<long>(img.width);
  auto px = [&](long y, long x) -> double {
    if (y < 0 || y >= H || x < 0 || x >= W) return 0.0;
    return img.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  };
  double v = (1.0 - wy) * (1.0 - wx) * px(y0, x0);
  if (wx != 0.0) v += (1.0 - wy) * wx * px(y0, x0 + 1);
  if (wy != 0.0) v += wy * (1.0 - wx) * px(y0 + 1, x0);
  if (wx != 0.0 && wy != 0.0) v += wy * wx * px(y0 + 1, x0 + 1);
  return v;
}

// Bilinear sample with edge clamping.
double sample_clamped(const Image& img, std::size_t c, double sy, double sx) {
  sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
  sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
  const std::size_t y0 = static_cast<std::size_t>(std::floor(sy)), x0 = static_cast<std::size_t>(std::floor(sx));
  const std::size_t y1 = std::min(y0 + 1, img.height - 1), x1 = std::min(x0 + 1, img.width - 1);
  const double wy = sy - static_cast<double>(y0), wx = sx - static_cast<double>(x0);
  return (1.0 - wy) * ((1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1)) +
         wy * ((1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1));
}

}  // namespace

std::string TransformFamily::name() const {
  switch (kind) {
    case FamilyKind::rotation: return "rotation";
    case FamilyKind::color_swap: return "color";
    case FamilyKind::ventral: return "ventral";
    case FamilyKind::dorsal: return "dorsal";
  }
  return "unknown";
}

Image rotate_image(const Image& image, double angle_degrees) {
  if (!(angle_degrees >= -180.0 && angle_degrees <= 180.0)) {
    throw ContractError("rotate_image: angle " + std::to_string(angle_degrees) + " outside [-180, 180]");
  }
  if (angle_degrees == 0.0) return image;
  double c, s;
  if (angle_degrees == 90.0) {
    c = 0.0, s = 1.0;
  } else if (angle_degrees == -90.0) {
    c = 0.0, s = -1.0;
  } else if (angle_degrees == 180.0 || angle_degrees == -180.0) {
    c = -1.0, s = 0.0;
  } else {
    const double r = angle_degrees * std::numbers::pi / 180.0;
    c = std::cos(r), s = std::sin(r);
  }
  const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(image.width) - 1.0) / 2.0;
  Image out = Image::zeros(image.channels, image.height, image.width);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double sx = cx + c * dx - s * dy;
      const double sy = cy + s * dx + c * dy;
      for (std::size_t ch = 0; ch < image.channels; ++ch) out.at(ch, y, x) = sample_zero(image, ch, sy, sx);
    }
  }
  return out;
}

Image colorize(const Image& gray, int channel) {
  if (gray.channels != 1) throw ContractError("colorize: expected a single-channel image");
  if (channel < 0 || channel > 2) throw ContractError("colorize: channel " + std::to_string(channel) + " not in [0,3)");
  Image out = Image::zeros(3, gray.height, gray.width);
  std::copy(gray.pixels.begin(), gray.pixels.end(),
            out.pixels.begin() + static_cast<long>(static_cast<std::size_t>(channel) * gray.height * gray.width));
  return out;
}

int permutation_target(int permutation, int channel) { return kPermutations.at(permutation)[channel]; }

Image permute_channels(const Image& image, int permutation) {
  if (image.channels != 3) throw ContractError("permute_channels: expected 3 channels");
  if (permutation < 0 || permutation >= 6) throw ContractError("permute_channels: permutation index not in [0,6)");
  if (permutation == 0) return image;
  const std::size_t plane = image.height * image.width;
  Image out = Image::zeros(3, image.height, image.width);
  for (int c = 0; c < 3; ++c) {
    const auto dst = static_cast<std::size_t>(kPermutations[permutation][c]);
    std::copy_n(image.pixels.begin() + static_cast<long>(c * plane), plane,
                out.pixels.begin() + static_cast<long>(dst * plane));
  }
  return out;
}

Image horizontal_flip(const Image& image) {
  Image out = image;
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

Image resized_crop(const Image& image, double x, double y, double w, double h) {
  const double W = static_cast<double>(image.width), H = static_cast<double>(image.height);
  if (x == 0.0 && y == 0.0 && w == W && h == H) return image;
  Image out = Image::zeros(image.channels, image.height, image.width);
  for (std::size_t oy = 0; oy < image.height; ++oy) {
    const double sy = y + (static_cast<double>(oy) + 0.5) * h / H - 0.5;
    for (std::size_t ox = 0; ox < image.width; ++ox) {
      const double sx = x + (static_cast<double>(ox) + 0.5) * w / W - 0.5;
      for (std::size_t c = 0; c < image.channels; ++c) out.at(c, oy, ox) = sample_clamped(image, c, sy, sx);
    }
  }
  return out;
}

Image to_grayscale(const Image& image) {
  if (image.channels == 1) return image;
  Image out = image;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) {
      const double g = luminance(image, y, x);
      for (std::size_t c = 0; c < image.channels; ++c) out.at(c, y, x) = g;
    }
  return out;
}

Image adjust_brightness(const Image& image, double factor) {
  if (factor == 1.0) return image;
  Image out = image;
  for (auto& v : out.pixels) v = std::clamp(v * factor, 0.0, 1.0);
  return out;
}

Image adjust_contrast(const Image& image, double factor) {
  if (factor == 1.0) return image;
  double m = 0.0;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) m += luminance(image, y, x);
  m /= static_cast<double>(image.height * image.width);
  Image out = image;
  for (auto& v : out.pixels) v = std::clamp((v - m) * factor + m, 0.0, 1.0);
  return out;
}

Image adjust_saturation(const Image& image, double factor) {
  if (factor == 1.0 || image.channels != 3) return image;
  Image out = image;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x) {
      const double g = luminance(image, y, x);
      for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = std::clamp((image.at(c, y, x) - g) * factor + g, 0.0, 1.0);
    }
  return out;
}

Image gaussian_blur3(const Image& image) {
  // Separable 3-tap Gaussian, sigma = 1, edge-replicated borders.
  const double e = std::exp(-0.5);
  const double k[3] = {e / (1.0 + 2.0 * e), 1.0 / (1.0 + 2.0 * e), e / (1.0 + 2.0 * e)};
  const long H = static_cast<long>(image.height), W = static_cast<long>(image.width);
  Image tmp = image, out = image;
  for (std::size_t c = 0; c < image.channels; ++c) {
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        double s = 0.0;
        for (long d = -1; d <= 1; ++d) {
          const long xx = std::clamp(x + d, 0L, W - 1);
          s += k[d + 1] * image.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx));
        }
        tmp.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = s;
      }
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        double s = 0.0;
        for (long d = -1; d <= 1; ++d) {
          const long yy = std::clamp(y + d, 0L, H - 1);
          s += k[d + 1] * tmp.at(c, static_cast<std::size_t>(yy), static_cast<std::size_t>(x));
        }
        out.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = s;
      }
  }
  return out;
}

TransformDraw draw_transform(const TransformFamily& family, const Image& image, Rng& rng) {
  TransformDraw d;
  switch (family.kind) {
    case FamilyKind::rotation:
      if (family.angles.empty()) throw ContractError("rotation family has no angles");
      d.angle = family.angles[rng.uniform_index(family.angles.size())];
      break;
    case FamilyKind::color_swap:
      d.permutation = static_cast<int>(rng.uniform_index(kPermutations.size()));
      break;
    case FamilyKind::ventral: {
      const auto& p = family.ventral_params;
      const double W = static_cast<double>(image.width), H = static_cast<double>(image.height);
      const double area = rng.uniform(p.min_scale, p.max_scale);
      const double ratio = std::exp(rng.uniform(std::log(p.min_ratio), std::log(p.max_ratio)));
      d.crop_w = std::min(W, std::sqrt(area * ratio) * W);
      d.crop_h = std::min(H, std::sqrt(area / ratio) * H);
      d.crop_x = rng.uniform(0.0, W - d.crop_w);
      d.crop_y = rng.uniform(0.0, H - d.crop_h);
      d.flip = rng.bernoulli(p.flip_prob);
      break;
    }
    case FamilyKind::dorsal: {
      const auto& p = family.dorsal_params;
      if (rng.bernoulli(p.jitter_prob)) {
        d.brightness = rng.uniform(1.0 - p.brightness, 1.0 + p.brightness);
        d.contrast = rng.uniform(1.0 - p.contrast, 1.0 + p.contrast);
        d.saturation = rng.uniform(1.0 - p.saturation, 1.0 + p.saturation);
      }
      d.grayscale = rng.bernoulli(p.grayscale_prob);
      d.blur = rng.bernoulli(p.blur_prob);
      break;
    }
  }
  return d;
}

Image apply_transform(const TransformFamily& family, const TransformDraw& d, const Image& image) {
  switch (family.kind) {
    case FamilyKind::rotation:
      return rotate_image(image, d.angle);
    case FamilyKind::color_swap:
      return permute_channels(image, d.permutation);
    case FamilyKind::ventral: {
      Image out = d.crop_w < 0.0 ? image : resized_crop(image, d.crop_x, d.crop_y, d.crop_w, d.crop_h);
      return d.flip ? horizontal_flip(out) : out;
    }
    case FamilyKind::dorsal: {
      Image out = adjust_saturation(adjust_contrast(adjust_brightness(image, d.brightness), d.contrast), d.saturation);
      if (d.grayscale) out = to_grayscale(out);
      if (d.blur) out = gaussian_blur3(out);
      return out;
    }
  }
  return image;
}

Image apply_random(const TransformFamily& family, const Image& image, Rng& rng) {
  return apply_transform(family, draw_transform(family, image, rng), image);
}

}  // namespace hyperinv::data
