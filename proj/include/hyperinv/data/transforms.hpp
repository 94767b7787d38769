#pragma once

#include <array>
#include <string>
#include <vector>

#include "hyperinv/data/image.hpp"
#include "hyperinv/numerics/rng.hpp"

namespace hyperinv::data {

/// Canvas rotations used to build the rotated datasets; label k is -90 + 30k degrees.
inline constexpr std::array<double, 7> kRotationAngles = {-90.0, -60.0, -30.0, 0.0, 30.0, 60.0, 90.0};

enum class FamilyKind { rotation, color_swap, ventral, dorsal };

struct VentralParams {
  double min_scale = 0.4;  ///< crop area fraction range
  double max_scale = 1.0;
  double min_ratio = 3.0 / 4.0;  ///< crop aspect ratio range
  double max_ratio = 4.0 / 3.0;
  double flip_prob = 0.5;
};

struct DorsalParams {
  double jitter_prob = 0.8;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double grayscale_prob = 0.2;
  double blur_prob = 0.5;  ///< fixed 3x3 Gaussian (sigma 1)
};

/// A parametrised family of image transformations. Every family contains
/// the identity: angle 0, permutation 0, a full-frame crop without flip,
/// or all appearance changes switched off.
struct TransformFamily {
  FamilyKind kind = FamilyKind::rotation;
  std::vector<double> angles{kRotationAngles.begin(), kRotationAngles.end()};
  VentralParams ventral_params;
  DorsalParams dorsal_params;

  static TransformFamily of(FamilyKind k) {
    TransformFamily f;
    f.kind = k;
    return f;
  }
  static TransformFamily rotation() { return of(FamilyKind::rotation); }
  static TransformFamily color_swap() { return of(FamilyKind::color_swap); }
  static TransformFamily ventral(VentralParams p = {}) {
    auto f = of(FamilyKind::ventral);
    f.ventral_params = p;
    return f;
  }
  static TransformFamily dorsal(DorsalParams p = {}) {
    auto f = of(FamilyKind::dorsal);
    f.dorsal_params = p;
    return f;
  }
  std::string name() const;
};

/// One concrete member of a family. Default-constructed == identity.
struct TransformDraw {
  double angle = 0.0;
  int permutation = 0;
  double crop_x = 0.0, crop_y = 0.0, crop_w = -1.0, crop_h = -1.0;  ///< pixels; negative = full frame
  bool flip = false;
  double brightness = 1.0, contrast = 1.0, saturation = 1.0;
  bool grayscale = false;
  bool blur = false;
};

TransformDraw draw_transform(const TransformFamily& family, const Image& image, Rng& rng);
Image apply_transform(const TransformFamily& family, const TransformDraw& draw, const Image& image);
Image apply_random(const TransformFamily& family, const Image& image, Rng& rng);

/// Counter-clockwise rotation about the image centre, bilinear, zero fill.
/// Multiples of 90 degrees are lattice-exact.
Image rotate_image(const Image& image, double angle_degrees);
/// Grayscale [1,H,W] -> [3,H,W] with only `channel` populated.
Image colorize(const Image& gray, int channel);
/// Applies one of the 6 permutations of 3 channels (index 0 is identity):
/// output channel perm[c] receives input channel c.
Image permute_channels(const Image& image, int permutation);
int permutation_target(int permutation, int channel);
Image horizontal_flip(const Image& image);
/// Bilinear resample of the box (x, y, w, h) back to full size.
Image resized_crop(const Image& image, double x, double y, double w, double h);
Image to_grayscale(const Image& image);
Image adjust_brightness(const Image& image, double factor);
Image adjust_contrast(const Image& image, double factor);
Image adjust_saturation(const Image& image, double factor);
Image gaussian_blur3(const Image& image);

}  // namespace hyperinv::data
