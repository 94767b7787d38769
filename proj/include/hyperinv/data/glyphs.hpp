#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hyperinv/data/image.hpp"
#include "hyperinv/numerics/rng.hpp"

namespace hyperinv::data {

/// Two disjoint sets of 10 stroke glyphs. `primary` plays the role of the
/// pre-training digits; `secondary` is a different script used as the
/// shifted downstream domain. No glyph is symmetric under 90 or 180 degree
/// rotation, so canvas rotations in [-90, 90] stay identifiable.
enum class GlyphAlphabet { primary, secondary };

inline constexpr std::size_t kGlyphClasses = 10;
inline constexpr std::size_t kGlyphSize = 28;

struct GlyphSet {
  ImageStack images;  ///< [N,1,28,28], values in [0,1]
  std::vector<int> labels;
};

/// Renders one jittered instance of a glyph class (random affine,
/// vertex noise and stroke width drawn from `rng`).
Image render_glyph(int cls, GlyphAlphabet alphabet, Rng& rng);

/// n_per_class instances of each class, interleaved by class (example i has
/// label i % 10). Example i depends only on (seed, alphabet, i).
GlyphSet synth_glyph_dataset(std::size_t n_per_class, std::uint64_t seed,
                             GlyphAlphabet alphabet = GlyphAlphabet::primary);

}  // namespace hyperinv::data
