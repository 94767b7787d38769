#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hyperinv/data/image.hpp"
#include "hyperinv/data/transforms.hpp"
#include "hyperinv/hypernet/descriptor.hpp"
#include "hyperinv/numerics/rng.hpp"

namespace hyperinv::data {

/// m augmented copies of `batch`. In every copy, each family k whose
/// descriptor component is 1 applies an independently drawn transform per
/// image; components equal to 0 leave the image untouched. Descriptors must
/// be binary. Each image draws from its own stream split off `rng`, so the
/// result does not depend on processing order.
std::vector<ImageStack> apply_descriptor_augmentation(const ImageStack& batch,
                                                      const hypernet::InvarianceDescriptor& descriptor,
                                                      std::span<const TransformFamily> families, Rng& rng,
                                                      std::size_t m = 1);

enum class ViewFamily { ventral, dorsal, standard };

struct ViewParams {
  VentralParams ventral;
  DorsalParams dorsal;
};

/// One contrastive view of an image. `standard` applies the ventral then
/// the dorsal transform from the same stream.
Image augment_view(const Image& image, ViewFamily family, Rng& rng, const ViewParams& params = {});

/// Two independent views of every image in the batch.
std::pair<ImageStack, ImageStack> make_views(const ImageStack& batch, ViewFamily family, Rng& rng,
                                             const ViewParams& params = {});

std::string to_string(ViewFamily family);

}  // namespace hyperinv::data
