#include "hyperinv/data/augment.hpp"

#include "hyperinv/errors.hpp"

namespace hyperinv::data {

std::vector<ImageStack> apply_descriptor_augmentation(const ImageStack& batch,
                                                      const hypernet::InvarianceDescriptor& descriptor,
                                                      std::span<const TransformFamily> families, Rng& rng,
                                                      std::size_t m) {
  if (descriptor.size() != families.size()) {
    throw ContractError("apply_descriptor_augmentation: descriptor has " + std::to_string(descriptor.size()) +
                        " components for " + std::to_string(families.size()) + " families");
  }
  if (!descriptor.is_binary()) {
    throw ContractError("apply_descriptor_augmentation: augmentation gates need a binary descriptor, got " +
                        descriptor.to_string());
  }
  if (m == 0) throw ContractError("apply_descriptor_augmentation: m must be positive");

  const std::uint64_t base = rng.next();
  std::vector<ImageStack> out;
  out.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    ImageStack copy = batch;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Rng local(derive_seed(base, "augment", s * batch.size() + i));
      Image img = batch.image(i);
      bool changed = false;
      for (std::size_t k = 0; k < families.size(); ++k) {
        if (descriptor[k] == 1.0) {
          img = apply_random(families[k], img, local);
          changed = true;
        }
      }
      if (changed) copy.set(i, img);
    }
    out.push_back(std::move(copy));
  }
  return out;
}

Image augment_view(const Image& image, ViewFamily family, Rng& rng, const ViewParams& params) {
  const auto ventral = TransformFamily::ventral(params.ventral);
  const auto dorsal = TransformFamily::dorsal(params.dorsal);
  switch (family) {
    case ViewFamily::ventral:
      return apply_random(ventral, image, rng);
    case ViewFamily::dorsal:
      return apply_random(dorsal, image, rng);
    case ViewFamily::standard: {
      Image v = apply_random(ventral, image, rng);
      return apply_random(dorsal, v, rng);
    }
  }
  return image;
}

std::pair<ImageStack, ImageStack> make_views(const ImageStack& batch, ViewFamily family, Rng& rng,
                                             const ViewParams& params) {
  const std::uint64_t base = rng.next();
  ImageStack v1 = batch, v2 = batch;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng local(derive_seed(base, "views", i));
    const Image img = batch.image(i);
    v1.set(i, augment_view(img, family, local, params));
    v2.set(i, augment_view(img, family, local, params));
  }
  return {std::move(v1), std::move(v2)};
}

std::string to_string(ViewFamily family) {
  switch (family) {
    case ViewFamily::ventral: return "ventral";
    case ViewFamily::dorsal: return "dorsal";
    case ViewFamily::standard: return "default";
  }
  return "unknown";
}

}  // namespace hyperinv::data
