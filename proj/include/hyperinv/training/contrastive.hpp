#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperinv/data/augment.hpp"
#include "hyperinv/hypernet/hypernet.hpp"
#include "hyperinv/training/config.hpp"
#include "hyperinv/training/pretrain.hpp"

namespace hyperinv::training {

/// Two-layer MLP applied to encoder features during contrastive training.
struct ProjectionHead {
  Tensor w1, b1, w2, b2;

  static ProjectionHead init(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim, Rng& rng);
  std::vector<NamedParameter> parameters() const;
  Tensor forward(const Tensor& features) const;
};

/// A descriptor (ventral, dorsal) and the view family that realises it.
struct ContrastiveSetting {
  hypernet::InvarianceDescriptor descriptor;
  data::ViewFamily family;
};

/// default [1,1], ventral [1,0], dorsal [0,1].
std::vector<ContrastiveSetting> default_contrastive_settings();

/// Hypernetwork trained with NT-Xent: step s uses setting s mod |settings|,
/// builds two views of a batch with that family and contrasts the projected
/// features encode(W, i, view). The projection head is dropped from the
/// returned bundle.
PretrainedBundle pretrain_contrastive(const data::ImageStack& images, const TrainConfig& config,
                                      const hypernet::EncoderArchitecture& arch =
                                          hypernet::EncoderArchitecture::toy_contrastive(),
                                      const data::ViewParams& view_params = {},
                                      std::span<const ContrastiveSetting> settings = {});

/// Fraction of rows of z1 whose most cosine-similar row of z2 is their positive.
double contrastive_accuracy(const Tensor& z1, const Tensor& z2);

}  // namespace hyperinv::training
