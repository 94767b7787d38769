#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperinv/data/dataset.hpp"
#include "hyperinv/hypernet/hypernet.hpp"
#include "hyperinv/training/config.hpp"

namespace hyperinv::training {

struct Metrics {
  double accuracy = 0.0;  ///< fraction of argmax-correct predictions
  double loss = 0.0;      ///< mean cross-entropy
  std::size_t count = 0;
};

/// Throws ContractError on an empty batch.
Metrics evaluate_logits(const Tensor& logits, std::span<const int> labels);

/// Eval-mode features [N, D] computed in chunks with no graph recorded.
Tensor extract_features(const hypernet::HyperEncoder& encoder, const hypernet::InvarianceDescriptor& descriptor,
                        const data::ImageStack& images, std::size_t chunk = 256);
Tensor extract_features(const hypernet::ConvEncoder& encoder, const data::ImageStack& images,
                        std::size_t chunk = 256);

/// Copies whose batchnorm statistics are those of `images` (at `descriptor`).
hypernet::HyperEncoder calibrated_encoder(const hypernet::HyperEncoder& encoder,
                                          const hypernet::InvarianceDescriptor& descriptor,
                                          const data::ImageStack& images);
hypernet::ConvEncoder calibrated_encoder(const hypernet::ConvEncoder& encoder, const data::ImageStack& images);

Metrics evaluate_features(const hypernet::TaskHead& head, const Tensor& features, std::span<const int> labels);
Metrics evaluate(const hypernet::HyperEncoder& encoder, const hypernet::InvarianceDescriptor& descriptor,
                 const hypernet::TaskHead& head, const data::LabeledDataset& dataset, data::LabelField field);
Metrics evaluate(const hypernet::ConvEncoder& encoder, const hypernet::TaskHead& head,
                 const data::LabeledDataset& dataset, data::LabelField field);

/// Row indices of the minibatch used at `step`: each epoch visits a fresh
/// permutation of [0, n) drawn from (seed, stream, epoch), and batches wrap
/// around it cyclically.
std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch, std::size_t steps_per_epoch,
                                       std::uint64_t seed, std::uint64_t stream, std::size_t step);

/// Rows of a [N, D] tensor.
Tensor gather_rows(const Tensor& matrix, std::span<const std::size_t> rows);

std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> rows);

/// Fresh head trained by Adam on fixed features (the encoder is not touched).
/// Per-step losses are appended to `losses` when given.
hypernet::TaskHead fit_head(const Tensor& features, std::span<const int> labels, std::size_t head_size,
                            const TrainConfig& config, std::vector<double>* losses = nullptr);

}  // namespace hyperinv::training
