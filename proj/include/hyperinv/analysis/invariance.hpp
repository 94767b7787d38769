#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperinv/data/dataset.hpp"
#include "hyperinv/data/transforms.hpp"
#include "hyperinv/hypernet/hypernet.hpp"
#include "hyperinv/training/config.hpp"

namespace hyperinv::analysis {

struct InvariancePoint {
  double parameter = 0.0;  ///< interpolation parameter t of the sweep
  hypernet::InvarianceDescriptor descriptor;
  std::vector<double> mean;    ///< per family
  std::vector<double> stddev;  ///< per family, over images and draws
};

struct InvarianceCurve {
  std::vector<std::string> families;
  std::vector<InvariancePoint> points;
  std::size_t samples = 0;  ///< (image, draw) pairs per family

  std::vector<double> parameters() const;
  std::vector<double> series(std::size_t family) const;
  /// Header "t,d0,...,<family>_mean,<family>_std,...".
  std::string to_csv() const;
};

/// Mean cosine similarity between encode(W, i, x) and encode(W, i, T(x))
/// for n_aug transforms per image and family, at every sweep descriptor.
/// The same transforms are reused across sweep points. `parameters` gives
/// the x coordinate of each point (default: first descriptor component).
InvarianceCurve measure_invariance(const hypernet::HyperEncoder& encoder, const data::ImageStack& images,
                                   std::span<const data::TransformFamily> families,
                                   std::span<const hypernet::InvarianceDescriptor> sweep, std::size_t n_aug,
                                   std::uint64_t seed, std::span<const double> parameters = {});

struct SweepPoint {
  double parameter = 0.0;
  hypernet::InvarianceDescriptor descriptor;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
};

/// Trains a fresh head with the descriptor pinned at every sweep point
/// (same budget and seed everywhere) and records its final training loss.
/// With config.batch_statistics the batchnorm statistics are recalibrated on
/// `data` at each point.
std::vector<SweepPoint> loss_descriptor_sweep(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& data,
                                              data::LabelField field, std::size_t head_size,
                                              std::span<const hypernet::InvarianceDescriptor> sweep,
                                              const training::TrainConfig& config,
                                              std::span<const double> parameters = {});

std::string sweep_to_csv(std::span<const SweepPoint> points);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace hyperinv::analysis
