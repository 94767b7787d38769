#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hyperinv/hypernet/hypernet.hpp"
#include "hyperinv/numerics/optim.hpp"

namespace hyperinv::training {

/// How a learnable descriptor is kept inside [0,1]^K.
enum class DescriptorParametrization { sigmoid, clamp };

std::string to_string(DescriptorParametrization p);
DescriptorParametrization parametrization_from_string(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 200;
  /// 0 selects full batch when the training set has at most 512 examples,
  /// otherwise 128.
  std::size_t batch_size = 64;
  double lr = 5e-4;
  ScheduleKind schedule = ScheduleKind::cosine;
  /// Epoch indices at which a multi-step schedule multiplies the rate by gamma.
  std::vector<std::size_t> milestones;
  double gamma = 0.1;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  /// Augmented copies per example (m).
  std::size_t augment_samples = 1;
  DescriptorParametrization parametrization = DescriptorParametrization::sigmoid;
  /// 0 disables clipping.
  double grad_clip = 0.0;
  /// Overrides epochs * steps_per_epoch when nonzero.
  std::size_t max_steps = 0;
  double temperature = 0.5;
  std::size_t hidden_dim = 40;
  hypernet::HiddenActivation activation = hypernet::HiddenActivation::relu;
  std::size_t projection_dim = 32;
  /// Downstream fits normalise by batch statistics and are evaluated with
  /// statistics recalibrated on the downstream training set.
  bool batch_statistics = false;

  /// Multi-task pre-training: 200 epochs, Adam 5e-4, cosine annealing.
  static TrainConfig pretrain_defaults();
  /// Contrastive pre-training: Adam 3e-4, weight decay 1e-4, cosine annealing.
  static TrainConfig contrastive_defaults();
  /// Descriptor + head fitting.
  static TrainConfig downstream_defaults();

  std::size_t effective_batch(std::size_t dataset_size) const;
  std::size_t steps_per_epoch(std::size_t dataset_size) const;
  std::size_t total_steps(std::size_t dataset_size) const;
  LrSchedule make_schedule(std::size_t dataset_size) const;

  nlohmann::json to_json() const;
  /// Missing keys keep the values of `base`.
  static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
  static TrainConfig from_json(const nlohmann::json& j);
};

}  // namespace hyperinv::training
