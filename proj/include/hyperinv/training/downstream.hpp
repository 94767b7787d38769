#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hyperinv/data/dataset.hpp"
#include "hyperinv/hypernet/hypernet.hpp"
#include "hyperinv/training/config.hpp"
#include "hyperinv/training/features.hpp"

namespace hyperinv::training {

/// Learnable descriptor kept in [0,1]^K by its parametrization.
class DescriptorVariable {
 public:
  DescriptorVariable(std::size_t k, double initial, DescriptorParametrization p);

  /// Differentiable [K] descriptor.
  Tensor value() const;
  hypernet::InvarianceDescriptor current() const;
  NamedParameter parameter() const { return {"descriptor", raw_, 0.0}; }
  /// Re-imposes the constraint after an optimiser step (clamp mode).
  void project();

 private:
  Tensor raw_;
  DescriptorParametrization parametrization_;
};

struct ContinuousFit {
  hypernet::InvarianceDescriptor descriptor;  ///< i*
  hypernet::TaskHead head;
  std::vector<double> losses;
  /// Descriptor after every step.
  std::vector<hypernet::InvarianceDescriptor> trajectory;
  /// Frozen encoder the head was fitted against.
  hypernet::HyperEncoder encoder;
};

/// Fits the descriptor (initialised at 0.5 per component) and a fresh head by
/// Adam on the task cross-entropy. The encoder is copied and frozen and no
/// augmentation is applied. With config.batch_statistics batchnorm uses batch
/// statistics during the fit and the returned encoder carries statistics
/// recalibrated on `data` at i*; otherwise the pretrained statistics are used.
ContinuousFit downstream_fit(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& data,
                             data::LabelField field, std::size_t head_size, const TrainConfig& config);

struct DiscreteFit {
  hypernet::InvarianceDescriptor descriptor;  ///< round(i*)
  hypernet::TaskHead head;
  std::vector<double> losses;
  hypernet::HyperEncoder encoder;
};

/// Rounds i* to the grid and re-trains a fresh head with the descriptor pinned.
DiscreteFit downstream_fit_discrete(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& data,
                                    data::LabelField field, std::size_t head_size,
                                    const hypernet::InvarianceDescriptor& fitted, const TrainConfig& config,
                                    int levels = 2);

/// Continuous and discretised downstream results for one (task, N, seed) cell.
struct DownstreamResult {
  std::string task;
  std::size_t n_per_class = 0;
  std::uint64_t seed = 0;
  int levels = 2;
  hypernet::InvarianceDescriptor continuous;
  hypernet::InvarianceDescriptor rounded;
  hypernet::TaskHead continuous_head;
  hypernet::TaskHead discrete_head;
  Metrics train_continuous, test_continuous;
  Metrics train_discrete, test_discrete;

  nlohmann::json to_json() const;
};

DownstreamResult run_downstream(const hypernet::HyperEncoder& encoder, const data::LabeledDataset& train,
                                const data::LabeledDataset& test, data::LabelField field, std::size_t head_size,
                                const TrainConfig& config, int levels = 2);

/// Fresh head on frozen baseline features under the same budget.
struct BaselineResult {
  std::string task;
  std::size_t n_per_class = 0;
  std::uint64_t seed = 0;
  hypernet::TaskHead head;
  hypernet::ConvEncoder encoder;
  Metrics train, test;

  nlohmann::json to_json() const;
};

BaselineResult run_mtl_downstream(const hypernet::ConvEncoder& encoder, const data::LabeledDataset& train,
                                  const data::LabeledDataset& test, data::LabelField field, std::size_t head_size,
                                  const TrainConfig& config);

nlohmann::json metrics_json(const Metrics& m);

}  // namespace hyperinv::training
