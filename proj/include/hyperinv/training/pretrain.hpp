#pragma once

#include <cstddef>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "hyperinv/data/augment.hpp"
#include "hyperinv/data/dataset.hpp"
#include "hyperinv/hypernet/hypernet.hpp"
#include "hyperinv/training/config.hpp"

namespace hyperinv::training {

struct PretrainTask {
  std::string name;
  const data::LabeledDataset* data = nullptr;
  data::LabelField field = data::LabelField::digit;
  hypernet::InvarianceDescriptor descriptor;
  std::size_t head_size = 10;
};

/// Digit [1,1], color [1,0] and rotation [0,1] prediction on one dataset.
std::vector<PretrainTask> synthetic_tasks(const data::LabeledDataset& dataset);

/// Rotation then color swap: the family order of synthetic descriptors.
std::vector<data::TransformFamily> synthetic_families();

struct EpochRecord {
  std::size_t epoch = 0;
  std::string task;
  std::string split = "train";
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> records;
  /// Mean objective at every optimiser step.
  std::vector<double> step_losses;

  /// Header "epoch,task,split,loss,accuracy".
  std::string to_csv() const;
};

/// Hypernetwork W*, training heads and their descriptors.
struct PretrainedBundle {
  hypernet::HyperEncoder encoder;
  std::vector<std::string> task_names;
  std::vector<hypernet::InvarianceDescriptor> task_descriptors;
  std::vector<hypernet::TaskHead> heads;
  TrainingLog log;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Conventional shared encoder and heads.
struct MtlBundle {
  hypernet::ConvEncoder encoder;
  std::vector<std::string> task_names;
  std::vector<hypernet::TaskHead> heads;
  TrainingLog log;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Initial hypernetwork and heads for pretrain_multitask, drawn from
/// derive_seed(config.seed, "init").
PretrainedBundle init_multitask_model(std::span<const PretrainTask> tasks, const TrainConfig& config,
                                      const hypernet::EncoderArchitecture& arch);

/// Eq. 2: every step draws one batch per task, augments it according to the
/// task descriptor, and minimises the uniform mean of the per-task
/// cross-entropies over W and all heads. A non-finite task loss raises
/// DivergenceError naming the task.
PretrainedBundle pretrain_multitask(std::span<const PretrainTask> tasks, const TrainConfig& config,
                                    const hypernet::EncoderArchitecture& arch = hypernet::EncoderArchitecture::synthetic(),
                                    std::span<const data::TransformFamily> families = {});

/// Augmentation seen by the baseline.
enum class MtlAugmentation {
  per_task,  ///< each task keeps its own descriptor-gated augmentation (same draws as pre-training)
  union_all  ///< every family applied to every task
};

std::string to_string(MtlAugmentation a);
MtlAugmentation mtl_augmentation_from_string(const std::string& name);

/// Eq. 2 with the conv weights as ordinary parameters.
MtlBundle train_mtl_baseline(std::span<const PretrainTask> tasks, const TrainConfig& config,
                             const hypernet::EncoderArchitecture& arch = hypernet::EncoderArchitecture::synthetic(),
                             std::span<const data::TransformFamily> families = {},
                             MtlAugmentation augmentation = MtlAugmentation::per_task);

/// Images and labels of one pre-training batch, augmented with the draws
/// pretrain_multitask uses at (task_index, step).
struct TaskBatch {
  Tensor images;
  std::vector<int> labels;
};

TaskBatch make_task_batch(const PretrainTask& task, std::size_t task_index, const TrainConfig& config,
                          std::size_t steps_per_epoch, std::size_t step,
                          const hypernet::InvarianceDescriptor& augmentation,
                          std::span<const data::TransformFamily> families);

/// Steps per epoch for a task list: the largest task is visited once.
std::size_t multitask_steps_per_epoch(std::span<const PretrainTask> tasks, const TrainConfig& config);

}  // namespace hyperinv::training
