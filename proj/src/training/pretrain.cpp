#include "hyperinv/training/pretrain.hpp"

#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hyperinv/errors.hpp"
#include "hyperinv/training/features.hpp"

namespace hyperinv::training {

namespace {

void validate_tasks(std::span<const PretrainTask> tasks, std::size_t families) {
  if (tasks.empty()) throw ContractError("pre-training needs at least one task");
  const auto* first = tasks.front().data;
  for (const auto& t : tasks) {
    if (t.data == nullptr || t.data->size() == 0) throw ContractError("task '" + t.name + "' has no data");
    if (t.data->images.channels() != first->images.channels() || t.data->images.height() != first->images.height() ||
        t.data->images.width() != first->images.width()) {
      throw DimensionError("task '" + t.name + "' image shape differs from task '" + tasks.front().name + "'");
    }
    if (t.descriptor.size() != families) {
      throw DimensionError("task '" + t.name + "' descriptor has " + std::to_string(t.descriptor.size()) +
                           " components for " + std::to_string(families) + " transformation families");
    }
    if (!t.descriptor.is_binary()) throw ContractError("task '" + t.name + "' descriptor must be binary");
  }
}

std::vector<data::TransformFamily> resolve_families(std::span<const data::TransformFamily> families) {
  if (families.empty()) return synthetic_families();
  return {families.begin(), families.end()};
}

nlohmann::json task_metadata(std::span<const PretrainTask> tasks) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tasks) {
    out.push_back({{"name", t.name},
                   {"field", data::to_string(t.field)},
                   {"descriptor", t.descriptor.values},
                   {"head_size", t.head_size},
                   {"data", t.data->manifest()}});
  }
  return out;
}

struct EpochAccumulator {
  std::vector<double> loss, accuracy;
  std::size_t steps = 0;
};

template <typename Forward>
TrainingLog run_multitask(std::span<const PretrainTask> tasks, const TrainConfig& config,
                          std::vector<NamedParameter> params, const std::vector<hypernet::TaskHead>& heads,
                          std::span<const hypernet::InvarianceDescriptor> augmentation,
                          std::span<const data::TransformFamily> families, Forward&& forward) {
  for (std::size_t t = 0; t < heads.size(); ++t) params.push_back({"head." + tasks[t].name + ".weight", heads[t].weight});
  auto state = AdamState::for_parameters(params, {0.9, 0.999, 1e-8, config.weight_decay});
  const std::size_t spe = multitask_steps_per_epoch(tasks, config);
  const std::size_t total = config.max_steps != 0 ? config.max_steps : config.epochs * spe;
  const LrSchedule schedule = [&] {
    switch (config.schedule) {
      case ScheduleKind::constant: return LrSchedule::constant(config.lr, total);
      case ScheduleKind::cosine: return LrSchedule::cosine(config.lr, total);
      case ScheduleKind::multi_step: {
        std::vector<std::size_t> steps;
        for (auto m : config.milestones) steps.push_back(m * spe);
        return LrSchedule::multi_step(config.lr, total, steps, config.gamma);
      }
    }
    throw ContractError("unknown schedule");
  }();

  TrainingLog log;
  EpochAccumulator acc{std::vector<double>(tasks.size(), 0.0), std::vector<double>(tasks.size(), 0.0), 0};
  auto flush = [&](std::size_t epoch) {
    if (acc.steps == 0) return;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      log.records.push_back({epoch, tasks[t].name, "train", acc.loss[t] / static_cast<double>(acc.steps),
                             acc.accuracy[t] / static_cast<double>(acc.steps)});
    }
    acc = {std::vector<double>(tasks.size(), 0.0), std::vector<double>(tasks.size(), 0.0), 0};
  };

  for (std::size_t step = 0; step < total; ++step) {
    zero_grads(params);
    std::vector<Tensor> losses;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const auto batch = make_task_batch(tasks[t], t, config, spe, step, augmentation[t], families);
      const Tensor logits = hypernet::apply_head(heads[t], forward(t, batch.images));
      Tensor loss = softmax_cross_entropy(logits, batch.labels);
      if (!std::isfinite(loss.item())) {
        throw DivergenceError("task '" + tasks[t].name + "' diverged at step " + std::to_string(step) +
                              " (loss " + std::to_string(loss.item()) + ")");
      }
      const auto m = evaluate_logits(logits.detach(), batch.labels);
      acc.loss[t] += loss.item();
      acc.accuracy[t] += m.accuracy;
      losses.push_back(std::move(loss));
    }
    const Tensor objective = average(losses);
    log.step_losses.push_back(objective.item());
    objective.backward();
    if (config.grad_clip > 0.0) clip_grad_norm(params, config.grad_clip);
    adam_step(params, state, schedule.at(step));
    ++acc.steps;
    if ((step + 1) % spe == 0) {
      flush(step / spe);
      spdlog::debug("epoch {} mean loss {:.4f}", step / spe, objective.item());
    }
  }
  flush(total / spe);
  return log;
}

}  // namespace

std::vector<PretrainTask> synthetic_tasks(const data::LabeledDataset& dataset) {
  using data::LabelField;
  return {{"digit", &dataset, LabelField::digit, {1.0, 1.0}, data::num_classes(LabelField::digit)},
          {"color", &dataset, LabelField::color, {1.0, 0.0}, data::num_classes(LabelField::color)},
          {"rotation", &dataset, LabelField::rotation, {0.0, 1.0}, data::num_classes(LabelField::rotation)}};
}

std::vector<data::TransformFamily> synthetic_families() {
  return {data::TransformFamily::rotation(), data::TransformFamily::color_swap()};
}

std::string TrainingLog::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,task,split,loss,accuracy\n";
  for (const auto& r : records) os << r.epoch << ',' << r.task << ',' << r.split << ',' << r.loss << ',' << r.accuracy << '\n';
  return os.str();
}

std::size_t multitask_steps_per_epoch(std::span<const PretrainTask> tasks, const TrainConfig& config) {
  std::size_t spe = 1;
  for (const auto& t : tasks) spe = std::max(spe, config.steps_per_epoch(t.data->size()));
  return spe;
}

TaskBatch make_task_batch(const PretrainTask& task, std::size_t task_index, const TrainConfig& config,
                          std::size_t steps_per_epoch, std::size_t step,
                          const hypernet::InvarianceDescriptor& augmentation,
                          std::span<const data::TransformFamily> families) {
  const std::size_t n = task.data->size();
  const auto rows = batch_indices(n, config.effective_batch(n), steps_per_epoch, config.seed, task_index, step);
  const auto stack = task.data->images.select(rows);
  const auto labels = gather_labels(task.data->labels(task.field), rows);
  Rng rng(derive_seed(config.seed, "augment-task-" + std::to_string(task_index), step));
  const auto copies = data::apply_descriptor_augmentation(stack, augmentation, families, rng, config.augment_samples);
  TaskBatch out;
  std::vector<double> pixels;
  pixels.reserve(copies.size() * stack.pixels().size());
  for (const auto& c : copies) {
    pixels.insert(pixels.end(), c.pixels().begin(), c.pixels().end());
    out.labels.insert(out.labels.end(), labels.begin(), labels.end());
  }
  out.images = Tensor::from_data({out.labels.size(), stack.channels(), stack.height(), stack.width()}, std::move(pixels));
  return out;
}

PretrainedBundle init_multitask_model(std::span<const PretrainTask> tasks, const TrainConfig& config,
                                      const hypernet::EncoderArchitecture& arch) {
  if (tasks.empty()) throw ContractError("pre-training needs at least one task");
  Rng rng(derive_seed(config.seed, "init"));
  PretrainedBundle b;
  b.encoder = hypernet::make_hyper_encoder(arch, tasks.front().descriptor.size(), config.hidden_dim, rng,
                                           config.activation);
  for (const auto& t : tasks) {
    b.task_names.push_back(t.name);
    b.task_descriptors.push_back(t.descriptor);
    b.heads.push_back(hypernet::TaskHead::init(arch.feature_dim(), t.head_size, rng));
  }
  return b;
}

PretrainedBundle pretrain_multitask(std::span<const PretrainTask> tasks, const TrainConfig& config,
                                    const hypernet::EncoderArchitecture& arch,
                                    std::span<const data::TransformFamily> families) {
  const auto fams = resolve_families(families);
  validate_tasks(tasks, fams.size());
  PretrainedBundle b = init_multitask_model(tasks, config, arch);
  std::vector<Tensor> descriptors;
  std::vector<hypernet::InvarianceDescriptor> augmentation;
  for (const auto& t : tasks) {
    descriptors.push_back(t.descriptor.to_tensor());
    augmentation.push_back(t.descriptor);
  }
  b.log = run_multitask(tasks, config, b.encoder.parameters(), b.heads, augmentation, fams,
                        [&](std::size_t t, const Tensor& x) {
                          return hypernet::encode(b.encoder, descriptors[t], x, BnMode::train);
                        });
  b.metadata = {{"kind", "hyper"}, {"config", config.to_json()}, {"tasks", task_metadata(tasks)}};
  return b;
}

std::string to_string(MtlAugmentation a) { return a == MtlAugmentation::per_task ? "per-task" : "union"; }

MtlAugmentation mtl_augmentation_from_string(const std::string& name) {
  if (name == "per-task") return MtlAugmentation::per_task;
  if (name == "union") return MtlAugmentation::union_all;
  throw ContractError("unknown MTL augmentation '" + name + "' (expected per-task or union)");
}

MtlBundle train_mtl_baseline(std::span<const PretrainTask> tasks, const TrainConfig& config,
                             const hypernet::EncoderArchitecture& arch,
                             std::span<const data::TransformFamily> families, MtlAugmentation augmentation) {
  const auto fams = resolve_families(families);
  validate_tasks(tasks, fams.size());
  Rng rng(derive_seed(config.seed, "init-mtl"));
  MtlBundle b;
  b.encoder = hypernet::make_conv_encoder(arch, rng);
  for (const auto& t : tasks) {
    b.task_names.push_back(t.name);
    b.heads.push_back(hypernet::TaskHead::init(arch.feature_dim(), t.head_size, rng));
  }
  std::vector<hypernet::InvarianceDescriptor> aug;
  for (const auto& t : tasks) {
    aug.push_back(augmentation == MtlAugmentation::per_task
                      ? t.descriptor
                      : hypernet::InvarianceDescriptor(std::vector<double>(fams.size(), 1.0)));
  }
  b.log = run_multitask(tasks, config, b.encoder.parameters(), b.heads, aug, fams,
                        [&](std::size_t, const Tensor& x) { return hypernet::encode(b.encoder, x, BnMode::train); });
  b.metadata = {{"kind", "mtl"},
                {"config", config.to_json()},
                {"tasks", task_metadata(tasks)},
                {"augmentation", to_string(augmentation)}};
  return b;
}

}  // namespace hyperinv::training
