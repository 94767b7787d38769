#include "hyperinv/training/config.hpp"

#include "hyperinv/errors.hpp"

namespace hyperinv::training {

std::string to_string(DescriptorParametrization p) {
  return p == DescriptorParametrization::sigmoid ? "sigmoid" : "clamp";
}

DescriptorParametrization parametrization_from_string(const std::string& name) {
  if (name == "sigmoid") return DescriptorParametrization::sigmoid;
  if (name == "clamp") return DescriptorParametrization::clamp;
  throw ContractError("unknown descriptor parametrization '" + name + "' (expected sigmoid or clamp)");
}

TrainConfig TrainConfig::pretrain_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::contrastive_defaults() {
  TrainConfig c;
  c.epochs = 50;
  c.batch_size = 64;
  c.lr = 3e-4;
  c.weight_decay = 1e-4;
  return c;
}

TrainConfig TrainConfig::downstream_defaults() {
  TrainConfig c;
  c.epochs = 100;
  c.batch_size = 0;
  c.lr = 5e-4;
  c.schedule = ScheduleKind::multi_step;
  for (std::size_t e = 10; e < 100; e += 10) c.milestones.push_back(e);
  c.gamma = 0.1;
  c.batch_statistics = true;
  return c;
}

std::size_t TrainConfig::effective_batch(std::size_t dataset_size) const {
  if (dataset_size == 0) throw ContractError("training set is empty");
  const std::size_t b = batch_size != 0 ? batch_size : (dataset_size <= 512 ? dataset_size : 128);
  return std::min(b, dataset_size);
}

std::size_t TrainConfig::steps_per_epoch(std::size_t dataset_size) const {
  const std::size_t b = effective_batch(dataset_size);
  return (dataset_size + b - 1) / b;
}

std::size_t TrainConfig::total_steps(std::size_t dataset_size) const {
  return max_steps != 0 ? max_steps : epochs * steps_per_epoch(dataset_size);
}

LrSchedule TrainConfig::make_schedule(std::size_t dataset_size) const {
  const std::size_t total = total_steps(dataset_size);
  switch (schedule) {
    case ScheduleKind::constant: return LrSchedule::constant(lr, total);
    case ScheduleKind::cosine: return LrSchedule::cosine(lr, total);
    case ScheduleKind::multi_step: {
      // Milestones are given in epochs; a step budget rescales them.
      const double per_epoch = epochs == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(epochs);
      std::vector<std::size_t> steps;
      for (auto m : milestones) steps.push_back(static_cast<std::size_t>(static_cast<double>(m) * per_epoch));
      return LrSchedule::multi_step(lr, total, steps, gamma);
    }
  }
  throw ContractError("unknown schedule");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr", lr},
          {"schedule", hyperinv::to_string(schedule)},
          {"milestones", milestones},
          {"gamma", gamma},
          {"weight_decay", weight_decay},
          {"seed", seed},
          {"augment_samples", augment_samples},
          {"parametrization", to_string(parametrization)},
          {"grad_clip", grad_clip},
          {"max_steps", max_steps},
          {"temperature", temperature},
          {"hidden_dim", hidden_dim},
          {"activation", hypernet::to_string(activation)},
          {"projection_dim", projection_dim},
          {"batch_statistics", batch_statistics}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, const TrainConfig& base) {
  TrainConfig c = base;
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("epochs", c.epochs);
  take("batch_size", c.batch_size);
  take("lr", c.lr);
  if (j.contains("schedule")) c.schedule = schedule_kind_from_string(j.at("schedule").get<std::string>());
  take("milestones", c.milestones);
  take("gamma", c.gamma);
  take("weight_decay", c.weight_decay);
  take("seed", c.seed);
  take("augment_samples", c.augment_samples);
  if (j.contains("parametrization")) {
    c.parametrization = parametrization_from_string(j.at("parametrization").get<std::string>());
  }
  take("grad_clip", c.grad_clip);
  take("max_steps", c.max_steps);
  take("temperature", c.temperature);
  take("hidden_dim", c.hidden_dim);
  if (j.contains("activation")) {
    c.activation = hypernet::hidden_activation_from_string(j.at("activation").get<std::string>());
  }
  take("projection_dim", c.projection_dim);
  take("batch_statistics", c.batch_statistics);
  if (c.augment_samples == 0) throw ContractError("augment_samples must be at least 1");
  if (!(c.lr > 0.0)) throw ContractError("lr must be positive");
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

}  // namespace hyperinv::training
